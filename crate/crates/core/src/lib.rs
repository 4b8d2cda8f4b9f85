//! Structure-preserving discretization of linear first-order port-Hamiltonian
//! systems on boxes: SBP operators, boundary traces, boundary-condition
//! checks, colligations and contractive time stepping.

pub mod algebra;
pub mod bc;
pub mod boundary;
pub mod error;
pub mod examples;
pub mod gelfand;
pub mod linalg;
pub mod sbpgrid;
pub mod selftest;
pub mod system;
pub mod timestepper;

pub use error::{Error, Result};

pub use algebra::{
    build_block_tuple, l_nu, HamiltonianDensitySpec, MatrixField, MatrixTuple, StructureMatrices,
};
pub use bc::{BcForm, BoundaryConditionSpec, BoundaryTransform};
pub use boundary::{BoundaryPart, BoundarySplitting};
pub use examples::ExampleSystem;
pub use gelfand::FiniteQuasiTriple;
pub use linalg::SpMat;
pub use sbpgrid::BoxGrid;
pub use system::Colligation;
pub use timestepper::{Mode, SimulationConfig, SimulationResult, StepRecord};
