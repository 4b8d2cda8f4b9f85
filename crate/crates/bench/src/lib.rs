//! Shared fixtures for the benchmarks.

use phsim_core::boundary::{boundary_geometry, parse_face_name};
use phsim_core::examples::wave_default;
use phsim_core::selftest::random_vec;
use phsim_core::{
    BoundaryConditionSpec, BoundarySplitting, BoxGrid, Colligation, MatrixTuple, Result,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 2D wave on an `nodes x nodes` grid with `x+` and `y+` as ports.
pub fn wave_port(nodes: usize) -> Result<Colligation> {
    let grid = BoxGrid::unit(2, nodes)?;
    let ids: Vec<usize> = ["x+", "y+"]
        .iter()
        .filter_map(|f| parse_face_name(f, 2))
        .collect();
    let split = BoundarySplitting::from_faces(&boundary_geometry(&grid), &ids)?;
    wave_default(2)?.colligation(&grid, &split)
}

/// Unit impedance on the Γ₁ space of `c`.
pub fn unit_impedance(c: &Colligation) -> Result<BoundaryConditionSpec> {
    BoundaryConditionSpec::impedance(phsim_core::linalg::sparse_identity(c.boundary_dim()))
}

/// Random field pair `(f, g)` for the Green identity of `l` on `grid`.
pub fn field_pair(l: &MatrixTuple, grid: &BoxGrid, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.node_count();
    (
        random_vec(&mut rng, n * l.m2()),
        random_vec(&mut rng, n * l.m1()),
    )
}
