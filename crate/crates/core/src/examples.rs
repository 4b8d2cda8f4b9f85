//! Built-in systems: wave equation, Maxwell equations, Mindlin plate and the
//! one-dimensional adjoint counterexample.

use std::sync::Arc;

use faer::{Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{
    build_block_tuple, HamiltonianDensitySpec, MatrixField, MatrixTuple, StructureMatrices,
};
use crate::bc::BoundaryTransform;
use crate::boundary::BoundarySplitting;
use crate::error::{Error, Result};
use crate::linalg::{self, SpMat};
use crate::sbpgrid::{assemble_dp, BoxGrid};
use crate::system::{add_dissipation, assemble_colligation, Colligation};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub fn constant_field(a: f64) -> ScalarField {
    Arc::new(move |_| a)
}

pub fn constant_matrix(a: Mat<f64>) -> MatrixField {
    Arc::new(move |_| a.clone())
}

/// A port-Hamiltonian system ready to be put on a grid.
#[derive(Clone)]
pub struct ExampleSystem {
    pub name: &'static str,
    pub structure: StructureMatrices,
    pub density: MatrixField,
    pub transform: BoundaryTransform,
    /// Pointwise scattering weight `r` on Γ₁.
    pub scattering_weight: ScalarField,
    pub dissipation: Option<MatrixField>,
    pub state_labels: Vec<&'static str>,
    pub costate_labels: Vec<&'static str>,
    pub input_labels: Vec<&'static str>,
    pub output_labels: Vec<&'static str>,
}

impl std::fmt::Debug for ExampleSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExampleSystem")
            .field("name", &self.name)
            .field("m", &self.structure.m())
            .field("transform", &self.transform)
            .field("dissipation", &self.dissipation.is_some())
            .finish_non_exhaustive()
    }
}

impl ExampleSystem {
    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn m(&self) -> usize {
        self.structure.m()
    }

    /// `H` with bounds taken over the grid nodes.
    pub fn hamiltonian_on(&self, grid: &BoxGrid) -> Result<HamiltonianDensitySpec> {
        HamiltonianDensitySpec::sampled(self.m(), self.density.clone(), &grid.all_coords())
    }

    pub fn colligation(&self, grid: &BoxGrid, split: &BoundarySplitting) -> Result<Colligation> {
        let h = self.hamiltonian_on(grid)?;
        let c = assemble_colligation(&self.structure, &h, grid, split, &self.transform)?;
        match &self.dissipation {
            Some(j) => add_dissipation(&c, j),
            None => Ok(c),
        }
    }

    /// Block-diagonal `R = r(ζ) I` over the Γ₁ boundary space of `c`.
    pub fn scattering_matrix(&self, c: &Colligation) -> SpMat {
        let mut t = Vec::with_capacity(c.boundary_dim());
        for blk in &c.maps.blocks {
            let r = (self.scattering_weight)(&c.grid.coords(blk.node));
            t.extend((blk.offset..blk.offset + blk.rank()).map(|i| (i, i, r)));
        }
        linalg::sparse_from_triplets(c.boundary_dim(), c.boundary_dim(), &t)
    }
}

fn diag(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { 0.0 })
}

/// Wave equation with state `(ρ ∂_t w, ∇w)` and `H = diag(1/ρ, T)`.
pub fn wave_system(n: usize, rho: ScalarField, young: MatrixField) -> Result<ExampleSystem> {
    if n == 0 {
        return Err(Error::InvalidArgument("wave system needs n >= 1".into()));
    }
    let l = MatrixTuple::div_grad(n);
    let structure = build_block_tuple(&l, &Mat::zeros(n + 1, n + 1))?;
    let density: MatrixField = Arc::new(move |z| {
        let t = young(z);
        let r = rho(z);
        Mat::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => 1.0 / r,
            (0, _) | (_, 0) => 0.0,
            (i, j) => t[(i - 1, j - 1)],
        })
    });
    Ok(ExampleSystem {
        name: "wave",
        structure,
        density,
        transform: BoundaryTransform::Identity,
        scattering_weight: constant_field(1.0),
        dissipation: None,
        state_labels: vec!["rho*dw/dt", "grad w"],
        costate_labels: vec!["dw/dt", "T grad w"],
        input_labels: vec!["dw/dt"],
        output_labels: vec!["nu . (T grad w)"],
    })
}

pub fn wave_default(n: usize) -> Result<ExampleSystem> {
    wave_system(n, constant_field(1.0), constant_matrix(Mat::identity(n, n)))
}

/// Maxwell equations with state `(D, B)`, `H = diag(I/ε, I/μ)` and
/// conductivity `J = [[-g, 0], [0, 0]] H`. The weight `r` enters through the
/// scattering input `(π E + r ν × H) / √2`.
pub fn maxwell_system(
    eps: ScalarField,
    mu: ScalarField,
    g: ScalarField,
    r: ScalarField,
) -> Result<ExampleSystem> {
    let structure = build_block_tuple(&MatrixTuple::rot(), &Mat::zeros(6, 6))?;
    let (e2, m2) = (eps.clone(), mu.clone());
    let density: MatrixField = Arc::new(move |z| {
        let (a, b) = (1.0 / e2(z), 1.0 / m2(z));
        diag(&[a, a, a, b, b, b])
    });
    let dissipation: MatrixField = Arc::new(move |z| {
        let d = -g(z) / eps(z);
        diag(&[d, d, d, 0.0, 0.0, 0.0])
    });
    Ok(ExampleSystem {
        name: "maxwell",
        structure,
        density,
        transform: BoundaryTransform::Identity,
        scattering_weight: r,
        dissipation: Some(dissipation),
        state_labels: vec!["D", "B"],
        costate_labels: vec!["E", "H"],
        input_labels: vec!["(nu x E) x nu"],
        output_labels: vec!["nu x H"],
    })
}

pub fn maxwell_default(g: f64) -> Result<ExampleSystem> {
    maxwell_system(
        constant_field(1.0),
        constant_field(1.0),
        constant_field(g),
        constant_field(1.0),
    )
}

/// Mindlin plate `P_0`: `+1` at (2,7), (3,8) and `-1` at (7,2), (8,3), 1-based.
pub fn mindlin_p0() -> Mat<f64> {
    let mut p0 = Mat::<f64>::zeros(8, 8);
    p0[(1, 6)] = 1.0;
    p0[(2, 7)] = 1.0;
    p0[(6, 1)] = -1.0;
    p0[(7, 2)] = -1.0;
    p0
}

/// Boundary rotation `[[1, 0, 0], [0, ν1, ν2], [0, -ν2, ν1]]`.
pub fn mindlin_rotation(nu: &[f64]) -> Mat<f64> {
    let (a, b) = (nu[0], nu[1]);
    Mat::from_fn(3, 3, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (1, 1) | (2, 2) => a,
        (1, 2) => b,
        (2, 1) => -b,
        _ => 0.0,
    })
}

/// Mindlin plate with `H = diag(1/(ρh), 12/(ρh³), 12/(ρh³), D_b, D_s)`.
pub fn mindlin_system(
    rho: ScalarField,
    h: ScalarField,
    d_b: MatrixField,
    d_s: MatrixField,
) -> Result<ExampleSystem> {
    let structure = build_block_tuple(&MatrixTuple::mindlin(), &mindlin_p0())?;
    let density: MatrixField = Arc::new(move |z| {
        let (r, t) = (rho(z), h(z));
        let b = d_b(z);
        let s = d_s(z);
        let mut out = Mat::<f64>::zeros(8, 8);
        out[(0, 0)] = 1.0 / (r * t);
        out[(1, 1)] = 12.0 / (r * t.powi(3));
        out[(2, 2)] = 12.0 / (r * t.powi(3));
        for i in 0..3 {
            for j in 0..3 {
                out[(3 + i, 3 + j)] = b[(i, j)];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                out[(6 + i, 6 + j)] = s[(i, j)];
            }
        }
        out
    });
    Ok(ExampleSystem {
        name: "mindlin",
        structure,
        density,
        transform: BoundaryTransform::Pointwise(Arc::new(|_, nu| mindlin_rotation(nu))),
        scattering_weight: constant_field(1.0),
        dissipation: None,
        state_labels: vec![
            "rho*h*v",
            "rho*h^3/12*w1",
            "rho*h^3/12*w2",
            "kappa11",
            "kappa22",
            "kappa12",
            "gamma13",
            "gamma23",
        ],
        costate_labels: vec!["v", "w1", "w2", "M11", "M22", "M12", "Q1", "Q2"],
        input_labels: vec!["v", "w_nu", "w_eta"],
        output_labels: vec!["Q_nu", "M_nunu", "M_nueta"],
    })
}

pub fn mindlin_default() -> Result<ExampleSystem> {
    mindlin_system(
        constant_field(1.0),
        constant_field(1.0),
        constant_matrix(Mat::identity(3, 3)),
        constant_matrix(Mat::identity(2, 2)),
    )
}

/// `A = [[0, d/dξ], [d/dξ, 0]]` on (0, 1) with `H = I`.
pub fn swap_counterexample() -> Result<ExampleSystem> {
    let structure = build_block_tuple(&MatrixTuple::scalar_1d(), &Mat::zeros(2, 2))?;
    Ok(ExampleSystem {
        name: "swap1d",
        structure,
        density: constant_matrix(Mat::identity(2, 2)),
        transform: BoundaryTransform::Identity,
        scattering_weight: constant_field(1.0),
        dissipation: None,
        state_labels: vec!["f1", "f2"],
        costate_labels: vec!["f1", "f2"],
        input_labels: vec!["f1"],
        output_labels: vec!["f2"],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapReport {
    /// Largest relative residual of the boundary-triple Green identity.
    pub green_residual: f64,
    /// Rank of the rows `F1 f = -f1(0)`, `F2 f = f2(0)`.
    pub f_rank: usize,
    /// Dimension of the computed adjoint domain.
    pub adjoint_dim: usize,
    /// Angle to `{g1(0) = g1(1), g2(0) = 0}`.
    pub angle_correct: f64,
    /// Angle to the zero-trace space.
    pub angle_naive: f64,
}

impl SwapReport {
    pub fn pass(&self) -> bool {
        self.green_residual <= 1e-13
            && self.f_rank == 2
            && self.angle_correct <= 1e-10
            && self.angle_naive >= 0.1
    }
}

fn rows_matrix(n: usize, rows: &[&[(usize, f64)]]) -> Mat<f64> {
    let mut m = Mat::zeros(rows.len(), n);
    for (i, r) in rows.iter().enumerate() {
        for &(c, v) in r.iter() {
            m[(i, c)] = v;
        }
    }
    m
}

/// Regression checks for the counterexample on `nodes` grid points.
///
/// The operator restricted to `f1(1) = 0, f2(0) = f2(1)` has as discrete
/// adjoint domain the null space of `V^T S`, `S = A^T Q + Q A`, `V` a basis of
/// the restricted domain. It is compared with the swapped conditions and with
/// the zero-trace guess.
pub fn swap_regression(nodes: usize, seed: u64) -> Result<SwapReport> {
    let sys = swap_counterexample()?;
    let grid = BoxGrid::unit(1, nodes)?;
    let a = assemble_dp(&sys.structure, &grid)?;
    let quad = grid.quadrature();
    let n2 = 2 * nodes;
    let last = nodes - 1;
    let (f1, f2) = (|p: usize| 2 * p, |p: usize| 2 * p + 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qdot = |a: &Col<f64>, b: &Col<f64>| -> f64 {
        (0..nodes)
            .map(|p| quad[p] * (a[2 * p] * b[2 * p] + a[2 * p + 1] * b[2 * p + 1]))
            .sum()
    };
    let mut green_residual = 0.0f64;
    for _ in 0..20 {
        let f = Col::from_fn(n2, |_| rng.gen_range(-1.0..1.0));
        let g = Col::from_fn(n2, |_| rng.gen_range(-1.0..1.0));
        let lhs = qdot(&linalg::spmv(&a, &f), &g) + qdot(&f, &linalg::spmv(&a, &g));
        let b1 = |v: &Col<f64>| [v[f1(last)], v[f1(0)]];
        let b2 = |v: &Col<f64>| [v[f2(last)], -v[f2(0)]];
        let pair = |x: [f64; 2], y: [f64; 2]| x[0] * y[0] + x[1] * y[1];
        let rhs = pair(b1(&f), b2(&g)) + pair(b2(&f), b1(&g));
        let scale = (qdot(&f, &f) * qdot(&g, &g)).sqrt().max(1.0);
        green_residual = green_residual.max((lhs - rhs).abs() / scale);
    }

    let f_rows = rows_matrix(n2, &[&[(f1(0), -1.0)], &[(f2(0), 1.0)]]);
    let f_rank = linalg::rank(f_rows.as_ref(), 1e-12);

    let ad = linalg::to_dense(&a);
    let qm = Mat::from_fn(n2, n2, |i, j| if i == j { quad[i / 2] } else { 0.0 });
    let s = ad.transpose() * &qm + &qm * &ad;
    let dom = rows_matrix(n2, &[&[(f1(last), 1.0)], &[(f2(0), 1.0), (f2(last), -1.0)]]);
    let v = linalg::null_space(dom.as_ref(), 1e-12);
    let adjoint = linalg::null_space((v.transpose() * &s).as_ref(), 1e-12);

    let correct = linalg::null_space(
        rows_matrix(n2, &[&[(f1(0), 1.0), (f1(last), -1.0)], &[(f2(0), 1.0)]]).as_ref(),
        1e-12,
    );
    let naive = linalg::null_space(
        rows_matrix(
            n2,
            &[
                &[(f1(0), 1.0)],
                &[(f1(last), 1.0)],
                &[(f2(0), 1.0)],
                &[(f2(last), 1.0)],
            ],
        )
        .as_ref(),
        1e-12,
    );
    Ok(SwapReport {
        green_residual,
        f_rank,
        adjoint_dim: adjoint.ncols(),
        angle_correct: linalg::subspace_angle(adjoint.as_ref(), correct.as_ref()),
        angle_naive: linalg::subspace_angle(adjoint.as_ref(), naive.as_ref()),
    })
}
