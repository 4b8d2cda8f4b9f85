//! Colligations `(G, L_p, K)` on a split box, scattering transform,
//! dissipation and the discrete power balance.

use faer::linalg::solvers::Solve;
use faer::{Col, Mat};

use crate::algebra::{
    validate_hamiltonian, HamiltonianDensitySpec, MatrixField, StructureMatrices,
};
use crate::bc::{
    self, assemble_constraints, constraints_from_maps, BoundaryConditionSpec, BoundaryMaps,
    BoundaryTransform, ConstraintSet,
};
use crate::boundary::{assemble_traces, BoundarySplitting, TraceOperators};
use crate::error::{Error, Result};
use crate::linalg::{self, SpMat};
use crate::sbpgrid::{assemble_full_operator, sample_hamiltonian, BoxGrid};

/// Discrete boundary control system on a split box grid.
///
/// `g`/`k` are the current input/output maps (impedance pair, or the
/// scattering pair after [`scattering_transform`]); `maps` always keeps the
/// impedance pair and the Γ₀ clamp rows. The duality map of the boundary
/// triple is the identity in these coordinates.
#[derive(Clone, Debug)]
pub struct Colligation {
    pub grid: BoxGrid,
    pub structure: StructureMatrices,
    pub hamiltonian: HamiltonianDensitySpec,
    pub traces: TraceOperators,
    pub maps: BoundaryMaps,
    pub transform: BoundaryTransform,
    pub lp: SpMat,
    pub m_x: SpMat,
    pub g: SpMat,
    pub k: SpMat,
    pub gram_u: SpMat,
    pub gram_y: SpMat,
    pub scattering: Option<SpMat>,
}

impl Colligation {
    pub fn state_dim(&self) -> usize {
        self.lp.nrows()
    }

    pub fn boundary_dim(&self) -> usize {
        self.maps.dim
    }

    pub fn splitting(&self) -> &BoundarySplitting {
        &self.traces.splitting
    }

    /// Clamp rows plus `A1 G + A2 K` rows of `spec` (impedance pair).
    pub fn constraints(&self, spec: &BoundaryConditionSpec) -> Result<ConstraintSet> {
        constraints_from_maps(spec, &self.maps)
    }

    pub fn clamp_constraints(&self) -> Result<ConstraintSet> {
        bc::clamp_constraints(&self.maps)
    }

    /// Clamp rows plus the current input rows `G x = u`.
    pub fn input_constraints(&self) -> Result<ConstraintSet> {
        assemble_constraints(Some(&self.g), &self.maps.clamp)
    }

    /// `x^T M_X x`.
    pub fn energy(&self, x: &Col<f64>) -> f64 {
        linalg::dot(x, &linalg::spmv(&self.m_x, x))
    }

    /// `<L_p x, x>_M`.
    pub fn power(&self, x: &Col<f64>) -> f64 {
        let lx = linalg::spmv(&self.lp, x);
        linalg::dot(&lx, &linalg::spmv(&self.m_x, x))
    }

    pub fn input_norm_sq(&self, u: &Col<f64>) -> f64 {
        linalg::dot(u, &linalg::spmv(&self.gram_u, u))
    }

    pub fn output_norm_sq(&self, y: &Col<f64>) -> f64 {
        linalg::dot(y, &linalg::spmv(&self.gram_y, y))
    }

    /// Largest clamp-row residual relative to the state size.
    pub fn clamp_residual(&self, x: &Col<f64>) -> f64 {
        let r = linalg::spmv(&self.maps.clamp, x);
        let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        rmax / xmax.max(f64::MIN_POSITIVE)
    }
}

pub fn assemble_colligation(
    s: &StructureMatrices,
    h: &HamiltonianDensitySpec,
    grid: &BoxGrid,
    split: &BoundarySplitting,
    t: &BoundaryTransform,
) -> Result<Colligation> {
    let report = validate_hamiltonian(h, &grid.all_coords())?;
    if !report.pass {
        return Err(Error::InvalidArgument(format!(
            "Hamiltonian eigenvalues [{:e}, {:e}] outside declared bounds [{:e}, {:e}]",
            report.min_eig,
            report.max_eig,
            h.lower(),
            h.upper()
        )));
    }
    let traces = assemble_traces(s.tuple(), grid, split)?;
    let lp = assemble_full_operator(s, h, grid)?;
    let quad = grid.quadrature();
    let blocks: Vec<Mat<f64>> = sample_hamiltonian(h, grid)
        .into_iter()
        .zip(&quad)
        .map(|(hp, q)| hp * faer::Scale(0.5 * q))
        .collect();
    let m_x = linalg::block_diag(&blocks);
    let maps = BoundaryMaps::new(&traces, h, grid, t)?;
    let b = maps.dim;
    Ok(Colligation {
        grid: grid.clone(),
        structure: s.clone(),
        hamiltonian: h.clone(),
        g: maps.g.clone(),
        k: maps.k.clone(),
        traces,
        maps,
        transform: t.clone(),
        lp,
        m_x,
        gram_u: linalg::sparse_identity(b),
        gram_y: linalg::sparse_identity(b),
        scattering: None,
    })
}

/// Inverse of an SPD boundary matrix, checked.
fn spd_inverse(r: &SpMat) -> Result<SpMat> {
    let dense = linalg::to_dense(r);
    if !linalg::is_spd(dense.as_ref(), 1e-12) {
        return Err(Error::NotSpd("scattering weight R".into()));
    }
    let trips = linalg::triplets(r);
    if trips.iter().all(|&(i, j, _)| i == j) {
        let inv: Vec<_> = trips.into_iter().map(|(i, _, v)| (i, i, 1.0 / v)).collect();
        return Ok(linalg::sparse_from_triplets(r.nrows(), r.ncols(), &inv));
    }
    Ok(linalg::to_sparse(linalg::inverse(dense.as_ref())?.as_ref()))
}

/// `G' = (G + R K)/√2`, `K' = (G − R K)/√2` with `R⁻¹`-weighted Grams.
pub fn scattering_transform(c: &Colligation, r: &SpMat) -> Result<Colligation> {
    let b = c.boundary_dim();
    if r.nrows() != b || r.ncols() != b {
        return Err(Error::DimensionMismatch {
            context: "scattering weight size",
            expected: b,
            found: r.nrows(),
        });
    }
    let rinv = spd_inverse(r)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rk = r * &c.maps.k;
    let mut out = c.clone();
    out.g = linalg::scale_sparse(&(&c.maps.g + &rk), s);
    out.k = linalg::scale_sparse(&(&c.maps.g - &rk), s);
    out.gram_u = rinv.clone();
    out.gram_y = rinv;
    out.scattering = Some(r.clone());
    Ok(out)
}

/// Recovers the impedance pair from a scattering pair:
/// `G = (G' + K')/√2`, `K = R⁻¹ (G' − K')/√2`.
pub fn inverse_scattering(gs: &SpMat, ks: &SpMat, r: &SpMat) -> Result<(SpMat, SpMat)> {
    let rinv = spd_inverse(r)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = linalg::scale_sparse(&(gs + ks), s);
    let k = linalg::scale_sparse(&(&rinv * &(gs - ks)), s);
    Ok((g, k))
}

/// `2 <L_p x, x>_M + ||K x||_Y^2 − ||G x||_U^2` for a clamped state.
pub fn power_balance_residual(c: &Colligation, x: &Col<f64>) -> Result<f64> {
    let residual = c.clamp_residual(x);
    if residual > 1e-10 {
        return Err(Error::ClampViolated { residual });
    }
    let u = linalg::spmv(&c.g, x);
    let y = linalg::spmv(&c.k, x);
    Ok(2.0 * c.power(x) + c.output_norm_sq(&y) - c.input_norm_sq(&u))
}

/// Magnitude of the terms entering [`power_balance_residual`], for relative
/// tolerances.
pub fn power_balance_scale(c: &Colligation, x: &Col<f64>) -> f64 {
    let u = linalg::spmv(&c.g, x);
    let y = linalg::spmv(&c.k, x);
    (2.0 * c.power(x)).abs() + c.output_norm_sq(&y) + c.input_norm_sq(&u)
}

/// `2 <L_p x, x>_M − 2 <G x, K x>` with the impedance pair.
pub fn impedance_balance_residual(c: &Colligation, x: &Col<f64>) -> f64 {
    let (g, k) = c.maps.values(x);
    2.0 * c.power(x) - 2.0 * linalg::dot(&g, &k)
}

/// `L_p ← L_p + J_block` after checking that `sym(M_X J)` is negative
/// semidefinite at every node.
pub fn add_dissipation(c: &Colligation, j: &MatrixField) -> Result<Colligation> {
    let m = c.structure.m();
    let quad = c.grid.quadrature();
    let mut blocks = Vec::with_capacity(c.grid.node_count());
    let mut worst = f64::NEG_INFINITY;
    for (p, q) in quad.iter().enumerate() {
        let z = c.grid.coords(p);
        let jp = j(&z);
        if jp.nrows() != m || jp.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "dissipation block size",
                expected: m,
                found: jp.nrows(),
            });
        }
        let mj = c.hamiltonian.eval(&z) * &jp * faer::Scale(0.5 * q);
        let sym = linalg::symmetrize(mj.as_ref());
        let top = linalg::sym_extreme_eigs(sym.as_ref()).1;
        let scale = linalg::max_abs(mj.as_ref()).max(f64::MIN_POSITIVE);
        worst = worst.max(top / scale);
        if top > 1e-12 * scale {
            return Err(Error::NotDissipative { max_eig: top });
        }
        blocks.push(jp);
    }
    log::debug!("add_dissipation: largest relative symmetric eigenvalue {worst:e}");
    let mut out = c.clone();
    out.lp = &c.lp + &linalg::block_diag(&blocks);
    Ok(out)
}

/// `M`-orthogonal projection of `x` onto `ker C` (independent rows) through the sparse system
/// `[M C^T; C 0] [x'; λ] = [M x; 0]`.
pub fn project_onto_kernel(m: &SpMat, rows: &SpMat, x: &Col<f64>) -> Result<Col<f64>> {
    let n = m.nrows();
    let nc = rows.nrows();
    if nc == 0 {
        return Ok(x.clone());
    }
    let mut trips = linalg::triplets(m);
    for (r, c, v) in linalg::triplets(rows) {
        trips.push((n + r, c, v));
        trips.push((c, n + r, v));
    }
    let kkt = linalg::sparse_from_triplets(n + nc, n + nc, &trips);
    let lu = kkt
        .sp_lu()
        .map_err(|e| Error::SaddleSingular(format!("projection system: {e:?}")))?;
    let mx = linalg::spmv(m, x);
    let rhs = Col::from_fn(n + nc, |i| if i < n { mx[i] } else { 0.0 });
    let sol = lu.solve(&rhs);
    Ok(Col::from_fn(n, |i| sol[i]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorReport {
    /// Boundary-condition verdict for the spec's form.
    pub bc_verdict: bool,
    pub kernel_dim: usize,
    pub max_sym_eig: f64,
    pub operator_norm: f64,
    /// `max sym eig ≤ 1e-10 ‖A_r‖`.
    pub dissipative: bool,
    /// `‖M_X A_d + (M_X A_d)^T‖_max`.
    pub skew_residual: f64,
    /// `(Δt, ‖exp(Δt A_d)‖_M)`.
    pub contraction: Vec<(f64, f64)>,
    pub contractive: bool,
}

/// Restricted generator in `M`-orthonormal coordinates of `ker C`.
pub struct RestrictedGenerator {
    pub basis: Mat<f64>,
    pub reduced: Mat<f64>,
    pub mass: Mat<f64>,
}

impl RestrictedGenerator {
    pub fn new(c: &Colligation, rows: &SpMat) -> Self {
        let mass = linalg::to_dense(&c.m_x);
        let basis = bc::kernel_basis(&linalg::to_dense(rows), &mass);
        let mlp = linalg::to_dense(&(&c.m_x * &c.lp));
        let reduced = basis.transpose() * &mlp * &basis;
        Self {
            basis,
            reduced,
            mass,
        }
    }

    /// `A_d = Q A_r Q^T M`, the projected generator on the full state space.
    pub fn full(&self) -> Mat<f64> {
        &self.basis * &self.reduced * self.basis.transpose() * &self.mass
    }

    pub fn max_sym_eig(&self) -> f64 {
        if self.reduced.nrows() == 0 {
            return 0.0;
        }
        let s = linalg::symmetrize(self.reduced.as_ref());
        linalg::sym_extreme_eigs(s.as_ref()).1
    }

    pub fn skew_residual(&self) -> f64 {
        let mq = &self.mass * &self.basis;
        let sum = &self.reduced + self.reduced.transpose();
        linalg::max_abs((&mq * sum * mq.transpose()).as_ref())
    }

    pub fn exp_norm(&self, dt: f64) -> f64 {
        if self.reduced.nrows() == 0 {
            return 0.0;
        }
        let a = &self.reduced * faer::Scale(dt);
        linalg::spectral_norm(linalg::expm(a.as_ref()).as_ref())
    }
}

/// Dense check of the generator restricted by clamp and `spec` rows.
pub fn generator_check(c: &Colligation, spec: &BoundaryConditionSpec) -> Result<GeneratorReport> {
    let bc_verdict = bc::spec_verdict(spec)?;
    let cons = c.constraints(spec)?;
    let rg = RestrictedGenerator::new(c, &cons.rows);
    let operator_norm = linalg::spectral_norm(rg.reduced.as_ref());
    let max_sym_eig = rg.max_sym_eig();
    let dissipative = max_sym_eig <= 1e-10 * operator_norm.max(f64::MIN_POSITIVE);
    let contraction: Vec<(f64, f64)> = [0.1, 1.0].iter().map(|&dt| (dt, rg.exp_norm(dt))).collect();
    let contractive = contraction.iter().all(|&(_, n)| n <= 1.0 + 1e-10);
    Ok(GeneratorReport {
        bc_verdict,
        kernel_dim: rg.basis.ncols(),
        max_sym_eig,
        operator_norm,
        dissipative,
        skew_residual: rg.skew_residual(),
        contraction,
        contractive,
    })
}

/// Skewness of the generator restricted to `ker B1 ∩ ker B2`: clamp rows plus
/// all Γ₁ values `G` and `K`.
pub fn reconstruction_skew_residual(c: &Colligation) -> Result<f64> {
    let gk = linalg::vstack(&[&c.maps.g, &c.maps.k]);
    let cons = assemble_constraints(Some(&gk), &c.maps.clamp)?;
    Ok(RestrictedGenerator::new(c, &cons.rows).skew_residual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_block_tuple, MatrixTuple};
    use crate::boundary::{boundary_geometry, BoundaryPart};
    use std::sync::Arc;

    fn wave(nodes: usize, gamma1: &[usize]) -> Colligation {
        let grid = BoxGrid::unit(2, nodes).unwrap();
        let s = build_block_tuple(&MatrixTuple::div_grad(2), &Mat::zeros(3, 3)).unwrap();
        let split = BoundarySplitting::from_faces(&boundary_geometry(&grid), gamma1).unwrap();
        assemble_colligation(
            &s,
            &HamiltonianDensitySpec::identity(3),
            &grid,
            &split,
            &BoundaryTransform::Identity,
        )
        .unwrap()
    }

    #[test]
    fn unit_energy() {
        let grid = BoxGrid::unit(2, 5).unwrap();
        let s = build_block_tuple(&MatrixTuple::div_grad(2), &Mat::zeros(3, 3)).unwrap();
        let split = BoundarySplitting::all(&boundary_geometry(&grid), BoundaryPart::Gamma1);
        let c = assemble_colligation(
            &s,
            &HamiltonianDensitySpec::identity(3),
            &grid,
            &split,
            &BoundaryTransform::Identity,
        )
        .unwrap();
        let x = Col::from_fn(c.state_dim(), |i| if i % 3 == 0 { 1.0 } else { 0.0 });
        assert!((c.energy(&x) - 0.5).abs() < 1e-15);
        assert_eq!(c.energy(&Col::zeros(c.state_dim())), 0.0);
    }

    #[test]
    fn wave_g_extracts_velocity() {
        let c = wave(4, &[1]);
        let x = Col::from_fn(c.state_dim(), |i| (i as f64 * 0.37).sin());
        let g = linalg::spmv(&c.g, &x);
        for blk in &c.maps.blocks {
            let v = x[blk.node * 3];
            assert!((g[blk.offset] - blk.scale * blk.basis[(0, 0)] * v).abs() < 1e-15);
        }
    }

    #[test]
    fn scattering_identity_and_inverse() {
        let c = wave(5, &[0, 3]);
        let b = c.boundary_dim();
        let r = linalg::to_sparse(
            Mat::from_fn(b, b, |i, j| if i == j { 2.0 + i as f64 * 0.1 } else { 0.0 }).as_ref(),
        );
        let sc = scattering_transform(&c, &r).unwrap();
        let x = Col::from_fn(c.state_dim(), |i| ((i * 7 % 11) as f64 - 5.0) / 3.0);
        let (g, k) = c.maps.values(&x);
        let lhs = sc.input_norm_sq(&linalg::spmv(&sc.g, &x))
            - sc.output_norm_sq(&linalg::spmv(&sc.k, &x));
        assert!((lhs - 2.0 * linalg::dot(&g, &k)).abs() < 1e-12 * lhs.abs().max(1.0));
        let (g2, k2) = inverse_scattering(&sc.g, &sc.k, &r).unwrap();
        let dg = linalg::to_dense(&g2) - linalg::to_dense(&c.maps.g);
        let dk = linalg::to_dense(&k2) - linalg::to_dense(&c.maps.k);
        assert!(linalg::max_abs(dg.as_ref()) < 1e-12);
        assert!(linalg::max_abs(dk.as_ref()) < 1e-12);
        let bad = linalg::scale_sparse(&linalg::sparse_identity(b), -1.0);
        assert!(matches!(
            scattering_transform(&c, &bad),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn k_kernel_state_splits_energy() {
        let c = wave(4, &[1]);
        let b = c.boundary_dim();
        let sc = scattering_transform(&c, &linalg::scale_sparse(&linalg::sparse_identity(b), 2.0))
            .unwrap();
        // only velocity nonzero: K x = 0
        let x = Col::from_fn(
            c.state_dim(),
            |i| if i % 3 == 0 { 1.0 + i as f64 } else { 0.0 },
        );
        let x = project_onto_kernel(&c.m_x, &c.clamp_constraints().unwrap().rows, &x).unwrap();
        let (g, k) = c.maps.values(&x);
        assert!(k.norm_l2() == 0.0);
        let gu = sc.input_norm_sq(&linalg::spmv(&sc.g, &x));
        let ky = sc.output_norm_sq(&linalg::spmv(&sc.k, &x));
        assert!((gu - ky).abs() < 1e-12 * gu);
        assert!((gu - 0.25 * linalg::dot(&g, &g)).abs() < 1e-12 * gu);
    }

    #[test]
    fn power_balance_requires_clamp() {
        let c = wave(4, &[1]);
        assert_eq!(
            power_balance_residual(&c, &Col::zeros(c.state_dim())).unwrap(),
            0.0
        );
        let x = Col::from_fn(c.state_dim(), |_| 1.0);
        assert!(matches!(
            power_balance_residual(&c, &x),
            Err(Error::ClampViolated { .. })
        ));
        let xp = project_onto_kernel(&c.m_x, &c.clamp_constraints().unwrap().rows, &x).unwrap();
        assert!(c.clamp_residual(&xp) < 1e-13);
        assert!(impedance_balance_residual(&c, &xp).abs() < 1e-12);
    }

    #[test]
    fn dissipation_acceptance() {
        let c = wave(4, &[]);
        let zero: MatrixField = Arc::new(|_| Mat::zeros(3, 3));
        let same = add_dissipation(&c, &zero).unwrap();
        assert_eq!(linalg::to_dense(&same.lp), linalg::to_dense(&c.lp));
        let damp: MatrixField =
            Arc::new(|_| Mat::from_fn(3, 3, |i, j| if (i, j) == (0, 0) { -0.3 } else { 0.0 }));
        assert!(add_dissipation(&c, &damp).is_ok());
        let plus: MatrixField = Arc::new(|_| Mat::identity(3, 3));
        assert!(matches!(
            add_dissipation(&c, &plus),
            Err(Error::NotDissipative { .. })
        ));
    }

    #[test]
    fn generator_examples() {
        let c = wave(5, &[1, 2]);
        let b = c.boundary_dim();
        let m = Mat::from_fn(b, b, |i, j| {
            if i == j {
                1.5
            } else if i.abs_diff(j) == 1 {
                0.25
            } else {
                0.0
            }
        });
        let imp = BoundaryConditionSpec::impedance(linalg::to_sparse(m.as_ref())).unwrap();
        let r = generator_check(&c, &imp).unwrap();
        assert!(r.bc_verdict && r.dissipative && r.contractive, "{r:?}");

        let bad = BoundaryConditionSpec::impedance(linalg::scale_sparse(
            &linalg::sparse_identity(b),
            -1.0,
        ))
        .unwrap();
        let r = generator_check(&c, &bad).unwrap();
        assert!(!r.bc_verdict && !r.dissipative);

        let clamped = wave(5, &[]);
        let r = generator_check(&clamped, &BoundaryConditionSpec::clamp(0)).unwrap();
        assert!(
            r.skew_residual <= 1e-11 && r.dissipative && r.contractive,
            "{r:?}"
        );
        assert!(reconstruction_skew_residual(&c).unwrap() <= 1e-11);
    }
}
