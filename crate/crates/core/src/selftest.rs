//! Fixed-seed invariant suite behind `phsim selftest`.

use std::time::{Duration, Instant};

use faer::{Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{HamiltonianDensitySpec, MatrixTuple};
use crate::bc::{BoundaryConditionSpec, BoundaryTransform};
use crate::boundary::{boundary_geometry, BoundaryPart, BoundarySplitting};
use crate::error::Result;
use crate::examples::{mindlin_default, swap_regression, wave_default, ExampleSystem};
use crate::gelfand::{
    dual_norm, duality_map, transform_triple, von_neumann_check, FiniteQuasiTriple,
};
use crate::linalg;
use crate::sbpgrid::{green_identity_residual_with, BoxGrid, SbpOperator1D};
use crate::system::{
    generator_check, power_balance_residual, power_balance_scale, project_onto_kernel,
    reconstruction_skew_residual, scattering_transform, Colligation,
};
use crate::timestepper::{simulate, Mode, SimulationConfig};

/// Deliberate defects for exercising the failure path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Perturb one interior entry of every 1D difference stencil.
    SbpStencil,
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.pass)
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_col(rng: &mut impl Rng, n: usize) -> Col<f64> {
    Col::from_fn(n, |_| rng.gen_range(-1.0..1.0))
}

pub fn random_mat(rng: &mut impl Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// `A A^T + shift I` for a random square `A`.
pub fn random_spd(rng: &mut impl Rng, n: usize, shift: f64) -> Mat<f64> {
    let a = random_mat(rng, n, n);
    &a * a.transpose() + Mat::<f64>::identity(n, n) * faer::Scale(shift)
}

/// The four built-in tuples with their names.
pub fn builtin_tuples() -> Vec<(&'static str, MatrixTuple)> {
    vec![
        ("div-grad-1", MatrixTuple::div_grad(1)),
        ("div-grad-2", MatrixTuple::div_grad(2)),
        ("div-grad-3", MatrixTuple::div_grad(3)),
        ("rot", MatrixTuple::rot()),
        ("mindlin", MatrixTuple::mindlin()),
        ("swap", MatrixTuple::scalar_1d()),
    ]
}

/// Largest `|residual| / max(1, ||f|| ||g||)` over `pairs` random field pairs.
pub fn green_identity_sweep(
    l: &MatrixTuple,
    grid: &BoxGrid,
    pairs: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    green_sweep_with(l, grid, &grid.operators(), pairs, rng)
}

fn green_sweep_with(
    l: &MatrixTuple,
    grid: &BoxGrid,
    ops: &[SbpOperator1D],
    pairs: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let n = grid.node_count();
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = random_vec(rng, n * l.m2());
        let g = random_vec(rng, n * l.m1());
        let r = green_identity_residual_with(l, grid, ops, &f, &g)?;
        let nf = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ng = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(r / (nf * ng).max(1.0));
    }
    Ok(worst)
}

/// Best of `samples` random directions followed by a shrinking random search.
/// Never exceeds the true supremum.
pub fn monte_carlo_dual_norm(
    t: &FiniteQuasiTriple,
    g: &Col<f64>,
    samples: usize,
    rng: &mut impl Rng,
) -> f64 {
    let k = t.basis().ncols();
    let bg = t.basis().transpose() * g;
    let ratio = |c: &Col<f64>| {
        let p = t.plus_norm_coords(c);
        if p == 0.0 {
            0.0
        } else {
            linalg::dot(&bg, c).abs() / p
        }
    };
    let mut best = random_col(rng, k);
    let mut best_val = ratio(&best);
    for _ in 1..samples {
        let c = random_col(rng, k);
        let v = ratio(&c);
        if v > best_val {
            best = c;
            best_val = v;
        }
    }
    let mut step = 0.5;
    while step > 1e-7 {
        let mut improved = false;
        for _ in 0..40 * k {
            let dir = random_col(rng, k);
            let scale = step * best.norm_l2();
            let c = Col::from_fn(k, |i| best[i] + scale * dir[i]);
            let v = ratio(&c);
            if v > best_val {
                best = c;
                best_val = v;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    log::info!(
        "selftest {name}: {} ({detail})",
        if pass { "pass" } else { "FAIL" }
    );
    CheckOutcome {
        name,
        pass,
        detail,
        elapsed,
    }
}

fn corrupt(ops: &mut [SbpOperator1D]) {
    for op in ops {
        let n = op.len();
        let h = op.hn[n / 2];
        op.d[(n / 2, n / 2 + 1)] += 0.1 / h;
    }
}

fn small_grids() -> Vec<BoxGrid> {
    vec![
        BoxGrid::unit(1, 9).expect("grid"),
        BoxGrid::unit(2, 7).expect("grid"),
        BoxGrid::unit(3, 5).expect("grid"),
    ]
}

fn check_sbp(rng: &mut ChaCha8Rng, fault: Option<Fault>) -> Result<(bool, String)> {
    let mut worst_defect = 0.0f64;
    let mut worst_green = 0.0f64;
    for (_, l) in builtin_tuples() {
        let grid = small_grids().swap_remove(l.dim() - 1);
        let mut ops = grid.operators();
        if fault == Some(Fault::SbpStencil) {
            corrupt(&mut ops);
        }
        for op in &ops {
            worst_defect = worst_defect.max(op.sbp_defect());
        }
        worst_green = worst_green.max(green_sweep_with(&l, &grid, &ops, 10, rng)?);
    }
    Ok((
        worst_defect <= 1e-13 && worst_green <= 1e-12,
        format!("stencil defect {worst_defect:.3e}, Green residual {worst_green:.3e}"),
    ))
}

fn check_green(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let grids = [
        BoxGrid::unit(1, 17)?,
        BoxGrid::unit(2, 17)?,
        BoxGrid::unit(3, 9)?,
    ];
    let mut worst = 0.0f64;
    for (_, l) in builtin_tuples() {
        worst = worst.max(green_identity_sweep(&l, &grids[l.dim() - 1], 5, rng)?);
    }
    Ok((worst <= 1e-12, format!("max relative residual {worst:.3e}")))
}

fn full_clamp(sys: &ExampleSystem, grid: &BoxGrid) -> Result<Colligation> {
    let split = BoundarySplitting::all(&boundary_geometry(grid), BoundaryPart::Gamma0);
    sys.colligation(grid, &split)
}

fn check_reconstruction() -> Result<(bool, String)> {
    let wave = full_clamp(&wave_default(2)?, &BoxGrid::unit(2, 9)?)?;
    let plate = full_clamp(&mindlin_default()?, &BoxGrid::unit(2, 7)?)?;
    let a = reconstruction_skew_residual(&wave)?;
    let b = reconstruction_skew_residual(&plate)?;
    Ok((
        a <= 1e-11 && b <= 1e-11,
        format!("wave {a:.3e}, mindlin {b:.3e}"),
    ))
}

fn wave_with_port(nodes: usize) -> Result<Colligation> {
    let grid = BoxGrid::unit(2, nodes)?;
    let split = BoundarySplitting::from_faces(&boundary_geometry(&grid), &[1, 3])?;
    wave_default(2)?.colligation(&grid, &split)
}

fn check_generator(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let c = wave_with_port(6)?;
    let b = c.boundary_dim();
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..3 {
        let m = random_spd(rng, b, 0.1);
        let spec = BoundaryConditionSpec::impedance(linalg::to_sparse(m.as_ref()))?;
        let r = generator_check(&c, &spec)?;
        ok &= r.bc_verdict && r.dissipative && r.contractive;
        worst = worst.max(r.max_sym_eig / r.operator_norm);
    }
    let bad =
        BoundaryConditionSpec::impedance(linalg::scale_sparse(&linalg::sparse_identity(b), -1.0))?;
    let r = generator_check(&c, &bad)?;
    ok &= !r.bc_verdict && !r.dissipative;
    Ok((
        ok,
        format!(
            "impedance max sym eig / norm {worst:.3e}; V2 = -I verdict {} dissipative {}",
            r.bc_verdict, r.dissipative
        ),
    ))
}

/// Static scattering identity on random clamped states.
pub fn scattering_sweep(c: &Colligation, states: usize, rng: &mut impl Rng) -> Result<f64> {
    let clamp = c.clamp_constraints()?;
    let mut worst = 0.0f64;
    for _ in 0..states {
        let x = random_col(rng, c.state_dim());
        let x = if clamp.is_empty() {
            x
        } else {
            project_onto_kernel(&c.m_x, &clamp.rows, &x)?
        };
        let r = power_balance_residual(c, &x)?;
        worst = worst.max(r.abs() / power_balance_scale(c, &x).max(1.0));
    }
    Ok(worst)
}

/// Scattering form of an example colligation, using its weight `r`.
pub fn scattering_form(sys: &ExampleSystem, c: &Colligation) -> Result<Colligation> {
    scattering_transform(c, &sys.scattering_matrix(c))
}

fn check_scattering(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let wave = wave_default(2)?;
    let grid = BoxGrid::unit(2, 7)?;
    let split = BoundarySplitting::from_faces(&boundary_geometry(&grid), &[1, 3])?;
    let c = scattering_form(&wave, &wave.colligation(&grid, &split)?)?;
    let a = scattering_sweep(&c, 10, rng)?;
    let plate = mindlin_default()?;
    let grid = BoxGrid::unit(2, 6)?;
    let split = BoundarySplitting::from_faces(&boundary_geometry(&grid), &[0, 2])?;
    let c = scattering_form(&plate, &plate.colligation(&grid, &split)?)?;
    let b = scattering_sweep(&c, 10, rng)?;
    Ok((
        a <= 1e-11 && b <= 1e-11,
        format!("wave {a:.3e}, mindlin {b:.3e}"),
    ))
}

fn check_conservation() -> Result<(bool, String)> {
    let c = full_clamp(&wave_default(2)?, &BoxGrid::unit(2, 9)?)?;
    let x0 = Col::from_fn(c.state_dim(), |i| {
        let z = c.grid.coords(i / 3);
        let r2 = (z[0] - 0.5).powi(2) + (z[1] - 0.5).powi(2);
        if i % 3 == 0 {
            (-20.0 * r2).exp()
        } else {
            0.0
        }
    });
    let cfg = SimulationConfig {
        dt: 0.01,
        t_final: 1.0,
        input: None,
        x0,
        mode: Mode::Homogeneous,
    };
    let res = simulate(&c, &BoundaryConditionSpec::clamp(0), &cfg)?;
    let e0 = res.records[0].energy;
    let drift = (res.records.last().expect("records").energy - e0).abs() / e0;
    Ok((
        drift <= 1e-10,
        format!("relative drift {drift:.3e} over 100 steps"),
    ))
}

fn random_triple(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<FiniteQuasiTriple> {
    let basis = if k == n {
        Mat::identity(n, n)
    } else {
        random_mat(rng, n, k)
    };
    FiniteQuasiTriple::new(basis, random_spd(rng, k, 0.5))
}

fn check_dual_norm(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for n in [2, 5, 12] {
        let t = random_triple(rng, n, n)?;
        let g = random_col(rng, n);
        let exact = dual_norm(&t, &g);
        let mc = monte_carlo_dual_norm(&t, &g, 20_000, rng);
        worst = worst.max((exact - mc) / exact);
        if mc > exact * (1.0 + 1e-12) {
            return Ok((
                false,
                format!("sampled value {mc} above closed form {exact}"),
            ));
        }
    }
    Ok((worst <= 1e-4, format!("max relative gap {worst:.3e}")))
}

fn check_isometry(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 7;
        let k = if i % 2 == 0 { n } else { 1 + i % n };
        let t = random_triple(rng, n, k)?;
        let g = t.basis() * random_col(rng, k);
        let psi = duality_map(&t, &g)?;
        let d = dual_norm(&t, &g);
        worst = worst.max((t.plus_norm_coords(&psi) - d).abs() / d);
    }
    Ok((worst <= 1e-10, format!("max relative defect {worst:.3e}")))
}

fn check_transform(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = 2 + i % 6;
        let t = random_triple(rng, n, n)?;
        let tm = random_mat(rng, n, n) + Mat::<f64>::identity(n, n) * faer::Scale(2.0);
        let y = transform_triple(&t, &tm)?;
        let g = random_col(rng, n);
        let lhs = dual_norm(&y, &g);
        let rhs = dual_norm(&t, &(tm.transpose() * &g));
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    Ok((worst <= 1e-9, format!("max relative defect {worst:.3e}")))
}

fn check_von_neumann(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut failures = 0;
    for i in 0..20 {
        let (p, q) = (1 + i % 6, 1 + (i * 5) % 7);
        if !von_neumann_check(&random_mat(rng, p, q)).pass {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("{failures} of 20 failed")))
}

fn check_swap(seed: u64) -> Result<(bool, String)> {
    let r = swap_regression(33, seed)?;
    Ok((
        r.pass(),
        format!(
            "Green {:.3e}, F rank {}, angle correct {:.3e}, angle naive {:.3e}",
            r.green_residual, r.f_rank, r.angle_correct, r.angle_naive
        ),
    ))
}

fn check_hamiltonians() -> Result<(bool, String)> {
    let grid = BoxGrid::unit(2, 5)?;
    let mut ok = true;
    for sys in [wave_default(2)?, mindlin_default()?] {
        let h: HamiltonianDensitySpec = sys.hamiltonian_on(&grid)?;
        let rep = crate::algebra::validate_hamiltonian(&h, &grid.all_coords())?;
        ok &= rep.pass;
        ok &=
            linalg::max_abs((sys.structure.p0() + sys.structure.p0().transpose()).as_ref()) == 0.0;
    }
    if let BoundaryTransform::Pointwise(f) = mindlin_default()?.transform {
        let t = f(&[0.0, 0.0], &[0.6, 0.8]);
        let d = t.transpose() * &t - Mat::<f64>::identity(3, 3);
        ok &= linalg::max_abs(d.as_ref()) <= 1e-15;
    }
    Ok((ok, "H bounds, P0 skew, boundary rotation".into()))
}

/// Runs every check in a fixed order. Each check draws from its own stream
/// so results do not depend on which checks ran before.
pub fn run_selftest(seed: u64, fault: Option<Fault>) -> SelftestReport {
    let rng = |k: u64| ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(k));
    let checks = vec![
        timed("sbp-identity", || check_sbp(&mut rng(1), fault)),
        timed("green-identity", || check_green(&mut rng(2))),
        timed("example-matrices", check_hamiltonians),
        timed("reconstruction-skew", check_reconstruction),
        timed("generator-conditions", || check_generator(&mut rng(3))),
        timed("scattering-balance", || check_scattering(&mut rng(4))),
        timed("energy-conservation", check_conservation),
        timed("gelfand-dual-norm", || check_dual_norm(&mut rng(5))),
        timed("gelfand-isometry", || check_isometry(&mut rng(6))),
        timed("gelfand-transform", || check_transform(&mut rng(7))),
        timed("von-neumann", || check_von_neumann(&mut rng(8))),
        timed("swap-regression", || check_swap(seed)),
    ];
    SelftestReport { seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_passes() {
        let r = run_selftest(1, None);
        for c in &r.checks {
            assert!(c.pass, "{} failed: {}", c.name, c.detail);
        }
        assert_eq!(r.checks[0].name, "sbp-identity");
    }

    #[test]
    fn stencil_fault_is_named() {
        let r = run_selftest(1, Some(Fault::SbpStencil));
        assert_eq!(r.first_failure().map(|c| c.name), Some("sbp-identity"));
    }

    #[test]
    fn sampled_dual_norm_is_a_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = FiniteQuasiTriple::with_gram(random_spd(&mut rng, 4, 0.5)).unwrap();
        let g = random_col(&mut rng, 4);
        let mc = monte_carlo_dual_norm(&t, &g, 1000, &mut rng);
        let exact = dual_norm(&t, &g);
        assert!(mc <= exact * (1.0 + 1e-12));
        assert!((exact - mc) / exact < 1e-4);
    }
}
