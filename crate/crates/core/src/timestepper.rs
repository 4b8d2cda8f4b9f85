//! Implicit midpoint time stepping of the constrained system.
//!
//! One step solves
//!
//! ```text
//! M (x1 − x0) / dt = M L_p x_mid + C^T μ,     C x_mid = s,
//! ```
//!
//! with `x_mid = (x0 + x1) / 2`, as a single sparse saddle-point system. For
//! `x0 ∈ ker C` and `s = 0` this is the Cayley step of the `M`-orthogonally
//! projected generator. Multiplying by `x_mid` gives
//! `E(x1) − E(x0) = 2 dt (<L_p x_mid, x_mid>_M + μ^T s)` exactly.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Col;

use crate::bc::{BoundaryConditionSpec, ConstraintSet};
use crate::error::{Error, Result};
use crate::linalg::{self, SpMat};
use crate::system::{project_onto_kernel, Colligation};

/// `t ↦ u(t)` on the Γ₁ rows of a boundary condition.
pub type InputSignal = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Zero boundary data, state kept in `ker C`.
    Homogeneous,
    /// Scattering input rows driven by an input signal.
    Forced,
}

#[derive(Clone)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub input: Option<InputSignal>,
    pub x0: Col<f64>,
    pub mode: Mode,
}

impl SimulationConfig {
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self, state_dim: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_final = {} must be at least dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.x0.nrows() != state_dim {
            return Err(Error::DimensionMismatch {
                context: "initial state length",
                expected: state_dim,
                found: self.x0.nrows(),
            });
        }
        if self.mode == Mode::Homogeneous && self.input.is_some() {
            return Err(Error::InvalidArgument(
                "homogeneous runs take no input signal".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub u_norm_sq: f64,
    pub y_norm_sq: f64,
    pub multiplier_work: f64,
    pub balance_residual: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub records: Vec<StepRecord>,
    pub final_state: Col<f64>,
    /// Whether the initial state had to be projected onto the constraints.
    pub projected_initial: bool,
}

impl SimulationResult {
    /// Largest `|balance_residual|` divided by the step's scale: the larger
    /// energy of the two states or the boundary work `Δt (|u|² + |y|² + |2μᵀs|)`.
    pub fn max_relative_residual(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| {
                let dt = w[1].t - w[0].t;
                let work = dt * (w[1].u_norm_sq + w[1].y_norm_sq + w[1].multiplier_work.abs());
                let scale = w[0]
                    .energy
                    .max(w[1].energy)
                    .max(work)
                    .max(f64::MIN_POSITIVE);
                w[1].balance_residual.abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// Whether `E` never increases by more than `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].energy <= w[0].energy + tol)
    }
}

/// `E(x) = x^T M_X x`.
pub fn energy(c: &Colligation, x: &Col<f64>) -> f64 {
    c.energy(x)
}

/// Factorized midpoint saddle system for fixed `dt` and constraint rows.
pub struct Stepper {
    n: usize,
    dt: f64,
    cons: ConstraintSet,
    kkt: SpMat,
    explicit: SpMat,
    half_rows: SpMat,
    lu: Lu<usize, f64>,
}

impl Stepper {
    pub fn new(c: &Colligation, cons: ConstraintSet, dt: f64) -> Result<Self> {
        let n = c.state_dim();
        let nc = cons.len();
        let mlp = &c.m_x * &c.lp;
        let mdt = linalg::scale_sparse(&c.m_x, 1.0 / dt);
        let half = linalg::scale_sparse(&mlp, 0.5);
        let implicit = &mdt - &half;
        let explicit = &mdt + &half;
        let half_rows = linalg::scale_sparse(&cons.rows, 0.5);
        let mut trips = linalg::triplets(&implicit);
        for (r, col, v) in linalg::triplets(&cons.rows) {
            trips.push((col, n + r, -v));
            trips.push((n + r, col, 0.5 * v));
        }
        let kkt = linalg::sparse_from_triplets(n + nc, n + nc, &trips);
        let lu = kkt
            .sp_lu()
            .map_err(|e| Error::SaddleSingular(format!("midpoint system: {e:?}")))?;
        Ok(Self {
            n,
            dt,
            cons,
            kkt,
            explicit,
            half_rows,
            lu,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.cons
    }

    /// One step with constraint data `s` on the (pruned) rows; returns
    /// `(x1, μ)`.
    pub fn step(&self, x0: &Col<f64>, s: &Col<f64>) -> Result<(Col<f64>, Col<f64>)> {
        let n = self.n;
        let nc = self.cons.len();
        let top = linalg::spmv(&self.explicit, x0);
        let cx = linalg::spmv(&self.half_rows, x0);
        let rhs = Col::from_fn(
            n + nc,
            |i| if i < n { top[i] } else { s[i - n] - cx[i - n] },
        );
        let mut z = self.lu.solve(&rhs);
        // one step of iterative refinement
        let r = &rhs - linalg::spmv(&self.kkt, &z);
        z += self.lu.solve(&r);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolveFailure("non-finite midpoint solution".into()));
        }
        Ok((Col::from_fn(n, |i| z[i]), Col::from_fn(nc, |i| z[n + i])))
    }
}

fn midpoint(a: &Col<f64>, b: &Col<f64>) -> Col<f64> {
    (a + b) * faer::Scale(0.5)
}

pub fn step_homogeneous(
    c: &Colligation,
    spec: &BoundaryConditionSpec,
    x: &Col<f64>,
    dt: f64,
) -> Result<Col<f64>> {
    let cons = c.constraints(spec)?;
    let x = ensure_in_kernel(c, &cons, x)?.0;
    let stepper = Stepper::new(c, cons, dt)?;
    let zero = Col::zeros(stepper.cons.len());
    Ok(stepper.step(&x, &zero)?.0)
}

#[derive(Clone, Debug)]
pub struct ForcedStep {
    pub x_next: Col<f64>,
    /// Realized input `G x_mid`; differs from the requested one only on Γ₁
    /// rows that depend on clamp rows.
    pub u_mid: Col<f64>,
    pub y_mid: Col<f64>,
    pub multiplier: Col<f64>,
    /// `2 μ^T s`.
    pub multiplier_work: f64,
}

/// Checks that `spec` is the scattering input map of the colligation.
fn check_forced_spec(c: &Colligation, spec: &BoundaryConditionSpec) -> Result<()> {
    let (Some(rc), Some(rs)) = (&c.scattering, &spec.r) else {
        return Err(Error::InvalidArgument(
            "forced runs need a scattering colligation and the matching scattering spec".into(),
        ));
    };
    let d = linalg::to_dense(rc) - linalg::to_dense(rs);
    if linalg::max_abs(d.as_ref()) > 0.0 {
        return Err(Error::InvalidArgument(
            "scattering weight of the spec differs from the colligation".into(),
        ));
    }
    Ok(())
}

pub fn step_forced(
    c: &Colligation,
    spec: &BoundaryConditionSpec,
    x: &Col<f64>,
    u_mid: &[f64],
    dt: f64,
) -> Result<ForcedStep> {
    check_forced_spec(c, spec)?;
    let stepper = Stepper::new(c, c.constraints(spec)?, dt)?;
    forced_step_with(c, &stepper, x, u_mid)
}

fn forced_step_with(
    c: &Colligation,
    stepper: &Stepper,
    x: &Col<f64>,
    u_mid: &[f64],
) -> Result<ForcedStep> {
    let cons = stepper.constraints();
    if u_mid.len() != cons.gamma1_rows {
        return Err(Error::DimensionMismatch {
            context: "input vector length",
            expected: cons.gamma1_rows,
            found: u_mid.len(),
        });
    }
    let s = cons.rhs(u_mid);
    let (x_next, mu) = stepper.step(x, &s)?;
    let xm = midpoint(x, &x_next);
    let y_mid = linalg::spmv(&c.k, &xm);
    Ok(ForcedStep {
        u_mid: linalg::spmv(&c.g, &xm),
        multiplier_work: 2.0 * linalg::dot(&mu, &s),
        x_next,
        y_mid,
        multiplier: mu,
    })
}

/// Projects `x` onto `ker C` when it is not already there.
fn ensure_in_kernel(
    c: &Colligation,
    cons: &ConstraintSet,
    x: &Col<f64>,
) -> Result<(Col<f64>, bool)> {
    let r = linalg::spmv(&cons.rows, x);
    let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let rows_max = linalg::triplets(&cons.rows)
        .iter()
        .fold(0.0f64, |a, t| a.max(t.2.abs()));
    if rmax <= 1e-12 * xmax * rows_max.max(1.0) {
        return Ok((x.clone(), false));
    }
    log::warn!("initial state violates the constraints (residual {rmax:e}); projecting");
    Ok((project_onto_kernel(&c.m_x, &cons.rows, x)?, true))
}

pub fn simulate(
    c: &Colligation,
    spec: &BoundaryConditionSpec,
    cfg: &SimulationConfig,
) -> Result<SimulationResult> {
    cfg.validate(c.state_dim())?;
    let dt = cfg.dt;
    let steps = cfg.steps();
    let forced = cfg.mode == Mode::Forced;
    if forced {
        check_forced_spec(c, spec)?;
    }
    let cons = c.constraints(spec)?;
    let (mut x, projected_initial) = if forced {
        ensure_in_kernel(c, &c.clamp_constraints()?, &cfg.x0)?
    } else {
        ensure_in_kernel(c, &cons, &cfg.x0)?
    };
    let stepper = Stepper::new(c, cons, dt)?;
    let mut e = c.energy(&x);
    let mut records = Vec::with_capacity(steps + 1);
    records.push(StepRecord {
        step: 0,
        t: 0.0,
        energy: e,
        u_norm_sq: 0.0,
        y_norm_sq: 0.0,
        multiplier_work: 0.0,
        balance_residual: 0.0,
    });
    let zero_input = vec![0.0; stepper.constraints().gamma1_rows];
    for n in 0..steps {
        let t_mid = (n as f64 + 0.5) * dt;
        let rec = if forced {
            let u = match &cfg.input {
                Some(f) => f(t_mid),
                None => zero_input.clone(),
            };
            let st = forced_step_with(c, &stepper, &x, &u)?;
            let e1 = c.energy(&st.x_next);
            let (un, yn) = (c.input_norm_sq(&st.u_mid), c.output_norm_sq(&st.y_mid));
            let rec = StepRecord {
                step: n + 1,
                t: (n + 1) as f64 * dt,
                energy: e1,
                u_norm_sq: un,
                y_norm_sq: yn,
                multiplier_work: st.multiplier_work,
                balance_residual: (e1 - e) - dt * (un - yn + st.multiplier_work),
            };
            x = st.x_next;
            rec
        } else {
            let (x1, _) = stepper.step(&x, &Col::zeros(stepper.constraints().len()))?;
            let e1 = c.energy(&x1);
            let xm = midpoint(&x, &x1);
            let rec = StepRecord {
                step: n + 1,
                t: (n + 1) as f64 * dt,
                energy: e1,
                u_norm_sq: 0.0,
                y_norm_sq: 0.0,
                multiplier_work: 0.0,
                balance_residual: (e1 - e) - 2.0 * dt * c.power(&xm),
            };
            x = x1;
            rec
        };
        e = rec.energy;
        records.push(rec);
    }
    Ok(SimulationResult {
        records,
        final_state: x,
        projected_initial,
    })
}
