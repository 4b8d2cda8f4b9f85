//! Assembly from a config and the three subcommands.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use faer::{Col, Mat};
use phsim_core::algebra::{build_block_tuple_from_data, validate_hamiltonian};
use phsim_core::bc::{check_contraction_conditions, check_relation_conditions, BcForm};
use phsim_core::boundary::{boundary_geometry, parse_face_name};
use phsim_core::examples::{
    constant_field, constant_matrix, maxwell_system, mindlin_system, swap_counterexample,
    wave_system,
};
use phsim_core::linalg;
use phsim_core::selftest::{run_selftest, Fault};
use phsim_core::system::{generator_check, scattering_transform};
use phsim_core::timestepper::{simulate, InputSignal};
use phsim_core::{
    BoundaryConditionSpec, BoundarySplitting, BoxGrid, Colligation, ExampleSystem, MatrixTuple,
    Mode, SimulationConfig, SimulationResult, SpMat,
};
use rand::{Rng, SeedableRng};

use crate::config::{
    BcConfig, CustomSystem, InitialState, InputConfig, RunConfig, ScalarOrMatrix, SchemaError,
    SystemKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Dense generator checks are skipped above this state dimension.
const DENSE_LIMIT: usize = 2500;

pub const CSV_HEADER: &str = "step,t,E,u_norm_sq,y_norm_sq,multiplier_work,balance_residual";

pub enum CliError {
    Usage(String),
    Failed(String),
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        Self::Usage(e.0)
    }
}

impl From<phsim_core::Error> for CliError {
    fn from(e: phsim_core::Error) -> Self {
        Self::Failed(e.to_string())
    }
}

fn usage(e: phsim_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn rows_to_mat(m: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(m.len(), m[0].len(), |i, j| m[i][j])
}

fn square(v: &ScalarOrMatrix, n: usize, name: &str) -> Result<Mat<f64>, CliError> {
    match v {
        ScalarOrMatrix::Scalar(a) => Ok(Mat::<f64>::identity(n, n) * faer::Scale(*a)),
        ScalarOrMatrix::Matrix(m) if m.len() == n => Ok(rows_to_mat(m)),
        ScalarOrMatrix::Matrix(m) => Err(CliError::Usage(format!(
            "{name} is {0}x{0}, expected {n}x{n}",
            m.len()
        ))),
    }
}

fn custom_system(c: &CustomSystem) -> Result<ExampleSystem, CliError> {
    let mats: Vec<Mat<f64>> = c.l.iter().map(|l| rows_to_mat(l)).collect();
    let tuple = MatrixTuple::new(mats).map_err(usage)?;
    let m = tuple.m();
    let p0 = match &c.p0 {
        Some(p) => rows_to_mat(p),
        None => Mat::zeros(m, m),
    };
    let structure = build_block_tuple_from_data(&tuple, &p0).map_err(usage)?;
    let h = match &c.h {
        Some(h) => rows_to_mat(h),
        None => Mat::identity(m, m),
    };
    if h.nrows() != m {
        return Err(CliError::Usage(format!("custom.h must be {m}x{m}")));
    }
    let mut sys = swap_counterexample()?;
    sys.name = "custom";
    sys.structure = structure;
    sys.density = constant_matrix(h);
    sys.state_labels = Vec::new();
    sys.costate_labels = Vec::new();
    sys.input_labels = Vec::new();
    sys.output_labels = Vec::new();
    Ok(sys)
}

pub fn build_system(cfg: &RunConfig) -> Result<ExampleSystem, CliError> {
    let p = &cfg.parameters;
    let f = |v: Option<f64>, d: f64| constant_field(v.unwrap_or(d));
    Ok(match cfg.system {
        SystemKind::Wave => {
            let n = cfg.grid.counts.len();
            let young = match &p.young {
                Some(y) => square(y, n, "parameters.young")?,
                None => Mat::identity(n, n),
            };
            wave_system(n, f(p.rho, 1.0), constant_matrix(young)).map_err(usage)?
        }
        SystemKind::Maxwell => {
            maxwell_system(f(p.eps, 1.0), f(p.mu, 1.0), f(p.g, 0.0), f(p.r, 1.0))?
        }
        SystemKind::Mindlin => {
            let d_b = match &p.d_b {
                Some(v) => square(v, 3, "parameters.d_b")?,
                None => Mat::identity(3, 3),
            };
            let d_s = match &p.d_s {
                Some(v) => square(v, 2, "parameters.d_s")?,
                None => Mat::identity(2, 2),
            };
            mindlin_system(
                f(p.rho, 1.0),
                f(p.thickness, 1.0),
                constant_matrix(d_b),
                constant_matrix(d_s),
            )?
        }
        SystemKind::Swap1d => swap_counterexample()?,
        SystemKind::Custom => custom_system(cfg.custom.as_ref().expect("checked by schema"))?,
    })
}

pub fn build_grid(cfg: &RunConfig) -> Result<BoxGrid, CliError> {
    let n = cfg.grid.counts.len();
    BoxGrid::new(
        cfg.grid.counts.clone(),
        cfg.grid.lower.clone().unwrap_or_else(|| vec![0.0; n]),
        cfg.grid.upper.clone().unwrap_or_else(|| vec![1.0; n]),
    )
    .map_err(usage)
}

pub fn build_splitting(cfg: &RunConfig, grid: &BoxGrid) -> Result<BoundarySplitting, CliError> {
    let faces = cfg
        .splitting
        .gamma1
        .iter()
        .map(|name| {
            parse_face_name(name, grid.dim())
                .ok_or_else(|| CliError::Usage(format!("unknown face \"{name}\"")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    BoundarySplitting::from_faces(&boundary_geometry(grid), &faces).map_err(usage)
}

fn sized(m: &[Vec<f64>], b: usize, name: &str) -> Result<SpMat, CliError> {
    if m[0].len() != b {
        return Err(CliError::Usage(format!(
            "{name} has {} columns, the boundary space has dimension {b}",
            m[0].len()
        )));
    }
    Ok(linalg::to_sparse(rows_to_mat(m).as_ref()))
}

/// The boundary condition and, for scattering inputs, its weight `R`.
pub fn build_spec(
    cfg: &RunConfig,
    sys: &ExampleSystem,
    c: &Colligation,
) -> Result<BoundaryConditionSpec, CliError> {
    let b = c.boundary_dim();
    Ok(match &cfg.boundary_condition {
        BcConfig::Clamp => BoundaryConditionSpec::clamp(b),
        BcConfig::Free => BoundaryConditionSpec::free(b),
        BcConfig::Impedance { m } => {
            let m = square(m, b, "impedance M")?;
            BoundaryConditionSpec::impedance(linalg::to_sparse(m.as_ref())).map_err(usage)?
        }
        BcConfig::Scattering { r } => {
            let r = match r {
                Some(r) => linalg::to_sparse(square(r, b, "scattering R")?.as_ref()),
                None => sys.scattering_matrix(c),
            };
            BoundaryConditionSpec::scattering(r).map_err(usage)?
        }
        BcConfig::W { w1, w2 } => {
            BoundaryConditionSpec::new(BcForm::W, sized(w1, b, "w1")?, sized(w2, b, "w2")?)
                .map_err(usage)?
        }
        BcConfig::V { v1, v2 } => {
            BoundaryConditionSpec::new(BcForm::V, sized(v1, b, "v1")?, sized(v2, b, "v2")?)
                .map_err(usage)?
        }
    })
}

pub struct Assembled {
    pub system: ExampleSystem,
    pub colligation: Colligation,
    pub spec: BoundaryConditionSpec,
}

pub fn assemble(cfg: &RunConfig) -> Result<Assembled, CliError> {
    let system = build_system(cfg)?;
    let grid = build_grid(cfg)?;
    let split = build_splitting(cfg, &grid)?;
    let colligation = system.colligation(&grid, &split)?;
    let spec = build_spec(cfg, &system, &colligation)?;
    Ok(Assembled {
        system,
        colligation,
        spec,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Per-condition verdicts; returns the report text and the overall result.
pub fn validation_report(cfg: &RunConfig, a: &Assembled) -> Result<(String, bool), CliError> {
    let c = &a.colligation;
    let mut out = String::new();
    let mut all = true;
    let mut line = |out: &mut String, name: &str, ok: bool, detail: String| {
        all &= ok;
        let _ = writeln!(out, "{:<7}{name}: {detail}", verdict(ok));
    };
    let _ = writeln!(
        out,
        "system {} on grid {:?}: state dimension {}, boundary dimension {}",
        a.system.name,
        c.grid.counts(),
        c.state_dim(),
        c.boundary_dim()
    );
    let s = &a.system.structure;
    let p_asym = s
        .p()
        .iter()
        .map(|p| linalg::asymmetry(p.as_ref()))
        .fold(0.0, f64::max);
    line(
        &mut out,
        "symmetric P_i blocks",
        p_asym == 0.0,
        format!("max asymmetry {p_asym:.3e}"),
    );
    let skew = linalg::max_abs((s.p0() + s.p0().transpose()).as_ref());
    line(
        &mut out,
        "skew P0",
        skew <= 1e-14,
        format!("max |P0 + P0^T| = {skew:.3e}"),
    );
    let h = validate_hamiltonian(&c.hamiltonian, &c.grid.all_coords())?;
    line(
        &mut out,
        "Hamiltonian bounds",
        h.pass,
        format!("eigenvalues in [{:.6e}, {:.6e}]", h.min_eig, h.max_eig),
    );
    a.spec.validate(c.boundary_dim())?;
    match a.spec.form {
        BcForm::W => {
            let r = check_contraction_conditions(&a.spec);
            line(
                &mut out,
                "W range condition",
                r.range_ok,
                "ran(W1 - W2) in ran(W1 + W2)".into(),
            );
            line(
                &mut out,
                "W injectivity",
                r.injective,
                "W1 + W2 injective".into(),
            );
            line(
                &mut out,
                "W sign condition",
                r.inequality_ok,
                format!("min eig of W1 W2^T + W2 W1^T = {:.3e}", r.min_eig),
            );
        }
        BcForm::V => {
            let r = check_relation_conditions(&a.spec)?;
            line(
                &mut out,
                "relation dissipative",
                r.relation.dissipative,
                format!("max eig {:.3e}", r.relation.max_eig),
            );
            line(
                &mut out,
                "relation maximal",
                r.relation.maximal,
                format!("dimension {} of {}", r.relation.dim, c.boundary_dim()),
            );
            line(
                &mut out,
                "V sign condition",
                r.inequality_ok,
                format!("min eig of V1 V2^T + V2 V1^T = {:.3e}", r.min_eig),
            );
        }
    }
    if c.state_dim() <= DENSE_LIMIT {
        let g = generator_check(c, &a.spec)?;
        line(
            &mut out,
            "discrete generator dissipative",
            g.dissipative,
            format!(
                "max sym eig {:.3e}, norm {:.3e}",
                g.max_sym_eig, g.operator_norm
            ),
        );
        line(
            &mut out,
            "semigroup contractive",
            g.contractive,
            g.contraction
                .iter()
                .map(|(dt, n)| format!("|exp({dt} A)| = {n:.12}"))
                .collect::<Vec<_>>()
                .join(", "),
        );
    } else {
        let _ = writeln!(
            out,
            "skip   discrete generator: state dimension above {DENSE_LIMIT}"
        );
    }
    let _ = cfg;
    Ok((out, all))
}

fn initial_state(cfg: &RunConfig, c: &Colligation) -> Result<Col<f64>, CliError> {
    let m = c.structure.m();
    let n = c.state_dim();
    Ok(match &cfg.initial {
        InitialState::Zero => Col::zeros(n),
        InitialState::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            Col::from_fn(n, |_| rng.gen_range(-1.0..1.0))
        }
        InitialState::Bump {
            component,
            center,
            width,
            amplitude,
        } => {
            if *component >= m {
                return Err(CliError::Usage(format!(
                    "initial.component {component} out of range for {m} components"
                )));
            }
            let g = &c.grid;
            let center = match center {
                Some(z) if z.len() == g.dim() => z.clone(),
                Some(_) => {
                    return Err(CliError::Usage(
                        "initial.center has the wrong length".into(),
                    ))
                }
                None => (0..g.dim())
                    .map(|a| 0.5 * (g.lower()[a] + g.upper()[a]))
                    .collect(),
            };
            Col::from_fn(n, |i| {
                if i % m != *component {
                    return 0.0;
                }
                let z = g.coords(i / m);
                let r2: f64 = z.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
                amplitude * (-r2 / (width * width)).exp()
            })
        }
    })
}

fn input_signal(cfg: &RunConfig, c: &Colligation) -> Result<Option<InputSignal>, CliError> {
    let b = c.boundary_dim();
    Ok(match &cfg.input {
        InputConfig::Zero => None,
        InputConfig::Sine {
            face,
            amplitude,
            frequency,
            t_on,
            t_off,
            component,
        } => {
            let id = parse_face_name(face, c.grid.dim())
                .ok_or_else(|| CliError::Usage(format!("unknown face \"{face}\"")))?;
            let entries = c.traces.geometry.entries();
            let rows: Vec<usize> = c
                .maps
                .blocks
                .iter()
                .filter(|blk| entries[blk.entry].face == id && *component < blk.rank())
                .map(|blk| blk.offset + component)
                .collect();
            if rows.is_empty() {
                return Err(CliError::Usage(format!(
                    "input face \"{face}\" has no Γ₁ boundary coordinates"
                )));
            }
            let (a, fr, on, off) = (*amplitude, *frequency, *t_on, *t_off);
            Some(Arc::new(move |t: f64| {
                let mut u = vec![0.0; b];
                if t >= on && t <= off {
                    let v = a * (std::f64::consts::TAU * fr * t).sin();
                    for &r in &rows {
                        u[r] = v;
                    }
                }
                u
            }))
        }
        InputConfig::Table { times, values } => {
            if let Some(row) = values.iter().find(|r| r.len() != b) {
                return Err(CliError::Usage(format!(
                    "input table rows have {} entries, the boundary space has dimension {b}",
                    row.len()
                )));
            }
            let (times, values) = (times.clone(), values.clone());
            Some(Arc::new(move |t: f64| {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    return values[0].clone();
                }
                if k == times.len() {
                    return values[k - 1].clone();
                }
                let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                values[k - 1]
                    .iter()
                    .zip(&values[k])
                    .map(|(a, b)| (1.0 - w) * a + w * b)
                    .collect()
            }))
        }
    })
}

pub fn csv_text(res: &SimulationResult) -> String {
    let mut s = String::with_capacity(160 * (res.records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &res.records {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.step, r.t, r.energy, r.u_norm_sq, r.y_norm_sq, r.multiplier_work, r.balance_residual
        );
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<i32, CliError> {
    let a = assemble(cfg)?;
    let (text, ok) = validation_report(cfg, &a)?;
    print!("{text}");
    if let Some(p) = &cfg.output.report {
        write_file(p, &text)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<i32, CliError> {
    let time = cfg
        .time
        .as_ref()
        .ok_or_else(|| CliError::Usage("simulate needs a \"time\" section".into()))?;
    let a = assemble(cfg)?;
    let (vtext, ok) = validation_report(cfg, &a)?;
    if !ok {
        print!("{vtext}");
        eprintln!("configuration failed validation; not simulating");
        return Ok(EXIT_FAIL);
    }
    let forced = a.spec.r.is_some();
    let c = if forced {
        scattering_transform(
            &a.colligation,
            a.spec.r.as_ref().expect("scattering weight"),
        )?
    } else {
        a.colligation.clone()
    };
    let sim = SimulationConfig {
        dt: time.dt,
        t_final: time.t_final,
        input: input_signal(cfg, &c)?,
        x0: initial_state(cfg, &c)?,
        mode: if forced {
            Mode::Forced
        } else {
            Mode::Homogeneous
        },
    };
    let start = Instant::now();
    let res = simulate(&c, &a.spec, &sim)?;
    let elapsed = start.elapsed();

    let csv = csv_text(&res);
    match out.or(cfg.output.csv.as_deref()) {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }

    let e0 = res.records[0].energy;
    let e1 = res.records.last().expect("initial record").energy;
    let resid = res.max_relative_residual();
    let monotone = res.is_monotone(1e-12 * e0.max(f64::MIN_POSITIVE));
    let mut rep = String::new();
    let _ = writeln!(
        rep,
        "system {} with {} steps of dt = {}",
        a.system.name,
        res.records.len() - 1,
        time.dt
    );
    let _ = writeln!(
        rep,
        "mode: {}",
        if forced {
            "forced (scattering input)"
        } else {
            "homogeneous"
        }
    );
    if res.projected_initial {
        let _ = writeln!(rep, "initial state projected onto the boundary constraints");
    }
    let _ = writeln!(rep, "initial energy: {e0:.16e}");
    let _ = writeln!(rep, "final energy:   {e1:.16e}");
    if e0 > 0.0 {
        let _ = writeln!(rep, "relative energy change: {:.3e}", (e1 - e0) / e0);
    }
    let _ = writeln!(rep, "max relative balance residual: {resid:.3e}");
    let _ = writeln!(
        rep,
        "energy non-increasing: {}",
        if monotone { "yes" } else { "no" }
    );
    let _ = writeln!(rep, "wall time: {:.3} s", elapsed.as_secs_f64());
    eprint!("{rep}");
    if let Some(p) = &cfg.output.report {
        write_file(p, &rep)?;
    }
    let mut failed = resid > 1e-10;
    if !forced && !monotone {
        failed = true;
    }
    Ok(if failed { EXIT_FAIL } else { EXIT_OK })
}

pub fn cmd_selftest(seed: u64, fault: Option<Fault>) -> i32 {
    let start = Instant::now();
    let report = run_selftest(seed, fault);
    for c in &report.checks {
        println!(
            "{:<7}{:<22} {:>8.3} s  {}",
            verdict(c.pass),
            c.name,
            c.elapsed.as_secs_f64(),
            c.detail
        );
    }
    println!("total {:.3} s", start.elapsed().as_secs_f64());
    match report.first_failure() {
        None => EXIT_OK,
        Some(c) => {
            eprintln!("selftest failed: {}", c.name);
            EXIT_FAIL
        }
    }
}
