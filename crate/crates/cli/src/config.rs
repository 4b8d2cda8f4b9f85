//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemKind,
    #[serde(default)]
    pub parameters: Parameters,
    /// Required when `system` is `custom`.
    pub custom: Option<CustomSystem>,
    pub grid: GridConfig,
    #[serde(default)]
    pub splitting: SplittingConfig,
    #[serde(default)]
    pub boundary_condition: BcConfig,
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Wave,
    Maxwell,
    Mindlin,
    Swap1d,
    Custom,
}

/// A scalar or a square matrix given as row-major nested arrays.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrMatrix {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Physical constants; unused keys for the chosen system are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub rho: Option<f64>,
    pub young: Option<ScalarOrMatrix>,
    pub eps: Option<f64>,
    pub mu: Option<f64>,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub thickness: Option<f64>,
    pub d_b: Option<ScalarOrMatrix>,
    pub d_s: Option<ScalarOrMatrix>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystem {
    /// `L_1, ..., L_n`, each `m1 x m2`.
    pub l: Vec<Vec<Vec<f64>>>,
    pub p0: Option<Vec<Vec<f64>>>,
    /// Constant Hamiltonian density, defaults to the identity.
    pub h: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub counts: Vec<usize>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

/// Faces listed in `gamma1` form Γ₁; all other faces are Γ₀.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingConfig {
    #[serde(default)]
    pub gamma1: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BcConfig {
    Clamp,
    Free,
    #[serde(rename = "impedance-M")]
    Impedance {
        m: ScalarOrMatrix,
    },
    /// `r` defaults to the system's own scattering weight.
    #[serde(rename = "scattering-R")]
    Scattering {
        r: Option<ScalarOrMatrix>,
    },
    /// `W1 G x + W2 K x = 0`.
    W {
        w1: Vec<Vec<f64>>,
        w2: Vec<Vec<f64>>,
    },
    /// `V1 G x + V2 K x = 0`.
    V {
        v1: Vec<Vec<f64>>,
        v2: Vec<Vec<f64>>,
    },
}

impl Default for BcConfig {
    fn default() -> Self {
        Self::Clamp
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    Zero,
    /// Gaussian in one state component; center defaults to the box center.
    Bump {
        #[serde(default)]
        component: usize,
        center: Option<Vec<f64>>,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Uniform entries in `[-1, 1]` drawn from the run seed.
    Random,
}

fn default_width() -> f64 {
    0.15
}

fn default_amplitude() -> f64 {
    1.0
}

impl Default for InitialState {
    fn default() -> Self {
        Self::Bump {
            component: 0,
            center: None,
            width: default_width(),
            amplitude: default_amplitude(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputConfig {
    Zero,
    /// `amplitude sin(2 pi frequency t)` on `[t_on, t_off]`, fed to boundary
    /// coordinate `component` of every entry on `face`.
    Sine {
        face: String,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        t_on: f64,
        #[serde(default = "default_t_off")]
        t_off: f64,
        #[serde(default)]
        component: usize,
    },
    /// Piecewise-linear in time; each row of `values` spans the whole Γ₁
    /// boundary space.
    Table {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

fn default_t_off() -> f64 {
    f64::INFINITY
}

impl Default for InputConfig {
    fn default() -> Self {
        Self::Zero
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SchemaError {}

fn check_square(name: &str, m: &[Vec<f64>]) -> Result<(), SchemaError> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(SchemaError(format!(
            "{name} must be a non-empty square matrix"
        )));
    }
    Ok(())
}

fn check_rect(name: &str, m: &[Vec<f64>]) -> Result<(), SchemaError> {
    let c = m.first().map_or(0, |r| r.len());
    if m.is_empty() || c == 0 || m.iter().any(|r| r.len() != c) {
        return Err(SchemaError(format!(
            "{name} must be a non-empty rectangular matrix"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemaError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| SchemaError(format!("invalid config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Structural checks that need no assembly.
    pub fn check(&self) -> Result<(), SchemaError> {
        let dim = self.grid.counts.len();
        let expected = match self.system {
            SystemKind::Wave => None,
            SystemKind::Maxwell => Some(3),
            SystemKind::Mindlin => Some(2),
            SystemKind::Swap1d => Some(1),
            SystemKind::Custom => self.custom.as_ref().map(|c| c.l.len()),
        };
        if dim == 0 || expected.is_some_and(|d| d != dim) {
            return Err(SchemaError(format!(
                "grid.counts has {dim} axes, system needs {}",
                expected.map_or("at least 1".into(), |d| d.to_string())
            )));
        }
        if let Some(n) = self.grid.counts.iter().find(|&&n| n < 3) {
            return Err(SchemaError(format!(
                "grid.counts entries must be >= 3, got {n}"
            )));
        }
        for (name, v) in [
            ("grid.lower", &self.grid.lower),
            ("grid.upper", &self.grid.upper),
        ] {
            if v.as_ref().is_some_and(|v| v.len() != dim) {
                return Err(SchemaError(format!("{name} must have {dim} entries")));
            }
        }
        self.check_parameters()?;
        match (&self.system, &self.custom) {
            (SystemKind::Custom, None) => {
                return Err(SchemaError(
                    "system \"custom\" needs a \"custom\" section".into(),
                ))
            }
            (SystemKind::Custom, Some(c)) => {
                for (i, l) in c.l.iter().enumerate() {
                    check_rect(&format!("custom.l[{i}]"), l)?;
                }
                if let Some(p) = &c.p0 {
                    check_square("custom.p0", p)?;
                }
                if let Some(h) = &c.h {
                    check_square("custom.h", h)?;
                }
            }
            (_, Some(_)) => {
                return Err(SchemaError(
                    "\"custom\" section given for a built-in system".into(),
                ))
            }
            _ => {}
        }
        match &self.boundary_condition {
            BcConfig::W { w1: a, w2: b } | BcConfig::V { v1: a, v2: b } => {
                check_rect("boundary condition matrix", a)?;
                check_rect("boundary condition matrix", b)?;
            }
            BcConfig::Impedance {
                m: ScalarOrMatrix::Matrix(m),
            }
            | BcConfig::Scattering {
                r: Some(ScalarOrMatrix::Matrix(m)),
            } => check_square("boundary condition matrix", m)?,
            _ => {}
        }
        if let Some(t) = &self.time {
            if !(t.dt > 0.0 && t.dt.is_finite() && t.t_final >= t.dt && t.t_final.is_finite()) {
                return Err(SchemaError(format!(
                    "time needs 0 < dt <= t_final, got dt = {}, t_final = {}",
                    t.dt, t.t_final
                )));
            }
        }
        if let InputConfig::Table { times, values } = &self.input {
            if times.is_empty() || times.len() != values.len() {
                return Err(SchemaError(
                    "input table needs one value row per time".into(),
                ));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(SchemaError("input table times must increase".into()));
            }
        }
        if !matches!(self.input, InputConfig::Zero)
            && !matches!(self.boundary_condition, BcConfig::Scattering { .. })
        {
            return Err(SchemaError(
                "a nonzero input needs the \"scattering-R\" boundary condition".into(),
            ));
        }
        Ok(())
    }

    fn check_parameters(&self) -> Result<(), SchemaError> {
        let p = &self.parameters;
        let allowed: &[&str] = match self.system {
            SystemKind::Wave => &["rho", "young"],
            SystemKind::Maxwell => &["eps", "mu", "g", "r"],
            SystemKind::Mindlin => &["rho", "thickness", "d_b", "d_s"],
            SystemKind::Swap1d | SystemKind::Custom => &[],
        };
        let given = [
            ("rho", p.rho.is_some()),
            ("young", p.young.is_some()),
            ("eps", p.eps.is_some()),
            ("mu", p.mu.is_some()),
            ("g", p.g.is_some()),
            ("r", p.r.is_some()),
            ("thickness", p.thickness.is_some()),
            ("d_b", p.d_b.is_some()),
            ("d_s", p.d_s.is_some()),
        ];
        for (name, set) in given {
            if set && !allowed.contains(&name) {
                return Err(SchemaError(format!(
                    "parameter \"{name}\" does not apply to this system"
                )));
            }
        }
        for (name, v) in [
            ("rho", p.rho),
            ("eps", p.eps),
            ("mu", p.mu),
            ("r", p.r),
            ("thickness", p.thickness),
        ] {
            if v.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                return Err(SchemaError(format!(
                    "parameter \"{name}\" must be positive"
                )));
            }
        }
        if p.g.is_some_and(|g| !(g >= 0.0 && g.is_finite())) {
            return Err(SchemaError("parameter \"g\" must be non-negative".into()));
        }
        for (name, v) in [("young", &p.young), ("d_b", &p.d_b), ("d_s", &p.d_s)] {
            if let Some(ScalarOrMatrix::Matrix(m)) = v {
                check_square(name, m)?;
            }
        }
        Ok(())
    }
}
