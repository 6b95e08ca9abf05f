//! JSON run configurations. Complex numbers are `[re, im]` pairs; unknown
//! fields are rejected. Every field has a default, so `{}` is a valid config
//! for every command.

use std::path::Path;

use num_complex::Complex64;
use pointer_sim::bath::{BathSpec, Mode, Temperature};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Pair = [f64; 2];

pub fn to_complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn from_complex(z: Complex64) -> Pair {
    [z.re, z.im]
}

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Reads and parses a config file. Parse errors carry line and column.
pub fn load<C: DeserializeOwned>(path: &Path) -> Result<C, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}:{msg}", path.display())),
        other => other,
    })
}

pub fn parse<C: DeserializeOwned>(text: &str) -> Result<C, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("{}:{}: {e}", e.line(), e.column())))
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn finite_pair(name: &str, p: Pair) -> Result<(), CliError> {
    require(p[0].is_finite() && p[1].is_finite(), || {
        format!("{name}: components must be finite")
    })
}

fn temperature(beta: Option<f64>) -> Result<Temperature<f64>, CliError> {
    match beta {
        None => Ok(Temperature::Zero),
        Some(b) => Temperature::from_beta(b).map_err(|e| CliError::Config(format!("beta: {e}"))),
    }
}

/// Uniform or explicit time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TimeGrid {
    Linspace { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl TimeGrid {
    pub fn linspace(start: f64, stop: f64, count: usize) -> Self {
        TimeGrid::Linspace { start, stop, count }
    }

    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            TimeGrid::Linspace { start, stop, count } => {
                require(*count >= 1, || "times.count must be at least 1".into())?;
                if *count == 1 {
                    vec![*start]
                } else {
                    let step = (stop - start) / (*count - 1) as f64;
                    (0..*count)
                        .map(|i| {
                            if i + 1 == *count {
                                *stop
                            } else {
                                start + step * i as f64
                            }
                        })
                        .collect()
                }
            }
            TimeGrid::List(v) => v.clone(),
        };
        require(!pts.is_empty(), || "times: grid is empty".into())?;
        require(pts.iter().all(|t| t.is_finite() && *t >= 0.0), || {
            "times: entries must be finite and >= 0".into()
        })?;
        require(pts.windows(2).all(|w| w[0] <= w[1]), || {
            "times: grid must be ascending".into()
        })?;
        Ok(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub omega: f64,
    pub g: Pair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathConfig {
    /// `J(w) = eta w e^{-w/omega_c}`; `beta` absent means zero temperature.
    Ohmic {
        eta: f64,
        omega_c: f64,
        #[serde(default)]
        beta: Option<f64>,
    },
    Discrete {
        modes: Vec<ModeConfig>,
        #[serde(default)]
        beta: Option<f64>,
    },
}

impl BathConfig {
    pub fn spec(&self) -> Result<BathSpec<f64>, CliError> {
        let spec = match self {
            BathConfig::Ohmic { eta, omega_c, beta } => {
                BathSpec::ohmic(*eta, *omega_c, temperature(*beta)?)
            }
            BathConfig::Discrete { modes, beta } => BathSpec::discrete(
                modes
                    .iter()
                    .map(|m| Mode {
                        omega: m.omega,
                        coupling: to_complex(m.g),
                    })
                    .collect(),
                temperature(*beta)?,
            ),
        };
        spec.map_err(|e| CliError::Config(format!("bath: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PremeasureConfig {
    pub a: Pair,
    pub b: Pair,
    pub omega0: f64,
    pub g: f64,
    pub n_odd: u32,
}

impl Default for PremeasureConfig {
    fn default() -> Self {
        Self {
            a: [H, 0.0],
            b: [H, 0.0],
            omega0: 0.0,
            g: 1.0,
            n_odd: 1,
        }
    }
}

impl PremeasureConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        finite_pair("a", self.a)?;
        finite_pair("b", self.b)?;
        let norm = to_complex(self.a).norm_sqr() + to_complex(self.b).norm_sqr();
        require((norm - 1.0).abs() <= 1e-12, || {
            format!("|a|^2 + |b|^2 must be 1, got {norm}")
        })?;
        require(self.omega0.is_finite(), || "omega0 must be finite".into())?;
        require(self.g.is_finite() && self.g != 0.0, || {
            "g must be finite and nonzero".into()
        })?;
        require(self.n_odd % 2 == 1, || {
            format!("n_odd must be odd, got {}", self.n_odd)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecohereConfig {
    pub a: Pair,
    pub b: Pair,
    pub omega0: f64,
    pub bath: BathConfig,
    pub times: TimeGrid,
}

impl Default for DecohereConfig {
    /// Bell-type pre-measured state coupled to a zero-temperature ohmic bath.
    fn default() -> Self {
        Self {
            a: [H, 0.0],
            b: [H, 0.0],
            omega0: 0.25,
            bath: BathConfig::Ohmic {
                eta: 1.0,
                omega_c: 1.0,
                beta: None,
            },
            times: TimeGrid::linspace(0.0, 10.0, 101),
        }
    }
}

impl DecohereConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        finite_pair("a", self.a)?;
        finite_pair("b", self.b)?;
        let norm = to_complex(self.a).norm_sqr() + to_complex(self.b).norm_sqr();
        require((norm - 1.0).abs() <= 1e-12, || {
            format!("|a|^2 + |b|^2 must be 1, got {norm}")
        })?;
        require(self.omega0.is_finite(), || "omega0 must be finite".into())?;
        self.bath.spec()?;
        self.times.points().map(|_| ())
    }
}

/// How bath modes are chosen for the oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModesConfig {
    /// `w_k = k omega_max / count`, couplings drawn uniformly from `g_range`
    /// with the run seed.
    Stratified {
        count: usize,
        omega_max: f64,
        g_range: [f64; 2],
    },
    Explicit {
        modes: Vec<ModeConfig>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleRoute {
    Factorized,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Initial `rho_SA(0)` as a pure state over `|++>, |+->, |-+>, |-->`.
    pub amplitudes: [Pair; 4],
    pub omega0: f64,
    pub beta: Option<f64>,
    pub modes: ModesConfig,
    /// Fock cutoff; chosen by the tail criterion when absent.
    pub n_max: Option<usize>,
    pub tail_limit: f64,
    pub enforce_adequacy: bool,
    pub tolerance: f64,
    pub times: TimeGrid,
    pub route: OracleRoute,
    pub dimension_cap: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            amplitudes: [[0.5, 0.0], [0.0, 0.5], [-0.5, 0.0], [0.5, 0.0]],
            omega0: 0.5,
            beta: Some(1.0),
            modes: ModesConfig::Stratified {
                count: 5,
                omega_max: 2.0,
                g_range: [0.1, 0.3],
            },
            n_max: None,
            tail_limit: 1e-6,
            enforce_adequacy: true,
            tolerance: 1e-4,
            times: TimeGrid::linspace(0.0, 10.0, 20),
            route: OracleRoute::Factorized,
            dimension_cap: pointer_sim::oracle::DEFAULT_DIMENSION_CAP,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (i, p) in self.amplitudes.iter().enumerate() {
            finite_pair(&format!("amplitudes[{i}]"), *p)?;
        }
        let norm: f64 = self
            .amplitudes
            .iter()
            .map(|p| to_complex(*p).norm_sqr())
            .sum();
        require((norm - 1.0).abs() <= 1e-12, || {
            format!("amplitudes must be normalized, got norm^2 {norm}")
        })?;
        require(self.omega0.is_finite(), || "omega0 must be finite".into())?;
        temperature(self.beta)?;
        match &self.modes {
            ModesConfig::Stratified {
                count,
                omega_max,
                g_range,
            } => {
                require(*count >= 1, || "modes.count must be at least 1".into())?;
                require(omega_max.is_finite() && *omega_max > 0.0, || {
                    "modes.omega_max must be positive".into()
                })?;
                require(
                    g_range[0].is_finite() && g_range[1].is_finite() && g_range[0] <= g_range[1],
                    || "modes.g_range must be an ordered finite pair".into(),
                )?;
            }
            ModesConfig::Explicit { modes } => {
                for (i, m) in modes.iter().enumerate() {
                    require(m.omega.is_finite() && m.omega > 0.0, || {
                        format!("modes[{i}].omega must be positive")
                    })?;
                    finite_pair(&format!("modes[{i}].g"), m.g)?;
                }
            }
        }
        require(self.tail_limit > 0.0 && self.tail_limit < 1.0, || {
            "tail_limit must lie in (0, 1)".into()
        })?;
        require(self.tolerance > 0.0, || "tolerance must be positive".into())?;
        self.times.points().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanState {
    /// Fully decohered `diag(p, 0, 0, q)`.
    Decohered { populations: [f64; 2] },
    /// `a|++> + b|-->` after phase damping with the given `I1`.
    Premeasured { a: Pair, b: Pair, i1: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub state: ScanState,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Extra uniformly random Bloch candidates drawn with the run seed.
    pub random_candidates: usize,
    pub tolerance: f64,
    /// Number of `(x, y)` directions searched for the pure-state ambiguity.
    pub ambiguity_directions: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            state: ScanState::Decohered {
                populations: [0.5, 0.5],
            },
            n_theta: 10,
            n_phi: 10,
            random_candidates: 0,
            tolerance: 1e-8,
            ambiguity_directions: 24,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.state {
            ScanState::Decohered {
                populations: [p, q],
            } => require(
                *p >= 0.0 && *q >= 0.0 && (p + q - 1.0).abs() <= 1e-12,
                || "state.populations must be nonnegative and sum to 1".into(),
            )?,
            ScanState::Premeasured { a, b, i1 } => {
                finite_pair("state.a", *a)?;
                finite_pair("state.b", *b)?;
                let norm = to_complex(*a).norm_sqr() + to_complex(*b).norm_sqr();
                require((norm - 1.0).abs() <= 1e-12, || {
                    format!("|a|^2 + |b|^2 must be 1, got {norm}")
                })?;
                require(i1.is_finite() && *i1 >= 0.0, || {
                    "state.i1 must be finite and >= 0".into()
                })?;
            }
        }
        require(self.n_theta >= 1 && self.n_phi >= 1, || {
            "n_theta and n_phi must be positive".into()
        })?;
        require(self.tolerance >= 0.0, || {
            "tolerance must be nonnegative".into()
        })?;
        require(self.ambiguity_directions >= 1, || {
            "ambiguity_directions must be positive".into()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvarianceConfig {
    pub c0: Pair,
    pub c1: Pair,
    /// Phase of the system swap.
    pub phi: f64,
    pub tolerance: f64,
    pub denominator_cap: u64,
    /// Number of `|c0|` values in the reversal sweep; 0 disables it.
    pub sweep_points: usize,
    pub seed: u64,
}

impl Default for EnvarianceConfig {
    fn default() -> Self {
        Self {
            c0: [0.5, 0.0],
            c1: [0.0, 0.75f64.sqrt()],
            phi: 0.0,
            tolerance: 1e-10,
            denominator_cap: 10_000,
            sweep_points: 0,
            seed: 0,
        }
    }
}

impl EnvarianceConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        finite_pair("c0", self.c0)?;
        finite_pair("c1", self.c1)?;
        let norm = to_complex(self.c0).norm_sqr() + to_complex(self.c1).norm_sqr();
        require((norm - 1.0).abs() <= 1e-12, || {
            format!("|c0|^2 + |c1|^2 must be 1, got {norm}")
        })?;
        require(self.phi.is_finite(), || "phi must be finite".into())?;
        require(self.tolerance > 0.0, || "tolerance must be positive".into())?;
        require(self.denominator_cap >= 2, || {
            "denominator_cap must be at least 2".into()
        })
    }
}
