//! Run configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [model]
//! kind = "ks"          # ks | ks_rescaled | graph | graph_mollified | phi
//! alpha = 2.0
//!
//! [grid]
//! length = "2pi"       # number, or "<a>pi", "<a>*pi", "<a>π"
//! N = 64
//!
//! [stepper]
//! dt = 1e-3
//! t_end = 1.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::analysis::{DEFAULT_GAMMA, DEFAULT_M};
use crate::dynamics::{ModelKind, ModelParams};
use crate::geometry::VelocityLaw;
use crate::spectral::{read_snapshot, Grid, RealField, SnapshotError, SpectralError};
use crate::stepping::{Scheme, StepperConfig, SteppingError};
use crate::validation::default_u0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Syntax(String),
    #[error("{0}")]
    Invalid(String),
    #[error("initial_condition.path {0} does not exist")]
    MissingFile(PathBuf),
    #[error("initial condition file: {0}")]
    Snapshot(#[from] SnapshotError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Domain length, written as a number or a multiple of π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Length(pub f64);

impl Length {
    fn parse(text: &str) -> Option<f64> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.to_ascii_lowercase();
        let stripped = t
            .strip_suffix("pi")
            .or_else(|| t.strip_suffix('π'))
            .map(|s| s.strip_suffix('*').unwrap_or(s));
        match stripped {
            Some("") => Some(std::f64::consts::PI),
            Some(factor) => factor.parse::<f64>().ok().map(|a| a * std::f64::consts::PI),
            None => t.parse().ok(),
        }
    }
}

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Length;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or a multiple of pi such as \"32pi\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Length, E> {
                Ok(Length(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Length, E> {
                Ok(Length(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Length, E> {
                Ok(Length(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Length, E> {
                Length::parse(v)
                    .map(Length)
                    .ok_or_else(|| E::custom(format!("cannot read {v:?} as a length")))
            }
        }
        d.deserialize_any(Visitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_law")]
    pub law: VelocityLaw,
}

fn default_law() -> VelocityLaw {
    VelocityLaw::Full
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: Length,
    #[serde(rename = "N")]
    pub n: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    pub t_end: f64,
    /// Defaults to 1/200 of the run horizon (`t_end`, or `tau_star` for
    /// sweeps), never below `dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
}

fn default_scheme() -> Scheme {
    Scheme::Etdrk4
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `0.1(sin(4k₀x) + 0.5 sin(6k₀x))`
    #[default]
    Default,
    Zero,
    Constant { value: f64 },
    /// `Σ a·sin(k_p x + φ)` from `[p, a, φ]` triples.
    Modes { modes: Vec<(i64, f64, f64)> },
    /// A binary field snapshot on the configured grid.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write `snap_<i>.fld` for every stored snapshot.
    #[serde(default = "yes")]
    pub snapshots: bool,
    /// Also write each snapshot as `snap_<i>.csv` (`x,value`).
    #[serde(default)]
    pub field_csv: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            snapshots: true,
            field_csv: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_eps")]
    pub eps_values: Vec<f64>,
    #[serde(default = "default_deltas")]
    pub delta_values: Vec<f64>,
    #[serde(default = "one")]
    pub tau_star: f64,
    /// Sweeps with a smaller fitted slope fail validation.
    #[serde(default = "default_min_slope")]
    pub min_slope: f64,
    /// Allowed growth of `y_space_error/ε^{7/4}` at the smallest ε.
    #[serde(default = "default_bound_factor")]
    pub bound_factor: f64,
    #[serde(default = "default_dispersion_modes")]
    pub dispersion_modes: Vec<i64>,
    #[serde(default = "default_amplitude")]
    pub dispersion_amplitude: f64,
    #[serde(default = "default_tolerance")]
    pub dispersion_tolerance: f64,
}

fn default_eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn default_deltas() -> Vec<f64> {
    vec![0.5, 0.25, 0.125, 0.0625]
}
fn one() -> f64 {
    1.0
}
fn default_min_slope() -> f64 {
    0.9
}
fn default_bound_factor() -> f64 {
    1.1
}
fn default_dispersion_modes() -> Vec<i64> {
    vec![2, 3, 4]
}
fn default_amplitude() -> f64 {
    1e-8
}
fn default_tolerance() -> f64 {
    0.01
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            eps_values: default_eps(),
            delta_values: default_deltas(),
            tau_star: 1.0,
            min_slope: default_min_slope(),
            bound_factor: default_bound_factor(),
            dispersion_modes: default_dispersion_modes(),
            dispersion_amplitude: default_amplitude(),
            dispersion_tolerance: default_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_m")]
    pub m: f64,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_m() -> f64 {
    DEFAULT_M
}

impl Default for LemmaSection {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            m: DEFAULT_M,
        }
    }
}

/// A parsed and validated configuration. Serializing it and parsing the
/// result gives back the same value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub stepper: StepperSection,
    #[serde(default)]
    pub initial_condition: InitialCondition,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub lemma: LemmaSection,
}

/// Parses, fills in defaults and validates. A relative initial-condition
/// path is taken relative to the working directory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_in(text, None)
}

/// Reads a config file; relative paths inside it are resolved against the
/// directory holding the file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_in(&text, path.parent())
}

fn parse_config_in(text: &str, base: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig =
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.apply_defaults();
    cfg.validate()?;
    if let InitialCondition::File { path } = &mut cfg.initial_condition {
        if let Some(dir) = base.filter(|_| path.is_relative()) {
            *path = dir.join(&*path);
        }
        if !path.exists() {
            return Err(ConfigError::MissingFile(path.clone()));
        }
    }
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configs always serialize")
}

impl RunConfig {
    fn apply_defaults(&mut self) {
        let m = &mut self.model;
        match m.kind {
            ModelKind::Phi => {
                let eps = m.epsilon.unwrap_or(0.0);
                m.epsilon = Some(eps);
                m.alpha.get_or_insert(1.0 + eps);
            }
            ModelKind::KsRescaled => {
                m.alpha.get_or_insert(2.0);
            }
            ModelKind::Ks => {
                m.alpha.get_or_insert(2.0);
            }
            ModelKind::Graph | ModelKind::GraphMollified => {
                m.alpha.get_or_insert(1.0);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.grid.n;
        if n < 8 || n % 2 != 0 {
            return Err(invalid(format!("grid.N must be even ≥ 8 (got {n})")));
        }
        let l = self.grid.length.0;
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("grid.length must be positive (got {l})")));
        }
        self.model_params()?;
        if self.model.kind == ModelKind::KsRescaled && self.model.alpha != Some(2.0) {
            return Err(invalid("model.alpha is fixed at 2 for ks_rescaled"));
        }
        self.stepper_config()?;
        if let InitialCondition::Modes { modes } = &self.initial_condition {
            for &(p, a, phase) in modes {
                if p < 0 || p >= n / 2 || !a.is_finite() || !phase.is_finite() {
                    return Err(invalid(format!(
                        "initial_condition.modes entry [{p}, {a}, {phase}] needs 0 ≤ p < N/2 and finite values"
                    )));
                }
            }
        }
        if let InitialCondition::Constant { value } = self.initial_condition {
            if !value.is_finite() {
                return Err(invalid("initial_condition.value must be finite"));
            }
        }
        let e = &self.experiment;
        if e.eps_values.len() < 3 {
            return Err(invalid("need ≥ 3 epsilon values"));
        }
        if !strictly_decreasing_positive(&e.eps_values) {
            return Err(invalid("experiment.eps_values must be positive and strictly decreasing"));
        }
        if e.delta_values.len() < 2 || !strictly_decreasing_positive(&e.delta_values) {
            return Err(invalid(
                "experiment.delta_values needs ≥ 2 positive, strictly decreasing values",
            ));
        }
        if !(e.tau_star > 0.0 && e.tau_star.is_finite()) {
            return Err(invalid("experiment.tau_star must be positive"));
        }
        if !(e.bound_factor >= 1.0) {
            return Err(invalid("experiment.bound_factor must be ≥ 1"));
        }
        if !(e.dispersion_amplitude > 0.0 && e.dispersion_amplitude <= 1e-6) {
            return Err(invalid("experiment.dispersion_amplitude must lie in (0, 1e-6]"));
        }
        if !(e.dispersion_tolerance > 0.0) {
            return Err(invalid("experiment.dispersion_tolerance must be positive"));
        }
        if e.dispersion_modes.iter().any(|&p| p <= 0 || p >= n / 2) {
            return Err(invalid("experiment.dispersion_modes must lie in 1..N/2"));
        }
        if !(self.lemma.m > 2.0) {
            return Err(invalid("lemma.m must be > 2"));
        }
        if !(self.lemma.gamma > 0.0) {
            return Err(invalid("lemma.gamma must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>, ConfigError> {
        Grid::new(self.grid.length.0, self.grid.n.max(0) as usize)
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        let m = &self.model;
        let alpha = m.alpha.expect("defaults applied");
        let params = match m.kind {
            ModelKind::Ks => ModelParams::ks(alpha),
            ModelKind::KsRescaled => ModelParams::ks_rescaled(),
            ModelKind::Graph => match m.law {
                VelocityLaw::Full => ModelParams::graph(alpha),
                VelocityLaw::Simplified => ModelParams::graph_simplified(alpha),
            },
            ModelKind::GraphMollified => ModelParams {
                law: m.law,
                ..ModelParams::graph_mollified(alpha, m.delta.unwrap_or(f64::NAN))
            },
            ModelKind::Phi => {
                let eps = m.epsilon.expect("defaults applied");
                if (alpha - (1.0 + eps)).abs() > 0.0 {
                    ModelParams::phi_with_alpha(alpha, eps)
                } else {
                    ModelParams::phi(eps)
                }
            }
        };
        if m.kind == ModelKind::GraphMollified && m.delta.is_none() {
            return Err(invalid("model.delta is required for the graph_mollified model"));
        }
        params.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(params)
    }

    /// Stepper settings for a run over `[0, t_end]`.
    pub fn stepper_for(&self, t_end: f64) -> Result<StepperConfig, ConfigError> {
        let s = &self.stepper;
        let every = s.snapshot_every.unwrap_or(t_end / 200.0).max(s.dt).min(t_end);
        StepperConfig::new(s.dt, s.scheme, t_end, every)
            .map_err(|e: SteppingError| invalid(e.to_string()))
    }

    pub fn stepper_config(&self) -> Result<StepperConfig, ConfigError> {
        self.stepper_for(self.stepper.t_end)
    }

    pub fn initial_field(&self) -> Result<RealField, ConfigError> {
        let grid = self.grid()?;
        let field = match &self.initial_condition {
            InitialCondition::Default => default_u0(&grid),
            InitialCondition::Zero => RealField::zeros(grid),
            InitialCondition::Constant { value } => RealField::constant(grid, *value),
            InitialCondition::Modes { modes } => RealField::from_modes(grid, modes)
                .map_err(|e: SpectralError| invalid(e.to_string()))?,
            InitialCondition::File { path } => {
                if !path.exists() {
                    return Err(ConfigError::MissingFile(path.clone()));
                }
                let f = read_snapshot(path)?;
                if !f.grid().same_as(&grid) {
                    return Err(invalid(format!(
                        "initial condition file {} is not on the configured grid",
                        path.display()
                    )));
                }
                RealField::new(grid, f.into_values()).map_err(|e| invalid(e.to_string()))?
            }
        };
        Ok(field)
    }
}

fn strictly_decreasing_positive(v: &[f64]) -> bool {
    v.iter().all(|x| *x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[1] < w[0])
}
