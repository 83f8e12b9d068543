//! Run configuration: a JSON file merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sfl_core::states::{StateSelector, Thresholds};
use sfl_core::ModelSpec;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Dense,
    Secular,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Which states a scaling study or a profile dump follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    One(StateSelector),
    All,
}

impl Default for Selector {
    fn default() -> Self {
        Selector::One(StateSelector::LargestIm)
    }
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "largest-im" => Ok(Selector::One(StateSelector::LargestIm)),
            "bound" => Ok(Selector::One(StateSelector::Bound)),
            "all" => Ok(Selector::All),
            _ => s
                .strip_prefix("index:")
                .and_then(|k| k.parse().ok())
                .map(|k| Selector::One(StateSelector::Index(k)))
                .ok_or_else(|| format!("unknown state selector {s:?} (use largest-im, bound, all or index:K)")),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => f.write_str("all"),
            Selector::One(StateSelector::LargestIm) => f.write_str("largest-im"),
            Selector::One(StateSelector::Bound) => f.write_str("bound"),
            Selector::One(StateSelector::Index(k)) => write!(f, "index:{k}"),
        }
    }
}

/// `start:stop:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected start:stop:count, got {s:?}");
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Range {
            start: parts[0].parse().map_err(|_| bad())?,
            stop: parts[1].parse().map_err(|_| bad())?,
            count: parts[2].parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub tol_real: Option<f64>,
    pub chi_window: Option<f64>,
    pub xi_rel: Option<f64>,
    pub bound_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub delta: Range,
    pub gamma: Range,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// Sizes in sites.
    pub sizes: Vec<usize>,
}

/// Contents of the `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub method: Option<Method>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
    pub scaling: Option<ScalingConfig>,
    /// `largest-im`, `bound`, `all` or `index:K`.
    pub selector: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub method: Option<Method>,
    pub tol_real: Option<f64>,
}

/// Everything a command needs after merging file and flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub model: Option<ModelSpec>,
    pub method: Method,
    pub thresholds: Thresholds,
    pub out: PathBuf,
    pub format: Format,
    pub sweep: Option<SweepConfig>,
    pub sizes: Vec<usize>,
    pub selector: Option<Selector>,
}

impl Settings {
    pub fn merge(cfg: RunConfig, ov: Overrides) -> Result<Self, CliError> {
        let mut th = Thresholds::default();
        let t = cfg.tolerances;
        th.tol_real = ov.tol_real.or(t.tol_real).unwrap_or(th.tol_real);
        th.chi_window = t.chi_window.unwrap_or(th.chi_window);
        th.xi_rel = t.xi_rel.unwrap_or(th.xi_rel);
        th.bound_fraction = t.bound_fraction.unwrap_or(th.bound_fraction);
        for (name, v) in [
            ("tol_real", th.tol_real),
            ("chi_window", th.chi_window),
            ("xi_rel", th.xi_rel),
            ("bound_fraction", th.bound_fraction),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        let method = ov.method.or(cfg.method).unwrap_or_default();
        if let Some(m) = &cfg.model {
            m.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let solvable = !matches!(m, ModelSpec::AaNonreciprocal(_) | ModelSpec::AaImaginary(_));
            if !solvable && method != Method::Dense {
                return Err(CliError::Config("quasiperiodic models have no secular route; use --method dense".into()));
            }
        }
        let selector = cfg.selector.as_deref().map(str::parse).transpose().map_err(CliError::Config)?;
        Ok(Settings {
            model: cfg.model,
            method,
            thresholds: th,
            out: ov.out.or(cfg.output.dir).unwrap_or_else(|| PathBuf::from(".")),
            format: ov.format.or(cfg.output.format).unwrap_or_default(),
            sweep: cfg.sweep,
            sizes: cfg.scaling.map(|s| s.sizes).unwrap_or_default(),
            selector,
        })
    }

    pub fn model(&self) -> Result<ModelSpec, CliError> {
        self.model.ok_or_else(|| CliError::Config("no model given; pass --config with a \"model\" entry".into()))
    }
}
