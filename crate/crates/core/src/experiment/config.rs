//! Experiment configuration: TOML (or JSON, by file extension) with
//! per-experiment defaults for every omitted key.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::channel::{ChannelSpec, GainDistribution};
use crate::optimize::{CeoParams, PatternOptParams};
use crate::surface::{BaselinePattern, DEFAULT_BUDGET_GAIN};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {}", .0.display())]
    Missing(PathBuf),

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: parse error: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: schema error at `{field}`: {message}", path.display())]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Demo,
    Case1,
    Case2,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Demo => "demo",
            Self::Case1 => "case1",
            Self::Case2 => "case2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    /// Square grid side lengths; `n` means an `n×n` grid.
    pub grids: Vec<usize>,
    /// Active element counts `M̂` (demo and case 1).
    pub active: Vec<usize>,
    /// Phase resolutions in bits (case 1).
    pub bits: Vec<u32>,
    /// Spherical-harmonic order `n`, `Q = (n+1)²` coefficients per element.
    pub basis_order: usize,
    /// Pattern energy budget in multiples of the isotropic pattern energy.
    pub budget_gain: f64,
    /// Aperture side in wavelengths shared by every grid; `0` means
    /// half-wavelength spacing regardless of grid size.
    pub aperture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiUserSection {
    pub users: usize,
    /// Transmit array sizes for the pattern-reconfigurable surface.
    pub tx_antennas: Vec<usize>,
    /// Transmit array size for the traditional baselines.
    pub baseline_tx_antennas: usize,
    pub baselines: Vec<BaselinePattern>,
    /// Rate weights; empty means `1/K` each.
    pub weights: Vec<f64>,
    pub power_budget: f64,
}

impl Default for MultiUserSection {
    fn default() -> Self {
        Self {
            users: 2,
            tx_antennas: vec![5, 10],
            baseline_tx_antennas: 10,
            baselines: vec![BaselinePattern::Tr38901, BaselinePattern::Isotropic],
            weights: Vec::new(),
            power_budget: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub noise_power: f64,
    pub channel: ChannelSpec,
    pub surface: SurfaceSpec,
    pub ceo: CeoParams,
    pub pattern: PatternOptParams,
    pub multiuser: MultiUserSection,
}

impl ExperimentConfig {
    /// Full default configuration of one experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let surface = SurfaceSpec {
            grids: vec![16],
            active: vec![16],
            bits: vec![1],
            basis_order: 3,
            budget_gain: DEFAULT_BUDGET_GAIN,
            aperture: 2.0,
        };
        let base = Self {
            experiment: kind,
            seeds: vec![1],
            output_dir: None,
            noise_power: 1.0,
            channel: ChannelSpec::new(1, 4, 0.01),
            surface,
            ceo: CeoParams::default(),
            pattern: PatternOptParams::default(),
            multiuser: MultiUserSection::default(),
        };
        match kind {
            ExperimentKind::Demo => Self {
                channel: ChannelSpec {
                    gain: GainDistribution::UnitModulus,
                    ..base.channel
                },
                surface: SurfaceSpec {
                    grids: vec![40],
                    active: vec![400],
                    aperture: 20.0,
                    ..base.surface
                },
                ..base
            },
            ExperimentKind::Case1 => Self {
                seeds: (1..=20).collect(),
                noise_power: 4.0,
                channel: ChannelSpec::new(2, 3, 0.01),
                surface: SurfaceSpec {
                    grids: vec![6, 10, 16],
                    active: vec![16, 25],
                    bits: vec![1, 2],
                    aperture: 2.5,
                    ..base.surface
                },
                ..base
            },
            ExperimentKind::Case2 => Self {
                seeds: (1..=20).collect(),
                noise_power: 1.0,
                channel: ChannelSpec::new(2, 2, 0.01),
                surface: SurfaceSpec {
                    grids: vec![5, 10],
                    aperture: 0.0,
                    ..base.surface
                },
                ..base
            },
        }
    }

    /// Parses TOML (or JSON when `json` is set), fills omitted keys from the
    /// experiment defaults and validates.
    pub fn from_str_with(text: &str, json: bool, path: &Path) -> Result<Self, ConfigError> {
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        let user: Value = if json {
            serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| parse_err(e.to_string()))?
        };
        let schema = |field: &str, message: String| ConfigError::Schema {
            path: path.to_path_buf(),
            field: field.to_string(),
            message,
        };
        let Value::Object(ref table) = user else {
            return Err(schema("", "top level must be a table".into()));
        };
        let kind_value = table
            .get("experiment")
            .ok_or_else(|| schema("experiment", "missing field".into()))?;
        let kind: ExperimentKind = serde_json::from_value(kind_value.clone())
            .map_err(|e| schema("experiment", e.to_string()))?;
        let mut merged = serde_json::to_value(Self::defaults(kind)).expect("defaults serialize");
        merge(&mut merged, user);
        let cfg: Self = serde_path_to_error::deserialize(merged).map_err(|e| {
            let field = e.path().to_string();
            schema(&field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "must not be empty"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(invalid(
                "seeds",
                format!("seed {dup} appears more than once"),
            ));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(invalid(
                "noise_power",
                format!("must be positive, got {}", self.noise_power),
            ));
        }
        self.channel
            .validate()
            .map_err(|e| invalid("channel", e.to_string()))?;
        self.ceo
            .validate()
            .map_err(|e| invalid("ceo", e.to_string()))?;
        self.pattern
            .validate()
            .map_err(|e| invalid("pattern", e.to_string()))?;

        let s = &self.surface;
        if s.grids.is_empty() || s.grids.contains(&0) {
            return Err(invalid(
                "surface.grids",
                "must be a non-empty list of positive sizes",
            ));
        }
        if s.active.is_empty() || s.active.contains(&0) {
            return Err(invalid(
                "surface.active",
                "must be a non-empty list of positive counts",
            ));
        }
        if s.bits.is_empty() || s.bits.iter().any(|b| !(1..=16).contains(b)) {
            return Err(invalid(
                "surface.bits",
                "must be a non-empty list of values in 1..=16",
            ));
        }
        if s.basis_order > 10 {
            return Err(invalid(
                "surface.basis_order",
                format!("at most 10, got {}", s.basis_order),
            ));
        }
        if !(s.budget_gain > 0.0 && s.budget_gain.is_finite()) {
            return Err(invalid(
                "surface.budget_gain",
                format!("must be positive, got {}", s.budget_gain),
            ));
        }
        if !(s.aperture >= 0.0 && s.aperture.is_finite()) {
            return Err(invalid(
                "surface.aperture",
                format!("must be >= 0, got {}", s.aperture),
            ));
        }
        if self.experiment != ExperimentKind::Case2 {
            let smallest = *s.grids.iter().min().expect("non-empty");
            for &a in &s.active {
                if a > smallest * smallest {
                    return Err(invalid(
                        "surface.active",
                        format!("{a} active elements exceed the {smallest}x{smallest} grid"),
                    ));
                }
                let (r, c) = layout_factors(a);
                if c > smallest {
                    return Err(invalid(
                        "surface.active",
                        format!("no {r}x{c} uniform layout of {a} elements fits the {smallest}x{smallest} grid"),
                    ));
                }
            }
        }

        let mu = &self.multiuser;
        if mu.users == 0 {
            return Err(invalid("multiuser.users", "must be positive"));
        }
        if mu.tx_antennas.is_empty() || mu.tx_antennas.contains(&0) {
            return Err(invalid(
                "multiuser.tx_antennas",
                "must be a non-empty list of positive sizes",
            ));
        }
        if mu.baseline_tx_antennas == 0 {
            return Err(invalid(
                "multiuser.baseline_tx_antennas",
                "must be positive",
            ));
        }
        if mu.baselines.is_empty() {
            return Err(invalid("multiuser.baselines", "must not be empty"));
        }
        if !mu.weights.is_empty() {
            if mu.weights.len() != mu.users {
                return Err(invalid(
                    "multiuser.weights",
                    format!("expected {} weights, got {}", mu.users, mu.weights.len()),
                ));
            }
            if mu.weights.iter().all(|w| *w == 0.0) {
                return Err(invalid("multiuser.weights", "all weights are zero"));
            }
            if mu.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(invalid(
                    "multiuser.weights",
                    "every weight must be positive",
                ));
            }
        }
        if !(mu.power_budget > 0.0 && mu.power_budget.is_finite()) {
            return Err(invalid(
                "multiuser.power_budget",
                format!("must be positive, got {}", mu.power_budget),
            ));
        }
        Ok(())
    }

    pub fn weights(&self) -> Option<Vec<f64>> {
        (!self.multiuser.weights.is_empty()).then(|| self.multiuser.weights.clone())
    }

    /// Grid spacing in metres for an `n×n` grid.
    pub fn spacing(&self, n: usize) -> f64 {
        let lambda = self.channel.wavelength;
        if self.surface.aperture == 0.0 || n < 2 {
            lambda / 2.0
        } else {
            self.surface.aperture * lambda / (n - 1) as f64
        }
    }
}

/// `rows × cols = active` with `rows ≤ cols` as close to square as possible.
pub fn layout_factors(active: usize) -> (usize, usize) {
    let mut r = (active as f64).sqrt().floor() as usize;
    while r > 1 && !active.is_multiple_of(r) {
        r -= 1;
    }
    let r = r.max(1);
    (r, active / r)
}

fn merge(base: &mut Value, user: Value) {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Loads and validates a config file; `.json` files are read as JSON, all
/// others as TOML.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    if !path.exists() {
        return Err(ConfigError::Missing(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    ExperimentConfig::from_str_with(&text, json, path)
}

/// Writes `config` as TOML, or JSON for a `.json` path.
pub fn save_config(config: &ExperimentConfig, path: &Path) -> crate::Result<()> {
    let json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let text = if json {
        serde_json::to_string_pretty(config)?
    } else {
        config.to_toml()
    };
    std::fs::write(path, text)?;
    Ok(())
}
