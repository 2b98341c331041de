//! Experiment configuration: a versioned JSON document holding the system,
//! the named observables, the task and its parameters. Every parameter is
//! validated up front so failures name the offending key before any
//! computation starts.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};
use thiserror::Error;

use cubelab_core::dynamics::{Observable, Point, SystemSpec};

pub const CONFIG_VERSION: u32 = 1;
const SQRT2M1: f64 = std::f64::consts::SQRT_2 - 1.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("missing parameter `{0}`")]
    Missing(&'static str),
    #[error("parameter `{key}`: {reason}")]
    Parameter { key: &'static str, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Orbit,
    Avg,
    Ww,
    Seminorm,
    Verify,
    Trace,
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TaskKind::Orbit => "orbit",
            TaskKind::Avg => "avg",
            TaskKind::Ww => "ww",
            TaskKind::Seminorm => "seminorm",
            TaskKind::Verify => "verify",
            TaskKind::Trace => "trace",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedObservable {
    pub name: String,
    pub observable: Observable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ExperimentConfig {
    pub version: u32,
    pub system: SystemSpec,
    pub observables: Vec<NamedObservable>,
    pub task: TaskKind,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default)]
    pub x0: Option<Point>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut parameters = Map::new();
        parameters.insert("k".into(), 2u32.into());
        parameters.insert("N".into(), 64u32.into());
        parameters.insert("method".into(), "fast".into());
        ExperimentConfig {
            version: CONFIG_VERSION,
            system: SystemSpec::rotation(SQRT2M1),
            observables: vec![NamedObservable {
                name: "f".into(),
                observable: Observable::character(1),
            }],
            task: TaskKind::Avg,
            parameters,
            x0: None,
            seed: 42,
            output: None,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// The start point: explicit, or a generic default matching the system's
    /// dimension.
    pub fn start_point(&self) -> Point {
        self.x0.unwrap_or(match self.system.kind.dimension() {
            2 => Point::TwoD(0.2, 0.3),
            _ => Point::OneD(0.2),
        })
    }

    pub fn get_usize(&self, key: &'static str) -> Result<usize, ConfigError> {
        let v = self
            .parameters
            .get(key)
            .ok_or(ConfigError::Missing(key))?;
        v.as_u64()
            .map(|u| u as usize)
            .ok_or_else(|| ConfigError::Parameter {
                key,
                reason: format!("expected a non-negative integer, got {v}"),
            })
    }

    pub fn get_usize_or(&self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        match self.parameters.get(key) {
            None => Ok(default),
            Some(_) => self.get_usize(key),
        }
    }

    pub fn get_str(&self, key: &'static str) -> Result<&str, ConfigError> {
        let v = self
            .parameters
            .get(key)
            .ok_or(ConfigError::Missing(key))?;
        v.as_str().ok_or_else(|| ConfigError::Parameter {
            key,
            reason: format!("expected a string, got {v}"),
        })
    }

    pub fn get_str_or(&self, key: &'static str, default: &'static str) -> Result<&str, ConfigError> {
        match self.parameters.get(key) {
            None => Ok(default),
            Some(_) => self.get_str(key),
        }
    }

    pub fn horizons(&self) -> Result<Option<Vec<usize>>, ConfigError> {
        match self.parameters.get("horizons") {
            None => Ok(None),
            Some(Value::String(s)) => crate::presets::parse_horizons(s).map(Some),
            Some(Value::Array(a)) => {
                let hs: Option<Vec<usize>> =
                    a.iter().map(|v| v.as_u64().map(|u| u as usize)).collect();
                hs.map(Some).ok_or(ConfigError::Parameter {
                    key: "horizons",
                    reason: "expected an array of integers".into(),
                })
            }
            Some(v) => Err(ConfigError::Parameter {
                key: "horizons",
                reason: format!("expected a list or spec string, got {v}"),
            }),
        }
    }

    fn require_positive(&self, key: &'static str) -> Result<usize, ConfigError> {
        let v = self.get_usize(key)?;
        if v == 0 {
            return Err(ConfigError::Parameter {
                key,
                reason: "must be at least 1".into(),
            });
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        self.system
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.observables.is_empty() {
            return Err(ConfigError::Invalid("at least one observable required".into()));
        }
        for named in &self.observables {
            named
                .observable
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("observable `{}`: {e}", named.name)))?;
        }

        match self.task {
            TaskKind::Orbit => {
                self.require_positive("L")?;
            }
            TaskKind::Avg | TaskKind::Trace => {
                let k = self.get_usize("k")?;
                if !(2..=4).contains(&k) {
                    return Err(ConfigError::Parameter {
                        key: "k",
                        reason: format!("must lie in 2..=4, got {k}"),
                    });
                }
                let horizons = self.horizons()?;
                if self.task == TaskKind::Trace && horizons.is_none() {
                    return Err(ConfigError::Missing("horizons"));
                }
                if horizons.is_none() {
                    self.require_positive("N")?;
                }
                if let Some(h) = &horizons {
                    if h.is_empty() {
                        return Err(ConfigError::Parameter {
                            key: "horizons",
                            reason: "must not be empty".into(),
                        });
                    }
                }
                let method = self.get_str_or("method", "fast")?;
                if !["naive", "fast", "both"].contains(&method) {
                    return Err(ConfigError::Parameter {
                        key: "method",
                        reason: format!("must be naive, fast, or both, got `{method}`"),
                    });
                }
            }
            TaskKind::Ww => {
                self.require_positive("N")?;
                let oversample = self.get_usize_or("oversample", 8)?;
                if oversample < 2 || !oversample.is_power_of_two() {
                    return Err(ConfigError::Parameter {
                        key: "oversample",
                        reason: format!("must be a power of two >= 2, got {oversample}"),
                    });
                }
            }
            TaskKind::Seminorm => {
                let order = self.get_usize("order")?;
                if order != 2 && order != 3 {
                    return Err(ConfigError::Parameter {
                        key: "order",
                        reason: format!("must be 2 or 3, got {order}"),
                    });
                }
                self.require_positive("N")?;
                self.require_positive("H")?;
            }
            TaskKind::Verify => {
                let check = self.get_str("check")?;
                match check {
                    "vdc" => {
                        self.require_positive("trials")?;
                        let n = self.require_positive("N")?;
                        let h = self.require_positive("H")?;
                        if h >= n {
                            return Err(ConfigError::Parameter {
                                key: "H",
                                reason: format!("needs H < N, got H={h}, N={n}"),
                            });
                        }
                    }
                    "lemma2" => {
                        self.require_positive("N")?;
                        self.require_positive("H")?;
                    }
                    "lemma3" => {
                        self.require_positive("N")?;
                    }
                    "lemma4" => {
                        let k = self.get_usize("k")?;
                        if k != 3 && k != 4 {
                            return Err(ConfigError::Parameter {
                                key: "k",
                                reason: format!("lemma4 supports k in {{3, 4}}, got {k}"),
                            });
                        }
                        self.require_positive("N")?;
                    }
                    "eq1" | "eq10" => {
                        self.require_positive("N")?;
                    }
                    other => {
                        return Err(ConfigError::Parameter {
                            key: "check",
                            reason: format!(
                                "must be one of vdc, lemma2, lemma3, lemma4, eq1, eq10; got `{other}`"
                            ),
                        })
                    }
                }
            }
        }
        Ok(())
    }
}
