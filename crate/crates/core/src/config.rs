//! Aggregated run configuration.
//!
//! One TOML file configures every stage; each section deserializes into
//! the owning module's config struct with that struct's defaults, so an
//! empty file is a valid full configuration. Unknown keys are errors
//! everywhere, which catches typos instead of silently ignoring them.
//! Dotted `key=value` overrides apply on top of the file.

use crate::attention::AttentionWeights;
use crate::geometry::CameraIntrinsics;
use crate::policy::TrainConfig;
use crate::reward::RewardParams;
use crate::risk::{RiskConfig, RiskConfigError, SemanticsConfig};
use crate::sim::{RenderConfig, ScenarioConfig};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Where pedestrian distances for reward labeling come from.
///
/// `Auto` resolves by data origin: simulator episodes carry exact
/// distances, so they use those; ingested real logs have no ground truth
/// and fall back to the pinhole estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSource {
    Auto,
    Pinhole,
    GroundTruth,
}

impl DistanceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceSource::Auto => "auto",
            DistanceSource::Pinhole => "pinhole",
            DistanceSource::GroundTruth => "ground_truth",
        }
    }

    /// Resolves `Auto` against the data origin.
    pub fn resolve(self, has_ground_truth: bool) -> DistanceSource {
        match self {
            DistanceSource::Auto if has_ground_truth => DistanceSource::GroundTruth,
            DistanceSource::Auto => DistanceSource::Pinhole,
            other => other,
        }
    }
}

impl FromStr for DistanceSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(DistanceSource::Auto),
            "pinhole" => Ok(DistanceSource::Pinhole),
            "ground_truth" => Ok(DistanceSource::GroundTruth),
            other => Err(format!(
                "unknown distance source '{other}', expected auto|pinhole|ground_truth"
            )),
        }
    }
}

/// Camera section: pinhole intrinsics plus the distance-source switch.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub focal_length_px: f64,
    pub pedestrian_height_m: f64,
    pub distance_source: DistanceSource,
}

impl Default for CameraConfig {
    fn default() -> Self {
        let i = CameraIntrinsics::default();
        CameraConfig {
            focal_length_px: i.focal_length_px,
            pedestrian_height_m: i.pedestrian_height_m,
            distance_source: DistanceSource::Auto,
        }
    }
}

impl CameraConfig {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            focal_length_px: self.focal_length_px,
            pedestrian_height_m: self.pedestrian_height_m,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override '{key}': {detail}")]
    BadOverride { key: String, detail: String },
    #[error(transparent)]
    Risk(#[from] RiskConfigError),
}

/// Full configuration for labeling, simulation, training, and evaluation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub risk: RiskConfig,
    pub semantics: SemanticsConfig,
    pub camera: CameraConfig,
    pub reward: RewardParams,
    pub attention: AttentionWeights,
    pub scenario: ScenarioConfig,
    pub render: RenderConfig,
    pub train: TrainConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let body = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PipelineConfig::from_toml_str(&body)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.risk.validate()?;
        Ok(())
    }

    /// Applies dotted-path overrides like `risk.threshold=0.8` on top of
    /// the current values. Values parse as TOML scalars; unknown keys are
    /// rejected by the same deserializer that reads config files.
    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<(), ConfigError> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut tree = toml::Value::try_from(&*self).expect("config serializes");
        for (key, raw) in overrides {
            let value = parse_scalar(raw);
            let mut node = &mut tree;
            let segments: Vec<&str> = key.split('.').collect();
            for (i, seg) in segments.iter().enumerate() {
                let table = match node {
                    toml::Value::Table(t) => t,
                    _ => {
                        return Err(ConfigError::BadOverride {
                            key: key.clone(),
                            detail: format!("'{}' is not a table", segments[..i].join(".")),
                        });
                    }
                };
                if i + 1 == segments.len() {
                    table.insert(seg.to_string(), value.clone());
                    break;
                }
                node = table
                    .entry(seg.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
            }
        }
        let rebuilt: PipelineConfig =
            tree.try_into().map_err(|e: toml::de::Error| ConfigError::BadOverride {
                key: overrides
                    .iter()
                    .map(|(k, _)| k.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
                detail: e.to_string(),
            })?;
        rebuilt.validate()?;
        *self = rebuilt;
        Ok(())
    }

    /// JSON snapshot of the effective configuration, embedded in run
    /// manifests so outputs record exactly what produced them.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Interprets an override value: booleans and numbers first, then a
/// plain string.
fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}
