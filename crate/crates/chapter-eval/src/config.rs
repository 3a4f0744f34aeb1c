//! Run configuration: a JSON document mirroring the metric configuration,
//! with command-line overrides layered on top.

use std::path::Path;

use chapter_eval_core::chapter::{BucketLabel, DurationBucket};
use chapter_eval_core::metrics::{GraceNormalization, MetricConfig};
use chapter_eval_core::TextField;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Lexical,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BucketSpec {
    pub label: String,
    pub min_s: f64,
    pub max_s: f64,
}

/// The on-disk shape. Every key is optional; missing keys take defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub similarity: Option<Similarity>,
    #[serde(default)]
    pub scorer_cmd: Option<String>,
    #[serde(default)]
    pub text_field: Option<String>,
    #[serde(default)]
    pub grace_normalization: Option<String>,
    #[serde(default)]
    pub f1_thresholds: Option<Vec<f64>>,
    #[serde(default)]
    pub buckets: Option<Vec<BucketSpec>>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub similarity: Option<Similarity>,
    pub scorer_cmd: Option<String>,
    pub buckets_json: Option<String>,
    pub text_field: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub similarity: Similarity,
    pub scorer_cmd: Option<String>,
    pub metric: MetricConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            similarity: Similarity::Lexical,
            scorer_cmd: None,
            metric: MetricConfig::default(),
        }
    }
}

pub fn parse_buckets(specs: &[BucketSpec]) -> Result<Vec<DurationBucket>, ConfigError> {
    specs
        .iter()
        .map(|b| {
            let label = BucketLabel::from_name(&b.label)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown bucket label {:?}", b.label)))?;
            Ok(DurationBucket {
                label,
                min: b.min_s,
                max: b.max_s,
            })
        })
        .collect()
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let file = match path {
            None => ConfigFile::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                serde_json::from_str(&text)?
            }
        };
        Self::resolve(file, overrides)
    }

    pub fn resolve(mut file: ConfigFile, overrides: &Overrides) -> Result<Self, ConfigError> {
        if let Some(s) = overrides.similarity {
            file.similarity = Some(s);
        }
        if let Some(c) = &overrides.scorer_cmd {
            file.scorer_cmd = Some(c.clone());
        }
        if let Some(f) = &overrides.text_field {
            file.text_field = Some(f.clone());
        }
        if let Some(raw) = &overrides.buckets_json {
            file.buckets = Some(serde_json::from_str(raw)?);
        }

        let mut metric = MetricConfig::default();
        if let Some(name) = &file.text_field {
            metric.text_field = TextField::from_name(name)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown text field {name:?}")))?;
        }
        if let Some(name) = &file.grace_normalization {
            metric.grace_normalization = GraceNormalization::from_name(name)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown grace normalization {name:?}")))?;
        }
        if let Some(t) = file.f1_thresholds {
            metric.f1_thresholds = t;
        }
        if let Some(b) = &file.buckets {
            metric.buckets = parse_buckets(b)?;
        }
        metric
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let similarity = file.similarity.unwrap_or_default();
        if similarity == Similarity::External && file.scorer_cmd.is_none() {
            return Err(ConfigError::Invalid(
                "similarity \"external\" needs scorer_cmd".into(),
            ));
        }
        Ok(RunConfig {
            similarity,
            scorer_cmd: file.scorer_cmd,
            metric,
        })
    }

    /// The fully resolved configuration, with every key present.
    pub fn to_json(&self) -> serde_json::Value {
        let m = &self.metric;
        serde_json::json!({
            "similarity": self.similarity,
            "scorer_cmd": self.scorer_cmd,
            "text_field": m.text_field.name(),
            "grace_normalization": m.grace_normalization.name(),
            "f1_thresholds": m.f1_thresholds,
            "buckets": m.buckets.iter().map(|b| BucketSpec {
                label: b.label.name().to_string(),
                min_s: b.min,
                max_s: b.max,
            }).collect::<Vec<_>>(),
        })
    }

    /// Hex SHA-256 of the compact resolved configuration.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
