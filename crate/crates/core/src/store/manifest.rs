use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::dten;

pub const FORMAT_VERSION: u32 = 1;

/// Registry entry for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub model_id: String,
    pub release_date: NaiveDate,
    pub true_accuracy: Option<f64>,
    pub tensor_path: PathBuf,
}

/// Dataset and model registry for one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkManifest {
    pub benchmark_name: String,
    pub num_samples: usize,
    pub num_classes: usize,
    pub labels: Vec<usize>,
    pub task_tags: Vec<String>,
    pub models: Vec<ModelMeta>,
    pub format_version: u32,
    /// Directory that relative tensor paths resolve against. Not serialized.
    pub base_dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    model_id: String,
    release_date: String,
    true_accuracy: Option<f64>,
    tensor_path: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    benchmark_name: String,
    num_samples: usize,
    num_classes: usize,
    labels: Vec<usize>,
    task_tags: Vec<String>,
    models: Vec<RawModel>,
    format_version: u32,
}

fn invariant(msg: impl Into<String>) -> Error {
    Error::InvariantViolation(msg.into())
}

impl BenchmarkManifest {
    /// Parses and validates manifest JSON. `base_dir` resolves tensor paths.
    pub fn from_json(text: &str, path: &Path, base_dir: &Path) -> Result<Self> {
        let raw: RawManifest = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut models = Vec::with_capacity(raw.models.len());
        for (i, m) in raw.models.into_iter().enumerate() {
            let release_date =
                NaiveDate::parse_from_str(&m.release_date, "%Y-%m-%d").map_err(|e| {
                    invariant(format!(
                        "models[{i}] ({}) release_date {:?} does not parse: {e}",
                        m.model_id, m.release_date
                    ))
                })?;
            models.push(ModelMeta {
                model_id: m.model_id,
                release_date,
                true_accuracy: m.true_accuracy,
                tensor_path: PathBuf::from(m.tensor_path),
            });
        }
        let manifest = BenchmarkManifest {
            benchmark_name: raw.benchmark_name,
            num_samples: raw.num_samples,
            num_classes: raw.num_classes,
            labels: raw.labels,
            task_tags: raw.task_tags,
            models,
            format_version: raw.format_version,
            base_dir: base_dir.to_path_buf(),
        };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(invariant("num_samples must be positive"));
        }
        if self.num_classes == 0 {
            return Err(invariant("num_classes must be positive"));
        }
        if self.labels.len() != self.num_samples {
            return Err(invariant(format!(
                "labels has {} entries, num_samples is {}",
                self.labels.len(),
                self.num_samples
            )));
        }
        if let Some((i, &l)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= self.num_classes)
        {
            return Err(invariant(format!(
                "labels[{i}] = {l} outside [0, {})",
                self.num_classes
            )));
        }
        if self.task_tags.len() != self.num_samples {
            return Err(invariant(format!(
                "task_tags has {} entries, num_samples is {}",
                self.task_tags.len(),
                self.num_samples
            )));
        }
        let mut seen = HashSet::new();
        for (i, m) in self.models.iter().enumerate() {
            if !seen.insert(m.model_id.as_str()) {
                return Err(invariant(format!(
                    "duplicate model_id {:?} at models[{i}]",
                    m.model_id
                )));
            }
            if let Some(a) = m.true_accuracy {
                if !(0.0..=1.0).contains(&a) {
                    return Err(invariant(format!(
                        "models[{i}] ({}) true_accuracy {a} outside [0, 1]",
                        m.model_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON text (pretty, fixed key order, trailing newline).
    pub fn to_json(&self) -> String {
        let raw = RawManifest {
            benchmark_name: self.benchmark_name.clone(),
            num_samples: self.num_samples,
            num_classes: self.num_classes,
            labels: self.labels.clone(),
            task_tags: self.task_tags.clone(),
            models: self
                .models
                .iter()
                .map(|m| RawModel {
                    model_id: m.model_id.clone(),
                    release_date: m.release_date.format("%Y-%m-%d").to_string(),
                    true_accuracy: m.true_accuracy,
                    tensor_path: m.tensor_path.to_string_lossy().replace('\\', "/"),
                })
                .collect(),
            format_version: self.format_version,
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn model(&self, model_id: &str) -> Result<&ModelMeta> {
        self.models
            .iter()
            .find(|m| m.model_id == model_id)
            .ok_or_else(|| Error::UnknownModel(model_id.to_string()))
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.model_id.clone()).collect()
    }

    pub fn tensor_file(&self, model_id: &str) -> Result<PathBuf> {
        Ok(self.base_dir.join(&self.model(model_id)?.tensor_path))
    }

    /// Distinct task tags in first-appearance order.
    pub fn distinct_tags(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.task_tags
            .iter()
            .map(String::as_str)
            .filter(|t| seen.insert(*t))
            .collect()
    }
}

/// Reads and validates a manifest file.
pub fn load_manifest(path: &Path) -> Result<BenchmarkManifest> {
    let bytes = dten::read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: format!("not UTF-8: {e}"),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    BenchmarkManifest::from_json(&text, path, base)
}

pub fn save_manifest(manifest: &BenchmarkManifest, path: &Path) -> Result<()> {
    dten::write_file(path, manifest.to_json().as_bytes())
}
