use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{BenchmarkManifest, ModelMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Source models are released strictly before `cutoff`.
    Chronological { cutoff: NaiveDate },
    /// Seeded shuffle; the first `round(ratio * n)` models become sources.
    Uniform { ratio: f64, seed: u64 },
}

/// Disjoint source and target models; only models with a known accuracy take part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSplit {
    pub source_ids: Vec<String>,
    pub target_ids: Vec<String>,
    pub policy: SplitPolicy,
}

fn eligible(manifest: &BenchmarkManifest) -> Vec<&ModelMeta> {
    manifest
        .models
        .iter()
        .filter(|m| m.true_accuracy.is_some())
        .collect()
}

pub fn split_models(manifest: &BenchmarkManifest, policy: SplitPolicy) -> Result<ModelSplit> {
    let models = eligible(manifest);
    let (source_ids, target_ids): (Vec<String>, Vec<String>) = match policy {
        SplitPolicy::Chronological { cutoff } => {
            let (s, t): (Vec<&ModelMeta>, Vec<&ModelMeta>) =
                models.iter().partition(|m| m.release_date < cutoff);
            (
                s.iter().map(|m| m.model_id.clone()).collect(),
                t.iter().map(|m| m.model_id.clone()).collect(),
            )
        }
        SplitPolicy::Uniform { ratio, seed } => {
            if !(0.0..=1.0).contains(&ratio) {
                return Err(Error::InvalidConfig(format!("split ratio {ratio}")));
            }
            let mut ids: Vec<String> = models.iter().map(|m| m.model_id.clone()).collect();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let n_source = (ratio * ids.len() as f64).round() as usize;
            let target = ids.split_off(n_source);
            (ids, target)
        }
    };
    if source_ids.is_empty() {
        return Err(Error::EmptySide("source"));
    }
    if target_ids.is_empty() {
        return Err(Error::EmptySide("target"));
    }
    Ok(ModelSplit {
        source_ids,
        target_ids,
        policy,
    })
}

/// The release date at position `n / 2` of the sorted dates of eligible models.
pub fn median_cutoff(manifest: &BenchmarkManifest) -> Result<NaiveDate> {
    let mut dates: Vec<NaiveDate> = eligible(manifest).iter().map(|m| m.release_date).collect();
    if dates.is_empty() {
        return Err(Error::InsufficientModels(
            "no model has a true_accuracy".into(),
        ));
    }
    dates.sort();
    Ok(dates[dates.len() / 2])
}
