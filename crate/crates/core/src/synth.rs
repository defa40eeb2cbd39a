//! Synthetic model populations with known ground truth.
//!
//! Per (model m, sample i) the probability of answering correctly follows an
//! item-response curve `sigmoid(-alpha_i . theta_m + beta_i)`. That mass is
//! placed on the true label and the remainder is spread over the distractors
//! with a temperature softmax of per-sample random logits.

use std::path::PathBuf;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::store::{
    accuracy_of, tensor::correctness_with_labels, BenchmarkManifest, ModelMeta, Population,
    PredictionTensor, FORMAT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub models: usize,
    pub samples: usize,
    pub classes: usize,
    pub ability_dim: usize,
    pub seed: u64,
    pub temperature: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Number of task tags; 1 leaves every tag empty.
    pub tasks: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            models: 200,
            samples: 2000,
            classes: 4,
            ability_dim: 3,
            seed: 0,
            temperature: 1.0,
            start_date: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2025, 12, 31).unwrap(),
            tasks: 4,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.models < 4 {
            return bad("need at least 4 models");
        }
        if self.samples == 0 || self.ability_dim == 0 || self.tasks == 0 {
            return bad("samples, ability_dim and tasks must be positive");
        }
        if self.classes < 2 {
            return bad("need at least 2 classes");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if self.end_date < self.start_date {
            return bad("end_date precedes start_date");
        }
        Ok(())
    }
}

/// Latent draws behind a population.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthLatents {
    /// `models x ability_dim`
    pub abilities: Vec<Vec<f64>>,
    /// `samples x ability_dim`
    pub discriminations: Vec<Vec<f64>>,
    pub difficulties: Vec<f64>,
    pub labels: Vec<usize>,
    /// `samples x (classes - 1)`, shared by every model.
    pub distractor_logits: Vec<Vec<f64>>,
}

impl SynthLatents {
    /// `sigmoid(-alpha_i . theta_m + beta_i)`
    pub fn p_correct(&self, m: usize, i: usize) -> f64 {
        let dot: f64 = self.discriminations[i]
            .iter()
            .zip(&self.abilities[m])
            .map(|(a, t)| a * t)
            .sum();
        sigmoid(-dot + self.difficulties[i])
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits
        .iter()
        .map(|&l| ((l - max) / temperature).exp())
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn generate_population(config: &SynthConfig) -> Result<Population> {
    Ok(generate_with_latents(config)?.0)
}

/// Generates a population and returns the latent draws used.
pub fn generate_with_latents(config: &SynthConfig) -> Result<(Population, SynthLatents)> {
    let latents = draw_latents(config)?;
    Ok((realize(config, &latents)?, latents))
}

/// Draws abilities, item parameters, labels and distractor logits.
///
/// Abilities are folded into the positive orthant and discriminations into
/// the negative one, so a larger ability norm means higher success odds.
pub fn draw_latents(config: &SynthConfig) -> Result<SynthLatents> {
    config.validate()?;
    let (mm, nn, cc, dim) = (
        config.models,
        config.samples,
        config.classes,
        config.ability_dim,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let abilities = (0..mm)
        .map(|_| (0..dim).map(|_| normal().abs()).collect())
        .collect();
    let discriminations = (0..nn)
        .map(|_| (0..dim).map(|_| -normal().abs()).collect())
        .collect();
    let difficulties = (0..nn).map(|_| normal()).collect();
    let distractor_logits = (0..nn)
        .map(|_| (0..cc - 1).map(|_| normal()).collect())
        .collect();
    let labels = (0..nn).map(|_| rng.random_range(0..cc)).collect();
    Ok(SynthLatents {
        abilities,
        discriminations,
        difficulties,
        labels,
        distractor_logits,
    })
}

/// Builds tensors, dates, tags and accuracies from fixed latents.
pub fn realize(config: &SynthConfig, latents: &SynthLatents) -> Result<Population> {
    config.validate()?;
    let (mm, nn, cc) = (config.models, config.samples, config.classes);
    let shapes_ok = latents.abilities.len() == mm
        && latents.discriminations.len() == nn
        && latents.difficulties.len() == nn
        && latents.labels.len() == nn
        && latents.distractor_logits.len() == nn
        && latents.distractor_logits.iter().all(|l| l.len() == cc - 1)
        && latents.labels.iter().all(|&y| y < cc);
    if !shapes_ok {
        return Err(Error::InvalidConfig(
            "latents do not match the config".into(),
        ));
    }
    let shares: Vec<Vec<f64>> = latents
        .distractor_logits
        .iter()
        .map(|l| softmax(l, config.temperature))
        .collect();
    let width = (mm - 1).to_string().len().max(3);
    let ids: Vec<String> = (0..mm).map(|m| format!("model-{m:0width$}")).collect();
    let tensors = par::try_map_range(mm, |m| {
        let rows: Vec<Vec<f64>> = (0..nn)
            .map(|i| {
                let p = latents.p_correct(m, i);
                let mut d = shares[i].iter();
                (0..cc)
                    .map(|c| {
                        if c == latents.labels[i] {
                            p
                        } else {
                            (1.0 - p) * d.next().unwrap()
                        }
                    })
                    .collect()
            })
            .collect();
        PredictionTensor::from_rows(&ids[m], &rows)
    })?;

    let norms: Vec<f64> = latents
        .abilities
        .iter()
        .map(|t| t.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut by_norm: Vec<usize> = (0..mm).collect();
    by_norm.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
    let span = (config.end_date - config.start_date).num_days();
    let mut dates = vec![config.start_date; mm];
    for (rank, &m) in by_norm.iter().enumerate() {
        let offset = rank as i64 * span / (mm as i64 - 1);
        dates[m] = config.start_date + Duration::days(offset);
    }

    let task_tags: Vec<String> = (0..nn)
        .map(|i| {
            if config.tasks == 1 {
                String::new()
            } else {
                format!("task-{}", i * config.tasks / nn)
            }
        })
        .collect();
    let models = (0..mm)
        .map(|m| {
            let acc = accuracy_of(&correctness_with_labels(&tensors[m], &latents.labels).bits)?;
            Ok(ModelMeta {
                model_id: ids[m].clone(),
                release_date: dates[m],
                true_accuracy: Some(acc),
                tensor_path: PathBuf::from(format!("tensors/{}.dten", ids[m])),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = BenchmarkManifest {
        benchmark_name: format!("synthetic-irt-seed{}", config.seed),
        num_samples: nn,
        num_classes: cc,
        labels: latents.labels.clone(),
        task_tags,
        models,
        format_version: FORMAT_VERSION,
        base_dir: PathBuf::from("."),
    };
    manifest.validate()?;
    Population::new(manifest, tensors)
}

/// Exact argmax accuracy of every registered model, in manifest order.
pub fn oracle_true_performance(
    manifest: &BenchmarkManifest,
    tensors: &[std::sync::Arc<PredictionTensor>],
) -> Result<Vec<f64>> {
    tensors
        .iter()
        .map(|t| crate::store::accuracy(&crate::store::correctness(t, manifest)?))
        .collect()
}
