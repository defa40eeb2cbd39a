use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metrics::{mae, pearson, spearman};
use super::split::ModelSplit;
use crate::error::{Error, Result};
use crate::par;
use crate::predictors::{
    self, ForestConfig, PcaSetting, PredictorModel, RegressorConfig, DEFAULT_NEIGHBORS,
};
use crate::provenance::Provenance;
use crate::scoring::{score_dataset, sig9, Criterion};
use crate::selection::{
    build_embeddings, select_best_for_validation, select_kmedoids, select_random,
    select_stratified_topk, select_topk, AnchorSubset, BestForValidationConfig, EmbeddingKind,
};
use crate::signatures::{build_signature, SignatureMode};
use crate::store::{fetch_all, BenchmarkManifest, PredictionTensor, TensorSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectionConfig {
    Random,
    Topk { criterion: Criterion },
    StratifiedTopk { criterion: Criterion },
    Kmedoids { embedding: EmbeddingKind },
    BestForValidation { candidates: usize, train_ratio: f64 },
}

impl SelectionConfig {
    pub fn label(&self) -> String {
        match self {
            SelectionConfig::Random => "random".into(),
            SelectionConfig::Topk { criterion } => match criterion {
                Criterion::JsdBits => "topk_jsd".into(),
                _ => "topk_pds".into(),
            },
            SelectionConfig::StratifiedTopk { criterion } => match criterion {
                Criterion::JsdBits => "stratified_topk_jsd".into(),
                _ => "stratified_topk_pds".into(),
            },
            SelectionConfig::Kmedoids { embedding } => match embedding {
                EmbeddingKind::Conf => "kmedoids_conf".into(),
                EmbeddingKind::Corr => "kmedoids_corr".into(),
            },
            SelectionConfig::BestForValidation { .. } => "best_for_validation".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "predictor", rename_all = "snake_case")]
pub enum PredictionConfig {
    /// Plain accuracy on the anchor subset.
    Direct,
    /// Anchor accuracy weighted by the subset's cluster weights.
    WeightedSum,
    Regressor {
        regressor: RegressorConfig,
        mode: SignatureMode,
        pca: PcaSetting,
    },
}

impl PredictionConfig {
    pub fn forest() -> Self {
        PredictionConfig::Regressor {
            regressor: RegressorConfig::RandomForest(ForestConfig::default()),
            mode: SignatureMode::Probs,
            pca: PcaSetting::Auto,
        }
    }

    pub fn knn(neighbors: usize) -> Self {
        PredictionConfig::Regressor {
            regressor: RegressorConfig::Knn { neighbors },
            mode: SignatureMode::Probs,
            pca: PcaSetting::Auto,
        }
    }

    pub fn default_knn() -> Self {
        Self::knn(DEFAULT_NEIGHBORS)
    }

    pub fn label(&self) -> String {
        match self {
            PredictionConfig::Direct => "direct".into(),
            PredictionConfig::WeightedSum => "weighted_sum".into(),
            PredictionConfig::Regressor { regressor, .. } => regressor.kind().label().into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub selection: SelectionConfig,
    pub prediction: PredictionConfig,
}

impl PipelineConfig {
    pub fn new(selection: SelectionConfig, prediction: PredictionConfig) -> Self {
        PipelineConfig {
            selection,
            prediction,
        }
    }

    /// Top-k by PDS, probability signatures, PCA, random forest.
    pub fn disco() -> Self {
        Self::new(
            SelectionConfig::Topk {
                criterion: Criterion::PdsEnv,
            },
            PredictionConfig::forest(),
        )
    }

    /// Uniform random subset evaluated directly.
    pub fn random_direct() -> Self {
        Self::new(SelectionConfig::Random, PredictionConfig::Direct)
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.selection.label(), self.prediction.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub model_id: String,
    pub true_accuracy: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub selection: String,
    pub predictor: String,
    pub k: usize,
    pub seed: u64,
    pub mae_pp: f64,
    pub spearman: f64,
    pub pearson: f64,
    pub pairs: Vec<PredictionPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Chooses anchors from source-model tensors only.
pub fn select_subset(
    manifest: &BenchmarkManifest,
    sources: &[Arc<PredictionTensor>],
    selection: &SelectionConfig,
    k: usize,
    seed: u64,
) -> Result<AnchorSubset> {
    let mut subset = match *selection {
        SelectionConfig::Random => select_random(manifest.num_samples, k, seed)?,
        SelectionConfig::Topk { criterion } => {
            select_topk(&score_dataset(manifest, sources)?, k, criterion)?
        }
        SelectionConfig::StratifiedTopk { criterion } => select_stratified_topk(
            &score_dataset(manifest, sources)?,
            &manifest.task_tags,
            k,
            criterion,
        )?,
        SelectionConfig::Kmedoids { embedding } => select_kmedoids(
            &build_embeddings(sources, manifest, embedding)?,
            k,
            seed,
            embedding,
        )?,
        SelectionConfig::BestForValidation {
            candidates,
            train_ratio,
        } => {
            let cfg = BestForValidationConfig {
                k,
                candidates,
                train_ratio,
            };
            select_best_for_validation(sources, manifest, cfg, seed)?.0
        }
    };
    subset.seed = seed;
    Ok(subset)
}

fn true_accuracies(
    manifest: &BenchmarkManifest,
    tensors: &[Arc<PredictionTensor>],
) -> Result<Vec<f64>> {
    tensors
        .iter()
        .map(|t| {
            manifest.model(&t.model_id)?.true_accuracy.ok_or_else(|| {
                Error::InsufficientModels(format!("{} has no true_accuracy", t.model_id))
            })
        })
        .collect()
}

fn signatures(
    manifest: &BenchmarkManifest,
    tensors: &[Arc<PredictionTensor>],
    subset: &AnchorSubset,
    mode: SignatureMode,
) -> Result<Vec<Vec<f64>>> {
    par::try_map_range(tensors.len(), |m| {
        Ok(build_signature(&tensors[m], &subset.indices, mode, &manifest.labels)?.vector)
    })
}

/// Builds the predictor for a subset from source models only.
pub fn fit_predictor(
    manifest: &BenchmarkManifest,
    sources: &[Arc<PredictionTensor>],
    subset: &AnchorSubset,
    prediction: &PredictionConfig,
    seed: u64,
) -> Result<PredictorModel> {
    subset.validate(manifest.num_samples)?;
    match *prediction {
        PredictionConfig::Direct => {
            PredictorModel::weighted_sum(vec![1.0 / subset.k as f64; subset.k])
        }
        PredictionConfig::WeightedSum => {
            PredictorModel::weighted_sum(subset.weights.clone().ok_or(Error::MissingWeights)?)
        }
        PredictionConfig::Regressor {
            regressor,
            mode,
            pca,
        } => {
            let x = signatures(manifest, sources, subset, mode)?;
            let y = true_accuracies(manifest, sources)?;
            predictors::train(&x, &y, mode, &regressor, pca, seed)
        }
    }
}

/// Predicted accuracy of every given model from its signature on the subset.
pub fn predict_targets(
    manifest: &BenchmarkManifest,
    model: &PredictorModel,
    subset: &AnchorSubset,
    targets: &[Arc<PredictionTensor>],
) -> Result<Vec<f64>> {
    let sigs = signatures(manifest, targets, subset, model.signature_mode)?;
    sigs.iter().map(|s| model.predict(s)).collect()
}

/// Scores predictions against manifest accuracies.
pub fn evaluate_predictions(
    manifest: &BenchmarkManifest,
    predictions: &[(String, f64)],
    config_label: (&str, &str),
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    let mut pairs = Vec::with_capacity(predictions.len());
    for (id, p) in predictions {
        let t = manifest
            .model(id)?
            .true_accuracy
            .ok_or_else(|| Error::InsufficientModels(format!("{id} has no true_accuracy")))?;
        pairs.push(PredictionPair {
            model_id: id.clone(),
            true_accuracy: t,
            predicted: *p,
        });
    }
    let truth: Vec<f64> = pairs.iter().map(|p| p.true_accuracy).collect();
    let pred: Vec<f64> = pairs.iter().map(|p| p.predicted).collect();
    Ok(EvalReport {
        method: format!("{}+{}", config_label.0, config_label.1),
        selection: config_label.0.to_string(),
        predictor: config_label.1.to_string(),
        k,
        seed,
        mae_pp: mae(&truth, &pred)?,
        spearman: spearman(&truth, &pred)?,
        pearson: pearson(&truth, &pred)?,
        pairs,
        provenance: None,
    })
}

/// Select on sources, fit on sources, predict targets, score.
///
/// Target tensors are requested from `tensors` only after selection and
/// fitting are complete.
pub fn run_pipeline(
    manifest: &BenchmarkManifest,
    tensors: &dyn TensorSource,
    split: &ModelSplit,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<EvalReport> {
    let sources = fetch_all(tensors, &split.source_ids)?;
    let subset = select_subset(manifest, &sources, &config.selection, k, seed)?;
    let model = fit_predictor(manifest, &sources, &subset, &config.prediction, seed)?;
    drop(sources);
    let targets = fetch_all(tensors, &split.target_ids)?;
    let predicted = predict_targets(manifest, &model, &subset, &targets)?;
    let predictions: Vec<(String, f64)> = split.target_ids.iter().cloned().zip(predicted).collect();
    evaluate_predictions(
        manifest,
        &predictions,
        (&config.selection.label(), &config.prediction.label()),
        k,
        seed,
    )
}

/// One report per (config, budget, seed), in that nesting order.
pub fn sweep_budgets(
    manifest: &BenchmarkManifest,
    tensors: &dyn TensorSource,
    split: &ModelSplit,
    configs: &[PipelineConfig],
    budgets: &[usize],
    seeds: &[u64],
) -> Result<Vec<EvalReport>> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "budgets must be sorted ascending".into(),
        ));
    }
    let cells: Vec<(usize, usize, u64)> = (0..configs.len())
        .flat_map(|c| {
            budgets
                .iter()
                .flat_map(move |&k| seeds.iter().map(move |&s| (c, k, s)))
        })
        .collect();
    par::try_map_range(cells.len(), |i| {
        let (c, k, s) = cells[i];
        run_pipeline(manifest, tensors, split, &configs[c], k, s)
    })
}

/// Sweep table with header `method,selection,predictor,k,seed,mae_pp,spearman,pearson`.
pub fn sweep_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("method,selection,predictor,k,seed,mae_pp,spearman,pearson\n");
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            r.selection,
            r.predictor,
            r.k,
            r.seed,
            sig9(r.mae_pp),
            sig9(r.spearman),
            sig9(r.pearson)
        )
        .unwrap();
    }
    out
}
