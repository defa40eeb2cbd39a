//! Performance predictors: kNN, linear, random forest, and weighted sum.

mod container;
pub mod forest;
pub mod knn;
pub mod linear;

use serde::{Deserialize, Serialize};

pub use forest::{Forest, ForestConfig, Node, Tree};
pub use knn::KnnModel;
pub use linear::{LinearModel, RIDGE};

use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::selection::AnchorSubset;
use crate::signatures::{default_pca_dims, pca_fit, PcaProjection, SignatureMode};

pub const DEFAULT_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Knn,
    Linear,
    RandomForest,
    WeightedSum,
}

impl PredictorKind {
    pub fn label(self) -> &'static str {
        match self {
            PredictorKind::Knn => "knn",
            PredictorKind::Linear => "linear",
            PredictorKind::RandomForest => "random_forest",
            PredictorKind::WeightedSum => "weighted_sum",
        }
    }
}

/// Regressor choice with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorConfig {
    Knn { neighbors: usize },
    Linear,
    RandomForest(ForestConfig),
}

impl RegressorConfig {
    pub fn kind(&self) -> PredictorKind {
        match self {
            RegressorConfig::Knn { .. } => PredictorKind::Knn,
            RegressorConfig::Linear => PredictorKind::Linear,
            RegressorConfig::RandomForest(_) => PredictorKind::RandomForest,
        }
    }
}

/// PCA stage before a regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PcaSetting {
    Off,
    /// `min(256, M, D)`
    #[default]
    Auto,
    Dims(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Knn(KnnModel),
    Linear(LinearModel),
    RandomForest(Forest),
    /// Anchor weights applied to a correctness signature.
    WeightedSum(Vec<f64>),
}

/// A trained predictor together with the projection its inputs go through.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub signature_mode: SignatureMode,
    /// Raw signature width the model accepts.
    pub input_dim: usize,
    pub projection: Option<PcaProjection>,
    pub payload: Payload,
    pub provenance: Option<Provenance>,
}

impl PredictorModel {
    pub fn kind(&self) -> PredictorKind {
        match self.payload {
            Payload::Knn(_) => PredictorKind::Knn,
            Payload::Linear(_) => PredictorKind::Linear,
            Payload::RandomForest(_) => PredictorKind::RandomForest,
            Payload::WeightedSum(_) => PredictorKind::WeightedSum,
        }
    }

    /// Weighted-sum model over `weights.len()` anchors.
    pub fn weighted_sum(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(PredictorModel {
            signature_mode: SignatureMode::Correctness,
            input_dim: weights.len(),
            projection: None,
            payload: Payload::WeightedSum(weights),
            provenance: None,
        })
    }

    /// Predicted full-benchmark performance from a raw signature, clamped to [0, 1].
    pub fn predict(&self, signature: &[f64]) -> Result<f64> {
        if signature.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: signature.len(),
            });
        }
        let projected;
        let features = match &self.projection {
            Some(p) => {
                projected = p.transform(signature)?;
                &projected[..]
            }
            None => signature,
        };
        let raw = match &self.payload {
            Payload::Knn(m) => m.predict(features)?,
            Payload::Linear(m) => m.predict(features)?,
            Payload::RandomForest(f) => f.predict(features)?,
            Payload::WeightedSum(w) => weighted_mean(w, features),
        };
        Ok(raw.clamp(0.0, 1.0))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        container::encode(self)
    }

    pub fn from_bytes(bytes: &[u8], path: &std::path::Path) -> Result<Self> {
        container::decode(bytes, path)
    }
}

fn weighted_mean(w: &[f64], s: &[f64]) -> f64 {
    w.iter().zip(s).map(|(a, b)| a * b).sum()
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvariantViolation(
            "weights must be nonnegative and nonempty".into(),
        ));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvariantViolation(format!("weights sum to {s}")));
    }
    Ok(())
}

/// Trains a regressor on source signatures (optionally PCA-reduced first).
pub fn train(
    signatures: &[Vec<f64>],
    performances: &[f64],
    mode: SignatureMode,
    regressor: &RegressorConfig,
    pca: PcaSetting,
    seed: u64,
) -> Result<PredictorModel> {
    let m = signatures.len();
    if m < 2 {
        return Err(Error::TooFewModels { needed: 2, got: m });
    }
    if performances.len() != m {
        return Err(Error::LengthMismatch {
            left: performances.len(),
            right: m,
        });
    }
    if let Some(p) = performances.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvariantViolation(format!(
            "performance {p} outside [0, 1]"
        )));
    }
    let input_dim = signatures[0].len();
    if let Some(s) = signatures.iter().find(|s| s.len() != input_dim) {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            found: s.len(),
        });
    }
    let projection = match pca {
        PcaSetting::Off => None,
        PcaSetting::Auto => Some(pca_fit(signatures, default_pca_dims(m, input_dim))?),
        PcaSetting::Dims(d) => Some(pca_fit(signatures, d)?),
    };
    let features: Vec<Vec<f64>> = match &projection {
        Some(p) => signatures
            .iter()
            .map(|s| p.transform(s))
            .collect::<Result<_>>()?,
        None => signatures.to_vec(),
    };
    let payload = match regressor {
        RegressorConfig::Knn { neighbors } => {
            Payload::Knn(KnnModel::new(*neighbors, features, performances.to_vec())?)
        }
        RegressorConfig::Linear => Payload::Linear(LinearModel::fit(&features, performances)?),
        RegressorConfig::RandomForest(cfg) => {
            Payload::RandomForest(Forest::fit(&features, performances, cfg, seed)?)
        }
    };
    Ok(PredictorModel {
        signature_mode: mode,
        input_dim,
        projection,
        payload,
        provenance: None,
    })
}

/// `sum_k w_k s_k` over the anchors of a weighted subset.
pub fn predict_weighted_sum(subset: &AnchorSubset, correctness_on_subset: &[bool]) -> Result<f64> {
    let w = subset.weights.as_ref().ok_or(Error::MissingWeights)?;
    check_weights(w)?;
    if correctness_on_subset.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: correctness_on_subset.len(),
            right: w.len(),
        });
    }
    Ok(w.iter()
        .zip(correctness_on_subset)
        .filter(|(_, &b)| b)
        .map(|(w, _)| w)
        .sum())
}
