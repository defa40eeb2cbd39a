//! Anchor-subset selection: disagreement top-k and the baseline selectors.

mod best_for_validation;
mod kmedoids;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use best_for_validation::{
    evaluate_candidates, select_best_for_validation, BestForValidationConfig, CandidateFit,
};
pub use kmedoids::{kmedoids, select_kmedoids, KMedoidsResult, MAX_SWAP_PASSES, RESTARTS};

use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::scoring::{Criterion, ScoreTable};
use crate::store::{BenchmarkManifest, PredictionTensor};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Random,
    TopkPds,
    TopkJsd,
    StratifiedTopk,
    KmedoidsConf,
    KmedoidsCorr,
    BestForValidation,
}

impl SelectionMethod {
    pub fn label(self) -> &'static str {
        match self {
            SelectionMethod::Random => "random",
            SelectionMethod::TopkPds => "topk_pds",
            SelectionMethod::TopkJsd => "topk_jsd",
            SelectionMethod::StratifiedTopk => "stratified_topk",
            SelectionMethod::KmedoidsConf => "kmedoids_conf",
            SelectionMethod::KmedoidsCorr => "kmedoids_corr",
            SelectionMethod::BestForValidation => "best_for_validation",
        }
    }
}

/// Selected sample indices plus how they were chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSubset {
    pub method: SelectionMethod,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub weights: Option<Vec<f64>>,
    pub criterion: Option<Criterion>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl AnchorSubset {
    pub fn new(
        method: SelectionMethod,
        seed: u64,
        mut indices: Vec<usize>,
        weights: Option<Vec<f64>>,
        criterion: Option<Criterion>,
    ) -> Self {
        indices.sort_unstable();
        AnchorSubset {
            method,
            seed,
            k: indices.len(),
            indices,
            weights,
            criterion,
            provenance: None,
        }
    }

    /// Checks the subset against a dataset of `n` samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.indices.is_empty() || self.k != self.indices.len() {
            return Err(Error::InvariantViolation(format!(
                "subset k = {} with {} indices",
                self.k,
                self.indices.len()
            )));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvariantViolation(
                "subset indices are not strictly increasing".into(),
            ));
        }
        if let Some(&last) = self.indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: n,
                });
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.k || w.iter().any(|&x| x < 0.0) {
                return Err(Error::InvariantViolation(
                    "weights must be k nonnegative values".into(),
                ));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvariantViolation(format!("weights sum to {s}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("subset serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &std::path::Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

fn check_budget(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::BudgetExceedsDataset { k, n });
    }
    Ok(())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample of `k` of `n` indices without replacement.
pub fn select_random(n: usize, k: usize, seed: u64) -> Result<AnchorSubset> {
    check_budget(n, k)?;
    let mut r = rng(seed);
    let idx = rand::seq::index::sample(&mut r, n, k).into_vec();
    Ok(AnchorSubset::new(
        SelectionMethod::Random,
        seed,
        idx,
        None,
        None,
    ))
}

fn method_for(criterion: Criterion) -> SelectionMethod {
    match criterion {
        Criterion::PdsEnv | Criterion::PdsEq1 => SelectionMethod::TopkPds,
        Criterion::JsdBits => SelectionMethod::TopkJsd,
    }
}

/// Indices ordered by descending value, ties by ascending index.
fn ranked(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// The `k` highest-scoring samples under `criterion`.
pub fn select_topk(scores: &ScoreTable, k: usize, criterion: Criterion) -> Result<AnchorSubset> {
    check_budget(scores.len(), k)?;
    let values = scores.column(criterion);
    let idx: Vec<usize> = ranked(&values)
        .into_iter()
        .take(k)
        .map(|i| scores.records[i].sample_index)
        .collect();
    Ok(AnchorSubset::new(
        method_for(criterion),
        0,
        idx,
        None,
        Some(criterion),
    ))
}

/// Top-k with an equal share per task tag; the remainder goes to the best
/// unselected samples overall.
pub fn select_stratified_topk(
    scores: &ScoreTable,
    task_tags: &[String],
    k: usize,
    criterion: Criterion,
) -> Result<AnchorSubset> {
    let n = scores.len();
    check_budget(n, k)?;
    if task_tags.len() != n {
        return Err(Error::LengthMismatch {
            left: task_tags.len(),
            right: n,
        });
    }
    let mut tags: Vec<&str> = Vec::new();
    for t in task_tags {
        if !tags.contains(&t.as_str()) {
            tags.push(t);
        }
    }
    let per_tag = k / tags.len();
    let order = ranked(&scores.column(criterion));
    let mut chosen = vec![false; n];
    let mut taken = 0;
    for tag in &tags {
        for &i in order
            .iter()
            .filter(|&&i| task_tags[i] == *tag)
            .take(per_tag)
        {
            chosen[i] = true;
            taken += 1;
        }
    }
    for &i in &order {
        if taken == k {
            break;
        }
        if !chosen[i] {
            chosen[i] = true;
            taken += 1;
        }
    }
    let idx = (0..n)
        .filter(|&i| chosen[i])
        .map(|i| scores.records[i].sample_index)
        .collect();
    Ok(AnchorSubset::new(
        SelectionMethod::StratifiedTopk,
        0,
        idx,
        None,
        Some(criterion),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// Ground-truth class likelihood per model.
    Conf,
    /// Correctness bit per model.
    Corr,
}

/// Row-major `n x m` matrix of per-sample embeddings over `m` source models.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Embeddings {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub fn build_embeddings(
    tensors: &[Arc<PredictionTensor>],
    manifest: &BenchmarkManifest,
    kind: EmbeddingKind,
) -> Result<Embeddings> {
    let expected = (manifest.num_samples, manifest.num_classes);
    for t in tensors {
        if t.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: t.shape(),
            });
        }
    }
    let n = manifest.num_samples;
    let dim = tensors.len();
    let mut data = Vec::with_capacity(n * dim);
    for (i, &y) in manifest.labels.iter().enumerate() {
        for t in tensors {
            data.push(match kind {
                EmbeddingKind::Conf => t.row(i)[y],
                EmbeddingKind::Corr => f64::from(u8::from(t.argmax(i) == y)),
            });
        }
    }
    Ok(Embeddings { n, dim, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ScoreRecord;

    fn table(values: &[f64]) -> ScoreTable {
        ScoreTable {
            records: values
                .iter()
                .enumerate()
                .map(|(i, &v)| ScoreRecord {
                    sample_index: i,
                    pds_env: v,
                    pds_eq1: v / 4.0,
                    jsd_bits: v,
                    mixture_entropy_bits: 0.0,
                    mean_entropy_bits: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn random_exhaustive_and_deterministic() {
        let s = select_random(7, 7, 3).unwrap();
        assert_eq!(s.indices, (0..7).collect::<Vec<_>>());
        let a = select_random(100, 1, 42).unwrap();
        let b = select_random(100, 1, 42).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            select_random(3, 4, 0),
            Err(Error::BudgetExceedsDataset { k: 4, n: 3 })
        ));
    }

    #[test]
    fn topk_order_and_ties() {
        let s = select_topk(&table(&[0.1, 0.9, 0.5]), 2, Criterion::PdsEnv).unwrap();
        assert_eq!(s.indices, vec![1, 2]);
        assert_eq!(s.method, SelectionMethod::TopkPds);
        let s = select_topk(&table(&[0.3; 6]), 3, Criterion::JsdBits).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2]);
        assert_eq!(s.method, SelectionMethod::TopkJsd);
    }

    #[test]
    fn stratified_splits() {
        let t = table(&[0.9, 0.8, 0.7, 0.1, 0.2, 0.3]);
        let tags: Vec<String> = ["a", "a", "a", "b", "b", "b"].map(String::from).to_vec();
        let s = select_stratified_topk(&t, &tags, 4, Criterion::PdsEnv).unwrap();
        assert_eq!(s.indices, vec![0, 1, 4, 5]);

        let tags3: Vec<String> = ["a", "a", "b", "b", "c", "c"].map(String::from).to_vec();
        let s = select_stratified_topk(&t, &tags3, 4, Criterion::PdsEnv).unwrap();
        // one per tag (0, 2, 5) plus the global best remaining (1)
        assert_eq!(s.indices, vec![0, 1, 2, 5]);

        let one: Vec<String> = vec![String::new(); 6];
        let s = select_stratified_topk(&t, &one, 3, Criterion::PdsEnv).unwrap();
        let plain = select_topk(&t, 3, Criterion::PdsEnv).unwrap();
        assert_eq!(s.indices, plain.indices);
    }

    #[test]
    fn subset_json_shape() {
        let s = AnchorSubset::new(SelectionMethod::Random, 9, vec![3, 1], None, None);
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["method", "seed", "indices", "weights", "criterion", "k"] {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(v["indices"], serde_json::json!([1, 3]));
        assert!(v["weights"].is_null());
        let back = AnchorSubset::from_json(&s.to_json(), std::path::Path::new("s")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn validate_catches_bad_subsets() {
        let mut s = AnchorSubset::new(SelectionMethod::Random, 0, vec![0, 5], None, None);
        assert!(s.validate(6).is_ok());
        assert!(s.validate(5).is_err());
        s.weights = Some(vec![0.5, 0.6]);
        assert!(s.validate(6).is_err());
    }
}
