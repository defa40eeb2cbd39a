use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{check_budget, rng, AnchorSubset, SelectionMethod};
use crate::error::{Error, Result};
use crate::par;
use crate::store::{tensor::correctness_with_labels, BenchmarkManifest, PredictionTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestForValidationConfig {
    pub k: usize,
    pub candidates: usize,
    /// Fraction of source models used to fit each candidate's regressor.
    pub train_ratio: f64,
}

impl BestForValidationConfig {
    pub fn new(k: usize) -> Self {
        BestForValidationConfig {
            k,
            candidates: 1000,
            train_ratio: 0.8,
        }
    }
}

/// Scalar regression fit of one candidate and its validation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateFit {
    pub intercept: f64,
    pub slope: f64,
    pub rmse: f64,
}

fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Fits subset accuracy to full accuracy on `train` models and scores it on `val`.
///
/// `bits[m]` is model m's correctness over the full dataset; `full[m]` its accuracy.
pub fn evaluate_candidates(
    bits: &[Vec<bool>],
    full: &[f64],
    train: &[usize],
    val: &[usize],
    candidates: &[Vec<usize>],
) -> Vec<CandidateFit> {
    par::map_slice(candidates, |cand| {
        let subset_acc: Vec<f64> = bits
            .iter()
            .map(|b| cand.iter().filter(|&&i| b[i]).count() as f64 / cand.len() as f64)
            .collect();
        let xs: Vec<f64> = train.iter().map(|&m| subset_acc[m]).collect();
        let ys: Vec<f64> = train.iter().map(|&m| full[m]).collect();
        let (intercept, slope) = fit_line(&xs, &ys);
        let sse: f64 = val
            .iter()
            .map(|&m| {
                let e = intercept + slope * subset_acc[m] - full[m];
                e * e
            })
            .sum();
        CandidateFit {
            intercept,
            slope,
            rmse: (sse / val.len() as f64).sqrt(),
        }
    })
}

/// Index of the lowest-RMSE candidate, ties to the lower index.
pub(crate) fn argmin_rmse(fits: &[CandidateFit]) -> usize {
    let mut best = 0;
    for (i, f) in fits.iter().enumerate().skip(1) {
        if f.rmse < fits[best].rmse {
            best = i;
        }
    }
    best
}

/// Random search over uniform K-subsets for the best scalar proxy of full accuracy.
pub fn select_best_for_validation(
    tensors: &[Arc<PredictionTensor>],
    manifest: &BenchmarkManifest,
    config: BestForValidationConfig,
    seed: u64,
) -> Result<(AnchorSubset, Vec<CandidateFit>)> {
    let n = manifest.num_samples;
    check_budget(n, config.k)?;
    if tensors.len() < 4 {
        return Err(Error::InsufficientModels(format!(
            "best-for-validation needs at least 4 source models, got {}",
            tensors.len()
        )));
    }
    if config.candidates == 0 || !(0.0..1.0).contains(&config.train_ratio) {
        return Err(Error::InvalidConfig(format!(
            "candidates = {}, train_ratio = {}",
            config.candidates, config.train_ratio
        )));
    }
    let mut full = Vec::with_capacity(tensors.len());
    for t in tensors {
        let acc = manifest.model(&t.model_id)?.true_accuracy.ok_or_else(|| {
            Error::InsufficientModels(format!("{} has no true_accuracy", t.model_id))
        })?;
        full.push(acc);
    }
    let bits: Vec<Vec<bool>> = par::map_slice(tensors, |t| {
        correctness_with_labels(t, &manifest.labels).bits
    });

    let mut r = rng(seed);
    let mut order: Vec<usize> = (0..tensors.len()).collect();
    order.shuffle(&mut r);
    let n_train =
        ((tensors.len() as f64 * config.train_ratio).round() as usize).clamp(2, tensors.len() - 1);
    let (train, val) = order.split_at(n_train);
    let candidates: Vec<Vec<usize>> = (0..config.candidates)
        .map(|_| {
            let mut c = rand::seq::index::sample(&mut r, n, config.k).into_vec();
            c.sort_unstable();
            c
        })
        .collect();

    let fits = evaluate_candidates(&bits, &full, train, val, &candidates);
    let best = argmin_rmse(&fits);
    let subset = AnchorSubset::new(
        SelectionMethod::BestForValidation,
        seed,
        candidates[best].clone(),
        None,
        None,
    );
    Ok((subset, fits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_proxy_wins() {
        // sample 0 and 1 mirror full accuracy exactly for every model
        let bits = vec![
            vec![true, false, true, false],
            vec![true, true, true, true],
            vec![false, false, false, false],
            vec![true, false, true, false],
            vec![false, true, false, true],
        ];
        let full: Vec<f64> = bits
            .iter()
            .map(|b| b.iter().filter(|&&x| x).count() as f64 / 4.0)
            .collect();
        let candidates = vec![vec![0, 1, 2, 3], vec![0, 2], vec![2, 3]];
        let fits = evaluate_candidates(&bits, &full, &[0, 1, 2], &[3, 4], &candidates);
        assert!(fits[0].rmse < 1e-15);
        assert_eq!(argmin_rmse(&fits), 0);
    }

    #[test]
    fn single_candidate_is_returned() {
        let fits = [CandidateFit {
            intercept: 0.0,
            slope: 1.0,
            rmse: 0.3,
        }];
        assert_eq!(argmin_rmse(&fits), 0);
    }
}
