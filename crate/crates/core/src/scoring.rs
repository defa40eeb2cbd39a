//! Per-sample disagreement statistics across a pool of models.
//!
//! All entropies are in bits and `0 * log 0` is taken as 0.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::store::{BenchmarkManifest, PredictionTensor};

/// Row-sum tolerance for a stack of class distributions.
pub const STACK_TOLERANCE: f64 = 1e-9;
/// Slack used when checking inequalities.
pub const BOUND_SLACK: f64 = 1e-9;

/// Class distributions of `M >= 2` models for a single sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDistributionStack {
    models: usize,
    classes: usize,
    data: Vec<f64>,
}

impl SampleDistributionStack {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * classes);
        for r in rows {
            if r.len() != classes {
                return Err(Error::InvalidDistribution(format!(
                    "ragged stack: row of length {} vs {classes}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(rows.len(), classes, data)
    }

    pub fn from_flat(models: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if models < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 2 models, got {models}"
            )));
        }
        if classes == 0 || data.len() != models * classes {
            return Err(Error::InvalidDistribution(format!(
                "{} values do not form a {models}x{classes} stack",
                data.len()
            )));
        }
        for (m, row) in data.chunks_exact(classes).enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidDistribution(format!(
                    "row {m} has an entry outside [0, 1]"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STACK_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("row {m} sums to {s}")));
            }
        }
        Ok(SampleDistributionStack {
            models,
            classes,
            data,
        })
    }

    pub fn models(&self) -> usize {
        self.models
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.classes..(m + 1) * self.classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.classes)
    }

    /// Ensemble mean distribution (column mean).
    pub fn mixture(&self) -> Vec<f64> {
        let mut mix = vec![0.0; self.classes];
        for row in self.rows() {
            for (acc, &v) in mix.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let m = self.models as f64;
        mix.iter_mut().for_each(|v| *v /= m);
        mix
    }

    /// Per-class maximum over models.
    pub fn envelope(&self) -> Vec<f64> {
        let mut env = vec![0.0f64; self.classes];
        for row in self.rows() {
            for (e, &v) in env.iter_mut().zip(row) {
                *e = e.max(v);
            }
        }
        env
    }
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Predictive diversity score in both normalizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pds {
    /// Sum over classes of the max class probability, in `[1, min(M, C)]`.
    pub env: f64,
    /// `env / C`.
    pub eq1: f64,
}

pub fn pds(stack: &SampleDistributionStack) -> Pds {
    let env: f64 = stack.envelope().iter().sum();
    Pds {
        env,
        eq1: env / stack.classes as f64,
    }
}

/// Mixture entropy, mean per-model entropy, and their clamped difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsdTerms {
    pub mixture_entropy_bits: f64,
    pub mean_entropy_bits: f64,
    pub jsd_bits: f64,
}

pub fn jsd_terms(stack: &SampleDistributionStack) -> JsdTerms {
    let mixture_entropy_bits = entropy_bits(&stack.mixture());
    let mean_entropy_bits = stack.rows().map(entropy_bits).sum::<f64>() / stack.models as f64;
    let cap = (stack.models.min(stack.classes) as f64).log2();
    let jsd_bits = (mixture_entropy_bits - mean_entropy_bits).clamp(0.0, cap);
    JsdTerms {
        mixture_entropy_bits,
        mean_entropy_bits,
        jsd_bits,
    }
}

/// Generalized Jensen-Shannon divergence in bits.
pub fn jsd(stack: &SampleDistributionStack) -> f64 {
    jsd_terms(stack).jsd_bits
}

/// Mutual information between a uniformly drawn model index and its sampled
/// class, by direct summation over the explicit joint table.
pub fn mutual_information_bruteforce(stack: &SampleDistributionStack) -> f64 {
    let (mm, cc) = (stack.models, stack.classes);
    let joint: Vec<f64> = stack.data.iter().map(|&p| p / mm as f64).collect();
    let mut p_model = vec![0.0; mm];
    let mut p_class = vec![0.0; cc];
    for m in 0..mm {
        for c in 0..cc {
            let j = joint[m * cc + c];
            p_model[m] += j;
            p_class[c] += j;
        }
    }
    let mut mi = 0.0;
    for m in 0..mm {
        for c in 0..cc {
            let j = joint[m * cc + c];
            if j > 0.0 {
                mi += j * (j / (p_model[m] * p_class[c])).log2();
            }
        }
    }
    mi
}

/// Total variation distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Every quantity involved in bounding JSD by PDS, with the verdict of each chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub models: usize,
    pub pds_env: f64,
    pub jsd_bits: f64,
    /// `(2 / (M^2 ln 2)) (pds_env - 1)^2`
    pub lower: f64,
    /// `(M / (M - 1)) log2(M) (pds_env - 1)`
    pub upper: f64,
    pub pds_holds: bool,
    /// Mean TV of each model to the mixture.
    pub mean_tv: f64,
    /// `(2 / ln 2) * mean(TV^2)`
    pub tv_lower: f64,
    /// `(M / (M - 1)) log2(M) * mean_tv`
    pub tv_upper: f64,
    pub tv_holds: bool,
    /// `pds_env - 1`
    pub envelope: f64,
    /// Largest per-class count of models strictly above the mixture.
    pub z_max: usize,
    pub spread_lower: f64,
    pub spread_upper: f64,
    /// Aggregated and every per-class spread/envelope bound.
    pub spread_holds: bool,
}

impl SandwichReport {
    pub fn all_hold(&self) -> bool {
        self.pds_holds && self.tv_holds && self.spread_holds
    }
}

pub fn check_sandwich(stack: &SampleDistributionStack) -> SandwichReport {
    let mm = stack.models;
    let mf = mm as f64;
    let p = pds(stack);
    let jsd_bits = jsd(stack);
    let e = p.env - 1.0;
    let ln2 = std::f64::consts::LN_2;
    let slope = mf / (mf - 1.0) * mf.log2();
    let lower = 2.0 / (mf * mf * ln2) * e * e;
    let upper = slope * e;

    let mix = stack.mixture();
    let tvs: Vec<f64> = stack
        .rows()
        .map(|r| total_variation(r, &mix).expect("equal lengths"))
        .collect();
    let mean_tv = tvs.iter().sum::<f64>() / mf;
    let tv_lower = 2.0 / ln2 * tvs.iter().map(|t| t * t).sum::<f64>() / mf;
    let tv_upper = slope * mean_tv;

    let env = stack.envelope();
    let mut z_max = 0;
    let mut per_class_ok = true;
    for c in 0..stack.classes {
        let mu = mix[c];
        let e_c = env[c] - mu;
        let u_c = stack.rows().map(|r| (r[c] - mu).abs()).sum::<f64>() / (2.0 * mf);
        let z_c = stack.rows().filter(|r| r[c] > mu).count();
        z_max = z_max.max(z_c);
        per_class_ok &= e_c / mf - BOUND_SLACK <= u_c && u_c <= z_c as f64 / mf * e_c + BOUND_SLACK;
    }
    let spread_lower = e / mf;
    let spread_upper = z_max as f64 / mf * e;

    SandwichReport {
        models: mm,
        pds_env: p.env,
        jsd_bits,
        lower,
        upper,
        pds_holds: lower - BOUND_SLACK <= jsd_bits && jsd_bits <= upper + BOUND_SLACK,
        mean_tv,
        tv_lower,
        tv_upper,
        tv_holds: tv_lower - BOUND_SLACK <= jsd_bits && jsd_bits <= tv_upper + BOUND_SLACK,
        envelope: e,
        z_max,
        spread_lower,
        spread_upper,
        spread_holds: per_class_ok
            && spread_lower - BOUND_SLACK <= mean_tv
            && mean_tv <= spread_upper + BOUND_SLACK,
    }
}

/// Checks that positive parts, negative parts, and half the absolute mass of
/// a zero-sum vector coincide.
pub fn balance_identity_check(deviations: &[f64]) -> Result<bool> {
    let total: f64 = deviations.iter().sum();
    if total.abs() > 1e-12 {
        return Err(Error::NonZeroSum(total));
    }
    let pos: f64 = deviations.iter().map(|a| a.max(0.0)).sum();
    let neg: f64 = deviations.iter().map(|a| (-a).max(0.0)).sum();
    let half_abs = 0.5 * deviations.iter().map(|a| a.abs()).sum::<f64>();
    Ok((pos - neg).abs() <= 1e-9 && (pos - half_abs).abs() <= 1e-9)
}

/// Scores for one benchmark sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sample_index: usize,
    pub pds_env: f64,
    pub pds_eq1: f64,
    pub jsd_bits: f64,
    pub mixture_entropy_bits: f64,
    pub mean_entropy_bits: f64,
}

/// Column used to rank samples by disagreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    PdsEnv,
    PdsEq1,
    JsdBits,
}

impl Criterion {
    pub fn label(self) -> &'static str {
        match self {
            Criterion::PdsEnv => "pds_env",
            Criterion::PdsEq1 => "pds_eq1",
            Criterion::JsdBits => "jsd_bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub records: Vec<ScoreRecord>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column(&self, criterion: Criterion) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| match criterion {
                Criterion::PdsEnv => r.pds_env,
                Criterion::PdsEq1 => r.pds_eq1,
                Criterion::JsdBits => r.jsd_bits,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "sample_index,pds_env,pds_eq1,jsd_bits,mixture_entropy_bits,mean_entropy_bits\n",
        );
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sample_index,
                sig9(r.pds_env),
                sig9(r.pds_eq1),
                sig9(r.jsd_bits),
                sig9(r.mixture_entropy_bits),
                sig9(r.mean_entropy_bits)
            )
            .unwrap();
        }
        out
    }
}

/// Formats with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

/// Scores a single sample from the given models' tensors.
pub fn score_sample(tensors: &[Arc<PredictionTensor>], sample: usize) -> Result<ScoreRecord> {
    let classes = tensors[0].num_classes();
    let mut data = Vec::with_capacity(tensors.len() * classes);
    for t in tensors {
        data.extend_from_slice(t.row(sample));
    }
    let stack = SampleDistributionStack::from_flat(tensors.len(), classes, data)?;
    let p = pds(&stack);
    let j = jsd_terms(&stack);
    Ok(ScoreRecord {
        sample_index: sample,
        pds_env: p.env,
        pds_eq1: p.eq1,
        jsd_bits: j.jsd_bits,
        mixture_entropy_bits: j.mixture_entropy_bits,
        mean_entropy_bits: j.mean_entropy_bits,
    })
}

/// Scores every sample of the benchmark over the given source models.
pub fn score_dataset(
    manifest: &BenchmarkManifest,
    tensors: &[Arc<PredictionTensor>],
) -> Result<ScoreTable> {
    if tensors.len() < 2 {
        return Err(Error::TooFewModels {
            needed: 2,
            got: tensors.len(),
        });
    }
    let expected = (manifest.num_samples, manifest.num_classes);
    for t in tensors {
        if t.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: t.shape(),
            });
        }
    }
    let records = par::try_map_range(manifest.num_samples, |i| score_sample(tensors, i))?;
    Ok(ScoreTable { records })
}
