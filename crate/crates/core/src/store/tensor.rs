use std::path::Path;

use crate::error::{Error, Result};
use crate::store::dten;
use crate::store::manifest::BenchmarkManifest;

/// Allowed deviation of a stored row sum from 1 before renormalization.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

/// One model's class-probability matrix over the benchmark.
///
/// `raw` keeps the stored float32 values so saving is byte-exact;
/// `probs` holds the same rows renormalized in f64 and is what every
/// computation reads.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTensor {
    pub model_id: String,
    rows: usize,
    cols: usize,
    raw: Vec<f32>,
    probs: Vec<f64>,
}

impl PredictionTensor {
    /// Validates stored values and renormalizes each row.
    pub fn from_f32(model_id: &str, rows: usize, cols: usize, raw: Vec<f32>) -> Result<Self> {
        if raw.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols),
                found: (raw.len() / cols.max(1), cols),
            });
        }
        let mut probs = Vec::with_capacity(raw.len());
        for r in 0..rows {
            let row = &raw[r * cols..(r + 1) * cols];
            let mut sum = 0.0f64;
            for (c, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvariantViolation(format!(
                        "{model_id}: entry [{r}, {c}] = {v} outside [0, 1]"
                    )));
                }
                sum += v as f64;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSumOutOfTolerance {
                    model_id: model_id.to_string(),
                    row: r,
                    sum,
                    tolerance: ROW_SUM_TOLERANCE,
                });
            }
            probs.extend(row.iter().map(|&v| v as f64 / sum));
        }
        Ok(PredictionTensor {
            model_id: model_id.to_string(),
            rows,
            cols,
            raw,
            probs,
        })
    }

    /// Builds a tensor from f64 rows, storing them as float32.
    pub fn from_rows(model_id: &str, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut raw = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: (rows.len(), cols),
                    found: (i, r.len()),
                });
            }
            raw.extend(r.iter().map(|&v| v as f32));
        }
        Self::from_f32(model_id, rows.len(), cols, raw)
    }

    pub fn num_samples(&self) -> usize {
        self.rows
    }

    pub fn num_classes(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Renormalized probabilities of sample `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.cols..(i + 1) * self.cols]
    }

    pub fn raw(&self) -> &[f32] {
        &self.raw
    }

    /// Predicted class of sample `i`, ties to the lowest class index.
    pub fn argmax(&self, i: usize) -> usize {
        argmax(self.row(i))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        dten::encode_f32(self.rows, self.cols, &self.raw)
    }

    pub fn from_bytes(model_id: &str, bytes: &[u8], path: &Path) -> Result<Self> {
        let (h, raw) = dten::decode_f32_exact(bytes, path)?;
        Self::from_f32(model_id, h.rows, h.cols, raw)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        dten::write_file(path, &self.to_bytes())
    }

    /// Returns a copy keeping only the listed sample rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut raw = Vec::with_capacity(rows.len() * self.cols);
        let mut probs = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: r,
                    len: self.rows,
                });
            }
            raw.extend_from_slice(&self.raw[r * self.cols..(r + 1) * self.cols]);
            probs.extend_from_slice(self.row(r));
        }
        Ok(PredictionTensor {
            model_id: self.model_id.clone(),
            rows: rows.len(),
            cols: self.cols,
            raw,
            probs,
        })
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Loads a registered model's tensor and checks it against the manifest shape.
pub fn load_tensor(manifest: &BenchmarkManifest, model_id: &str) -> Result<PredictionTensor> {
    let path = manifest.tensor_file(model_id)?;
    let bytes = dten::read_file(&path)?;
    let t = PredictionTensor::from_bytes(model_id, &bytes, &path)?;
    check_shape(&t, manifest)?;
    Ok(t)
}

pub(crate) fn check_shape(t: &PredictionTensor, manifest: &BenchmarkManifest) -> Result<()> {
    let expected = (manifest.num_samples, manifest.num_classes);
    if t.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: t.shape(),
        });
    }
    Ok(())
}

/// Per-sample argmax correctness of one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessVector {
    pub model_id: String,
    pub bits: Vec<bool>,
}

pub fn correctness(
    tensor: &PredictionTensor,
    manifest: &BenchmarkManifest,
) -> Result<CorrectnessVector> {
    check_shape(tensor, manifest)?;
    Ok(correctness_with_labels(tensor, &manifest.labels))
}

pub(crate) fn correctness_with_labels(
    tensor: &PredictionTensor,
    labels: &[usize],
) -> CorrectnessVector {
    CorrectnessVector {
        model_id: tensor.model_id.clone(),
        bits: labels
            .iter()
            .enumerate()
            .map(|(i, &y)| tensor.argmax(i) == y)
            .collect(),
    }
}

/// Fraction of correct samples: an integer count divided once by N.
pub fn accuracy(bits: &CorrectnessVector) -> Result<f64> {
    accuracy_of(&bits.bits)
}

pub fn accuracy_of(bits: &[bool]) -> Result<f64> {
    if bits.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = bits.iter().filter(|&&b| b).count() as u64;
    Ok(hits as f64 / bits.len() as f64)
}
