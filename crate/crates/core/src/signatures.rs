//! Model signatures on an anchor subset, and PCA reduction of them.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::dten;
use crate::store::PredictionTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignatureMode {
    /// Class probabilities of every anchor sample.
    #[default]
    Probs,
    /// One-hot argmax of every anchor sample.
    Onehot,
    /// Correctness bit of every anchor sample.
    Correctness,
}

impl SignatureMode {
    pub fn label(self) -> &'static str {
        match self {
            SignatureMode::Probs => "probs",
            SignatureMode::Onehot => "onehot",
            SignatureMode::Correctness => "correctness",
        }
    }

    pub fn width(self, k: usize, classes: usize) -> usize {
        match self {
            SignatureMode::Correctness => k,
            _ => k * classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSignature {
    pub model_id: String,
    pub vector: Vec<f64>,
    pub mode: SignatureMode,
}

/// Concatenates a model's outputs on `indices`, in the given order.
pub fn build_signature(
    tensor: &PredictionTensor,
    indices: &[usize],
    mode: SignatureMode,
    labels: &[usize],
) -> Result<ModelSignature> {
    let n = tensor.num_samples();
    let c = tensor.num_classes();
    let mut vector = Vec::with_capacity(mode.width(indices.len(), c));
    for &i in indices {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        match mode {
            SignatureMode::Probs => vector.extend_from_slice(tensor.row(i)),
            SignatureMode::Onehot => {
                let a = tensor.argmax(i);
                vector.extend((0..c).map(|k| if k == a { 1.0 } else { 0.0 }));
            }
            SignatureMode::Correctness => {
                let y = *labels.get(i).ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: labels.len(),
                })?;
                vector.push(if tensor.argmax(i) == y { 1.0 } else { 0.0 });
            }
        }
    }
    Ok(ModelSignature {
        model_id: tensor.model_id.clone(),
        vector,
        mode,
    })
}

/// Frozen PCA map: `components * (x - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// `d x D`, row-major; rows are orthonormal principal directions.
    pub components: Vec<f64>,
    pub explained_variance: Vec<f64>,
    /// Sum of per-coordinate sample variances of the training data.
    pub total_variance: f64,
}

impl PcaProjection {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn component(&self, j: usize) -> &[f64] {
        let dd = self.input_dim();
        &self.components[j * dd..(j + 1) * dd]
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.input_dim(),
            });
        }
        Ok((0..self.output_dim())
            .map(|j| {
                self.component(j)
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(w, (v, m))| w * (v - m))
                    .sum()
            })
            .collect())
    }

    /// Maps reduced coordinates back to the input space.
    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.output_dim() {
            return Err(Error::LengthMismatch {
                left: z.len(),
                right: self.output_dim(),
            });
        }
        let mut out = self.mean.clone();
        for (j, &zj) in z.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.component(j)) {
                *o += zj * w;
            }
        }
        Ok(out)
    }

    /// Writes `(d + 1) x D` float64 DTEN (mean row, then components) and a JSON sidecar.
    pub fn save(&self, dten_path: &Path, sidecar_path: &Path) -> Result<()> {
        let mut data = self.mean.clone();
        data.extend_from_slice(&self.components);
        dten::write_file(
            dten_path,
            &dten::encode_f64(self.output_dim() + 1, self.input_dim(), &data),
        )?;
        let side = PcaSidecar {
            d: self.output_dim(),
            input_dim: self.input_dim(),
            explained_variance: self.explained_variance.clone(),
            total_variance: self.total_variance,
        };
        let mut text = serde_json::to_string_pretty(&side).expect("sidecar serializes");
        text.push('\n');
        dten::write_file(sidecar_path, text.as_bytes())
    }

    pub fn load(dten_path: &Path, sidecar_path: &Path) -> Result<Self> {
        let m = dten::decode(&dten::read_file(dten_path)?, dten_path)?;
        let text = String::from_utf8_lossy(&dten::read_file(sidecar_path)?).into_owned();
        let side: PcaSidecar = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: sidecar_path.to_path_buf(),
            message: e.to_string(),
        })?;
        if m.rows != side.d + 1 || m.cols != side.input_dim {
            return Err(Error::ShapeMismatch {
                expected: (side.d + 1, side.input_dim),
                found: (m.rows, m.cols),
            });
        }
        Ok(PcaProjection {
            mean: m.row(0).to_vec(),
            components: m.data[m.cols..].to_vec(),
            explained_variance: side.explained_variance,
            total_variance: side.total_variance,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PcaSidecar {
    d: usize,
    input_dim: usize,
    explained_variance: Vec<f64>,
    total_variance: f64,
}

/// Default reduced dimension: `min(256, M, D)`.
pub fn default_pca_dims(models: usize, dim: usize) -> usize {
    256.min(models).min(dim)
}

/// Fits PCA on `rows` (one signature per row) keeping `d` directions.
///
/// If `d` exceeds the numerical rank of the centered data, it is reduced to
/// the rank (never below 1) and a warning is logged.
pub fn pca_fit(rows: &[Vec<f64>], d: usize) -> Result<PcaProjection> {
    let m = rows.len();
    if m < 2 {
        return Err(Error::TooFewModels { needed: 2, got: m });
    }
    let dd = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dd) {
        return Err(Error::DimensionMismatch {
            expected: dd,
            found: r.len(),
        });
    }
    if d == 0 || d > m.min(dd) {
        return Err(Error::InvalidConfig(format!(
            "pca dims {d} outside [1, min({m}, {dd})]"
        )));
    }
    let mut mean = vec![0.0; dd];
    for r in rows {
        for (acc, v) in mean.iter_mut().zip(r) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let centered = DMatrix::from_fn(m, dd, |i, j| rows[i][j] - mean[j]);
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / (m - 1) as f64;

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let s_max = svd.singular_values[order[0]];
    let tol = s_max * m.max(dd) as f64 * f64::EPSILON;
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > tol)
        .count()
        .max(1);
    let d_eff = if d > rank {
        // Centering always costs one dimension when M <= D; only a further loss is news.
        if rank < (m - 1).min(dd) {
            log::warn!("pca: requested {d} dims but numerical rank is {rank}; using {rank}");
        } else {
            log::debug!("pca: centered rank {rank} < requested {d}; using {rank}");
        }
        rank
    } else {
        d
    };

    let mut components = Vec::with_capacity(d_eff * dd);
    let mut explained_variance = Vec::with_capacity(d_eff);
    for &k in order.iter().take(d_eff) {
        let mut row: Vec<f64> = v_t.row(k).iter().copied().collect();
        let mut pivot = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.extend(row);
        let s = svd.singular_values[k];
        explained_variance.push(s * s / (m - 1) as f64);
    }
    Ok(PcaProjection {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

/// A batch of signatures with the same mode, in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureSet {
    pub mode: SignatureMode,
    pub model_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SignatureSidecar {
    mode: SignatureMode,
    d: usize,
    model_ids: Vec<String>,
}

impl SignatureSet {
    /// Writes `M x D` float64 DTEN plus a JSON sidecar of mode, width and ids.
    pub fn save(&self, dten_path: &Path, sidecar_path: &Path) -> Result<()> {
        let width = self.rows.first().map_or(0, Vec::len);
        dten::write_file(
            dten_path,
            &dten::encode_f64(self.rows.len(), width, &self.rows.concat()),
        )?;
        let side = SignatureSidecar {
            mode: self.mode,
            d: width,
            model_ids: self.model_ids.clone(),
        };
        let mut text = serde_json::to_string_pretty(&side).expect("sidecar serializes");
        text.push('\n');
        dten::write_file(sidecar_path, text.as_bytes())
    }

    pub fn load(dten_path: &Path, sidecar_path: &Path) -> Result<Self> {
        let m = dten::decode(&dten::read_file(dten_path)?, dten_path)?;
        let text = String::from_utf8_lossy(&dten::read_file(sidecar_path)?).into_owned();
        let side: SignatureSidecar = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: sidecar_path.to_path_buf(),
            message: e.to_string(),
        })?;
        if m.rows != side.model_ids.len() || m.cols != side.d {
            return Err(Error::ShapeMismatch {
                expected: (side.model_ids.len(), side.d),
                found: (m.rows, m.cols),
            });
        }
        Ok(SignatureSet {
            mode: side.mode,
            model_ids: side.model_ids,
            rows: (0..m.rows).map(|i| m.row(i).to_vec()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor() -> PredictionTensor {
        PredictionTensor::from_rows("m", &[vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap()
    }

    #[test]
    fn signature_modes() {
        let t = tensor();
        let p = build_signature(&t, &[0], SignatureMode::Probs, &[0, 0]).unwrap();
        assert!((p.vector[0] - 0.3).abs() < 1e-7 && (p.vector[1] - 0.7).abs() < 1e-7);
        let o = build_signature(&t, &[0], SignatureMode::Onehot, &[0, 0]).unwrap();
        assert_eq!(o.vector, vec![0.0, 1.0]);
        let c = build_signature(&t, &[0, 1], SignatureMode::Correctness, &[0, 0]).unwrap();
        assert_eq!(c.vector, vec![0.0, 1.0]);
        assert!(matches!(
            build_signature(&t, &[2], SignatureMode::Probs, &[0, 0]),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn collinear_points_have_one_direction() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let t = i as f64;
                vec![1.0 + t, 2.0 - 2.0 * t, 0.5 * t]
            })
            .collect();
        let p = pca_fit(&rows, 1).unwrap();
        assert!((p.explained_variance[0] - p.total_variance).abs() < 1e-10);
        // largest-magnitude entry (the y axis) is made positive
        assert!(p.component(0)[1] > 0.0);
    }

    #[test]
    fn rank_reduction_and_errors() {
        let rows = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
            vec![2.0, 2.0, 2.0],
        ];
        let p = pca_fit(&rows, 3).unwrap();
        assert_eq!(p.output_dim(), 1);
        assert!(matches!(
            pca_fit(&rows[..1], 1),
            Err(Error::TooFewModels { .. })
        ));
        assert!(pca_fit(&rows, 4).is_err());
    }

    #[test]
    fn transform_of_mean_is_zero() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 1.0], vec![0.0, 5.0]];
        let p = pca_fit(&rows, 2).unwrap();
        assert!(p
            .transform(&p.mean)
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-15));
        assert!(matches!(
            p.transform(&[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            vec![1.0, 2.0, 0.1],
            vec![3.0, 1.0, 0.2],
            vec![0.0, 5.0, 0.3],
        ];
        let p = pca_fit(&rows, 2).unwrap();
        let (a, b) = (dir.path().join("p.dten"), dir.path().join("p.json"));
        p.save(&a, &b).unwrap();
        assert_eq!(PcaProjection::load(&a, &b).unwrap(), p);
        let set = SignatureSet {
            mode: SignatureMode::Probs,
            model_ids: vec!["x".into(), "y".into(), "z".into()],
            rows,
        };
        set.save(&a, &b).unwrap();
        assert_eq!(SignatureSet::load(&a, &b).unwrap(), set);
    }
}
