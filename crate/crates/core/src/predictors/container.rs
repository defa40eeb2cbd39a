//! Binary predictor file: `DPRM`, version u8, 3 pad bytes, header length
//! u64 LE, header JSON, then one DTEN record per named block.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Forest, KnnModel, LinearModel, Node, Payload, PredictorKind, PredictorModel, Tree};
use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::signatures::{PcaProjection, SignatureMode};
use crate::store::dten::{self, Matrix};

pub const MAGIC: [u8; 4] = *b"DPRM";
const VERSION: u8 = 1;
const NODE_COLUMNS: usize = 6;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: PredictorKind,
    signature_mode: SignatureMode,
    input_dim: usize,
    reduced_dim: Option<usize>,
    neighbors: Option<usize>,
    trees: Option<usize>,
    blocks: Vec<String>,
    provenance: Option<Provenance>,
}

fn column(v: &[f64]) -> Matrix {
    Matrix::f64(v.len(), 1, v.to_vec())
}

fn table(rows: &[Vec<f64>], cols: usize) -> Matrix {
    Matrix::f64(rows.len(), cols, rows.concat())
}

pub(super) fn encode(model: &PredictorModel) -> Vec<u8> {
    let mut blocks: Vec<(&str, Matrix)> = Vec::new();
    if let Some(p) = &model.projection {
        let mut data = p.mean.clone();
        data.extend_from_slice(&p.components);
        blocks.push((
            "pca_mean_components",
            Matrix::f64(p.output_dim() + 1, p.input_dim(), data),
        ));
        let mut var = p.explained_variance.clone();
        var.push(p.total_variance);
        blocks.push(("pca_variance_total", column(&var)));
    }
    let (mut neighbors, mut trees) = (None, None);
    match &model.payload {
        Payload::Knn(k) => {
            neighbors = Some(k.neighbors);
            blocks.push(("knn_vectors", table(&k.vectors, k.dim)));
            blocks.push(("knn_performances", column(&k.performances)));
        }
        Payload::Linear(l) => {
            let mut w = l.weights.clone();
            w.push(l.intercept);
            blocks.push(("linear_weights_intercept", column(&w)));
        }
        Payload::RandomForest(f) => {
            trees = Some(f.trees.len());
            let mut offsets = Vec::with_capacity(f.trees.len());
            let mut rows = Vec::new();
            for t in &f.trees {
                let base = rows.len();
                offsets.push(base as f64);
                for (i, n) in t.nodes.iter().enumerate() {
                    let id = (base + i) as f64;
                    rows.push(match *n {
                        Node::Leaf { value } => vec![id, -1.0, 0.0, -1.0, -1.0, value],
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => vec![
                            id,
                            feature as f64,
                            threshold,
                            (base + left) as f64,
                            (base + right) as f64,
                            0.0,
                        ],
                    });
                }
            }
            blocks.push(("forest_nodes", table(&rows, NODE_COLUMNS)));
            blocks.push(("forest_tree_offsets", column(&offsets)));
        }
        Payload::WeightedSum(w) => blocks.push(("anchor_weights", column(w))),
    }
    let header = Header {
        kind: model.kind(),
        signature_mode: model.signature_mode,
        input_dim: model.input_dim,
        reduced_dim: model.projection.as_ref().map(PcaProjection::output_dim),
        neighbors,
        trees,
        blocks: blocks.iter().map(|(n, _)| n.to_string()).collect(),
        provenance: model.provenance.clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[VERSION, 0, 0, 0]);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, m) in &blocks {
        out.extend(dten::encode_f64(m.rows, m.cols, &m.data));
    }
    out
}

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::UnsupportedFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn as_index(v: f64, path: &Path) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(bad(path, format!("{v} is not an index")))
    }
}

pub(super) fn decode(bytes: &[u8], path: &Path) -> Result<PredictorModel> {
    if bytes.len() < 16 || bytes[..4] != MAGIC {
        return Err(Error::MagicMismatch {
            path: path.to_path_buf(),
            expected: MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes[4] != VERSION {
        return Err(bad(path, format!("version {}", bytes[4])));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let hend = 16usize
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad(path, "header truncated"))?;
    let header: Header = serde_json::from_slice(&bytes[16..hend]).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut pos = hend;
    let mut blocks = std::collections::BTreeMap::new();
    for name in &header.blocks {
        let (m, used) = dten::decode_prefix(&bytes[pos..], path)?;
        pos += used;
        blocks.insert(name.as_str(), m);
    }
    if pos != bytes.len() {
        return Err(bad(path, format!("{} trailing bytes", bytes.len() - pos)));
    }
    let mut take = |name: &str| {
        blocks
            .remove(name)
            .ok_or_else(|| bad(path, format!("missing block {name}")))
    };

    let projection = match header.reduced_dim {
        Some(d) => {
            let mc = take("pca_mean_components")?;
            let var = take("pca_variance_total")?;
            if mc.rows != d + 1 || mc.cols != header.input_dim || var.data.len() != d + 1 {
                return Err(Error::ShapeMismatch {
                    expected: (d + 1, header.input_dim),
                    found: (mc.rows, mc.cols),
                });
            }
            Some(PcaProjection {
                mean: mc.row(0).to_vec(),
                components: mc.data[mc.cols..].to_vec(),
                explained_variance: var.data[..d].to_vec(),
                total_variance: var.data[d],
            })
        }
        None => None,
    };
    let feature_dim = header.reduced_dim.unwrap_or(header.input_dim);

    let payload = match header.kind {
        PredictorKind::Knn => {
            let v = take("knn_vectors")?;
            let p = take("knn_performances")?;
            if v.cols != feature_dim || p.data.len() != v.rows {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    found: v.cols,
                });
            }
            let neighbors = header
                .neighbors
                .ok_or_else(|| bad(path, "knn without neighbors"))?;
            Payload::Knn(KnnModel::new(
                neighbors,
                (0..v.rows).map(|i| v.row(i).to_vec()).collect(),
                p.data,
            )?)
        }
        PredictorKind::Linear => {
            let w = take("linear_weights_intercept")?;
            if w.data.len() != feature_dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim + 1,
                    found: w.data.len(),
                });
            }
            Payload::Linear(LinearModel {
                weights: w.data[..feature_dim].to_vec(),
                intercept: w.data[feature_dim],
            })
        }
        PredictorKind::RandomForest => {
            let nodes = take("forest_nodes")?;
            let offsets = take("forest_tree_offsets")?;
            if nodes.cols != NODE_COLUMNS {
                return Err(bad(path, "forest node table must have 6 columns"));
            }
            let starts: Vec<usize> = offsets
                .data
                .iter()
                .map(|&v| as_index(v, path))
                .collect::<Result<_>>()?;
            if Some(starts.len()) != header.trees {
                return Err(bad(path, "tree count disagrees with header"));
            }
            let mut trees = Vec::with_capacity(starts.len());
            for (t, &start) in starts.iter().enumerate() {
                let end = starts.get(t + 1).copied().unwrap_or(nodes.rows);
                if start > end || end > nodes.rows {
                    return Err(bad(path, "tree offsets are not monotone"));
                }
                let mut tree_nodes = Vec::with_capacity(end - start);
                for i in start..end {
                    let r = nodes.row(i);
                    if as_index(r[0], path)? != i {
                        return Err(bad(path, format!("node row {i} carries id {}", r[0])));
                    }
                    let local = |v: f64| -> Result<usize> {
                        let g = as_index(v, path)?;
                        if g < start || g >= end {
                            return Err(bad(path, format!("child {g} outside tree {t}")));
                        }
                        Ok(g - start)
                    };
                    tree_nodes.push(if r[1] < 0.0 {
                        Node::Leaf { value: r[5] }
                    } else {
                        let feature = as_index(r[1], path)?;
                        if feature >= feature_dim {
                            return Err(Error::DimensionMismatch {
                                expected: feature_dim,
                                found: feature + 1,
                            });
                        }
                        Node::Split {
                            feature,
                            threshold: r[2],
                            left: local(r[3])?,
                            right: local(r[4])?,
                        }
                    });
                }
                let tree = Tree { nodes: tree_nodes };
                tree.check()?;
                trees.push(tree);
            }
            Payload::RandomForest(Forest {
                dim: feature_dim,
                trees,
            })
        }
        PredictorKind::WeightedSum => {
            let w = take("anchor_weights")?;
            if w.data.len() != header.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: header.input_dim,
                    found: w.data.len(),
                });
            }
            super::check_weights(&w.data)?;
            Payload::WeightedSum(w.data)
        }
    };
    Ok(PredictorModel {
        signature_mode: header.signature_mode,
        input_dim: header.input_dim,
        projection,
        payload,
        provenance: header.provenance,
    })
}
