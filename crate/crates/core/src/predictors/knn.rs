use crate::error::{Error, Result};

/// Stored source signatures and their performances.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub neighbors: usize,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
    pub performances: Vec<f64>,
}

impl KnnModel {
    pub fn new(neighbors: usize, vectors: Vec<Vec<f64>>, performances: Vec<f64>) -> Result<Self> {
        if neighbors == 0 {
            return Err(Error::InvalidConfig(
                "knn needs at least one neighbor".into(),
            ));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        Ok(KnnModel {
            neighbors: neighbors.min(vectors.len()),
            dim,
            vectors,
            performances,
        })
    }

    /// Indices of the nearest stored vectors; distance ties go to the lower index.
    pub fn nearest(&self, query: &[f64]) -> Result<Vec<usize>> {
        if self.vectors.is_empty() {
            return Err(Error::EmptyModel);
        }
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let dist: Vec<f64> = self
            .vectors
            .iter()
            .map(|v| v.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let mut order: Vec<usize> = (0..dist.len()).collect();
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
        order.truncate(self.neighbors);
        Ok(order)
    }

    pub fn predict(&self, query: &[f64]) -> Result<f64> {
        let idx = self.nearest(query)?;
        Ok(idx.iter().map(|&i| self.performances[i]).sum::<f64>() / idx.len() as f64)
    }
}
