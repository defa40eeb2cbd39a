use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge added to the Gram diagonal before solving the normal equations.
pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    /// Least squares with an unpenalized intercept, solved on centered data.
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let m = x.len();
        let d = x.first().map_or(0, Vec::len);
        let mut x_mean = vec![0.0; d];
        for r in x {
            for (acc, v) in x_mean.iter_mut().zip(r) {
                *acc += v;
            }
        }
        x_mean.iter_mut().for_each(|v| *v /= m as f64);
        let y_mean = y.iter().sum::<f64>() / m as f64;
        let xc = DMatrix::from_fn(m, d, |i, j| x[i][j] - x_mean[j]);
        let yc = DVector::from_fn(m, |i, _| y[i] - y_mean);
        let mut gram = xc.transpose() * &xc;
        for j in 0..d {
            gram[(j, j)] += RIDGE;
        }
        let rhs = xc.transpose() * yc;
        let w = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::InvalidConfig("normal equations are singular".into()))?,
        };
        let weights: Vec<f64> = w.iter().copied().collect();
        let intercept = y_mean - weights.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
        Ok(LinearModel { weights, intercept })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(self.intercept + self.weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
    }
}
