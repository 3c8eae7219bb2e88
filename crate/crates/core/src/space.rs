//! Weighted inner-product spaces covering both plain ℝⁿ and grid-discretized
//! L²([0,1]) functions.

use crate::{Error, Result};

/// A dense vector in one of the problem spaces.
pub type Point = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductSpace {
    weights: Vec<f64>,
}

impl InnerProductSpace {
    /// ℝⁿ with the standard inner product.
    pub fn uniform(dim: usize) -> Self {
        Self { weights: vec![1.0; dim] }
    }

    /// Discretized L²([0,1]) on a uniform grid of `m` points, composite
    /// trapezoid weights h·[1/2, 1, …, 1, 1/2].
    pub fn trapezoid(m: usize) -> Self {
        assert!(m >= 2, "trapezoid rule needs at least 2 points");
        let h = 1.0 / (m - 1) as f64;
        let mut w = vec![h; m];
        w[0] *= 0.5;
        w[m - 1] *= 0.5;
        Self { weights: w }
    }

    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        Ok(Self { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ip(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        x.iter().zip(y).zip(&self.weights).map(|((a, b), w)| w * a * b).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.ip(x, x).sqrt()
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let mut s = 0.0;
        for ((a, b), w) in x.iter().zip(y).zip(&self.weights) {
            let d = a - b;
            s += w * d * d;
        }
        s.sqrt()
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }
}

/// Uniform grid of `m` points on [0,1], endpoints included.
pub fn unit_grid(m: usize) -> Vec<f64> {
    let h = 1.0 / (m - 1) as f64;
    (0..m).map(|i| i as f64 * h).collect()
}

pub fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("point has non-finite coordinates".into()));
    }
    Ok(())
}
