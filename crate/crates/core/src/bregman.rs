//! Legendre functions, Bregman distances, and the identities everything
//! else builds on.

use crate::space::{check_finite, InnerProductSpace, Point};
use crate::{Error, Result};

/// A strictly convex differentiable function with an invertible gradient.
/// Both instances have closed-form conjugate gradients; that is what keeps
/// the projection whitelist in `geometry` exactly testable.
#[derive(Debug, Clone)]
pub enum LegendreFunction {
    HalfSquaredNorm { space: InnerProductSpace },
    /// Σ wᵢ(xᵢ log xᵢ − xᵢ) on the positive orthant. δ is certified only on
    /// the declared box {0 < xᵢ ≤ box_bound}: the Hessian diag(1/xᵢ)
    /// dominates (1/box_bound)·I there.
    NegativeEntropy { space: InnerProductSpace, box_bound: f64 },
}

pub fn half_squared_norm(space: InnerProductSpace) -> LegendreFunction {
    LegendreFunction::HalfSquaredNorm { space }
}

pub fn negative_entropy(space: InnerProductSpace) -> LegendreFunction {
    LegendreFunction::NegativeEntropy { space, box_bound: 10.0 }
}

pub fn negative_entropy_with_bound(space: InnerProductSpace, box_bound: f64) -> LegendreFunction {
    assert!(box_bound > 0.0);
    LegendreFunction::NegativeEntropy { space, box_bound }
}

impl LegendreFunction {
    pub fn space(&self) -> &InnerProductSpace {
        match self {
            Self::HalfSquaredNorm { space } => space,
            Self::NegativeEntropy { space, .. } => space,
        }
    }

    pub fn is_half_squared_norm(&self) -> bool {
        matches!(self, Self::HalfSquaredNorm { .. })
    }

    /// Strong-convexity constant δ.
    pub fn delta(&self) -> f64 {
        match self {
            Self::HalfSquaredNorm { .. } => 1.0,
            Self::NegativeEntropy { box_bound, .. } => 1.0 / box_bound,
        }
    }

    /// Membership in dom ∇ϖ.
    pub fn domain_ok(&self, x: &[f64]) -> bool {
        match self {
            Self::HalfSquaredNorm { .. } => x.iter().all(|v| v.is_finite()),
            Self::NegativeEntropy { .. } => x.iter().all(|v| v.is_finite() && *v > 0.0),
        }
    }

    fn domain_check(&self, x: &[f64]) -> Result<()> {
        self.space().check_dim(x)?;
        if !self.domain_ok(x) {
            return Err(Error::Domain(
                "point outside the gradient domain of the Legendre function".into(),
            ));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.space().check_dim(x)?;
        check_finite(x)?;
        match self {
            Self::HalfSquaredNorm { space } => Ok(0.5 * space.ip(x, x)),
            Self::NegativeEntropy { space, .. } => {
                // value extends continuously to xᵢ = 0 via x log x → 0
                if x.iter().any(|&v| v < 0.0) {
                    return Err(Error::Domain("negative coordinate under entropy".into()));
                }
                let mut s = 0.0;
                for (&v, &w) in x.iter().zip(space.weights()) {
                    if v > 0.0 {
                        s += w * (v * v.ln() - v);
                    }
                }
                Ok(s)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Point> {
        self.domain_check(x)?;
        match self {
            Self::HalfSquaredNorm { .. } => Ok(x.to_vec()),
            Self::NegativeEntropy { .. } => Ok(x.iter().map(|v| v.ln()).collect()),
        }
    }

    /// ∇ϖ*, the inverse of the gradient map.
    pub fn conjugate_gradient(&self, g: &[f64]) -> Result<Point> {
        self.space().check_dim(g)?;
        check_finite(g)?;
        match self {
            Self::HalfSquaredNorm { .. } => Ok(g.to_vec()),
            Self::NegativeEntropy { .. } => Ok(g.iter().map(|v| v.exp()).collect()),
        }
    }
}

/// D_ϖ(x, y) = ϖ(x) − ϖ(y) − ⟨∇ϖ(y), x − y⟩. Nonnegative, zero iff x = y,
/// not symmetric.
/// Computed in per-geometry closed form rather than via ϖ(x) − ϖ(y) −
/// ⟨∇ϖ(y), x−y⟩: the three-term formula cancels catastrophically as x → y
/// (magnitudes of order ϖ, a result of order ‖x−y‖²) and can come out
/// negative there, which poisons every nonnegativity-dependent consumer,
/// the line search acceptance test first of all.
pub fn bregman_distance(f: &LegendreFunction, x: &[f64], y: &[f64]) -> Result<f64> {
    let space = f.space();
    space.check_dim(x)?;
    check_finite(x)?;
    f.domain_check(y)?;
    match f {
        LegendreFunction::HalfSquaredNorm { .. } => {
            let d = space.dist(x, y);
            Ok(0.5 * d * d)
        }
        LegendreFunction::NegativeEntropy { .. } => {
            // the first argument only needs dom ϖ, where zeros are allowed
            if x.iter().any(|&v| v < 0.0) {
                return Err(Error::Domain("negative coordinate under entropy".into()));
            }
            // pointwise KL terms x ln(x/y) − x + y, each nonnegative; written
            // as x·φ((y−x)/x) with φ(r) = r − ln(1+r) because the literal
            // three-term form loses every digit once x ≈ y
            let total = x
                .iter()
                .zip(y)
                .zip(space.weights())
                .map(|((&a, &b), &w)| {
                    let term = if a == 0.0 { b } else { a * kl_phi((b - a) / a) };
                    w * term
                })
                .sum();
            Ok(total)
        }
    }
}

/// φ(r) = r − ln(1+r) ≥ 0 on (−1, ∞); the series branch keeps full precision
/// where the direct form would subtract two nearly equal numbers.
fn kl_phi(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        r * r * (0.5 - r / 3.0 + r * r / 4.0)
    } else {
        r - r.ln_1p()
    }
}

/// Residual of the three-point identity
/// D(x,y) = D(x,z) − D(y,z) + ⟨∇ϖ(z) − ∇ϖ(y), x − y⟩; analytically zero.
pub fn three_point_gap(f: &LegendreFunction, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    let lhs = bregman_distance(f, x, y)?;
    let gz = f.gradient(z)?;
    let gy = f.gradient(y)?;
    let gdiff: Vec<f64> = gz.iter().zip(&gy).map(|(a, b)| a - b).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let rhs = bregman_distance(f, x, z)? - bregman_distance(f, y, z)? + f.space().ip(&gdiff, &xy);
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r2() -> InnerProductSpace {
        InnerProductSpace::uniform(2)
    }

    #[test]
    fn half_squared_norm_basics() {
        let f = half_squared_norm(r2());
        assert_eq!(f.value(&[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(f.gradient(&[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
        assert_eq!(f.conjugate_gradient(&[0.5, 0.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(f.delta(), 1.0);
    }

    #[test]
    fn distance_zero_at_identity() {
        let f = half_squared_norm(r2());
        assert_eq!(bregman_distance(&f, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn distance_is_half_squared_euclidean() {
        let f = half_squared_norm(r2());
        let d = bregman_distance(&f, &[3.0, 0.0], &[0.0, 4.0]).unwrap();
        assert!((d - 12.5).abs() < 1e-12, "d = {}", d);
    }

    #[test]
    fn entropy_gradient_pair() {
        let f = negative_entropy(InnerProductSpace::uniform(1));
        assert_eq!(f.gradient(&[1.0]).unwrap(), vec![0.0]);
        assert_eq!(f.conjugate_gradient(&[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn entropy_distance_oracle_values() {
        let f = negative_entropy(InnerProductSpace::uniform(1));
        // D([1],[e]) = 1·ln1 − 1 − (e − e) − 1·(1 − e) = e − 2
        let d = bregman_distance(&f, &[1.0], &[std::f64::consts::E]).unwrap();
        assert!(
            (d - (std::f64::consts::E - 2.0)).abs() < 1e-12,
            "D([1],[e]) = {}",
            d
        );
        // D([2],[1]) = 2 ln 2 − 1
        let d = bregman_distance(&f, &[2.0], &[1.0]).unwrap();
        assert!((d - (2.0 * (2.0f64).ln() - 1.0)).abs() < 1e-12, "D([2],[1]) = {}", d);
    }

    #[test]
    fn entropy_rejects_nonpositive() {
        let f = negative_entropy(r2());
        assert!(f.gradient(&[1.0, 0.0]).is_err());
        assert!(bregman_distance(&f, &[1.0, 1.0], &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn three_point_identity_trivial_cases() {
        let f = half_squared_norm(r2());
        let x = [0.3, -1.2];
        assert_eq!(three_point_gap(&f, &x, &x, &x).unwrap(), 0.0);
        let g = three_point_gap(&f, &[1.0, 2.0], &[-0.5, 0.1], &[3.0, -4.0]).unwrap();
        assert!(g.abs() < 1e-12, "gap = {}", g);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let f = half_squared_norm(r2());
        assert!(matches!(
            f.value(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }
}
