//! Closed convex sets with metric and Bregman projections, plus proximal
//! operators for the nonsmooth regularizers.

use crate::bregman::LegendreFunction;
use crate::space::{InnerProductSpace, Point};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub enum SetKind {
    /// ‖x − center‖ ≤ radius in the space norm.
    Ball { radius: f64, center: Point },
    /// ⟨normal, x⟩ = offset in the space inner product.
    Hyperplane { normal: Point, offset: f64 },
    /// lower ≤ x ≤ upper coordinatewise.
    Box { lower: Point, upper: Point },
    /// ⟨x, 1⟩ = 0: covers both eᵀx = 0 and ∫x = 0 depending on the weights.
    ZeroMean,
    WholeSpace,
}

#[derive(Debug, Clone)]
pub struct ConvexSet {
    pub kind: SetKind,
    pub space: InnerProductSpace,
}

impl ConvexSet {
    pub fn ball(radius: f64, center: Point, space: InnerProductSpace) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain("ball radius must be positive".into()));
        }
        space.check_dim(&center)?;
        Ok(Self { kind: SetKind::Ball { radius, center }, space })
    }

    pub fn hyperplane(normal: Point, offset: f64, space: InnerProductSpace) -> Result<Self> {
        space.check_dim(&normal)?;
        if space.norm(&normal) == 0.0 {
            return Err(Error::Domain("hyperplane normal must be nonzero".into()));
        }
        Ok(Self { kind: SetKind::Hyperplane { normal, offset }, space })
    }

    pub fn boxed(lower: Point, upper: Point, space: InnerProductSpace) -> Result<Self> {
        space.check_dim(&lower)?;
        space.check_dim(&upper)?;
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::Domain("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { kind: SetKind::Box { lower, upper }, space })
    }

    pub fn zero_mean(space: InnerProductSpace) -> Self {
        Self { kind: SetKind::ZeroMean, space }
    }

    pub fn whole_space(space: InnerProductSpace) -> Self {
        Self { kind: SetKind::WholeSpace, space }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match &self.kind {
            SetKind::Ball { radius, center } => self.space.dist(x, center) <= radius + tol,
            SetKind::Hyperplane { normal, offset } => {
                (self.space.ip(normal, x) - offset).abs() <= tol
            }
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower)
                .zip(upper)
                .all(|((v, l), u)| *v >= l - tol && *v <= u + tol),
            SetKind::ZeroMean => {
                let ones = vec![1.0; self.space.dim()];
                self.space.ip(&ones, x).abs() <= tol
            }
            SetKind::WholeSpace => true,
        }
    }
}

/// Nearest point of the set in the space norm.
pub fn metric_project(set: &ConvexSet, x: &[f64]) -> Result<Point> {
    set.space.check_dim(x)?;
    let p = match &set.kind {
        SetKind::Ball { radius, center } => {
            let d = set.space.dist(x, center);
            if d <= *radius {
                x.to_vec()
            } else {
                let scale = radius / d;
                x.iter().zip(center).map(|(v, c)| c + scale * (v - c)).collect()
            }
        }
        SetKind::Hyperplane { normal, offset } => {
            let shift = (set.space.ip(normal, x) - offset) / set.space.ip(normal, normal);
            x.iter().zip(normal).map(|(v, a)| v - shift * a).collect()
        }
        SetKind::Box { lower, upper } => x
            .iter()
            .zip(lower)
            .zip(upper)
            .map(|((v, l), u)| v.max(*l).min(*u))
            .collect(),
        SetKind::ZeroMean => {
            let ones = vec![1.0; set.space.dim()];
            let mean = set.space.ip(&ones, x) / set.space.ip(&ones, &ones);
            x.iter().map(|v| v - mean).collect()
        }
        SetKind::WholeSpace => x.to_vec(),
    };
    Ok(p)
}

/// Π_C^ϖ(x) = argmin over the set of D_ϖ(·, x).
///
/// Supported pairs are a closed-form whitelist: every set under the
/// half-squared norm (where the Bregman projection IS the metric
/// projection), and under negative entropy only the cases with a
/// multiplicative closed form. Anything else is refused loudly instead of
/// running an inner solver.
pub fn bregman_project(set: &ConvexSet, f: &LegendreFunction, x: &[f64]) -> Result<Point> {
    set.space.check_dim(x)?;
    if !f.domain_ok(x) {
        return Err(Error::Domain("projection argument outside dom ∇ϖ".into()));
    }
    if f.is_half_squared_norm() {
        return metric_project(set, x);
    }
    match &set.kind {
        SetKind::WholeSpace => Ok(x.to_vec()),
        SetKind::Hyperplane { normal, offset } => {
            // constant positive normal: argmin Σw(y ln(y/x) − y + x) s.t.
            // ⟨a, y⟩ = t gives y = x·exp(λ); uniform a makes exp(λ) a scalar
            let a0 = normal[0];
            if a0 <= 0.0 || normal.iter().any(|&a| (a - a0).abs() > 1e-14) {
                return Err(Error::UnsupportedCombination(
                    "entropy projection needs a constant positive hyperplane normal".into(),
                ));
            }
            if *offset <= 0.0 {
                return Err(Error::UnsupportedCombination(
                    "entropy projection needs a positive hyperplane offset".into(),
                ));
            }
            let total = set.space.ip(normal, x);
            let scale = offset / total;
            Ok(x.iter().map(|v| v * scale).collect())
        }
        _ => Err(Error::UnsupportedCombination(format!(
            "no closed-form entropy projection for {:?}",
            std::mem::discriminant(&set.kind)
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProximableFunction {
    L1 { mu: f64 },
    Zero,
}

impl ProximableFunction {
    pub fn l1(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::Domain("L1 weight must be nonnegative".into()));
        }
        Ok(Self::L1 { mu })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::L1 { mu } => mu * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::Zero => 0.0,
        }
    }
}

/// prox_{η·g}(x) = argmin g(y) + (1/2η)‖y − x‖² in the space norm.
pub fn prox(g: &ProximableFunction, eta: f64, x: &[f64], space: &InnerProductSpace) -> Result<Point> {
    if !(eta > 0.0) {
        return Err(Error::Domain("prox step must be positive".into()));
    }
    space.check_dim(x)?;
    match g {
        ProximableFunction::Zero => Ok(x.to_vec()),
        ProximableFunction::L1 { mu } => {
            // separable: per-coordinate threshold η·μ/wᵢ because the
            // quadratic term carries the space weight wᵢ
            Ok(x.iter()
                .zip(space.weights())
                .map(|(v, w)| {
                    let thr = eta * mu / w;
                    if *v > thr {
                        v - thr
                    } else if *v < -thr {
                        v + thr
                    } else {
                        0.0
                    }
                })
                .collect())
        }
    }
}

/// D_ϖ(y, x) − D_ϖ(y, p) − D_ϖ(p, x) with p the Bregman projection of x;
/// the generalized Pythagoras inequality says this is ≥ 0 for y in the set.
pub fn pythagoras_gap(
    set: &ConvexSet,
    f: &LegendreFunction,
    y: &[f64],
    x: &[f64],
) -> Result<f64> {
    let p = bregman_project(set, f, x)?;
    let d_yx = crate::bregman::bregman_distance(f, y, x)?;
    let d_yp = crate::bregman::bregman_distance(f, y, &p)?;
    let d_px = crate::bregman::bregman_distance(f, &p, x)?;
    Ok(d_yx - d_yp - d_px)
}
