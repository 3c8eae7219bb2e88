//! Forward operators A: H₁ → H₂ with adjoint machinery and spectral-norm
//! estimation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::space::{check_finite, unit_grid, InnerProductSpace, Point};
use crate::{Error, Result};

const POWER_ITER_SEED: u64 = 0x5EED;
const POWER_ITER_CAP: usize = 500;
const POWER_ITER_RTOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum ForwardOperator {
    DenseLinear {
        /// row-major m×n
        matrix: Vec<f64>,
        in_space: InnerProductSpace,
        out_space: InnerProductSpace,
        lipschitz: f64,
    },
    /// A(ζ)(t) = sin(ζ(t)) + t·ζ(t) pointwise on a uniform [0,1] grid.
    SineMultiplier {
        space: InnerProductSpace,
        grid: Vec<f64>,
        lipschitz: f64,
    },
}

/// Dense linear operator between weighted spaces; the Lipschitz constant is
/// the operator norm estimated by seeded power iteration.
pub fn dense_linear(
    matrix: Vec<f64>,
    in_space: InnerProductSpace,
    out_space: InnerProductSpace,
) -> Result<ForwardOperator> {
    let (m, n) = (out_space.dim(), in_space.dim());
    if matrix.len() != m * n {
        return Err(Error::DimensionMismatch { expected: m * n, got: matrix.len() });
    }
    check_finite(&matrix)?;
    let mut op = ForwardOperator::DenseLinear {
        matrix,
        in_space,
        out_space,
        lipschitz: 0.0,
    };
    let l = estimate_operator_norm(&op);
    if let ForwardOperator::DenseLinear { lipschitz, .. } = &mut op {
        *lipschitz = l;
    }
    Ok(op)
}

/// The nonlinear multiplier operator of the L² experiment, self-adjoint
/// diagonal Jacobian cos(ζ(t)) + t, hence L = 2 on [0,1].
pub fn sine_multiplier(space: InnerProductSpace) -> ForwardOperator {
    let grid = unit_grid(space.dim());
    ForwardOperator::SineMultiplier { space, grid, lipschitz: 2.0 }
}

impl ForwardOperator {
    pub fn in_space(&self) -> &InnerProductSpace {
        match self {
            Self::DenseLinear { in_space, .. } => in_space,
            Self::SineMultiplier { space, .. } => space,
        }
    }

    pub fn out_space(&self) -> &InnerProductSpace {
        match self {
            Self::DenseLinear { out_space, .. } => out_space,
            Self::SineMultiplier { space, .. } => space,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::DenseLinear { .. })
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::DenseLinear { lipschitz, .. } => *lipschitz,
            Self::SineMultiplier { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Point> {
        self.in_space().check_dim(x)?;
        match self {
            Self::DenseLinear { matrix, in_space, out_space, .. } => {
                let n = in_space.dim();
                let m = out_space.dim();
                let mut out = vec![0.0; m];
                for i in 0..m {
                    let row = &matrix[i * n..(i + 1) * n];
                    out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
                Ok(out)
            }
            Self::SineMultiplier { grid, .. } => {
                Ok(x.iter().zip(grid).map(|(v, t)| v.sin() + t * v).collect())
            }
        }
    }

    /// Adjoint action: for linear operators A*v (base ignored); for the
    /// nonlinear operator, the adjoint of the Jacobian at `base`.
    pub fn adjoint_at(&self, base: &[f64], v: &[f64]) -> Result<Point> {
        self.out_space().check_dim(v)?;
        match self {
            Self::DenseLinear { matrix, in_space, out_space, .. } => {
                let n = in_space.dim();
                let m = out_space.dim();
                let w1 = in_space.weights();
                let w2 = out_space.weights();
                let mut out = vec![0.0; n];
                for i in 0..m {
                    let wv = w2[i] * v[i];
                    let row = &matrix[i * n..(i + 1) * n];
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * wv;
                    }
                }
                for (o, w) in out.iter_mut().zip(w1) {
                    *o /= w;
                }
                Ok(out)
            }
            Self::SineMultiplier { space, grid, .. } => {
                space.check_dim(base)?;
                // diagonal Jacobian in matching weights: self-adjoint
                Ok(base
                    .iter()
                    .zip(grid)
                    .zip(v)
                    .map(|((b, t), u)| (b.cos() + t) * u)
                    .collect())
            }
        }
    }
}

/// Largest singular value in the weighted geometry, via power iteration on
/// A*A with a fixed seed and iteration cap.
fn estimate_operator_norm(op: &ForwardOperator) -> f64 {
    let n = op.in_space().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITER_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nx = op.in_space().norm(&x);
    if nx == 0.0 {
        return 0.0;
    }
    for v in &mut x {
        *v /= nx;
    }
    let mut lam = 0.0;
    for _ in 0..POWER_ITER_CAP {
        let ax = op.apply(&x).expect("dimensions checked at construction");
        let mut y = op.adjoint_at(&x, &ax).expect("dimensions checked at construction");
        let ny = op.in_space().norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        for v in &mut y {
            *v /= ny;
        }
        x = y;
        if (ny - lam).abs() <= POWER_ITER_RTOL * ny {
            lam = ny;
            break;
        }
        lam = ny;
    }
    lam.sqrt()
}

/// ‖Ax − b‖² in the output-space norm, with gradient 2·A*(Ax − b).
#[derive(Debug, Clone)]
pub struct LeastSquaresObjective {
    op: ForwardOperator,
    b: Point,
}

pub fn least_squares_objective(op: ForwardOperator, b: Point) -> Result<LeastSquaresObjective> {
    op.out_space().check_dim(&b)?;
    check_finite(&b)?;
    Ok(LeastSquaresObjective { op, b })
}

impl LeastSquaresObjective {
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let ax = self.op.apply(x)?;
        let r: Vec<f64> = ax.iter().zip(&self.b).map(|(a, b)| a - b).collect();
        let s = self.op.out_space();
        Ok(s.ip(&r, &r))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Point> {
        let ax = self.op.apply(x)?;
        let r: Vec<f64> = ax.iter().zip(&self.b).map(|(a, b)| a - b).collect();
        let mut g = self.op.adjoint_at(x, &r)?;
        for v in &mut g {
            *v *= 2.0;
        }
        Ok(g)
    }

    /// Gradient Lipschitz constant 2·L² from the operator-norm estimate.
    pub fn gradient_lipschitz(&self) -> f64 {
        2.0 * self.op.lipschitz().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> InnerProductSpace {
        InnerProductSpace::uniform(n)
    }

    #[test]
    fn identity_applies() {
        let a = dense_linear(vec![1.0, 0.0, 0.0, 1.0], uniform(2), uniform(2)).unwrap();
        assert_eq!(a.apply(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert!((a.lipschitz() - 1.0).abs() < 1e-6, "L = {}", a.lipschitz());
    }

    #[test]
    fn permutation_adjoint_swaps() {
        let a = dense_linear(vec![0.0, 1.0, 1.0, 0.0], uniform(2), uniform(2)).unwrap();
        assert_eq!(a.adjoint_at(&[0.0, 0.0], &[5.0, 7.0]).unwrap(), vec![7.0, 5.0]);
    }

    #[test]
    fn adjoint_bilinear_identity_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mat: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = dense_linear(mat, uniform(5), uniform(5)).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lhs = uniform(5).ip(&a.apply(&x).unwrap(), &v);
            let rhs = uniform(5).ip(&x, &a.adjoint_at(&x, &v).unwrap());
            assert!((lhs - rhs).abs() < 1e-12, "⟨Ax,v⟩ = {} vs ⟨x,A*v⟩ = {}", lhs, rhs);
        }
    }

    #[test]
    fn weighted_adjoint_identity() {
        let s_in = InnerProductSpace::trapezoid(4);
        let s_out = InnerProductSpace::trapezoid(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mat: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = dense_linear(mat, s_in.clone(), s_out.clone()).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs = s_out.ip(&a.apply(&x).unwrap(), &v);
        let rhs = s_in.ip(&x, &a.adjoint_at(&x, &v).unwrap());
        assert!((lhs - rhs).abs() < 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn sine_multiplier_pointwise() {
        let a = sine_multiplier(InnerProductSpace::trapezoid(5));
        assert_eq!(a.apply(&vec![0.0; 5]).unwrap(), vec![0.0; 5]);
        let x = vec![std::f64::consts::FRAC_PI_2; 5];
        let y = a.apply(&x).unwrap();
        // last grid point is t = 1
        assert!((y[4] - (1.0 + std::f64::consts::FRAC_PI_2)).abs() < 1e-12, "y = {:?}", y);
        assert_eq!(a.lipschitz(), 2.0);
    }

    #[test]
    fn sine_jacobian_matches_finite_differences() {
        let m = 9;
        let a = sine_multiplier(InnerProductSpace::trapezoid(m));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dir: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let xp: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + h * d).collect();
        let xm: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b - h * d).collect();
        let fd: Vec<f64> = a
            .apply(&xp)
            .unwrap()
            .iter()
            .zip(&a.apply(&xm).unwrap())
            .map(|(p, q)| (p - q) / (2.0 * h))
            .collect();
        // diagonal Jacobian: J·d computed through the self-adjoint action
        let jd = a.adjoint_at(&base, &dir).unwrap();
        for (f, j) in fd.iter().zip(&jd) {
            assert!((f - j).abs() < 1e-6 * (1.0 + j.abs()), "fd {} vs jac {}", f, j);
        }
    }

    #[test]
    fn least_squares_exact_fit() {
        let a = dense_linear(vec![1.0, 0.0, 0.0, 1.0], uniform(2), uniform(2)).unwrap();
        let obj = least_squares_objective(a, vec![1.0, 2.0]).unwrap();
        assert_eq!(obj.value(&[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(obj.gradient(&[1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn least_squares_identity_values() {
        let a = dense_linear(vec![1.0, 0.0, 0.0, 1.0], uniform(2), uniform(2)).unwrap();
        let obj = least_squares_objective(a, vec![0.0, 0.0]).unwrap();
        assert_eq!(obj.value(&[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(obj.gradient(&[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn spectral_norm_close_to_exact_on_known_matrix() {
        // diag(3, 1): operator norm 3
        let a = dense_linear(vec![3.0, 0.0, 0.0, 1.0], uniform(2), uniform(2)).unwrap();
        assert!((a.lipschitz() - 3.0).abs() < 1e-6, "L = {}", a.lipschitz());
    }

    #[test]
    fn rejects_wrong_shapes() {
        assert!(dense_linear(vec![1.0; 5], uniform(2), uniform(2)).is_err());
        let a = dense_linear(vec![1.0; 6], uniform(3), uniform(2)).unwrap();
        assert!(a.apply(&[1.0, 2.0]).is_err());
        assert!(a.adjoint_at(&[0.0; 3], &[1.0, 2.0, 3.0]).is_err());
    }
}
