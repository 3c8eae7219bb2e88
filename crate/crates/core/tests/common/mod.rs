//! Test-local numerics: brute-force minimizers, a dense linear solver, and
//! hand-rolled projection formulas. Everything here is written independently
//! of the library internals so it can serve as an oracle for them.

#![allow(dead_code)]

use rand::Rng;

/// Minimize f over the box [lo, hi] by iteratively refined grid scan.
/// Points where f returns non-finite values are treated as infeasible.
pub fn refine_scan<F: Fn(&[f64]) -> f64>(f: F, lo: &[f64], hi: &[f64], rounds: usize) -> Vec<f64> {
    const PTS: usize = 15;
    let d = lo.len();
    assert!((1..=3).contains(&d), "scan oracle covers dims 1..=3");
    let (lo0, hi0) = (lo.to_vec(), hi.to_vec());
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let mut best = lo.clone();
    for _ in 0..rounds {
        let mut best_val = f64::INFINITY;
        let total = PTS.pow(d as u32);
        for flat in 0..total {
            let mut idx = flat;
            let mut y = vec![0.0; d];
            for k in 0..d {
                let i = idx % PTS;
                idx /= PTS;
                y[k] = lo[k] + (hi[k] - lo[k]) * i as f64 / (PTS - 1) as f64;
            }
            let val = f(&y);
            if val.is_finite() && val < best_val {
                best_val = val;
                best = y;
            }
        }
        // keep a three-cell margin: on curved constraint boundaries the best
        // feasible grid point drifts tangentially between rounds, and a
        // one-cell box can exclude the true minimizer and stall the scan;
        // never widen past the original domain, which may itself be the
        // constraint
        for k in 0..d {
            let span = (hi[k] - lo[k]) / (PTS - 1) as f64;
            lo[k] = (best[k] - 3.0 * span).max(lo0[k]);
            hi[k] = (best[k] + 3.0 * span).min(hi0[k]);
        }
    }
    best
}

/// Gaussian elimination with partial pivoting, for small dense systems.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "singular system in test oracle");
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

pub fn weighted_ip(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).zip(w).map(|((a, b), wi)| wi * a * b).sum()
}

pub fn weighted_norm(w: &[f64], x: &[f64]) -> f64 {
    weighted_ip(w, x, x).sqrt()
}

pub fn ball_proj(x: &[f64], radius: f64, center: &[f64], w: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let norm = weighted_norm(w, &d);
    if norm <= radius {
        return x.to_vec();
    }
    let t = radius / norm;
    center.iter().zip(&d).map(|(c, v)| c + t * v).collect()
}

pub fn box_proj(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower)
        .zip(upper)
        .map(|((v, lo), hi)| v.max(*lo).min(*hi))
        .collect()
}

pub fn hyperplane_proj(x: &[f64], normal: &[f64], offset: f64, w: &[f64]) -> Vec<f64> {
    let t = (weighted_ip(w, normal, x) - offset) / weighted_ip(w, normal, normal);
    x.iter().zip(normal).map(|(a, n)| a - t * n).collect()
}

pub fn zero_mean_proj(x: &[f64], w: &[f64]) -> Vec<f64> {
    let ones = vec![1.0; x.len()];
    hyperplane_proj(x, &ones, 0.0, w)
}

pub fn matvec(matrix: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|i| (0..cols).map(|j| matrix[i * cols + j] * x[j]).sum())
        .collect()
}

/// Adjoint of a dense matrix between weighted spaces:
/// (A*v)_j = (1/w1_j) Σ_i A_ij w2_i v_i.
pub fn weighted_adjoint(
    matrix: &[f64],
    rows: usize,
    cols: usize,
    w_in: &[f64],
    w_out: &[f64],
    v: &[f64],
) -> Vec<f64> {
    (0..cols)
        .map(|j| (0..rows).map(|i| matrix[i * cols + j] * w_out[i] * v[i]).sum::<f64>() / w_in[j])
        .collect()
}

pub fn sample_vec<R: Rng>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(lo..hi)).collect()
}
