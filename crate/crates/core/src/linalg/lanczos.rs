//! Lanczos with full reorthogonalization for the extreme eigenvalues of a
//! symmetric operator given only through matrix-vector products.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vector::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Extremes {
    pub min: f64,
    pub max: f64,
    /// Residual norms `|beta_k s_k|` of the two Ritz pairs; each bounds the
    /// distance from its Ritz value to an eigenvalue.
    pub residual_min: f64,
    pub residual_max: f64,
    pub steps: usize,
    pub converged: bool,
}

const START_SEED: u64 = 0x1a2c_05ee_d000_0001;

pub(crate) fn extremes(
    n: usize,
    max_steps: usize,
    rel_tol: f64,
    mut op: impl FnMut(&[f64]) -> Vec<f64>,
) -> Extremes {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|v| *v /= nq);

    let kmax = max_steps.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(kmax);
    let mut alpha: Vec<f64> = Vec::with_capacity(kmax);
    let mut beta: Vec<f64> = Vec::with_capacity(kmax);
    let mut last = Extremes {
        min: 0.0,
        max: 0.0,
        residual_min: f64::INFINITY,
        residual_max: f64::INFINITY,
        steps: 0,
        converged: false,
    };

    for j in 0..kmax {
        let mut w = op(&q);
        let a = dot(&w, &q);
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm2(&w);
        let k = j + 1;
        let invariant = b <= 1e-13 * alpha.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
        if k % 4 == 0 || k == kmax || invariant {
            last = ritz_extremes(&alpha, &beta, if invariant { 0.0 } else { b });
            last.steps = k;
            let scale = last.min.abs().max(last.max.abs()).max(1e-300);
            last.converged = invariant
                || k == n
                || (last.residual_min <= rel_tol * last.min.abs().max(1e-6 * scale)
                    && last.residual_max <= rel_tol * last.max.abs().max(1e-6 * scale));
            if last.converged {
                if invariant || k == n {
                    last.residual_min = last.residual_min.min(b);
                    last.residual_max = last.residual_max.min(b);
                }
                return last;
            }
        }
        beta.push(b);
        q = w.iter().map(|v| v / b).collect();
    }
    last
}

fn ritz_extremes(alpha: &[f64], beta: &[f64], b_next: f64) -> Extremes {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = t
        .self_adjoint_eigen(Side::Lower)
        .expect("tridiagonal eigenproblem converges");
    let s: Vec<f64> = eig.S().column_vector().iter().copied().collect();
    let u = eig.U();
    Extremes {
        min: s[0],
        max: s[k - 1],
        residual_min: (b_next * u[(k - 1, 0)]).abs(),
        residual_max: (b_next * u[(k - 1, k - 1)]).abs(),
        steps: k,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (1..=200).map(|i| i as f64 * 0.5).collect();
        let r = extremes(d.len(), 200, 1e-10, |x| x.iter().zip(&d).map(|(a, b)| a * b).collect());
        assert!(r.converged);
        assert!((r.min - 0.5).abs() < 1e-8, "{r:?}");
        assert!((r.max - 100.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn small_dimension_is_exact() {
        let r = extremes(2, 10, 1e-12, |x| vec![2.0 * x[0], 3.0 * x[1]]);
        assert!((r.min - 2.0).abs() < 1e-12);
        assert!((r.max - 3.0).abs() < 1e-12);
    }
}
