//! Row-major dense LU with partial pivoting and dense Cholesky.

use super::PIVOT_EPS;
use crate::error::{Error, Result};

/// `P A = L U`, L unit lower and U upper packed into one row-major buffer.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    /// `perm[k]` is the original row stored at position `k`.
    perm: Vec<usize>,
    pub(crate) min_pivot_ratio: f64,
}

impl DenseLu {
    pub(crate) fn new(n: usize, mut a: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let row_norms: Vec<f64> = a
            .chunks_exact(n)
            .map(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut max_piv = 0.0_f64;
        let mut min_piv = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= PIVOT_EPS * row_norms[perm[p]] || best == 0.0 {
                return Err(Error::Singular { pivot: Some(k) });
            }
            if p != k {
                let (top, bottom) = a.split_at_mut(p * n);
                top[k * n..(k + 1) * n].swap_with_slice(&mut bottom[..n]);
                perm.swap(k, p);
            }
            max_piv = max_piv.max(best);
            min_piv = min_piv.min(best);
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let pivot = pivot_row[k];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (r, u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * u;
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu: a,
            perm,
            min_pivot_ratio: if n == 0 { 1.0 } else { min_piv / max_piv },
        })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] -= crate::vector::dot(row, &x[..i]);
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s = crate::vector::dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub(crate) fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // U^T z = b
        let mut z = b.to_vec();
        for i in 0..n {
            let zi = z[i] / self.lu[i * n + i];
            z[i] = zi;
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            for (zj, u) in z[i + 1..].iter_mut().zip(row) {
                *zj -= u * zi;
            }
        }
        // L^T y = z
        for i in (0..n).rev() {
            let yi = z[i];
            let row = &self.lu[i * n..i * n + i];
            for (zj, l) in z[..i].iter_mut().zip(row) {
                *zj -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

/// `A = L L^T` with L lower triangular, row-major.
#[derive(Debug, Clone)]
pub(crate) struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
    pub(crate) min_pivot_ratio: f64,
}

impl DenseCholesky {
    /// Returns `None` when `a` is not numerically positive definite.
    pub(crate) fn new(n: usize, a: &[f64]) -> Option<Self> {
        let row_norms: Vec<f64> = a
            .chunks_exact(n)
            .map(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .collect();
        let mut l = vec![0.0; n * n];
        let mut max_d = 0.0_f64;
        let mut min_d = f64::INFINITY;
        for i in 0..n {
            for j in 0..=i {
                let s = a[i * n + j] - crate::vector::dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if i == j {
                    if !(s > PIVOT_EPS * row_norms[i]) {
                        return None;
                    }
                    let d = s.sqrt();
                    max_d = max_d.max(s);
                    min_d = min_d.min(s);
                    l[i * n + i] = d;
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self {
            n,
            l,
            min_pivot_ratio: if n == 0 { 1.0 } else { min_d / max_d },
        })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = crate::vector::dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let yi = y[i] / self.l[i * n + i];
            y[i] = yi;
            let row = &self.l[i * n..i * n + i];
            for (yj, l) in y[..i].iter_mut().zip(row) {
                *yj -= l * yi;
            }
        }
        y
    }
}
