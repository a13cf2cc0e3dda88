//! Operator norms, extreme singular values and symmetric eigenvalue extremes.
//!
//! Dense matrices go through a full SVD or symmetric eigendecomposition and
//! are exact to rounding. Sparse matrices use Lanczos: on `A^T A` for the
//! 2-norm, on `A^{-1} A^{-T}` (through a sparse factorization) for the
//! smallest singular value, and on `A` itself for eigenvalue extremes.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::{factor, lanczos, Matrix, Storage};
use crate::error::{Error, Result};

/// Iteration cap for the sparse Lanczos estimates.
pub const LANCZOS_MAX_STEPS: usize = 300;
/// Target relative accuracy of the sparse singular-value estimates.
pub const SINGULAR_REL_TOL: f64 = 1e-6;
/// Target relative accuracy of the sparse eigenvalue estimates.
pub const EIG_REL_TOL: f64 = 1e-8;
/// Relative asymmetry accepted by [`sym_eig_extremes`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A scalar spectral quantity together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// True for the dense path.
    pub exact: bool,
    /// Relative error bound for estimates; 0 for the dense path.
    pub rel_accuracy: f64,
    pub iterations: usize,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            exact: true,
            rel_accuracy: 0.0,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub exact: bool,
    pub rel_accuracy: f64,
}

fn to_faer(a: &Matrix) -> Mat<f64> {
    let nc = a.n_cols();
    match a.storage() {
        Storage::DenseRowMajor(v) => Mat::from_fn(a.n_rows(), nc, |i, j| v[i * nc + j]),
        Storage::SparseCompressed(_) => {
            let v = a.to_dense_values();
            Mat::from_fn(a.n_rows(), nc, |i, j| v[i * nc + j])
        }
    }
}

fn dense_singular_values(a: &Matrix) -> Option<Vec<f64>> {
    to_faer(a).singular_values().ok()
}

/// Largest singular value `||A||_2`.
pub fn op_norm_2(a: &Matrix) -> f64 {
    op_norm_2_estimate(a).value
}

pub fn op_norm_2_estimate(a: &Matrix) -> Estimate {
    if !a.is_sparse() {
        if let Some(s) = dense_singular_values(a) {
            return Estimate::exact(s.first().copied().unwrap_or(0.0));
        }
    }
    let mut tmp = vec![0.0; a.n_rows()];
    let r = lanczos::extremes(a.n_cols(), LANCZOS_MAX_STEPS, SINGULAR_REL_TOL, |x| {
        a.matvec_into(x, &mut tmp);
        let mut y = vec![0.0; a.n_cols()];
        a.matvec_transpose_into(&tmp, &mut y);
        y
    });
    let lam = r.max.max(0.0);
    Estimate {
        value: lam.sqrt(),
        exact: false,
        rel_accuracy: if lam > 0.0 { 0.5 * r.residual_max / lam } else { 0.0 },
        iterations: r.steps,
    }
}

/// `||A||_2` of an operator given by its action and the action of its transpose.
pub(crate) fn operator_norm_estimate(
    n: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
) -> Estimate {
    let r = lanczos::extremes(n, LANCZOS_MAX_STEPS, SINGULAR_REL_TOL, |x| apply_t(&apply(x)));
    let lam = r.max.max(0.0);
    Estimate {
        value: lam.sqrt(),
        exact: false,
        rel_accuracy: if lam > 0.0 { 0.5 * r.residual_max / lam } else { 0.0 },
        iterations: r.steps,
    }
}

/// Smallest singular value of a square matrix; 0 when the matrix is
/// singular to working precision.
pub fn sigma_min(a: &Matrix) -> Result<f64> {
    Ok(sigma_min_estimate(a)?.value)
}

pub fn sigma_min_estimate(a: &Matrix) -> Result<Estimate> {
    if !a.is_square() {
        return Err(Error::InvalidInput("sigma_min needs a square matrix".into()));
    }
    let f = match factor(a) {
        Ok(f) => f,
        Err(Error::Singular { .. }) => {
            return Ok(Estimate {
                exact: !a.is_sparse(),
                ..Estimate::exact(0.0)
            })
        }
        Err(e) => return Err(e),
    };
    if !a.is_sparse() {
        if let Some(s) = dense_singular_values(a) {
            return Ok(Estimate::exact(s.last().copied().unwrap_or(0.0)));
        }
    }
    let r = lanczos::extremes(a.n_rows(), LANCZOS_MAX_STEPS, SINGULAR_REL_TOL, |x| {
        let y = f.solve_transpose(x).expect("dimension checked");
        f.solve(&y).expect("dimension checked")
    });
    let lam = r.max;
    if !(lam > 0.0) || !lam.is_finite() {
        return Ok(Estimate {
            exact: false,
            ..Estimate::exact(0.0)
        });
    }
    Ok(Estimate {
        value: 1.0 / lam.sqrt(),
        exact: false,
        rel_accuracy: 0.5 * r.residual_max / lam,
        iterations: r.steps,
    })
}

/// `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn sym_eig_extremes(a: &Matrix) -> Result<(f64, f64)> {
    let e = sym_eig_extremes_estimate(a)?;
    Ok((e.lambda_min, e.lambda_max))
}

pub fn sym_eig_extremes_estimate(a: &Matrix) -> Result<EigExtremes> {
    let asym = a.relative_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if !a.is_sparse() {
        if let Ok(ev) = to_faer(a).self_adjoint_eigenvalues(Side::Lower) {
            return Ok(EigExtremes {
                lambda_min: ev[0],
                lambda_max: ev[ev.len() - 1],
                exact: true,
                rel_accuracy: 0.0,
            });
        }
    }
    let r = lanczos::extremes(a.n_rows(), LANCZOS_MAX_STEPS, EIG_REL_TOL, |x| {
        a.matvec(x).expect("square")
    });
    let scale = r.min.abs().max(r.max.abs()).max(f64::MIN_POSITIVE);
    Ok(EigExtremes {
        lambda_min: r.min,
        lambda_max: r.max,
        exact: false,
        rel_accuracy: r.residual_min.max(r.residual_max) / scale,
    })
}
