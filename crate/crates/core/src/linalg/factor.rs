use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;

use super::dense::{DenseCholesky, DenseLu};
use super::{Matrix, Storage};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    LuPartialPivot,
    CholeskyLike,
}

#[derive(Debug, Clone)]
enum Inner {
    DenseLu(DenseLu),
    DenseCholesky(DenseCholesky),
    SparseLu(Box<faer::sparse::linalg::solvers::Lu<usize, f64>>),
}

/// A factored square matrix, reusable for any number of solves.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    inner: Inner,
    ill_conditioned: bool,
}

/// Pivot ratio below which a factorization is flagged as ill-conditioned.
const ILL_CONDITIONED_RATIO: f64 = 1e-12;

/// Factors a square matrix.
///
/// Dense storage uses Cholesky when the matrix is exactly symmetric with a
/// positive diagonal and the factorization succeeds, otherwise row-pivoted
/// LU. Sparse storage uses a supernodal sparse LU with a COLAMD ordering.
pub fn factor(a: &Matrix) -> Result<Factorization> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "cannot factor a {}x{} matrix",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let n = a.n_rows();
    match a.storage() {
        Storage::DenseRowMajor(values) => {
            if looks_spd(n, values) {
                if let Some(ch) = DenseCholesky::new(n, values) {
                    let ill = ch.min_pivot_ratio < ILL_CONDITIONED_RATIO;
                    return Ok(Factorization {
                        n,
                        inner: Inner::DenseCholesky(ch),
                        ill_conditioned: ill,
                    });
                }
            }
            let lu = DenseLu::new(n, values.clone())?;
            let ill = lu.min_pivot_ratio < ILL_CONDITIONED_RATIO;
            Ok(Factorization {
                n,
                inner: Inner::DenseLu(lu),
                ill_conditioned: ill,
            })
        }
        Storage::SparseCompressed(_) => factor_sparse(a),
    }
}

fn looks_spd(n: usize, v: &[f64]) -> bool {
    (0..n).all(|i| v[i * n + i] > 0.0)
        && (0..n).all(|i| ((i + 1)..n).all(|j| v[i * n + j] == v[j * n + i]))
}

fn factor_sparse(a: &Matrix) -> Result<Factorization> {
    let n = a.n_rows();
    let row_norms = a.row_inf_norms();
    if let Some(i) = row_norms.iter().position(|&r| r == 0.0) {
        return Err(Error::Singular { pivot: Some(i) });
    }
    let triplets: Vec<Triplet<usize, usize, f64>> =
        a.entries().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidInput(format!("sparse assembly failed: {e:?}")))?;
    let lu = csc.sp_lu().map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => {
            Error::Singular { pivot: Some(index) }
        }
        other => Error::InvalidInput(format!("sparse LU failed: {other:?}")),
    })?;
    // The supernodal kernel does not report numerically vanishing pivots;
    // probe with a solve and check the backward error instead.
    let probe: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
    let mut x = probe.clone();
    lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular { pivot: None });
    }
    let ax = a.matvec(&x)?;
    let resid = crate::vector::dist(&ax, &probe);
    let scale = row_norms.iter().cloned().fold(0.0, f64::max) * crate::vector::norm2(&x)
        + crate::vector::norm2(&probe);
    let backward = resid / scale;
    if backward > 1e-6 {
        return Err(Error::Singular { pivot: None });
    }
    Ok(Factorization {
        n,
        inner: Inner::SparseLu(Box::new(lu)),
        ill_conditioned: backward > 1e-10,
    })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> FactorKind {
        match self.inner {
            Inner::DenseCholesky(_) => FactorKind::CholeskyLike,
            _ => FactorKind::LuPartialPivot,
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.inner, Inner::SparseLu(_))
    }

    /// Set when the pivots (dense) or the probe backward error (sparse)
    /// suggest severe ill-conditioning.
    pub fn ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, rhs.len())?;
        Ok(match &self.inner {
            Inner::DenseLu(lu) => lu.solve(rhs),
            Inner::DenseCholesky(ch) => ch.solve(rhs),
            Inner::SparseLu(lu) => {
                let mut x = rhs.to_vec();
                lu.solve_in_place(MatMut::from_column_major_slice_mut(&mut x, self.n, 1));
                x
            }
        })
    }

    /// Solves `A^T x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, rhs.len())?;
        Ok(match &self.inner {
            Inner::DenseLu(lu) => lu.solve_transpose(rhs),
            Inner::DenseCholesky(ch) => ch.solve(rhs),
            Inner::SparseLu(lu) => {
                let mut x = rhs.to_vec();
                lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(
                    &mut x, self.n, 1,
                ));
                x
            }
        })
    }
}
