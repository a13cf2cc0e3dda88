//! Dense and sparse linear-algebra kernels used by the solvers.

mod dense;
mod factor;
mod lanczos;
pub mod mm;
mod spectral;

pub use factor::{factor, FactorKind, Factorization};
pub use spectral::{
    op_norm_2, op_norm_2_estimate, sigma_min, sigma_min_estimate, sym_eig_extremes,
    sym_eig_extremes_estimate, Estimate, EigExtremes,
};
pub(crate) use spectral::operator_norm_estimate;

use crate::error::{check_len, Error, Result};

/// Pivot threshold: a pivot is treated as exactly zero when
/// `|pivot| <= PIVOT_EPS * ||row||_inf`.
pub const PIVOT_EPS: f64 = 1e-14;

/// Compressed sparse rows with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    DenseRowMajor(Vec<f64>),
    SparseCompressed(Csr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    storage: Storage,
}

impl Matrix {
    pub fn dense(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        check_len(n_rows * n_cols, values.len())?;
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            storage: Storage::DenseRowMajor(values),
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            check_len(n_cols, r.len())?;
            values.extend_from_slice(r);
        }
        Self::dense(rows.len(), n_cols, values)
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    /// Dense diagonal matrix.
    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut values = vec![0.0; n * n];
        for (i, v) in d.iter().enumerate() {
            values[i * n + i] = *v;
        }
        Self {
            n_rows: n,
            n_cols: n,
            storage: Storage::DenseRowMajor(values),
        }
    }

    /// Sparse matrix from `(row, col, value)` triplets; duplicates are summed
    /// and explicit zeros kept out.
    pub fn sparse_from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput("non-finite matrix entry".into()));
            }
            t.push((i, j, v));
        }
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut csr = Csr {
            row_ptr,
            col_idx,
            values,
        };
        csr.drop_zeros();
        Ok(Self {
            n_rows,
            n_cols,
            storage: Storage::SparseCompressed(csr),
        })
    }

    /// Sparse matrix from CSR arrays, validated.
    pub fn sparse(n_rows: usize, n_cols: usize, csr: Csr) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        check_len(n_rows + 1, csr.row_ptr.len())?;
        check_len(csr.col_idx.len(), csr.values.len())?;
        if csr.row_ptr[0] != 0 || csr.row_ptr[n_rows] != csr.values.len() {
            return Err(Error::InvalidInput("inconsistent row pointers".into()));
        }
        for i in 0..n_rows {
            let (a, b) = (csr.row_ptr[i], csr.row_ptr[i + 1]);
            if a > b {
                return Err(Error::InvalidInput("row pointers must be nondecreasing".into()));
            }
            let cols = &csr.col_idx[a..b];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::InvalidInput(format!("bad column indices in row {i}")));
            }
        }
        if !csr.values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            storage: Storage::SparseCompressed(csr),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::SparseCompressed(_))
    }

    /// Stored nonzeros (all entries for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::DenseRowMajor(v) => v.len(),
            Storage::SparseCompressed(c) => c.values.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::DenseRowMajor(v) => v[i * self.n_cols + j],
            Storage::SparseCompressed(c) => {
                let cols = &c.col_idx[c.row_ptr[i]..c.row_ptr[i + 1]];
                match cols.binary_search(&j) {
                    Ok(k) => c.values[c.row_ptr[i] + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Row-major dense copy of the entries.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::DenseRowMajor(v) => v.clone(),
            Storage::SparseCompressed(c) => {
                let mut out = vec![0.0; self.n_rows * self.n_cols];
                for i in 0..self.n_rows {
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        out[i * self.n_cols + c.col_idx[k]] = c.values[k];
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            storage: Storage::DenseRowMajor(self.to_dense_values()),
        }
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        match &self.storage {
            Storage::DenseRowMajor(v) => {
                let nc = self.n_cols;
                Box::new(v.iter().enumerate().map(move |(k, x)| (k / nc, k % nc, *x)))
            }
            Storage::SparseCompressed(c) => Box::new((0..self.n_rows).flat_map(move |i| {
                (c.row_ptr[i]..c.row_ptr[i + 1]).map(move |k| (i, c.col_idx[k], c.values[k]))
            })),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_cols, x.len())?;
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        match &self.storage {
            Storage::DenseRowMajor(v) => {
                for (yi, row) in y.iter_mut().zip(v.chunks_exact(self.n_cols)) {
                    *yi = crate::vector::dot(row, x);
                }
            }
            Storage::SparseCompressed(c) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        s += c.values[k] * x[c.col_idx[k]];
                    }
                    *yi = s;
                }
            }
        }
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_rows, x.len())?;
        let mut y = vec![0.0; self.n_cols];
        self.matvec_transpose_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        match &self.storage {
            Storage::DenseRowMajor(v) => {
                for (xi, row) in x.iter().zip(v.chunks_exact(self.n_cols)) {
                    crate::vector::axpy(*xi, row, y);
                }
            }
            Storage::SparseCompressed(c) => {
                for (i, xi) in x.iter().enumerate() {
                    for k in c.row_ptr[i]..c.row_ptr[i + 1] {
                        y[c.col_idx[k]] += c.values[k] * xi;
                    }
                }
            }
        }
    }

    pub fn transpose(&self) -> Matrix {
        match &self.storage {
            Storage::DenseRowMajor(v) => {
                let mut out = vec![0.0; v.len()];
                for i in 0..self.n_rows {
                    for j in 0..self.n_cols {
                        out[j * self.n_rows + i] = v[i * self.n_cols + j];
                    }
                }
                Matrix {
                    n_rows: self.n_cols,
                    n_cols: self.n_rows,
                    storage: Storage::DenseRowMajor(out),
                }
            }
            Storage::SparseCompressed(_) => {
                let t: Vec<_> = self.entries().map(|(i, j, v)| (j, i, v)).collect();
                Matrix::sparse_from_triplets(self.n_cols, self.n_rows, &t)
                    .expect("transpose of a valid matrix is valid")
            }
        }
    }

    /// `s * self`
    pub fn scaled(&self, s: f64) -> Matrix {
        let storage = match &self.storage {
            Storage::DenseRowMajor(v) => Storage::DenseRowMajor(v.iter().map(|x| x * s).collect()),
            Storage::SparseCompressed(c) => Storage::SparseCompressed(Csr {
                row_ptr: c.row_ptr.clone(),
                col_idx: c.col_idx.clone(),
                values: c.values.iter().map(|x| x * s).collect(),
            }),
        };
        Matrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            storage,
        }
    }

    /// `self + alpha * I`; keeps the storage kind.
    pub fn add_identity(&self, alpha: f64) -> Matrix {
        assert!(self.is_square(), "add_identity needs a square matrix");
        let n = self.n_rows;
        match &self.storage {
            Storage::DenseRowMajor(v) => {
                let mut out = v.clone();
                for i in 0..n {
                    out[i * n + i] += alpha;
                }
                Matrix {
                    n_rows: n,
                    n_cols: n,
                    storage: Storage::DenseRowMajor(out),
                }
            }
            Storage::SparseCompressed(_) => {
                let mut t: Vec<_> = self.entries().collect();
                t.extend((0..n).map(|i| (i, i, alpha)));
                Matrix::sparse_from_triplets(n, n, &t).expect("valid sparse shift")
            }
        }
    }

    /// Largest absolute entry of each row.
    pub fn row_inf_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0_f64; self.n_rows];
        for (i, _, v) in self.entries() {
            out[i] = out[i].max(v.abs());
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0_f64, |m, (_, _, v)| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji| / max |a_ij|`, 0 for the zero matrix; infinite
    /// when not square.
    pub fn relative_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        match &self.storage {
            Storage::DenseRowMajor(v) => {
                let n = self.n_rows;
                for i in 0..n {
                    for j in (i + 1)..n {
                        worst = worst.max((v[i * n + j] - v[j * n + i]).abs());
                    }
                }
            }
            Storage::SparseCompressed(_) => {
                for (i, j, v) in self.entries() {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst / scale
    }
}

impl Csr {
    fn drop_zeros(&mut self) {
        let n_rows = self.row_ptr.len() - 1;
        let mut new_ptr = vec![0usize; n_rows + 1];
        let mut k_out = 0;
        for i in 0..n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.values[k] != 0.0 {
                    self.col_idx[k_out] = self.col_idx[k];
                    self.values[k_out] = self.values[k];
                    k_out += 1;
                }
            }
            new_ptr[i + 1] = k_out;
        }
        self.col_idx.truncate(k_out);
        self.values.truncate(k_out);
        self.row_ptr = new_ptr;
    }
}
