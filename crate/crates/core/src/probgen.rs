//! Seeded random instance generators.
//!
//! Every instance is a pure function of its [`GenSpec`]. Randomness comes
//! from ChaCha20 seeded with `GenSpec::seed`; each kind of draw reads its
//! own stream (`set_stream(site)`, see the `SITE_*` constants), so adding
//! draws at one site never shifts the numbers seen by another.

use std::collections::{BTreeMap, BTreeSet};

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{op_norm_2, sigma_min, Matrix};
use crate::lsoccp::LsoccpProblem;
use crate::pwls::PwlsProblem;
use crate::soc::{self, ConeRegion};
use crate::vector::norm2;

pub const SITE_MATRIX: u64 = 1;
pub const SITE_SCALE: u64 = 2;
pub const SITE_PLANTED: u64 = 3;
pub const SITE_SPECTRUM: u64 = 4;
pub const SITE_ROTATIONS: u64 = 5;
pub const SITE_RHS: u64 = 6;

pub const DEFAULT_DENSITY: f64 = 0.004;
pub const DEFAULT_TARGET_COND: f64 = 1e4;
pub const DEFAULT_TARGET_NORM: f64 = 0.3;
pub const DEFAULT_LSOCCP_EIG_RANGE: (f64, f64) = (1.0, 2.0);
/// Eigenvalue draws below this are redrawn so the SPD generator never
/// produces a matrix that is singular to working precision.
pub const MIN_SPD_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Dense,
    Sparse { density: f64 },
    SpdDense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub kind: GenKind,
    pub seed: u64,
    /// `sigma_max / sigma_min` of sparse instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_cond: Option<f64>,
    /// Closed eigenvalue interval for SPD matrices; both ends are attained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig_range: Option<(f64, f64)>,
    /// `||M - I||` of dense and sparse complementarity instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_norm: Option<f64>,
}

impl GenSpec {
    pub fn new(n: usize, kind: GenKind, seed: u64) -> Self {
        Self {
            n,
            kind,
            seed,
            target_cond: None,
            eig_range: None,
            target_norm: None,
        }
    }

    pub fn dense(n: usize, seed: u64) -> Self {
        Self::new(n, GenKind::Dense, seed)
    }

    pub fn sparse(n: usize, density: f64, seed: u64) -> Self {
        Self::new(n, GenKind::Sparse { density }, seed)
    }

    pub fn spd(n: usize, seed: u64) -> Self {
        Self::new(n, GenKind::SpdDense, seed)
    }

    fn check_n(&self, min: usize) -> Result<()> {
        if self.n < min {
            return Err(Error::InvalidSpec(format!("n must be at least {min}, got {}", self.n)));
        }
        Ok(())
    }
}

/// The RNG stream used at draw site `site`.
pub fn site_rng(seed: u64, site: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(site);
    r
}

/// Uniform on the open interval `(0, 1)`.
fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn uniform_sym(rng: &mut impl Rng, half_width: f64) -> f64 {
    rng.random_range(-half_width..half_width)
}

/// Draws a point strictly between the cone and its polar:
/// `x2` uniform in `(-10, 10)^{n-1}`, `t` uniform in `(0, 1)` and
/// `x1 = -||x2|| + 2 t ||x2||`.
pub fn gen_planted(n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidSpec("planted solutions need n >= 2".into()));
    }
    loop {
        let x2: Vec<f64> = (1..n).map(|_| uniform_sym(rng, 10.0)).collect();
        let nx = norm2(&x2);
        let t = open_unit(rng);
        let x1 = -nx + 2.0 * t * nx;
        if nx > 0.0 && soc::classify_parts(x1, nx, 0.0) == ConeRegion::Outside {
            let mut x = Vec::with_capacity(n);
            x.push(x1);
            x.extend(x2);
            return Ok(x);
        }
    }
}

fn with_planted(t: Matrix, seed: u64) -> Result<PwlsProblem> {
    let n = t.n_rows();
    let x = gen_planted(n, &mut site_rng(seed, SITE_PLANTED))?;
    let mut b = t.matvec(&x)?;
    b.iter_mut().zip(soc::projected(&x)).for_each(|(bi, pi)| *bi += pi);
    PwlsProblem::new(t, b)?.with_planted_solution(x)
}

/// Dispatches on `spec.kind`.
pub fn gen_pwls(spec: &GenSpec) -> Result<PwlsProblem> {
    match spec.kind {
        GenKind::Dense => gen_dense(spec),
        GenKind::Sparse { .. } => gen_sparse(spec),
        GenKind::SpdDense => gen_spd(spec),
    }
}

/// Dense `T` with uniform `(-10, 10)` entries, rescaled by
/// `2 / (sigma_min(T) u)` with `u` uniform in `(0, 1)`, so that
/// `||T^{-1}|| = u / 2 < 1/2`.
pub fn gen_dense(spec: &GenSpec) -> Result<PwlsProblem> {
    if spec.kind != GenKind::Dense {
        return Err(Error::InvalidSpec("gen_dense needs kind Dense".into()));
    }
    spec.check_n(2)?;
    let n = spec.n;
    let mut rng = site_rng(spec.seed, SITE_MATRIX);
    let raw: Vec<f64> = (0..n * n).map(|_| uniform_sym(&mut rng, 10.0)).collect();
    let t = Matrix::dense(n, n, raw)?;
    let smin = sigma_min(&t)?;
    if !(smin > 0.0) {
        return Err(Error::InvalidSpec("drawn matrix is singular".into()));
    }
    let u = open_unit(&mut site_rng(spec.seed, SITE_SCALE));
    with_planted(t.scaled(2.0 / (smin * u)), spec.seed)
}

/// Sorted-row sparse matrix under construction, with a column index.
struct GivensBuilder {
    rows: Vec<BTreeMap<usize, f64>>,
    cols: Vec<BTreeSet<usize>>,
    nnz: usize,
}

impl GivensBuilder {
    fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut rows = vec![BTreeMap::new(); n];
        let mut cols = vec![BTreeSet::new(); n];
        let mut nnz = 0;
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                rows[i].insert(i, v);
                cols[i].insert(i);
                nnz += 1;
            }
        }
        Self { rows, cols, nnz }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            if self.rows[i].remove(&j).is_some() {
                self.cols[j].remove(&i);
                self.nnz -= 1;
            }
        } else if self.rows[i].insert(j, v).is_none() {
            self.cols[j].insert(i);
            self.nnz += 1;
        }
    }

    /// Rows `i, j <- [c -s; s c] [row_i; row_j]`.
    fn rotate_rows(&mut self, i: usize, j: usize, c: f64, s: f64) {
        let keys: BTreeSet<usize> = self.rows[i].keys().chain(self.rows[j].keys()).copied().collect();
        for k in keys {
            let a = self.rows[i].get(&k).copied().unwrap_or(0.0);
            let b = self.rows[j].get(&k).copied().unwrap_or(0.0);
            self.set(i, k, c * a - s * b);
            self.set(j, k, s * a + c * b);
        }
    }

    /// Columns `i, j <- [col_i col_j] [c s; -s c]`.
    fn rotate_cols(&mut self, i: usize, j: usize, c: f64, s: f64) {
        let keys: BTreeSet<usize> = self.cols[i].union(&self.cols[j]).copied().collect();
        for k in keys {
            let a = self.rows[k].get(&i).copied().unwrap_or(0.0);
            let b = self.rows[k].get(&j).copied().unwrap_or(0.0);
            self.set(k, i, c * a - s * b);
            self.set(k, j, s * a + c * b);
        }
    }

    /// Alternates random row and column rotations until `target_nnz` is reached.
    fn sprinkle(&mut self, target_nnz: usize, rng: &mut impl Rng) {
        let n = self.rows.len();
        if n < 2 {
            return;
        }
        let mut left = true;
        while self.nnz < target_nnz {
            let i = rng.random_range(0..n);
            let j = loop {
                let j = rng.random_range(0..n);
                if j != i {
                    break j;
                }
            };
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let (s, c) = theta.sin_cos();
            if left {
                self.rotate_rows(i, j, c, s);
            } else {
                self.rotate_cols(i, j, c, s);
            }
            left = !left;
        }
    }

    fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(&j, &v)| (i, j, v)))
            .collect()
    }
}

fn check_density(n: usize, density: f64) -> Result<usize> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidSpec(format!("density must lie in (0, 1], got {density}")));
    }
    let target = (density * (n * n) as f64).round() as usize;
    if target < n {
        return Err(Error::InvalidSpec(format!(
            "density {density} is below the diagonal floor 1/n = {}",
            1.0 / n as f64
        )));
    }
    Ok(target)
}

/// Orthogonally equivalent to `diag(d)` with about `target_nnz` nonzeros.
fn givens_sparse(d: &[f64], target_nnz: usize, rng: &mut impl Rng) -> Result<Matrix> {
    let n = d.len();
    let mut g = GivensBuilder::diagonal(d);
    g.sprinkle(target_nnz, rng);
    Matrix::sparse_from_triplets(n, n, &g.triplets())
}

/// Sparse `T = Q_L diag(sigma) Q_R` with `Q_L`, `Q_R` products of random
/// Givens rotations, applied until the requested density is reached.
///
/// The singular values are uniform draws mapped affinely onto
/// `[2/u, target_cond * 2/u]` with `u` uniform in `(0, 1)`, so
/// `||T^{-1}|| = u / 2 < 1/2` and `cond(T) = target_cond`.
pub fn gen_sparse(spec: &GenSpec) -> Result<PwlsProblem> {
    let GenKind::Sparse { density } = spec.kind else {
        return Err(Error::InvalidSpec("gen_sparse needs kind Sparse".into()));
    };
    spec.check_n(2)?;
    let n = spec.n;
    let target = check_density(n, density)?;
    let cond = spec.target_cond.unwrap_or(DEFAULT_TARGET_COND);
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::InvalidSpec(format!("target_cond must be >= 1, got {cond}")));
    }
    let mut rng = site_rng(spec.seed, SITE_SPECTRUM);
    let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sigma_min = 2.0 / open_unit(&mut site_rng(spec.seed, SITE_SCALE));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let sigma: Vec<f64> = s
        .iter()
        .map(|v| sigma_min * (1.0 + (v - lo) / span * (cond - 1.0)))
        .collect();
    let t = givens_sparse(&sigma, target, &mut site_rng(spec.seed, SITE_ROTATIONS))?;
    with_planted(t, spec.seed)
}

/// Eigenvectors of the symmetric part of a uniform `(0, 1)` matrix.
fn random_orthogonal(n: usize, seed: u64) -> Result<Mat<f64>> {
    let mut rng = site_rng(seed, SITE_MATRIX);
    let a: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let s = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]));
    let eig = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidSpec(format!("eigendecomposition failed: {e:?}")))?;
    Ok(eig.U().to_owned())
}

/// `U diag(lambda) U^T`, exactly symmetric.
fn spectral_matrix(u: &Mat<f64>, lambda: &[f64]) -> Result<Matrix> {
    let n = lambda.len();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let x: f64 = (0..n).map(|k| u[(i, k)] * lambda[k] * u[(j, k)]).sum();
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    Matrix::dense(n, n, v)
}

fn draw_spectrum(n: usize, range: Option<(f64, f64)>, seed: u64) -> Result<Vec<f64>> {
    let mut rng = site_rng(seed, SITE_SPECTRUM);
    match range {
        None => Ok((0..n)
            .map(|_| loop {
                let l = open_unit(&mut rng);
                if l >= MIN_SPD_EIGENVALUE {
                    break l;
                }
            })
            .collect()),
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "eigenvalue range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
                )));
            }
            let mut l: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
            l[0] = lo;
            if n > 1 {
                l[n - 1] = hi;
            }
            Ok(l)
        }
    }
}

/// Symmetric positive definite `T = U diag(lambda) U^T`, with `U` the
/// eigenvectors of `(A + A^T)/2` for uniform `(0, 1)` entries of `A` and
/// `lambda` uniform in `(0, 1)` unless `spec.eig_range` is set.
pub fn gen_spd(spec: &GenSpec) -> Result<PwlsProblem> {
    if spec.kind != GenKind::SpdDense {
        return Err(Error::InvalidSpec("gen_spd needs kind SpdDense".into()));
    }
    spec.check_n(2)?;
    let u = random_orthogonal(spec.n, spec.seed)?;
    let lambda = draw_spectrum(spec.n, spec.eig_range, spec.seed)?;
    with_planted(spectral_matrix(&u, &lambda)?, spec.seed)
}

fn q_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = site_rng(seed, SITE_RHS);
    (0..n).map(|_| uniform_sym(&mut rng, 10.0)).collect()
}

/// Complementarity instances with uniform `(-10, 10)` entries in `q`.
///
/// * `Dense`: `M = I + S` with a uniform `(-1, 1)` matrix `S` scaled to
///   `||S|| = target_norm` (default 0.3).
/// * `Sparse`: `M = I + S` with `S` Givens-sprinkled from a diagonal of
///   singular values in `(0, target_norm]`.
/// * `SpdDense`: `M = U diag(lambda) U^T` with the eigenvalues spread over
///   `eig_range` (default `[1, 2]`), both ends attained.
pub fn gen_lsoccp(spec: &GenSpec) -> Result<LsoccpProblem> {
    spec.check_n(1)?;
    let n = spec.n;
    let target_norm = spec.target_norm.unwrap_or(DEFAULT_TARGET_NORM);
    if !(target_norm >= 0.0) || !target_norm.is_finite() {
        return Err(Error::InvalidSpec(format!("target_norm must be >= 0, got {target_norm}")));
    }
    let m = match spec.kind {
        GenKind::Dense => {
            let mut rng = site_rng(spec.seed, SITE_MATRIX);
            let raw: Vec<f64> = (0..n * n).map(|_| uniform_sym(&mut rng, 1.0)).collect();
            let s = Matrix::dense(n, n, raw)?;
            let norm = op_norm_2(&s);
            let factor = if norm > 0.0 { target_norm / norm } else { 0.0 };
            s.scaled(factor).add_identity(1.0)
        }
        GenKind::Sparse { density } => {
            let target = check_density(n, density)?;
            let mut rng = site_rng(spec.seed, SITE_SPECTRUM);
            let d: Vec<f64> = (0..n).map(|_| open_unit(&mut rng)).collect();
            let hi = d.iter().copied().fold(0.0, f64::max);
            let d: Vec<f64> = d.iter().map(|v| target_norm * v / hi).collect();
            givens_sparse(&d, target, &mut site_rng(spec.seed, SITE_ROTATIONS))?.add_identity(1.0)
        }
        GenKind::SpdDense => {
            let range = spec.eig_range.unwrap_or(DEFAULT_LSOCCP_EIG_RANGE);
            let u = random_orthogonal(n, spec.seed)?;
            let lambda = draw_spectrum(n, Some(range), spec.seed)?;
            spectral_matrix(&u, &lambda)?
        }
    };
    LsoccpProblem::new(m, q_vector(n, spec.seed))
}
