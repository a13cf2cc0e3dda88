//! Iteration engine shared by the PWLS and LSOCCP solvers.
//!
//! Both methods solve, at every step, a linear system whose matrix is an
//! affine function of the B-subdifferential element `V`:
//!
//! * PWLS:   `A(V) = T + V`
//! * LSOCCP: `A(V) = G V + I` with `G = beta M - I`
//!
//! Writing `V = alpha I + U C U^T` (see [`BSubdiffElement::shift_and_core`])
//! gives `A(V) = A0(alpha) + P C U^T`, where `A0` keeps the sparsity of the
//! data matrix and `P` is `U` (PWLS) or `G U` (LSOCCP). Dense problems
//! assemble `A(V)` explicitly. Sparse problems factor `A0` and apply the
//! rank-two correction with the Sherman-Morrison-Woodbury formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{factor, Factorization, Matrix, Storage};
use crate::soc::{self, BSubdiffElement, ConeRegion, TieBreakPolicy};
use crate::vector::{dot, norm2};

/// Structural tolerance for the V-fix-point comparison.
pub const V_FIXPOINT_TOL: f64 = 1e-12;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveStatus {
    SolutionFound,
    MaxIterations,
    /// The Newton matrix built from `V(x^k)` was singular; `iteration` is `k`.
    LinearSolveFailure { iteration: usize },
}

/// Starting point of the iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum X0Strategy {
    /// The point produced by one Newton step taken with `V = 0`:
    /// the solution of `T x = b` for PWLS, `-beta q` for LSOCCP.
    #[default]
    SolveLinear,
    Zero,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub x0_strategy: X0Strategy,
    pub tie_break: TieBreakPolicy,
    /// Compare the residual against `tol * (1 + ||rhs||)` instead of `tol`.
    pub relative_tol: bool,
    /// Keep every iterate in [`SolveReport::iterates`].
    pub record_iterates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 20,
            x0_strategy: X0Strategy::SolveLinear,
            tie_break: TieBreakPolicy::default(),
            relative_tol: false,
            record_iterates: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidInput(format!("tol must be non-negative, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Number of Newton steps taken.
    pub iterations: usize,
    pub final_x: Vec<f64>,
    /// Residual norms of `x^0, ..., x^iterations`.
    pub residual_history: Vec<f64>,
    /// Cone region of `x^0, ..., x^iterations`.
    pub region_history: Vec<ConeRegion>,
    pub stopped_by_v_fixpoint: bool,
    /// `x^0, ..., x^iterations` when requested in the options.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterates: Vec<Vec<f64>>,
}

impl SolveReport {
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::SolutionFound
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds x^0")
    }
}

/// The family of Newton matrices of one problem.
pub(crate) enum NewtonSystem<'a> {
    /// `T + V`
    Pwls { t: &'a Matrix },
    /// `G V + I`
    Lsoccp { g: &'a Matrix },
}

impl NewtonSystem<'_> {
    fn data(&self) -> &Matrix {
        match self {
            NewtonSystem::Pwls { t } => t,
            NewtonSystem::Lsoccp { g } => g,
        }
    }

    fn dim(&self) -> usize {
        self.data().n_rows()
    }

    /// `A0(alpha)`.
    fn base(&self, alpha: f64) -> Matrix {
        match self {
            NewtonSystem::Pwls { t } => t.add_identity(alpha),
            NewtonSystem::Lsoccp { g } => g.scaled(alpha).add_identity(1.0),
        }
    }

    /// Columns of `P` for the direction `w`.
    fn low_rank_cols(&self, w: &[f64]) -> [Vec<f64>; 2] {
        let n = self.dim();
        let mut u0 = vec![0.0; n];
        u0[0] = 1.0;
        let mut u1 = vec![0.0; n];
        u1[1..].copy_from_slice(w);
        match self {
            NewtonSystem::Pwls { .. } => [u0, u1],
            NewtonSystem::Lsoccp { g } => [
                g.matvec(&u0).expect("square"),
                g.matvec(&u1).expect("square"),
            ],
        }
    }

    /// `A(V) x`.
    pub(crate) fn apply(&self, v: &BSubdiffElement, x: &[f64]) -> Vec<f64> {
        let vx = soc::apply_bsubdiff(v, x).expect("dimension checked");
        match self {
            NewtonSystem::Pwls { t } => {
                let mut y = t.matvec(x).expect("square");
                y.iter_mut().zip(&vx).for_each(|(a, b)| *a += b);
                y
            }
            NewtonSystem::Lsoccp { g } => {
                let mut y = g.matvec(&vx).expect("square");
                y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
                y
            }
        }
    }

    /// Factors `A(V)`.
    fn prepare(&self, v: &BSubdiffElement) -> Result<Prepared> {
        let (alpha, core, w) = match v {
            BSubdiffElement::Identity => (1.0, None, None),
            BSubdiffElement::Zero => (0.0, None, None),
            BSubdiffElement::Structured { w, .. } => {
                let (alpha, core) = v.shift_and_core().expect("structured");
                (alpha, Some(core), Some(w.as_slice()))
            }
        };
        let a0 = self.base(alpha);
        let (core, w) = match (core, w) {
            (Some(c), Some(w)) => (c, w),
            _ => return Ok(Prepared::Direct(factor(&a0)?)),
        };
        let p = self.low_rank_cols(w);
        match a0.storage() {
            Storage::DenseRowMajor(_) => assemble(a0, &p, &core, w),
            Storage::SparseCompressed(_) => match woodbury(&a0, &p, core, w) {
                Err(Error::Singular { .. }) => assemble(a0.to_dense(), &p, &core, w),
                other => other,
            },
        }
    }

    /// Solves `A(V) x = rhs` followed by one step of iterative refinement.
    pub(crate) fn solve(&self, v: &BSubdiffElement, rhs: &[f64]) -> Result<Vec<f64>> {
        let f = self.prepare(v)?;
        let mut x = f.solve(rhs)?;
        let ax = self.apply(v, &x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let d = f.solve(&r)?;
        x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular { pivot: None })
        }
    }
}

/// A factored Newton matrix.
enum Prepared {
    Direct(Factorization),
    /// `(A0 + P C U^T)^{-1} = A0^{-1} - Y S^{-1} C U^T A0^{-1}` with
    /// `Y = A0^{-1} P` and `S = I + C U^T Y`.
    Woodbury {
        f: Factorization,
        y: [Vec<f64>; 2],
        s: [[f64; 2]; 2],
        det: f64,
        c: [[f64; 2]; 2],
        w: Vec<f64>,
    },
}

impl Prepared {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Prepared::Direct(f) => f.solve(rhs),
            Prepared::Woodbury { f, y, s, det, c, w } => {
                let z = f.solve(rhs)?;
                let t = ut(w, &z);
                let ct = [c[0][0] * t[0] + c[0][1] * t[1], c[1][0] * t[0] + c[1][1] * t[1]];
                let k0 = (s[1][1] * ct[0] - s[0][1] * ct[1]) / det;
                let k1 = (s[0][0] * ct[1] - s[1][0] * ct[0]) / det;
                Ok(z.iter()
                    .zip(y[0].iter().zip(&y[1]))
                    .map(|(zi, (a, b))| zi - k0 * a - k1 * b)
                    .collect())
            }
        }
    }
}

/// `U^T z = (z_1, <w, z_2>)`.
fn ut(w: &[f64], z: &[f64]) -> [f64; 2] {
    [z[0], dot(w, &z[1..])]
}

fn assemble(a0: Matrix, p: &[Vec<f64>; 2], c: &[[f64; 2]; 2], w: &[f64]) -> Result<Prepared> {
    let n = a0.n_rows();
    let mut a = a0.to_dense_values();
    for i in 0..n {
        // row i of P C
        let r0 = p[0][i] * c[0][0] + p[1][i] * c[1][0];
        let r1 = p[0][i] * c[0][1] + p[1][i] * c[1][1];
        let row = &mut a[i * n..(i + 1) * n];
        row[0] += r0;
        for (aij, wj) in row[1..].iter_mut().zip(w) {
            *aij += r1 * wj;
        }
    }
    Ok(Prepared::Direct(factor(&Matrix::dense(n, n, a)?)?))
}

fn woodbury(a0: &Matrix, p: &[Vec<f64>; 2], c: [[f64; 2]; 2], w: &[f64]) -> Result<Prepared> {
    let f = factor(a0)?;
    let y = [f.solve(&p[0])?, f.solve(&p[1])?];
    let g0 = ut(w, &y[0]);
    let g1 = ut(w, &y[1]);
    let uty = [[g0[0], g1[0]], [g0[1], g1[1]]];
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = f64::from(u8::from(i == j)) + c[i][0] * uty[0][j] + c[i][1] * uty[1][j];
        }
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let scale = (s[0][0] * s[1][1]).abs() + (s[0][1] * s[1][0]).abs();
    if !(det.abs() > 1e-13 * scale.max(1e-300)) || !y.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::Singular { pivot: None });
    }
    Ok(Prepared::Woodbury {
        f,
        y,
        s,
        det,
        c,
        w: w.to_vec(),
    })
}

/// Runs the undamped Newton iteration from `x0`.
///
/// `residual` maps an iterate to the residual vector of the equation being
/// solved; `rhs` is the constant right-hand side of every Newton system.
pub(crate) fn iterate(
    system: &NewtonSystem<'_>,
    rhs: &[f64],
    x0: Vec<f64>,
    opts: &SolveOptions,
    residual: impl Fn(&[f64]) -> Vec<f64>,
) -> SolveReport {
    let policy = &opts.tie_break;
    let threshold = if opts.relative_tol {
        opts.tol * (1.0 + norm2(rhs))
    } else {
        opts.tol
    };
    let region = |x: &[f64]| soc::classify_parts(x[0], norm2(&x[1..]), policy.boundary_eps.max(0.0));

    let mut report = SolveReport {
        status: SolveStatus::MaxIterations,
        iterations: 0,
        residual_history: vec![norm2(&residual(&x0))],
        region_history: vec![region(&x0)],
        stopped_by_v_fixpoint: false,
        iterates: if opts.record_iterates { vec![x0.clone()] } else { Vec::new() },
        final_x: x0,
    };
    let mut v = soc::bsubdiff_slice(&report.final_x, policy);

    for k in 0..opts.max_iter {
        let x = match system.solve(&v, rhs) {
            Ok(x) => x,
            Err(_) => {
                report.status = SolveStatus::LinearSolveFailure { iteration: k };
                return report;
            }
        };
        let r = norm2(&residual(&x));
        let v_next = soc::bsubdiff_slice(&x, policy);
        report.iterations = k + 1;
        report.residual_history.push(r);
        report.region_history.push(region(&x));
        if opts.record_iterates {
            report.iterates.push(x.clone());
        }
        report.final_x = x;
        if r <= threshold {
            report.status = SolveStatus::SolutionFound;
            report.stopped_by_v_fixpoint = v_next.same_as(&v, V_FIXPOINT_TOL);
            return report;
        }
        v = v_next;
    }
    report
}
