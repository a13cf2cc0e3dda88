//! Linear second-order cone complementarity problems
//!
//! ```text
//! find x in K  with  M x + q in K  and  <M x + q, x> = 0
//! ```
//!
//! solved through the equivalent equation
//! `(beta M - I) P_K(y) + y = -beta q` for some `beta > 0`. A solution `y*`
//! gives the complementarity solution `x* = P_K(y*)`, whose slack is
//! `M x* + q = P_K(-y*) / beta`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{
    factor, op_norm_2_estimate, operator_norm_estimate, sigma_min_estimate,
    sym_eig_extremes_estimate, Matrix, Storage,
};
use crate::newton::{self, NewtonSystem, SolveOptions, SolveReport, X0Strategy};
use crate::soc::{dist_to_cone, projected};
use crate::vector::{all_finite, dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct LsoccpProblem {
    m: Matrix,
    q: Vec<f64>,
}

impl LsoccpProblem {
    pub fn new(m: Matrix, q: Vec<f64>) -> Result<Self> {
        if !m.is_square() || m.n_rows() == 0 {
            return Err(Error::InvalidInput(format!(
                "M must be square and non-empty, got {}x{}",
                m.n_rows(),
                m.n_cols()
            )));
        }
        check_len(m.n_rows(), q.len())?;
        if !all_finite(&q) || !m.entries().all(|(_, _, v)| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entries".into()));
        }
        Ok(Self { m, q })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum BetaChoice {
    /// `beta = 1`.
    #[default]
    One,
    /// `beta* = 2 / (lambda_min + lambda_max)`; M must be symmetric positive definite.
    Auto,
    Explicit(f64),
}

/// The `beta` a choice stands for on problem `p`.
pub fn resolve_beta(p: &LsoccpProblem, choice: BetaChoice) -> Result<f64> {
    match choice {
        BetaChoice::One => Ok(1.0),
        BetaChoice::Explicit(b) if b > 0.0 && b.is_finite() => Ok(b),
        BetaChoice::Explicit(b) => Err(Error::InvalidBeta(format!("beta must be positive, got {b}"))),
        BetaChoice::Auto => beta_star(p)
            .map(|(b, _)| b)
            .map_err(|e| Error::InvalidBeta(format!("automatic beta: {e}"))),
    }
}

/// `beta* = 2 / (lambda_min + lambda_max)` and the rate bound
/// `r(beta*) = (lambda_max - lambda_min) / (2 lambda_min)` for symmetric
/// positive definite M.
pub fn beta_star(p: &LsoccpProblem) -> Result<(f64, f64)> {
    let e = sym_eig_extremes_estimate(&p.m).map_err(|e| match e {
        Error::NotSymmetric(a) => {
            Error::InvalidInput(format!("M is not symmetric (relative asymmetry {a:.3e})"))
        }
        other => other,
    })?;
    if !(e.lambda_min > 0.0) {
        return Err(Error::InvalidInput(format!(
            "M is not positive definite (lambda_min = {})",
            e.lambda_min
        )));
    }
    let beta = 2.0 / (e.lambda_min + e.lambda_max);
    let rate = (e.lambda_max - e.lambda_min) / (2.0 * e.lambda_min);
    Ok((beta, rate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementaritySolution {
    pub beta: f64,
    pub y_star: Vec<f64>,
    /// `P_K(y*)`
    pub x_star: Vec<f64>,
    /// `M x* + q`
    pub slack: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityCheck {
    pub ok: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

/// Checks `x in K`, `M x + q in K` and complementarity, all up to `tol`.
/// The gap test is scaled by `(1 + ||x||)(1 + ||M x + q||)`.
pub fn verify_complementarity(p: &LsoccpProblem, x: &[f64], tol: f64) -> Result<ComplementarityCheck> {
    check_len(p.dim(), x.len())?;
    let slack = slack_of(p, x);
    let primal_residual = dist_to_cone(x);
    let dual_residual = dist_to_cone(&slack);
    let gap = dot(&slack, x).abs();
    let ok = primal_residual <= tol
        && dual_residual <= tol
        && gap <= tol * (1.0 + norm2(x)) * (1.0 + norm2(&slack));
    Ok(ComplementarityCheck {
        ok,
        primal_residual,
        dual_residual,
        gap,
    })
}

fn slack_of(p: &LsoccpProblem, x: &[f64]) -> Vec<f64> {
    let mut s = p.m.matvec(x).expect("dimension checked");
    s.iter_mut().zip(&p.q).for_each(|(a, b)| *a += b);
    s
}

/// Runs the Newton iteration `[(beta M - I) V(y^k) + I] y^{k+1} = -beta q`
/// and recovers the complementarity solution from the last iterate.
///
/// `X0Strategy::SolveLinear` starts from `-beta q`.
pub fn lsoccp_newton_solve(
    p: &LsoccpProblem,
    beta: BetaChoice,
    opts: &SolveOptions,
) -> Result<(SolveReport, ComplementaritySolution)> {
    opts.validate()?;
    let beta = resolve_beta(p, beta)?;
    let rhs: Vec<f64> = p.q.iter().map(|v| -beta * v).collect();
    let y0 = match &opts.x0_strategy {
        X0Strategy::SolveLinear => rhs.clone(),
        X0Strategy::Zero => vec![0.0; p.dim()],
        X0Strategy::Given(y) => {
            check_len(p.dim(), y.len())?;
            y.clone()
        }
    };
    let g = p.m.scaled(beta).add_identity(-1.0);
    let residual = |y: &[f64]| {
        let mut r = g.matvec(&projected(y)).expect("square");
        for ((ri, yi), ci) in r.iter_mut().zip(y).zip(&rhs) {
            *ri += yi - ci;
        }
        r
    };
    let report = newton::iterate(&NewtonSystem::Lsoccp { g: &g }, &rhs, y0, opts, residual);

    let y_star = report.final_x.clone();
    let x_star = projected(&y_star);
    let slack = slack_of(p, &x_star);
    let solution = ComplementaritySolution {
        beta,
        primal_residual: dist_to_cone(&x_star),
        dual_residual: dist_to_cone(&slack),
        gap: dot(&slack, &x_star).abs(),
        y_star,
        x_star,
        slack,
    };
    Ok((report, solution))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsoccpCertificateClass {
    /// `||M - I|| < 1`: unique solution of the `beta = 1` equation.
    #[serde(rename = "Unique_MI")]
    UniqueMI,
    /// `||M^{-1} - I|| < 1`: unique solution of the `beta = 1` equation.
    #[serde(rename = "Unique_MinvI")]
    UniqueMinvI,
    /// M symmetric positive definite: every Newton matrix is nonsingular.
    SpdWellDefined,
    /// M symmetric positive definite, `||M|| ||M^{-1}|| < 3` and `beta`
    /// inside the admissible window: Q-linear convergence.
    BetaRateGuarantee,
    NoGuarantee,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsoccpCertificate {
    pub beta: f64,
    pub spd: bool,
    pub norm_m_minus_i: f64,
    /// `None` when M is singular.
    pub norm_minv_minus_i: Option<f64>,
    /// `||beta M - I||`
    pub norm_mbeta_minus_i: f64,
    /// Open interval `(||M^{-1}|| / 2, 3 / (2 ||M||))`.
    pub beta_range: Option<(f64, f64)>,
    /// `||M|| ||M^{-1}||`
    pub cond_product: Option<f64>,
    pub class: LsoccpCertificateClass,
    /// `||beta M - I|| / (1 - ||beta M - I||)` when the class implies
    /// Q-linear convergence and the value is below 1.
    pub rate_bound: Option<f64>,
    /// False when some spectral quantity is a Lanczos estimate.
    pub exact: bool,
}

/// Classifies `p` for the chosen `beta`. The first matching class wins:
/// `Unique_MI`, `BetaRateGuarantee`, `Unique_MinvI`, `SpdWellDefined`,
/// `NoGuarantee`.
pub fn lsoccp_certificate(p: &LsoccpProblem, beta: BetaChoice) -> Result<LsoccpCertificate> {
    let beta = resolve_beta(p, beta)?;
    let n = p.dim();
    let m_minus_i = op_norm_2_estimate(&p.m.add_identity(-1.0));
    let mbeta_minus_i = op_norm_2_estimate(&p.m.scaled(beta).add_identity(-1.0));
    let m_norm = op_norm_2_estimate(&p.m);
    let smin = sigma_min_estimate(&p.m)?;
    let mut exact = m_minus_i.exact && mbeta_minus_i.exact && m_norm.exact && smin.exact;

    let (spd, eig_exact) = match sym_eig_extremes_estimate(&p.m) {
        Ok(e) => (e.lambda_min > 0.0, e.exact),
        Err(Error::NotSymmetric(_)) => (false, true),
        Err(e) => return Err(e),
    };
    exact &= eig_exact;

    let (norm_minv_minus_i, beta_range, cond_product) = if smin.value > 0.0 {
        let inv_norm = 1.0 / smin.value;
        let f = factor(&p.m)?;
        let minv_minus_i = match p.m.storage() {
            Storage::DenseRowMajor(_) => {
                let mut cols = vec![0.0; n * n];
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let c = f.solve(&e)?;
                    e[j] = 0.0;
                    for i in 0..n {
                        cols[i * n + j] = c[i] - f64::from(u8::from(i == j));
                    }
                }
                op_norm_2_estimate(&Matrix::dense(n, n, cols)?).value
            }
            Storage::SparseCompressed(_) => {
                exact = false;
                let minus_id = |mut y: Vec<f64>, x: &[f64]| {
                    y.iter_mut().zip(x).for_each(|(a, b)| *a -= b);
                    y
                };
                operator_norm_estimate(
                    n,
                    |x| minus_id(f.solve(x).expect("dimension checked"), x),
                    |x| minus_id(f.solve_transpose(x).expect("dimension checked"), x),
                )
                .value
            }
        };
        (
            Some(minv_minus_i),
            Some((0.5 * inv_norm, 1.5 / m_norm.value)),
            Some(m_norm.value * inv_norm),
        )
    } else {
        (None, None, None)
    };

    let in_window = beta_range.is_some_and(|(lo, hi)| lo < beta && beta < hi);
    let class = if m_minus_i.value < 1.0 {
        LsoccpCertificateClass::UniqueMI
    } else if spd && cond_product.is_some_and(|c| c < 3.0) && in_window {
        LsoccpCertificateClass::BetaRateGuarantee
    } else if norm_minv_minus_i.is_some_and(|v| v < 1.0) {
        LsoccpCertificateClass::UniqueMinvI
    } else if spd {
        LsoccpCertificateClass::SpdWellDefined
    } else {
        LsoccpCertificateClass::NoGuarantee
    };
    let a = mbeta_minus_i.value;
    let rate_bound = match class {
        LsoccpCertificateClass::UniqueMI | LsoccpCertificateClass::BetaRateGuarantee
            if a < 0.5 =>
        {
            Some(a / (1.0 - a))
        }
        _ => None,
    };
    Ok(LsoccpCertificate {
        beta,
        spd,
        norm_m_minus_i: m_minus_i.value,
        norm_minv_minus_i,
        norm_mbeta_minus_i: a,
        beta_range,
        cond_product,
        class,
        rate_bound,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::SolveStatus;
    use approx::assert_abs_diff_eq;

    fn problem(m: Matrix, q: &[f64]) -> LsoccpProblem {
        LsoccpProblem::new(m, q.to_vec()).unwrap()
    }

    #[test]
    fn scaled_identity_takes_one_step() {
        let p = problem(Matrix::diag(&[2.0; 3]), &[1.0, -3.0, 0.5]);
        let (r, s) = lsoccp_newton_solve(&p, BetaChoice::Auto, &SolveOptions::default()).unwrap();
        assert_eq!(s.beta, 0.5);
        assert_eq!(r.status, SolveStatus::SolutionFound);
        assert_eq!(r.iterations, 1);
        assert_eq!(s.y_star, vec![-0.5, 1.5, -0.25]);
        assert!(verify_complementarity(&p, &s.x_star, 1e-12).unwrap().ok);
    }

    #[test]
    fn identity_with_interior_minus_q() {
        let p = problem(Matrix::identity(2), &[-1.0, 0.0]);
        let (r, s) = lsoccp_newton_solve(&p, BetaChoice::One, &SolveOptions::default()).unwrap();
        assert!(r.solved());
        assert_eq!(s.y_star, vec![1.0, 0.0]);
        assert_eq!(s.x_star, vec![1.0, 0.0]);
        assert_eq!(s.slack, vec![0.0, 0.0]);
        assert_eq!(s.gap, 0.0);
    }

    #[test]
    fn ill_scaled_diagonal() {
        let p = problem(Matrix::diag(&[1.0 / 3.0, 3.0]), &[1.0, 0.0]);
        let (b, rate) = beta_star(&p).unwrap();
        assert_abs_diff_eq!(b, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(rate, 4.0, epsilon = 1e-12);
        let (r, s) = lsoccp_newton_solve(&p, BetaChoice::Auto, &SolveOptions::default()).unwrap();
        assert!(r.solved());
        assert!(verify_complementarity(&p, &s.x_star, 1e-9).unwrap().ok);

        let c = lsoccp_certificate(&p, BetaChoice::Auto).unwrap();
        assert_abs_diff_eq!(c.norm_m_minus_i, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.norm_minv_minus_i.unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.cond_product.unwrap(), 9.0, epsilon = 1e-12);
        assert_eq!(c.class, LsoccpCertificateClass::SpdWellDefined);
        assert_eq!(c.rate_bound, None);
    }

    #[test]
    fn beta_star_examples() {
        let (b, r) = beta_star(&problem(Matrix::diag(&[4.0; 3]), &[0.0; 3])).unwrap();
        assert_abs_diff_eq!(b, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
        let (b, r) = beta_star(&problem(Matrix::diag(&[1.0, 3.0]), &[0.0; 2])).unwrap();
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-15);
        let ns = problem(Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap(), &[0.0; 2]);
        assert!(matches!(beta_star(&ns), Err(Error::InvalidInput(_))));
        let indef = problem(Matrix::diag(&[1.0, -1.0]), &[0.0; 2]);
        assert!(matches!(beta_star(&indef), Err(Error::InvalidInput(_))));
        assert!(matches!(
            lsoccp_newton_solve(&indef, BetaChoice::Auto, &SolveOptions::default()),
            Err(Error::InvalidBeta(_))
        ));
        assert!(matches!(resolve_beta(&indef, BetaChoice::Explicit(0.0)), Err(Error::InvalidBeta(_))));
    }

    #[test]
    fn certificate_examples() {
        let c = lsoccp_certificate(&problem(Matrix::diag(&[1.3; 2]), &[0.0; 2]), BetaChoice::One)
            .unwrap();
        assert_eq!(c.class, LsoccpCertificateClass::UniqueMI);
        assert_abs_diff_eq!(c.rate_bound.unwrap(), 0.3 / 0.7, epsilon = 1e-12);

        let c = lsoccp_certificate(
            &problem(Matrix::diag(&[2.0; 2]), &[0.0; 2]),
            BetaChoice::Explicit(0.5),
        )
        .unwrap();
        let (lo, hi) = c.beta_range.unwrap();
        assert_abs_diff_eq!(lo, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(c.cond_product.unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(c.class, LsoccpCertificateClass::BetaRateGuarantee);
        assert_eq!(c.rate_bound, Some(0.0));

        // outside the window the SPD path still applies
        let c = lsoccp_certificate(
            &problem(Matrix::diag(&[2.0; 2]), &[0.0; 2]),
            BetaChoice::Explicit(0.8),
        )
        .unwrap();
        assert_eq!(c.class, LsoccpCertificateClass::UniqueMinvI);

        let skew = Matrix::from_rows(&[&[0.0, 3.0], &[-3.0, 0.0]]).unwrap();
        let c = lsoccp_certificate(&problem(skew, &[0.0; 2]), BetaChoice::One).unwrap();
        assert_eq!(c.class, LsoccpCertificateClass::NoGuarantee);
    }

    #[test]
    fn verify_examples() {
        let p = problem(Matrix::identity(2), &[1.0, 0.5]);
        let c = verify_complementarity(&p, &[0.0, 0.0], 1e-12).unwrap();
        assert!(c.ok);
        let c = verify_complementarity(&p, &[0.0, 2.0], 1e-12).unwrap();
        assert!(!c.ok);
        assert_abs_diff_eq!(c.primal_residual, 2f64.sqrt(), epsilon = 1e-15);
        let p = problem(Matrix::identity(2), &[-1.0, 0.0]);
        let c = verify_complementarity(&p, &[1.0, 0.0], 1e-12).unwrap();
        assert!(c.ok);
        assert_eq!((c.primal_residual, c.dual_residual, c.gap), (0.0, 0.0, 0.0));
    }
}
