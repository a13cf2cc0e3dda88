//! Semi-smooth Newton method for the piecewise-linear system
//! `P_K(x) + T x = b`.
//!
//! Each step solves `[V(x^k) + T] x^{k+1} = b` with `V(x^k)` an element of
//! the B-subdifferential of the projection at `x^k`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{factor, sigma_min_estimate, sym_eig_extremes_estimate, Matrix};
use crate::newton::{self, NewtonSystem};
use crate::soc::projected;
use crate::vector::{all_finite, dist, norm2};

pub use crate::newton::{SolveOptions, SolveReport, SolveStatus, X0Strategy};

#[derive(Debug, Clone, PartialEq)]
pub struct PwlsProblem {
    t: Matrix,
    b: Vec<f64>,
    planted_solution: Option<Vec<f64>>,
}

impl PwlsProblem {
    pub fn new(t: Matrix, b: Vec<f64>) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::InvalidInput(format!(
                "T must be square, got {}x{}",
                t.n_rows(),
                t.n_cols()
            )));
        }
        if t.n_rows() == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        check_len(t.n_rows(), b.len())?;
        if !all_finite(&b) || !t.entries().all(|(_, _, v)| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entries".into()));
        }
        Ok(Self {
            t,
            b,
            planted_solution: None,
        })
    }

    pub fn with_planted_solution(mut self, x: Vec<f64>) -> Result<Self> {
        check_len(self.dim(), x.len())?;
        self.planted_solution = Some(x);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn t(&self) -> &Matrix {
        &self.t
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn planted_solution(&self) -> Option<&[f64]> {
        self.planted_solution.as_deref()
    }
}

/// `P_K(x) + T x - b` and its Euclidean norm.
pub fn residual(p: &PwlsProblem, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_len(p.dim(), x.len())?;
    let r = residual_unchecked(p, x);
    let n = norm2(&r);
    Ok((r, n))
}

fn residual_unchecked(p: &PwlsProblem, x: &[f64]) -> Vec<f64> {
    let mut r = p.t.matvec(x).expect("dimension checked");
    for ((ri, pi), bi) in r.iter_mut().zip(projected(x)).zip(&p.b) {
        *ri += pi - bi;
    }
    r
}

pub fn newton_solve(p: &PwlsProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let x0 = match &opts.x0_strategy {
        X0Strategy::SolveLinear => factor(&p.t)?.solve(&p.b)?,
        X0Strategy::Zero => vec![0.0; p.dim()],
        X0Strategy::Given(x) => {
            check_len(p.dim(), x.len())?;
            x.clone()
        }
    };
    let system = NewtonSystem::Pwls { t: &p.t };
    Ok(newton::iterate(&system, &p.b, x0, opts, |x| residual_unchecked(p, x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateClass {
    /// `||T^{-1}|| < 1`: the equation has exactly one solution.
    UniqueSolution,
    /// `||T^{-1}|| < 1/2`: Q-linear convergence from any start with rate
    /// `||T^{-1}|| / (1 - ||T^{-1}||)`.
    QLinear,
    /// T symmetric positive definite: every Newton matrix is nonsingular.
    SpdWellDefined,
    /// T symmetric positive definite with `||T^{-1}|| < 1`: Q-linear
    /// convergence with rate `||T^{-1}||`.
    SpdQLinear,
    NoGuarantee,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeCertificate {
    /// `||T^{-1}||_2`; infinite for singular T.
    pub inv_norm: f64,
    pub spd: bool,
    pub class: CertificateClass,
    pub rate_bound: Option<f64>,
    /// False when the spectral quantities are Lanczos estimates.
    pub exact: bool,
}

/// Classifies `p` by the convergence results that apply to it, taking the
/// strongest one: `SpdQLinear`, then `QLinear`, `UniqueSolution`,
/// `SpdWellDefined` and finally `NoGuarantee`.
pub fn certificate(p: &PwlsProblem) -> Result<GuaranteeCertificate> {
    let smin = sigma_min_estimate(&p.t)?;
    let inv_norm = if smin.value > 0.0 { 1.0 / smin.value } else { f64::INFINITY };
    let (spd, eig_exact) = match sym_eig_extremes_estimate(&p.t) {
        Ok(e) => (e.lambda_min > 0.0, e.exact),
        Err(Error::NotSymmetric(_)) => (false, true),
        Err(e) => return Err(e),
    };
    let (class, rate_bound) = if spd && inv_norm < 1.0 {
        (CertificateClass::SpdQLinear, Some(inv_norm))
    } else if inv_norm < 0.5 {
        (CertificateClass::QLinear, Some(inv_norm / (1.0 - inv_norm)))
    } else if inv_norm < 1.0 {
        (CertificateClass::UniqueSolution, None)
    } else if spd {
        (CertificateClass::SpdWellDefined, None)
    } else {
        (CertificateClass::NoGuarantee, None)
    };
    Ok(GuaranteeCertificate {
        inv_norm,
        spd,
        class,
        rate_bound,
        exact: smin.exact && eig_exact,
    })
}

/// Solves the equation by the fixed-point iteration
/// `x^{k+1} = T^{-1}(b - P_K(x^k))` from `x^0 = 0`, stopping once
/// `||x^{k+1} - x^k|| <= tol`.
///
/// The map is a contraction with factor `||T^{-1}||`, so this refuses
/// problems with `||T^{-1}|| >= 1`.
pub fn fixed_point_oracle(p: &PwlsProblem, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let smin = sigma_min_estimate(&p.t)?.value;
    let inv_norm = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    if !(inv_norm < 1.0) {
        return Err(Error::HypothesisNotMet(format!(
            "fixed-point map needs ||T^-1|| < 1, got {inv_norm}"
        )));
    }
    let f = factor(&p.t)?;
    let mut x = vec![0.0; p.dim()];
    let mut step = f64::INFINITY;
    for _ in 0..max_iter {
        let rhs: Vec<f64> = p.b.iter().zip(projected(&x)).map(|(b, px)| b - px).collect();
        let next = f.solve(&rhs)?;
        step = dist(&next, &x);
        x = next;
        if step <= tol {
            return Ok(x);
        }
    }
    Err(Error::OracleFailure {
        iterations: max_iter,
        last_step: step,
    })
}
