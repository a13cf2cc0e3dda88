//! Geometry of the second-order (Lorentz) cone
//!
//! ```text
//! K = { (x1, x2) in R x R^{n-1} : ||x2|| <= x1 }
//! ```
//!
//! The cone is self-dual and its polar is `-K`. A point splits into the
//! spectral values `lambda1 = x1 - ||x2||` and `lambda2 = x1 + ||x2||`; the
//! projection clamps both at zero. The projection is smooth away from the
//! two boundary surfaces `x1 = +-||x2||`, and [`bsubdiff_element`] picks one
//! element of its B-subdifferential everywhere, stored in O(n) form.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::vector::{dot, norm2};

/// A point of R^n viewed as `(x1, x2)` with its tail norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SocVector {
    data: Vec<f64>,
    norm_x2: f64,
}

impl SocVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidInput("cone vectors need n >= 1".into()));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite cone vector entry".into()));
        }
        let norm_x2 = norm2(&data[1..]);
        Ok(Self { data, norm_x2 })
    }

    pub fn from_parts(x1: f64, x2: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(x2.len() + 1);
        data.push(x1);
        data.extend_from_slice(x2);
        Self::new(data)
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn x1(&self) -> f64 {
        self.data[0]
    }

    pub fn x2(&self) -> &[f64] {
        &self.data[1..]
    }

    pub fn norm_x2(&self) -> f64 {
        self.norm_x2
    }

    pub fn lambda1(&self) -> f64 {
        self.x1() - self.norm_x2
    }

    pub fn lambda2(&self) -> f64 {
        self.x1() + self.norm_x2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Which piece of the cone geometry a point lies in. The six tags partition R^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeRegion {
    InteriorCone,
    InteriorPolar,
    BoundaryCone,
    BoundaryPolar,
    Origin,
    Outside,
}

/// Choice at the cone boundary `x1 = ||x2||, x2 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConeBoundaryChoice {
    #[default]
    Identity,
    /// `1/2 [1 w^T; w 2I - ww^T]`, i.e. `rho = 1`.
    Structured,
}

/// Choice at the polar boundary `x1 = -||x2||, x2 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarBoundaryChoice {
    #[default]
    Zero,
    /// `1/2 [1 w^T; w ww^T]`, i.e. `rho = -1`.
    Structured,
}

/// Choice at the origin.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum OriginChoice {
    #[default]
    Zero,
    Identity,
    /// Structured element with direction `w` (normalized on use; the first
    /// tail axis when `w` is degenerate or of the wrong length) and `rho`
    /// clamped to `[-1, 1]`. Falls back to `Zero` when `n = 1`.
    Structured { w: Vec<f64>, rho: f64 },
}

/// How to pick an element of the B-subdifferential at nonsmooth points.
///
/// The default takes the identity on the cone boundary and the zero matrix
/// on the polar boundary and at the origin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TieBreakPolicy {
    pub cone_boundary: ConeBoundaryChoice,
    pub polar_boundary: PolarBoundaryChoice,
    pub origin: OriginChoice,
    /// Snap tolerance passed to [`classify`]; 0 means exact comparisons.
    pub boundary_eps: f64,
}

/// One element `V(x)` of the B-subdifferential of the projection.
///
/// `Structured` stands for the symmetric matrix
/// `1/2 [1 w^T; w H]` with `H = (1 + rho) I - rho w w^T`, `||w|| = 1`, `|rho| <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum BSubdiffElement {
    Identity,
    Zero,
    Structured { w: Vec<f64>, rho: f64 },
}

impl BSubdiffElement {
    /// Splits a structured element as `alpha I + U C U^T` with
    /// `U = [e1, (0, w)]`, `alpha = (1 + rho) / 2` and
    /// `C = 1/2 [-rho 1; 1 -rho]`.
    pub fn shift_and_core(&self) -> Option<(f64, [[f64; 2]; 2])> {
        match self {
            BSubdiffElement::Structured { rho, .. } => {
                let alpha = 0.5 * (1.0 + rho);
                Some((alpha, [[-0.5 * rho, 0.5], [0.5, -0.5 * rho]]))
            }
            _ => None,
        }
    }

    /// Structural equality: same kind, and for structured elements
    /// `||w - w'|| <= tol` and `|rho - rho'| <= tol`.
    pub fn same_as(&self, other: &BSubdiffElement, tol: f64) -> bool {
        match (self, other) {
            (BSubdiffElement::Identity, BSubdiffElement::Identity) => true,
            (BSubdiffElement::Zero, BSubdiffElement::Zero) => true,
            (
                BSubdiffElement::Structured { w: w1, rho: r1 },
                BSubdiffElement::Structured { w: w2, rho: r2 },
            ) => {
                w1.len() == w2.len()
                    && crate::vector::dist(w1, w2) <= tol
                    && (r1 - r2).abs() <= tol
            }
            _ => false,
        }
    }
}

/// Classifies `x`; with `boundary_eps > 0`, points with
/// `|x1 -+ ||x2||| <= boundary_eps * max(1, ||x||)` snap onto the boundary tags.
pub fn classify(x: &SocVector, boundary_eps: f64) -> Result<ConeRegion> {
    if !(boundary_eps >= 0.0) || !boundary_eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "boundary_eps must be finite and >= 0, got {boundary_eps}"
        )));
    }
    Ok(classify_parts(x.x1(), x.norm_x2(), boundary_eps))
}

pub(crate) fn classify_parts(x1: f64, nx: f64, boundary_eps: f64) -> ConeRegion {
    if boundary_eps > 0.0 {
        let tol = boundary_eps * x1.hypot(nx).max(1.0);
        if x1.abs() <= tol && nx <= tol {
            return ConeRegion::Origin;
        }
        if (x1 - nx).abs() <= tol {
            return ConeRegion::BoundaryCone;
        }
        if (x1 + nx).abs() <= tol {
            return ConeRegion::BoundaryPolar;
        }
    }
    if nx == 0.0 && x1 == 0.0 {
        ConeRegion::Origin
    } else if x1 > nx {
        ConeRegion::InteriorCone
    } else if x1 < -nx {
        ConeRegion::InteriorPolar
    } else if x1 == nx {
        ConeRegion::BoundaryCone
    } else if x1 == -nx {
        ConeRegion::BoundaryPolar
    } else {
        ConeRegion::Outside
    }
}

/// Euclidean projection onto K.
pub fn project(x: &SocVector) -> SocVector {
    let mut out = vec![0.0; x.dim()];
    project_parts(x.as_slice(), x.norm_x2(), &mut out);
    let norm_x2 = norm2(&out[1..]);
    SocVector { data: out, norm_x2 }
}

/// Slice form of [`project`]; `out` must have the length of `x`.
pub fn project_slice(x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    project_parts(x, norm2(&x[1..]), out);
}

/// Projection of `x` onto K as a new vector.
pub fn projected(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    project_slice(x, &mut out);
    out
}

fn project_parts(x: &[f64], nx: f64, out: &mut [f64]) {
    let x1 = x[0];
    if x1 >= nx {
        out.copy_from_slice(x);
    } else if x1 <= -nx {
        out.fill(0.0);
    } else {
        // -||x2|| < x1 < ||x2||, so nx > 0
        let c = 0.5 * (x1 + nx);
        out[0] = c;
        let s = c / nx;
        for (o, xi) in out[1..].iter_mut().zip(&x[1..]) {
            *o = s * xi;
        }
    }
}

/// Distance from `z` to K, `||z - P_K(z)||`.
pub fn dist_to_cone(z: &[f64]) -> f64 {
    let p = projected(z);
    crate::vector::dist(z, &p)
}

/// Returns `(P_K(x), P_K(-x))`, so that `x = P_K(x) - P_K(-x)` with the two
/// parts orthogonal.
pub fn moreau_decompose(x: &SocVector) -> (SocVector, SocVector) {
    let plus = project(x);
    let neg: Vec<f64> = x.as_slice().iter().map(|v| -v).collect();
    let minus = project(&SocVector {
        data: neg,
        norm_x2: x.norm_x2(),
    });
    #[cfg(debug_assertions)]
    {
        let scale = dot(x.as_slice(), x.as_slice()).max(1.0);
        let gap = dot(plus.as_slice(), minus.as_slice()).abs();
        debug_assert!(gap <= 1e-10 * scale, "Moreau parts not orthogonal: {gap}");
        for ((p, m), xi) in plus.as_slice().iter().zip(minus.as_slice()).zip(x.as_slice()) {
            debug_assert!((p - m - xi).abs() <= 1e-10 * scale.sqrt());
        }
    }
    (plus, minus)
}

/// Picks `V(x)`: the Jacobian where the projection is smooth and the
/// `policy` choice on the boundary surfaces and at the origin.
pub fn bsubdiff_element(x: &SocVector, policy: &TieBreakPolicy) -> BSubdiffElement {
    bsubdiff_parts(x.as_slice(), x.norm_x2(), policy)
}

/// Slice form of [`bsubdiff_element`].
pub fn bsubdiff_slice(x: &[f64], policy: &TieBreakPolicy) -> BSubdiffElement {
    bsubdiff_parts(x, norm2(&x[1..]), policy)
}

fn bsubdiff_parts(x: &[f64], nx: f64, policy: &TieBreakPolicy) -> BSubdiffElement {
    let eps = if policy.boundary_eps.is_finite() && policy.boundary_eps > 0.0 {
        policy.boundary_eps
    } else {
        0.0
    };
    let x1 = x[0];
    let unit = |rho: f64| BSubdiffElement::Structured {
        w: x[1..].iter().map(|v| v / nx).collect(),
        rho,
    };
    match classify_parts(x1, nx, eps) {
        ConeRegion::InteriorCone => BSubdiffElement::Identity,
        ConeRegion::InteriorPolar => BSubdiffElement::Zero,
        ConeRegion::Outside => unit((x1 / nx).clamp(-1.0, 1.0)),
        ConeRegion::BoundaryCone => match policy.cone_boundary {
            ConeBoundaryChoice::Identity => BSubdiffElement::Identity,
            ConeBoundaryChoice::Structured if nx > 0.0 => unit(1.0),
            ConeBoundaryChoice::Structured => BSubdiffElement::Identity,
        },
        ConeRegion::BoundaryPolar => match policy.polar_boundary {
            PolarBoundaryChoice::Zero => BSubdiffElement::Zero,
            PolarBoundaryChoice::Structured if nx > 0.0 => unit(-1.0),
            PolarBoundaryChoice::Structured => BSubdiffElement::Zero,
        },
        ConeRegion::Origin => match &policy.origin {
            OriginChoice::Zero => BSubdiffElement::Zero,
            OriginChoice::Identity => BSubdiffElement::Identity,
            OriginChoice::Structured { .. } if x.len() < 2 => BSubdiffElement::Zero,
            OriginChoice::Structured { w, rho } => {
                let m = x.len() - 1;
                let nw = if w.len() == m { norm2(w) } else { 0.0 };
                let w = if nw > 0.0 && nw.is_finite() {
                    w.iter().map(|v| v / nw).collect()
                } else {
                    let mut e = vec![0.0; m];
                    e[0] = 1.0;
                    e
                };
                let rho = if rho.is_finite() { rho.clamp(-1.0, 1.0) } else { 0.0 };
                BSubdiffElement::Structured { w, rho }
            }
        },
    }
}

/// Applies `V` to `y` without forming the matrix.
pub fn apply_bsubdiff(v: &BSubdiffElement, y: &[f64]) -> Result<Vec<f64>> {
    match v {
        BSubdiffElement::Identity => Ok(y.to_vec()),
        BSubdiffElement::Zero => Ok(vec![0.0; y.len()]),
        BSubdiffElement::Structured { w, rho } => {
            check_len(w.len() + 1, y.len())?;
            let y1 = y[0];
            let y2 = &y[1..];
            let wy = dot(w, y2);
            let mut out = Vec::with_capacity(y.len());
            out.push(0.5 * (y1 + wy));
            let a = 1.0 + rho;
            let b = y1 - rho * wy;
            out.extend(y2.iter().zip(w).map(|(yi, wi)| 0.5 * (a * yi + b * wi)));
            Ok(out)
        }
    }
}

/// The explicit symmetric `n x n` matrix of `v`, row-major.
pub fn materialize_bsubdiff(v: &BSubdiffElement, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    let mut m = vec![0.0; n * n];
    match v {
        BSubdiffElement::Identity => {
            for i in 0..n {
                m[i * n + i] = 1.0;
            }
        }
        BSubdiffElement::Zero => {}
        BSubdiffElement::Structured { w, rho } => {
            check_len(w.len() + 1, n)?;
            m[0] = 0.5;
            for i in 1..n {
                m[i] = 0.5 * w[i - 1];
                m[i * n] = 0.5 * w[i - 1];
                for j in 1..n {
                    let id = if i == j { 1.0 + rho } else { 0.0 };
                    m[i * n + j] = 0.5 * (id - rho * w[i - 1] * w[j - 1]);
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sv(v: &[f64]) -> SocVector {
        SocVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&sv(&[2.0, 1.0, 0.0]), 0.0).unwrap(), ConeRegion::InteriorCone);
        assert_eq!(classify(&sv(&[-3.0, 1.0, 1.0]), 0.0).unwrap(), ConeRegion::InteriorPolar);
        assert_eq!(classify(&sv(&[0.0, 2.0, 0.0]), 0.0).unwrap(), ConeRegion::Outside);
        assert_eq!(classify(&sv(&[1.0, 1.0, 0.0]), 0.0).unwrap(), ConeRegion::BoundaryCone);
        assert_eq!(classify(&sv(&[-1.0, 0.0, 1.0]), 0.0).unwrap(), ConeRegion::BoundaryPolar);
        assert_eq!(classify(&sv(&[0.0, 0.0]), 0.0).unwrap(), ConeRegion::Origin);
    }

    #[test]
    fn classify_snaps_with_tolerance() {
        let x = sv(&[1.0 + 1e-13, 1.0]);
        assert_eq!(classify(&x, 0.0).unwrap(), ConeRegion::InteriorCone);
        assert_eq!(classify(&x, 1e-12).unwrap(), ConeRegion::BoundaryCone);
        assert_eq!(classify(&sv(&[1e-14, -1e-14]), 1e-12).unwrap(), ConeRegion::Origin);
        assert!(classify(&x, -1.0).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SocVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SocVector::new(vec![]).is_err());
    }

    #[test]
    fn spectral_values() {
        let x = sv(&[1.0, 3.0, 4.0]);
        assert_eq!(x.norm_x2(), 5.0);
        assert_eq!(x.lambda1(), -4.0);
        assert_eq!(x.lambda2(), 6.0);
        let s = sv(&[7.0]);
        assert_eq!(s.norm_x2(), 0.0);
        assert_eq!(s.lambda1(), s.lambda2());
    }

    #[test]
    fn project_examples() {
        assert_eq!(project(&sv(&[2.0, 1.0, 0.0])).as_slice(), &[2.0, 1.0, 0.0]);
        assert_eq!(project(&sv(&[-3.0, 1.0, 1.0])).as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(project(&sv(&[0.0, 2.0])).as_slice(), &[1.0, 1.0]);
        // n = 1 is the half-line
        assert_eq!(project(&sv(&[-2.0])).as_slice(), &[0.0]);
        assert_eq!(project(&sv(&[2.5])).as_slice(), &[2.5]);
    }

    #[test]
    fn moreau_examples() {
        let (p, m) = moreau_decompose(&sv(&[0.0, 2.0]));
        assert_eq!(p.as_slice(), &[1.0, 1.0]);
        assert_eq!(m.as_slice(), &[1.0, -1.0]);
        let (p, m) = moreau_decompose(&sv(&[5.0, 0.0, 0.0]));
        assert_eq!(p.as_slice(), &[5.0, 0.0, 0.0]);
        assert_eq!(m.as_slice(), &[0.0, 0.0, 0.0]);
        let (p, m) = moreau_decompose(&sv(&[0.0, 0.0]));
        assert_eq!(p.as_slice(), &[0.0, 0.0]);
        assert_eq!(m.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn bsubdiff_examples() {
        let pol = TieBreakPolicy::default();
        assert_eq!(bsubdiff_element(&sv(&[2.0, 1.0, 0.0]), &pol), BSubdiffElement::Identity);
        assert_eq!(
            bsubdiff_element(&sv(&[0.0, 2.0]), &pol),
            BSubdiffElement::Structured { w: vec![1.0], rho: 0.0 }
        );
        assert_eq!(bsubdiff_element(&sv(&[-3.0, 1.0, 1.0]), &pol), BSubdiffElement::Zero);
        // default tie-breaks
        assert_eq!(bsubdiff_element(&sv(&[1.0, 1.0]), &pol), BSubdiffElement::Identity);
        assert_eq!(bsubdiff_element(&sv(&[-1.0, 1.0]), &pol), BSubdiffElement::Zero);
        assert_eq!(bsubdiff_element(&sv(&[0.0, 0.0]), &pol), BSubdiffElement::Zero);
    }

    #[test]
    fn bsubdiff_alternative_policies() {
        let pol = TieBreakPolicy {
            cone_boundary: ConeBoundaryChoice::Structured,
            polar_boundary: PolarBoundaryChoice::Structured,
            origin: OriginChoice::Structured { w: vec![0.0, 2.0], rho: 0.25 },
            boundary_eps: 0.0,
        };
        assert_eq!(
            bsubdiff_element(&sv(&[1.0, 0.0, -1.0]), &pol),
            BSubdiffElement::Structured { w: vec![0.0, -1.0], rho: 1.0 }
        );
        assert_eq!(
            bsubdiff_element(&sv(&[-2.0, 2.0, 0.0]), &pol),
            BSubdiffElement::Structured { w: vec![1.0, 0.0], rho: -1.0 }
        );
        assert_eq!(
            bsubdiff_element(&sv(&[0.0, 0.0, 0.0]), &pol),
            BSubdiffElement::Structured { w: vec![0.0, 1.0], rho: 0.25 }
        );
        // the structured origin choice has no meaning on the half-line
        assert_eq!(bsubdiff_element(&sv(&[0.0]), &pol), BSubdiffElement::Zero);
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply_bsubdiff(&BSubdiffElement::Identity, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        let s = BSubdiffElement::Structured { w: vec![1.0], rho: 0.0 };
        assert_eq!(apply_bsubdiff(&s, &[0.0, 2.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(apply_bsubdiff(&BSubdiffElement::Zero, &[3.0, -1.0, 2.0]).unwrap(), vec![0.0; 3]);
        assert!(apply_bsubdiff(&s, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn materialize_examples() {
        let id = materialize_bsubdiff(&BSubdiffElement::Identity, 3).unwrap();
        assert_eq!(id, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let s = BSubdiffElement::Structured { w: vec![1.0], rho: 0.0 };
        assert_eq!(materialize_bsubdiff(&s, 2).unwrap(), vec![0.5, 0.5, 0.5, 0.5]);
        for sign in [1.0, -1.0] {
            let s = BSubdiffElement::Structured { w: vec![sign], rho: -1.0 };
            assert_eq!(
                materialize_bsubdiff(&s, 2).unwrap(),
                vec![0.5, 0.5 * sign, 0.5 * sign, 0.5]
            );
        }
        assert!(materialize_bsubdiff(&s, 3).is_err());
    }

    #[test]
    fn shift_and_core_reassembles_matrix() {
        let w = vec![0.6, 0.0, -0.8];
        let v = BSubdiffElement::Structured { w: w.clone(), rho: 0.3 };
        let dense = materialize_bsubdiff(&v, 4).unwrap();
        let (alpha, c) = v.shift_and_core().unwrap();
        let mut u = [[0.0; 4]; 2];
        u[0][0] = 1.0;
        u[1][1..].copy_from_slice(&w);
        for i in 0..4 {
            for j in 0..4 {
                let mut e = if i == j { alpha } else { 0.0 };
                for a in 0..2 {
                    for b in 0..2 {
                        e += u[a][i] * c[a][b] * u[b][j];
                    }
                }
                assert_abs_diff_eq!(e, dense[i * 4 + j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn structural_comparison() {
        let a = BSubdiffElement::Structured { w: vec![1.0, 0.0], rho: 0.5 };
        let b = BSubdiffElement::Structured { w: vec![1.0, 1e-13], rho: 0.5 };
        assert!(a.same_as(&b, 1e-12));
        assert!(!a.same_as(&BSubdiffElement::Identity, 1e-12));
        assert!(BSubdiffElement::Zero.same_as(&BSubdiffElement::Zero, 0.0));
    }
}
