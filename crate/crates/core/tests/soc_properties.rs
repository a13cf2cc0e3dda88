use proptest::prelude::*;

use socnewton::linalg::{sym_eig_extremes, Matrix};
use socnewton::soc::{
    apply_bsubdiff, bsubdiff_element, bsubdiff_slice, classify, materialize_bsubdiff,
    moreau_decompose, project, projected, ConeBoundaryChoice, ConeRegion, OriginChoice,
    PolarBoundaryChoice, SocVector, TieBreakPolicy,
};
use socnewton::vector::{dist, dot, norm2};

/// A point with a prescribed region tag. `kind` picks the region, `tail` the
/// second block and `t` a free parameter in `[0, 1)`.
fn shaped(kind: u8, mut tail: Vec<f64>, t: f64, scale: f64) -> Vec<f64> {
    if tail.iter().all(|v| *v == 0.0) {
        tail[0] = 1.0;
    }
    let nx = norm2(&tail);
    let x1 = match kind % 6 {
        0 => nx + (t + 1e-3) * scale,
        1 => -nx - (t + 1e-3) * scale,
        2 => nx,
        3 => -nx,
        4 => {
            tail.iter_mut().for_each(|v| *v = 0.0);
            0.0
        }
        _ => (2.0 * t - 1.0) * 0.999 * nx,
    };
    let mut x = vec![x1];
    x.extend(tail);
    x
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    (0u8..6, 1usize..8, -3i32..4)
        .prop_flat_map(|(kind, m, e)| {
            let s = 10f64.powi(e);
            (Just(kind), prop::collection::vec(-s..s, m), 0.0..1.0f64, Just(s))
        })
        .prop_map(|(kind, tail, t, s)| shaped(kind, tail, t, s))
}

fn policy(n: usize) -> impl Strategy<Value = TieBreakPolicy> {
    let origin = prop_oneof![
        Just(OriginChoice::Zero),
        Just(OriginChoice::Identity),
        (prop::collection::vec(-1.0..1.0f64, n.saturating_sub(1)), -1.0..=1.0f64)
            .prop_map(|(w, rho)| OriginChoice::Structured { w, rho }),
    ];
    (any::<bool>(), any::<bool>(), origin).prop_map(|(c, p, origin)| TieBreakPolicy {
        cone_boundary: if c { ConeBoundaryChoice::Structured } else { ConeBoundaryChoice::Identity },
        polar_boundary: if p { PolarBoundaryChoice::Structured } else { PolarBoundaryChoice::Zero },
        origin,
        boundary_eps: 0.0,
    })
}

fn point_and_policy() -> impl Strategy<Value = (Vec<f64>, TieBreakPolicy)> {
    point().prop_flat_map(|x| {
        let n = x.len();
        (Just(x), policy(n))
    })
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, TieBreakPolicy)> {
    point_and_policy().prop_flat_map(|(x, pol)| {
        let n = x.len();
        let far = prop::collection::vec(-100.0..100.0f64, n).boxed();
        let xc = x.clone();
        let near = (prop::collection::vec(-1.0..1.0f64, n), -9i32..1)
            .prop_map(move |(d, e)| {
                let h = 10f64.powi(e) * norm2(&xc).max(1e-3);
                xc.iter().zip(&d).map(|(a, b)| a + h * b).collect::<Vec<_>>()
            })
            .boxed();
        (Just(x), prop_oneof![far, near], Just(pol))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn generated_points_hit_their_region(kind in 0u8..6, tail in prop::collection::vec(-5.0..5.0f64, 1..6), t in 0.0..1.0f64) {
        let x = shaped(kind, tail, t, 1.0);
        let want = [
            ConeRegion::InteriorCone,
            ConeRegion::InteriorPolar,
            ConeRegion::BoundaryCone,
            ConeRegion::BoundaryPolar,
            ConeRegion::Origin,
            ConeRegion::Outside,
        ][kind as usize];
        prop_assert_eq!(classify(&SocVector::new(x).unwrap(), 0.0).unwrap(), want);
    }

    #[test]
    fn projection_is_idempotent(x in point()) {
        let p = projected(&x);
        let pp = projected(&p);
        prop_assert!(dist(&pp, &p) <= 1e-12 * norm2(&p));
    }

    #[test]
    fn projection_lands_in_cone(x in point()) {
        let p = projected(&x);
        prop_assert!(p[0] >= norm2(&p[1..]) * (1.0 - 1e-12) - 1e-300);
    }

    #[test]
    fn projection_is_nonexpansive((x, y, _p) in pair()) {
        prop_assert!(dist(&projected(&x), &projected(&y)) <= (1.0 + 1e-12) * dist(&x, &y));
    }

    #[test]
    fn moreau_decomposition(x in point()) {
        let (plus, minus) = moreau_decompose(&SocVector::new(x.clone()).unwrap());
        let tol = 1e-10 * dot(&x, &x).max(1.0);
        let recon: Vec<f64> = plus.as_slice().iter().zip(minus.as_slice()).map(|(a, b)| a - b).collect();
        prop_assert!(dist(&recon, &x) <= tol);
        prop_assert!(dot(plus.as_slice(), minus.as_slice()).abs() <= tol);
    }

    #[test]
    fn slice_and_vector_forms_agree((x, pol) in point_and_policy()) {
        let v = SocVector::new(x.clone()).unwrap();
        prop_assert_eq!(project(&v).into_vec(), projected(&x));
        prop_assert_eq!(bsubdiff_element(&v, &pol), bsubdiff_slice(&x, &pol));
    }

    #[test]
    fn element_reproduces_projection((x, pol) in point_and_policy()) {
        let v = bsubdiff_slice(&x, &pol);
        let vx = apply_bsubdiff(&v, &x).unwrap();
        prop_assert!(dist(&vx, &projected(&x)) <= 1e-12 * norm2(&x));
    }

    #[test]
    fn element_spectrum_in_unit_interval((x, pol) in point_and_policy()) {
        let n = x.len();
        let m = materialize_bsubdiff(&bsubdiff_slice(&x, &pol), n).unwrap();
        let (lo, hi) = sym_eig_extremes(&Matrix::dense(n, n, m).unwrap()).unwrap();
        prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12, "eigenvalues [{}, {}]", lo, hi);
    }

    #[test]
    fn first_order_error_bound((x, y, pol) in pair()) {
        let v = bsubdiff_slice(&x, &pol);
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let vd = apply_bsubdiff(&v, &d).unwrap();
        let (px, py) = (projected(&x), projected(&y));
        let err: Vec<f64> = (0..x.len()).map(|i| py[i] - px[i] - vd[i]).collect();
        prop_assert!(norm2(&err) <= (1.0 + 1e-12) * norm2(&d));
    }

    #[test]
    fn materialize_matches_apply((x, y, pol) in pair()) {
        let n = x.len();
        let v = bsubdiff_slice(&x, &pol);
        let m = materialize_bsubdiff(&v, n).unwrap();
        let my: Vec<f64> = (0..n).map(|r| dot(&m[r * n..(r + 1) * n], &y)).collect();
        prop_assert!(dist(&my, &apply_bsubdiff(&v, &y).unwrap()) <= 1e-12 * norm2(&y));
    }

    #[test]
    fn materialized_element_is_symmetric((x, pol) in point_and_policy()) {
        let n = x.len();
        let m = materialize_bsubdiff(&bsubdiff_slice(&x, &pol), n).unwrap();
        for i in 0..n {
            for j in 0..i {
                prop_assert!((m[i * n + j] - m[j * n + i]).abs() <= 1e-15);
            }
        }
    }
}
