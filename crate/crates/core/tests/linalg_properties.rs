use proptest::prelude::*;

use socnewton::linalg::{
    factor, op_norm_2, op_norm_2_estimate, sigma_min, sigma_min_estimate, sym_eig_extremes,
    sym_eig_extremes_estimate, Matrix,
};
use socnewton::vector::{dot, norm2};

/// Singular values by one-sided Jacobi rotations, sorted decreasingly.
fn jacobi_singular_values(a: &[f64], n: usize) -> Vec<f64> {
    // columns of A, stored contiguously
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| a[i * n + j]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (u, v) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    (*u, *v) = (c * *u - s * *v, s * *u + c * *v);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn inverse(a: &Matrix) -> Matrix {
    let n = a.n_rows();
    let f = factor(a).unwrap();
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, x) in f.solve(&e).unwrap().into_iter().enumerate() {
            v[i * n + j] = x;
        }
    }
    Matrix::dense(n, n, v).unwrap()
}

/// A well-conditioned square matrix: a random matrix plus a diagonal shift.
fn well_conditioned() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..30).prop_flat_map(|n| {
        (Just(n), prop::collection::vec(-1.0..1.0f64, n * n), 0.5..3.0f64).prop_map(|(n, mut v, s)| {
            for i in 0..n {
                v[i * n + i] += s * n as f64;
            }
            (n, v)
        })
    })
}

fn general() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..20).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0..10.0f64, n * n)))
}

fn symmetric() -> impl Strategy<Value = (usize, Vec<f64>)> {
    general().prop_map(|(n, v)| {
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = 0.5 * (v[i * n + j] + v[j * n + i]);
            }
        }
        (n, s)
    })
}

fn to_sparse(n: usize, v: &[f64]) -> Matrix {
    let t: Vec<(usize, usize, f64)> = (0..n * n)
        .filter(|k| v[*k] != 0.0)
        .map(|k| (k / n, k % n, v[k]))
        .collect();
    Matrix::sparse_from_triplets(n, n, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn factor_solve_round_trip((n, v) in well_conditioned(), b in prop::collection::vec(-10.0..10.0f64, 30)) {
        let a = Matrix::dense(n, n, v.clone()).unwrap();
        let b = &b[..n];
        for m in [a.clone(), to_sparse(n, &v)] {
            let x = factor(&m).unwrap().solve(b).unwrap();
            let ax = m.matvec(&x).unwrap();
            let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
            prop_assert!(norm2(&r) <= 1e-10 * (op_norm_2(&a) * norm2(&x) + norm2(b)));
        }
    }

    #[test]
    fn transpose_solve_round_trip((n, v) in well_conditioned(), b in prop::collection::vec(-10.0..10.0f64, 30)) {
        let a = Matrix::dense(n, n, v).unwrap();
        let b = &b[..n];
        let x = factor(&a).unwrap().solve_transpose(b).unwrap();
        let r: Vec<f64> = a.matvec_transpose(&x).unwrap().iter().zip(b).map(|(p, q)| p - q).collect();
        prop_assert!(norm2(&r) <= 1e-10 * (op_norm_2(&a) * norm2(&x) + norm2(b)));
    }

    #[test]
    fn norms_match_jacobi_svd((n, v) in general()) {
        let s = jacobi_singular_values(&v, n);
        let a = Matrix::dense(n, n, v).unwrap();
        let (smax, smin) = (s[0], s[n - 1]);
        prop_assert!((op_norm_2(&a) - smax).abs() <= 1e-10 * smax);
        prop_assert!((sigma_min(&a).unwrap() - smin).abs() <= 1e-9 * smax);
    }

    #[test]
    fn condition_number_from_inverse((n, v) in well_conditioned()) {
        let a = Matrix::dense(n, n, v.clone()).unwrap();
        let inv = inverse(&a);
        let cond = op_norm_2(&a) * op_norm_2(&inv);
        let s = jacobi_singular_values(&v, n);
        prop_assert!(cond >= 1.0 - 1e-12);
        prop_assert!((cond - s[0] / s[n - 1]).abs() <= 1e-8 * cond);
        let smin = sigma_min(&a).unwrap();
        prop_assert!((smin - 1.0 / op_norm_2(&inv)).abs() <= 1e-8 * smin);
    }

    #[test]
    fn eigen_extremes_bound_rayleigh_quotients((n, v) in symmetric(), x in prop::collection::vec(-1.0..1.0f64, 20)) {
        let a = Matrix::dense(n, n, v).unwrap();
        let (lo, hi) = sym_eig_extremes(&a).unwrap();
        let x = &x[..n];
        let xx = dot(x, x);
        prop_assume!(xx > 1e-6);
        let rq = dot(x, &a.matvec(x).unwrap()) / xx;
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        prop_assert!(lo - slack <= rq && rq <= hi + slack);
    }

    #[test]
    fn sparse_estimates_track_dense_values((n, v) in well_conditioned()) {
        let a = Matrix::dense(n, n, v.clone()).unwrap();
        let s = to_sparse(n, &v);
        let dense = op_norm_2(&a);
        let est = op_norm_2_estimate(&s);
        prop_assert!((est.value - dense).abs() <= (est.rel_accuracy + 1e-8) * dense);
        let dmin = sigma_min(&a).unwrap();
        let emin = sigma_min_estimate(&s).unwrap();
        prop_assert!((emin.value - dmin).abs() <= (emin.rel_accuracy + 1e-6) * dmin);
    }

    #[test]
    fn sparse_eigen_estimates_bracket_spectrum((n, v) in symmetric()) {
        let a = Matrix::dense(n, n, v.clone()).unwrap();
        let (lo, hi) = sym_eig_extremes(&a).unwrap();
        let e = sym_eig_extremes_estimate(&to_sparse(n, &v)).unwrap();
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        prop_assert!((e.lambda_min - lo).abs() <= (e.rel_accuracy + 1e-6) * scale);
        prop_assert!((e.lambda_max - hi).abs() <= (e.rel_accuracy + 1e-6) * scale);
    }
}

#[test]
fn jacobi_oracle_on_known_matrix() {
    // diag(3, 2) rotated on both sides
    let (c, s) = (0.6, 0.8);
    let r = [c, -s, s, c];
    let d = [3.0, 0.0, 0.0, 2.0];
    let mut rd = [0.0; 4];
    let mut a = [0.0; 4];
    for i in 0..2 {
        for j in 0..2 {
            rd[i * 2 + j] = (0..2).map(|k| r[i * 2 + k] * d[k * 2 + j]).sum();
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            a[i * 2 + j] = (0..2).map(|k| rd[i * 2 + k] * r[j * 2 + k]).sum();
        }
    }
    let sv = jacobi_singular_values(&a, 2);
    assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
}
