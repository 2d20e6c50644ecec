//! Exact rational normal-equations oracle on a small integer design.

#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use raisereg::diagnostics::vif;
use raisereg::model::{auxiliary_regression, ols_fit, DesignMatrix};
use raisereg::residualize::residualized_fit;

type Q = Ratio<i128>;

const A: [i64; 6] = [1, 3, 4, 7, 8, 11];
const B: [i64; 6] = [4, -2, 0, 2, 6, 5];
const Y: [i64; 6] = [3, 1, 7, 12, 10, 20];

fn q(v: i64) -> Q {
    Q::from_integer(v as i128)
}

fn to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

/// Solve `(XᵗX)b = Xᵗy` exactly by Gauss-Jordan elimination.
fn normal_equations(cols: &[Vec<Q>], y: &[Q]) -> Vec<Q> {
    let p = cols.len();
    let dot = |u: &[Q], v: &[Q]| u.iter().zip(v).fold(q(0), |acc, (a, b)| acc + *a * *b);
    let mut m: Vec<Vec<Q>> = (0..p)
        .map(|r| {
            let mut row: Vec<Q> = (0..p).map(|c| dot(&cols[r], &cols[c])).collect();
            row.push(dot(&cols[r], y));
            row
        })
        .collect();
    for k in 0..p {
        let pivot = (k..p).find(|&r| m[r][k] != q(0)).expect("nonsingular");
        m.swap(k, pivot);
        let d = m[k][k];
        for v in m[k].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != k {
                let f = m[r][k];
                let row_k = m[k].clone();
                for (v, w) in m[r].iter_mut().zip(row_k) {
                    *v -= f * w;
                }
            }
        }
    }
    m.into_iter().map(|row| row[p]).collect()
}

fn design() -> DesignMatrix {
    let x = DMatrix::from_fn(6, 3, |r, c| match c {
        0 => 1.0,
        1 => A[r] as f64,
        _ => B[r] as f64,
    });
    DesignMatrix::new(x, vec!["(Intercept)".into(), "a".into(), "b".into()]).unwrap()
}

fn response() -> DVector<f64> {
    DVector::from_iterator(6, Y.iter().map(|&v| v as f64))
}

fn exact(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&t| q(t)).collect()
}

fn assert_rel(got: f64, want: Q, what: &str) {
    let want = to_f64(want);
    let err = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
    assert!(err <= 1e-10, "{what}: {got} vs {want} (rel {err:e})");
}

#[test]
fn ols_matches_exact_solution() {
    let ones = vec![q(1); 6];
    let beta = normal_equations(&[ones, exact(&A), exact(&B)], &exact(&Y));
    let fit = ols_fit(&design(), &response()).unwrap();
    for j in 0..3 {
        assert_rel(fit.coefficients[j], beta[j], &format!("beta[{j}]"));
    }
}

#[test]
fn auxiliary_regression_and_vif_match_exact_solution() {
    let ones = vec![q(1); 6];
    let alpha = normal_equations(&[ones, exact(&B)], &exact(&A));
    let aux = auxiliary_regression(&design(), 1).unwrap();
    let e: Vec<Q> = (0..6).map(|t| q(A[t]) - alpha[0] - alpha[1] * q(B[t])).collect();
    for j in 0..2 {
        assert_rel(aux.alpha_hat[j], alpha[j], &format!("alpha[{j}]"));
    }
    for t in 0..6 {
        let tol = 1e-10 * A.iter().map(|v| v.abs()).max().unwrap() as f64;
        assert!((aux.residuals[t] - to_f64(e[t])).abs() <= tol, "e[{t}]");
    }
    let mean = Q::new(A.iter().sum::<i64>() as i128, 6);
    let tss = A.iter().fold(q(0), |acc, &v| acc + (q(v) - mean) * (q(v) - mean));
    let ssr = e.iter().fold(q(0), |acc, v| acc + *v * *v);
    let vif_a = tss / ssr;
    assert_rel(vif(&design()).unwrap()[0], vif_a, "VIF(a)");
}

#[test]
fn residualized_coefficients_match_exact_solution() {
    let ones = vec![q(1); 6];
    let alpha = normal_equations(&[ones.clone(), exact(&B)], &exact(&A));
    let e: Vec<Q> = (0..6).map(|t| q(A[t]) - alpha[0] - alpha[1] * q(B[t])).collect();
    let gamma = normal_equations(&[ones, e, exact(&B)], &exact(&Y));
    let r = residualized_fit(&design(), 1, &response()).unwrap();
    for j in 0..3 {
        assert_rel(r.gamma_hat[j], gamma[j], &format!("gamma[{j}]"));
    }
}
