//! Matrix-MSE comparison of linear estimators `β̂ = C·Y`.
//!
//! All verdicts are plug-in: the caller supplies `β` and `σ²`, normally `β̂` and `σ̂²`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, least_squares, spd_solve, symmetric_eigenvalues};
use crate::model::DesignMatrix;
use crate::raise::{m_lambda, raise_variable};

/// `S` counts as positive definite when its smallest eigenvalue exceeds this
/// fraction of its largest.
pub const PD_RELATIVE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimatorMap {
    pub label: String,
    /// `p × n`.
    pub c: DMatrix<f64>,
}

impl LinearEstimatorMap {
    /// `(XᵗX)⁻¹Xᵗ`, assembled from a QR solve with the identity as right-hand side.
    pub fn ols(design: &DesignMatrix) -> Result<Self> {
        Ok(Self {
            label: "OLS".into(),
            c: pseudo_inverse(design.columns())?,
        })
    }

    /// `M_λ⁻¹(XᵗX)⁻¹Xᵗ`: the raise estimator expressed in the original parameters.
    pub fn raise(design: &DesignMatrix, i: usize, lambda: f64) -> Result<Self> {
        let raised = raise_variable(design, i, lambda)?;
        let m = m_lambda(raised.aux(), lambda)?;
        Ok(Self {
            label: format!("raise({}, lambda={lambda})", design.labels()[i]),
            c: m.inverse(raised.aux()) * pseudo_inverse(design.columns())?,
        })
    }

    /// `(XᵗX + kI)⁻¹Xᵗ` on the raw design.
    pub fn ridge(design: &DesignMatrix, k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::NegativeK(k));
        }
        let x = design.columns();
        let p = x.ncols();
        let a = x.transpose() * x + DMatrix::identity(p, p) * k;
        Ok(Self {
            label: format!("ridge(k={k})"),
            c: spd_solve(&a, &x.transpose())?,
        })
    }

    /// `(CX − I)β`.
    pub fn bias(&self, x: &DMatrix<f64>, beta: &DVector<f64>) -> DVector<f64> {
        &self.c * (x * beta) - beta
    }

    /// `σ²·tr(CCᵗ) + ‖(CX − I)β‖²`.
    pub fn mse(&self, x: &DMatrix<f64>, beta: &DVector<f64>, sigma2: f64) -> f64 {
        sigma2 * self.c.norm_squared() + self.bias(x, beta).norm_squared()
    }
}

fn pseudo_inverse(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(x.ncols(), n);
    for j in 0..n {
        let e = DVector::from_fn(n, |r, _| if r == j { 1.0 } else { 0.0 });
        out.set_column(j, &least_squares(x, &e)?.coefficients);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    /// `S` positive definite and the inequality holds: the first estimator is preferred.
    PreferFirst,
    /// `S` positive definite but the inequality fails.
    NotPreferred,
    /// `S` not positive definite, so the criterion does not apply.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict {
    pub s: DMatrix<f64>,
    /// Descending.
    pub s_eigenvalues: Vec<f64>,
    pub s_positive_definite: bool,
    /// `βᵗ(C₁X − I)ᵗS⁻¹(C₁X − I)β`, when `S` is positive definite.
    pub inequality_lhs: Option<f64>,
    pub sigma2: f64,
    pub prefer_first: bool,
    pub status: VerdictStatus,
    pub mse_first: f64,
    pub mse_second: f64,
    /// `MSE(β̂₂) − MSE(β̂₁)`.
    pub theta_mse_diff: f64,
}

pub fn is_positive_definite(eigenvalues: &[f64]) -> bool {
    let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > PD_RELATIVE_FLOOR * max
}

pub fn mtxmse_preference(
    first: &LinearEstimatorMap,
    second: &LinearEstimatorMap,
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    sigma2: f64,
) -> Result<ComparisonVerdict> {
    let p = x.ncols();
    for (m, name) in [(first, "first"), (second, "second")] {
        if m.c.nrows() != p || m.c.ncols() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{name} estimator map is {}×{}, expected {p}×{}",
                m.c.nrows(),
                m.c.ncols(),
                x.nrows()
            )));
        }
    }
    if beta.len() != p {
        return Err(Error::DimensionMismatch(format!("beta has {} entries, expected {p}", beta.len())));
    }
    let s = linalg::symmetrize(&(&second.c * second.c.transpose() - &first.c * first.c.transpose()));
    let s_eigenvalues = symmetric_eigenvalues(&s);
    let s_positive_definite = is_positive_definite(&s_eigenvalues);
    let inequality_lhs = if s_positive_definite {
        let b = first.bias(x, beta);
        let sol = spd_solve(&s, &DMatrix::from_column_slice(p, 1, b.as_slice()))?;
        Some(b.dot(&sol.column(0)))
    } else {
        None
    };
    let prefer_first = inequality_lhs.is_some_and(|lhs| lhs < sigma2);
    let status = match (s_positive_definite, prefer_first) {
        (false, _) => VerdictStatus::Inconclusive,
        (true, true) => VerdictStatus::PreferFirst,
        (true, false) => VerdictStatus::NotPreferred,
    };
    let mse_first = first.mse(x, beta, sigma2);
    let mse_second = second.mse(x, beta, sigma2);
    Ok(ComparisonVerdict {
        s,
        s_eigenvalues,
        s_positive_definite,
        inequality_lhs,
        sigma2,
        prefer_first,
        status,
        mse_first,
        mse_second,
        theta_mse_diff: mse_second - mse_first,
    })
}

/// Right singular vectors and squared singular values of `X`: the Gram
/// eigensystem without forming `XᵗX`.
fn gram_spectrum(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let svd = x.clone().svd(false, true);
    let v = svd.v_t.expect("requested").transpose();
    let xi = svd.singular_values.iter().map(|s| s * s).collect();
    (v, xi)
}

fn spectral(v: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(values));
    linalg::symmetrize(&(v * d * v.transpose()))
}

fn check_positive_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveK(k))
    }
}

/// `(XᵗX)⁻¹ − (XᵗX + kI)⁻¹ = k·(XᵗX)⁻¹(XᵗX + kI)⁻¹`, built in the Gram eigenbasis
/// so the difference is never formed by cancellation.
pub fn ridge_vs_ols_s(design: &DesignMatrix, k: f64) -> Result<DMatrix<f64>> {
    check_positive_k(k)?;
    let (v, xi) = gram_spectrum(design.columns());
    let values: Vec<f64> = xi.iter().map(|&x| k / (x * (x + k))).collect();
    Ok(spectral(&v, &values))
}

/// Inverse of [`ridge_vs_ols_s`]: `(1/k)(XᵗX + kI)XᵗX`.
pub fn ridge_vs_ols_s_inverse(design: &DesignMatrix, k: f64) -> Result<DMatrix<f64>> {
    check_positive_k(k)?;
    let x = design.columns();
    let a = x.transpose() * x;
    let p = a.nrows();
    Ok(linalg::symmetrize(&((&a + DMatrix::identity(p, p) * k) * &a / k)))
}

/// `k(XᵗX + kI)⁻¹`, the closed form stated for the ridge versus successive-raise comparison.
/// `k = 0` gives the zero matrix.
pub fn ridge_vs_raise_s(design: &DesignMatrix, k: f64) -> Result<DMatrix<f64>> {
    let p = design.p();
    if k == 0.0 {
        return Ok(DMatrix::zeros(p, p));
    }
    check_positive_k(k)?;
    let (v, xi) = gram_spectrum(design.columns());
    let values: Vec<f64> = xi.iter().map(|&x| k / (x + k)).collect();
    Ok(spectral(&v, &values))
}

/// `C₂C₂ᵗ − C₁C₁ᵗ` obtained from the maps themselves when `X̃ᵗX̃ = XᵗX + kI`:
/// `(XᵗX + kI)⁻¹ − (XᵗX + kI)⁻¹XᵗX(XᵗX + kI)⁻¹ = k(XᵗX + kI)⁻²`.
pub fn ridge_vs_raise_s_from_maps(design: &DesignMatrix, k: f64) -> Result<DMatrix<f64>> {
    let p = design.p();
    if k == 0.0 {
        return Ok(DMatrix::zeros(p, p));
    }
    check_positive_k(k)?;
    let (v, xi) = gram_spectrum(design.columns());
    let values: Vec<f64> = xi.iter().map(|&x| k / ((x + k) * (x + k))).collect();
    Ok(spectral(&v, &values))
}
