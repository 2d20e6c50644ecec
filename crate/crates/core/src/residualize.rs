//! Residualization: replace `Xᵢ` by the auxiliary residual `eᵢ` and refit.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{self, CvEstimate, VarianceConvention};
use crate::error::Result;
use crate::model::{auxiliary_regression, ols_fit, summarize, DesignMatrix, FitSummary};
use crate::raise::RaiseBasis;

#[derive(Debug, Clone)]
pub struct ResidualizedFit {
    pub index: usize,
    /// `X_O = [X₋ᵢ eᵢ]` with `eᵢ` in position `i`.
    pub design: DesignMatrix,
    /// `γ̂`, equal to `fit.coefficients`.
    pub gamma_hat: DVector<f64>,
    pub fit: FitSummary,
    /// `σ̂²·[tr((X₋ᵢᵗX₋ᵢ)⁻¹) + (eᵢᵗeᵢ)⁻¹]`: the MSE of `γ̂` about its own target `γ`.
    pub mse_estimate: f64,
    /// `mse_estimate + β̂ᵢ²·Σ_{j≠i} α̂ⱼ²`: the MSE of `γ̂` read as an estimator of `β`.
    pub mse_with_bias: f64,
    pub vif: Vec<f64>,
    pub condition_number: f64,
    /// Zero-mean column, so this is divergent up to rounding.
    pub cv_residualized: CvEstimate,
}

pub fn residualized_fit(design: &DesignMatrix, i: usize, response: &DVector<f64>) -> Result<ResidualizedFit> {
    let aux = auxiliary_regression(design, i)?;
    let ols = ols_fit(design, response)?;
    let x_o = design.with_column(i, &aux.residuals)?;
    let basis = RaiseBasis::from_aux(design, aux, response)?;
    let aux = &basis.aux;

    // The residual's coefficient is the OLS one; take it from the full fit so the two agree bit for bit.
    let gamma_hat = basis.gamma_minus.clone().insert_row(i, ols.coefficients[i]);
    let p = design.p();
    let cov = DMatrix::from_fn(p, p, |r, c| match (r == i, c == i) {
        (true, true) => 1.0 / aux.ssr,
        (false, false) => aux.reduced_inverse_gram[(aux.alpha_index(r), aux.alpha_index(c))],
        _ => 0.0,
    });
    let fit = summarize(x_o.columns(), response, gamma_hat.clone(), cov);

    let beta_i = ols.coefficients[i];
    let mse_estimate = ols.sigma2_hat * (aux.reduced_inverse_gram.trace() + 1.0 / aux.ssr);
    let mse_with_bias = mse_estimate + beta_i * beta_i * aux.alpha_hat.norm_squared();
    let cv_residualized = CvEstimate::of(&aux.residuals, VarianceConvention::Sample);
    Ok(ResidualizedFit {
        index: i,
        gamma_hat,
        mse_estimate,
        mse_with_bias,
        vif: diagnostics::vif(&x_o)?,
        condition_number: diagnostics::condition_number(&x_o)?.0,
        cv_residualized,
        fit,
        design: x_o,
    })
}
