//! Raise regression: replace `Xᵢ` by `X̃ᵢ = Xᵢ + λ·eᵢ` and refit.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{self, CvEstimate, VarianceConvention};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::model::{auxiliary_regression, ols_fit, summarize, AuxiliaryRegression, DesignMatrix, FitSummary};

/// Upper end and step of the default λ grid for curves.
pub const DEFAULT_LAMBDA_MAX: f64 = 40.0;
pub const DEFAULT_LAMBDA_STEP: f64 = 0.1;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeLambda(lambda))
    }
}

/// `0, step, 2·step, …` up to `max` inclusive. Points are `k·step`, not accumulated sums.
pub fn lambda_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step {step} must be positive")));
    }
    check_lambda(max)?;
    let count = (max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}

pub fn default_lambda_grid() -> Vec<f64> {
    lambda_grid(DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_STEP).expect("valid default grid")
}

/// A design with column `i` raised by `λ`, plus where it came from.
#[derive(Debug, Clone)]
pub struct RaisedDesign {
    base: DesignMatrix,
    aux: AuxiliaryRegression,
    lambda: f64,
    design: DesignMatrix,
}

impl RaisedDesign {
    pub fn base(&self) -> &DesignMatrix {
        &self.base
    }

    pub fn aux(&self) -> &AuxiliaryRegression {
        &self.aux
    }

    pub fn index(&self) -> usize {
        self.aux.index
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn raised_column(&self) -> DVector<f64> {
        self.design.column(self.index())
    }
}

pub fn raise_variable(design: &DesignMatrix, i: usize, lambda: f64) -> Result<RaisedDesign> {
    check_lambda(lambda)?;
    let aux = auxiliary_regression(design, i)?;
    raise_with(design, aux, lambda)
}

fn raise_with(design: &DesignMatrix, aux: AuxiliaryRegression, lambda: f64) -> Result<RaisedDesign> {
    let raised = design.column(aux.index) + &aux.residuals * lambda;
    let new_design = design.with_column(aux.index, &raised)?;
    Ok(RaisedDesign {
        base: design.clone(),
        aux,
        lambda,
        design: new_design,
    })
}

/// λ-independent pieces of the closed-form raise estimator.
#[derive(Debug, Clone)]
pub struct RaiseBasis {
    pub aux: AuxiliaryRegression,
    /// `γ̂₋ᵢ = (X₋ᵢᵗX₋ᵢ)⁻¹X₋ᵢᵗY`.
    pub gamma_minus: DVector<f64>,
    /// `eᵢᵗY / eᵢᵗeᵢ`, which is also the OLS `β̂ᵢ`.
    pub beta_i: f64,
}

impl RaiseBasis {
    pub fn new(design: &DesignMatrix, i: usize, response: &DVector<f64>) -> Result<Self> {
        let aux = auxiliary_regression(design, i)?;
        Self::from_aux(design, aux, response)
    }

    pub fn from_aux(design: &DesignMatrix, aux: AuxiliaryRegression, response: &DVector<f64>) -> Result<Self> {
        let reduced = crate::linalg::drop_column(design.columns(), aux.index);
        let gamma_minus = least_squares(&reduced, response)?.coefficients;
        let beta_i = aux.residuals.dot(response) / aux.ssr;
        Ok(Self {
            aux,
            gamma_minus,
            beta_i,
        })
    }

    pub fn index(&self) -> usize {
        self.aux.index
    }

    /// `β̂(λ)` in design order.
    pub fn coefficients(&self, lambda: f64) -> DVector<f64> {
        let i = self.index();
        let raised = self.beta_i / (1.0 + lambda);
        let minus = &self.gamma_minus - &self.aux.alpha_hat * raised;
        minus.insert_row(i, raised)
    }

    /// Raised `(X̃ᵗX̃)⁻¹` from the partitioned inverse.
    pub fn covariance_scale(&self, lambda: f64) -> DMatrix<f64> {
        let i = self.index();
        let c = 1.0 / ((1.0 + lambda).powi(2) * self.aux.ssr);
        let alpha = &self.aux.alpha_hat;
        let minus = &self.aux.reduced_inverse_gram + alpha * alpha.transpose() * c;
        let p = minus.nrows() + 1;
        DMatrix::from_fn(p, p, |r, col| match (r == i, col == i) {
            (true, true) => c,
            (true, false) => -alpha[self.aux.alpha_index(col)] * c,
            (false, true) => -alpha[self.aux.alpha_index(r)] * c,
            (false, false) => minus[(self.aux.alpha_index(r), self.aux.alpha_index(col))],
        })
    }

    /// `‖γ̂₋ᵢ‖`, the norm curve's horizontal asymptote.
    pub fn norm_asymptote(&self) -> f64 {
        self.gamma_minus.norm()
    }
}

/// Plug-in MSE of the raise estimator as a function of `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub index: usize,
    pub h: f64,
    pub lambda_min: f64,
    pub sigma2_hat: f64,
    pub beta_i: f64,
    pub ssr_i: f64,
    /// `tr((X₋ᵢᵗX₋ᵢ)⁻¹)`.
    pub trace_reduced: f64,
    /// `Σ_{j≠i} α̂ⱼ²`, intercept included.
    pub alpha_norm_sq: f64,
    pub ols_mse: f64,
}

impl MseCurve {
    pub fn mse_at(&self, lambda: f64) -> f64 {
        let bias = (1.0 + self.alpha_norm_sq) * self.beta_i * self.beta_i;
        self.sigma2_hat * self.trace_reduced + bias * (lambda * lambda + self.h) / (1.0 + lambda).powi(2)
    }

    pub fn mse_min(&self) -> f64 {
        self.mse_at(self.lambda_min)
    }

    /// Value as `λ → ∞`.
    pub fn limit(&self) -> f64 {
        self.sigma2_hat * self.trace_reduced + (1.0 + self.alpha_norm_sq) * self.beta_i * self.beta_i
    }

    /// When `λ_min < 1`, every `λ` up to this bound keeps the MSE at or below OLS.
    pub fn guarantee_bound(&self) -> Option<f64> {
        if self.lambda_min >= 1.0 {
            return None;
        }
        let denom = self.beta_i * self.beta_i * self.ssr_i - self.sigma2_hat;
        (denom > 0.0).then(|| 2.0 * self.sigma2_hat / denom)
    }
}

pub fn raise_mse_curve(ols: &FitSummary, aux: &AuxiliaryRegression) -> Result<MseCurve> {
    let beta_i = ols.coefficients[aux.index];
    if beta_i == 0.0 {
        return Err(Error::ZeroCoefficient);
    }
    let h = ols.sigma2_hat / (beta_i * beta_i * aux.ssr);
    Ok(MseCurve {
        index: aux.index,
        h,
        lambda_min: h,
        sigma2_hat: ols.sigma2_hat,
        beta_i,
        ssr_i: aux.ssr,
        trace_reduced: aux.reduced_inverse_gram.trace(),
        alpha_norm_sq: aux.alpha_hat.norm_squared(),
        ols_mse: ols.ols_mse(),
    })
}

/// `M_λ`: identity except column `i`, so that `X̃ = X·M_λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MLambda {
    pub index: usize,
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
}

impl MLambda {
    /// Closed-form inverse: column `i` holds `λα̂ⱼ/(1+λ)` off the diagonal and `1/(1+λ)` on it.
    pub fn inverse(&self, aux: &AuxiliaryRegression) -> DMatrix<f64> {
        let i = self.index;
        let p = self.matrix.nrows();
        let d = 1.0 + self.lambda;
        let mut inv = DMatrix::identity(p, p);
        for j in 0..p {
            inv[(j, i)] = if j == i {
                1.0 / d
            } else {
                self.lambda * aux.alpha_for(j) / d
            };
        }
        inv
    }
}

pub fn m_lambda(aux: &AuxiliaryRegression, lambda: f64) -> Result<MLambda> {
    check_lambda(lambda)?;
    let i = aux.index;
    let p = aux.alpha_hat.len() + 1;
    let mut matrix = DMatrix::identity(p, p);
    for j in 0..p {
        matrix[(j, i)] = if j == i { 1.0 + lambda } else { -lambda * aux.alpha_for(j) };
    }
    Ok(MLambda { index: i, lambda, matrix })
}

/// Raised fit with its diagnostics.
#[derive(Debug, Clone)]
pub struct RaiseFit {
    pub index: usize,
    pub lambda: f64,
    pub fit: FitSummary,
    pub vif: Vec<f64>,
    pub condition_number: f64,
    /// `CV(X̃ᵢ)` with the `n − 1` divisor.
    pub cv_raised: CvEstimate,
    pub norm: f64,
    pub mse_estimate: f64,
}

/// Fit the raised model through the closed-form estimator and partitioned inverse.
pub fn raise_fit(raised: &RaisedDesign, response: &DVector<f64>) -> Result<RaiseFit> {
    let basis = RaiseBasis::from_aux(raised.base(), raised.aux().clone(), response)?;
    let ols = ols_fit(raised.base(), response)?;
    let lambda = raised.lambda();
    let fit = summarize(
        raised.design().columns(),
        response,
        basis.coefficients(lambda),
        basis.covariance_scale(lambda),
    );
    let mse_estimate = match raise_mse_curve(&ols, raised.aux()) {
        Ok(curve) => curve.mse_at(lambda),
        Err(Error::ZeroCoefficient) => ols.ols_mse(),
        Err(e) => return Err(e),
    };
    Ok(RaiseFit {
        index: raised.index(),
        lambda,
        norm: fit.coefficient_norm(),
        vif: vif_raised(raised)?,
        condition_number: cn_raised(raised)?,
        cv_raised: CvEstimate::of(&raised.raised_column(), VarianceConvention::Sample),
        mse_estimate,
        fit,
    })
}

/// `(λ, ‖β̂(λ)‖)` along `grid`.
pub fn estimator_norm_curve(
    design: &DesignMatrix,
    i: usize,
    response: &DVector<f64>,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    for &l in grid {
        check_lambda(l)?;
    }
    let basis = RaiseBasis::new(design, i, response)?;
    Ok(grid.iter().map(|&l| (l, basis.coefficients(l).norm())).collect())
}

/// `VIF(l, λ)` of every regressor in the raised design.
pub fn vif_raised(raised: &RaisedDesign) -> Result<Vec<f64>> {
    diagnostics::vif(raised.design())
}

/// Limits of `VIF(l, λ)` as `λ → ∞`: VIFs within `X₋ᵢ`, and 1 for the raised column.
pub fn vif_asymptotes(design: &DesignMatrix, i: usize) -> Result<Vec<f64>> {
    let reduced = design.without_column(i)?;
    let mut out = diagnostics::vif(&reduced)?;
    out.insert(i - 1, 1.0);
    Ok(out)
}

pub fn cn_raised(raised: &RaisedDesign) -> Result<f64> {
    Ok(diagnostics::condition_number(raised.design())?.0)
}

/// Limit of `K(X̃, λ)`: the condition number of `X₋ᵢ`.
pub fn cn_asymptote(design: &DesignMatrix, i: usize) -> Result<f64> {
    let reduced = design.without_column(i)?;
    Ok(diagnostics::condition_number(&reduced)?.0)
}

/// `sqrt(var(Xᵢ) + (λ²+2λ)·var(eᵢ)) / mean(Xᵢ)`.
pub fn cv_raised(raised: &RaisedDesign, convention: VarianceConvention) -> Result<f64> {
    let x = raised.base().column(raised.index());
    let mean = x.mean();
    if mean == 0.0 {
        return Err(Error::ZeroMean("raised column has zero mean".into()));
    }
    let l = raised.lambda();
    let var = convention.variance(&x) + (l * l + 2.0 * l) * convention.variance(&raised.aux().residuals);
    Ok(var.sqrt() / mean)
}

/// Raise each `(index, λ)` in turn, regressing on the already-raised columns.
pub fn successive_raise(design: &DesignMatrix, plan: &[(usize, f64)]) -> Result<DesignMatrix> {
    let mut current = design.clone();
    for &(i, lambda) in plan {
        current = raise_variable(&current, i, lambda)?.design;
    }
    Ok(current)
}
