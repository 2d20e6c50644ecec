//! Design matrices, OLS with full inference, and auxiliary regressions.
//!
//! Column indices are zero-based over the full design: column 0 is the
//! intercept and regressors occupy columns `1..p`.

use std::collections::HashSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dist::{f_upper_p, t_quantile, t_two_sided_p};
use crate::error::{Error, Result};
use crate::linalg::{self, least_squares};

pub const INTERCEPT_LABEL: &str = "(Intercept)";

/// Named regressor columns plus the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    regressors: DMatrix<f64>,
    response_name: String,
    response: DVector<f64>,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        regressors: DMatrix<f64>,
        response_name: impl Into<String>,
        response: DVector<f64>,
    ) -> Result<Self> {
        let response_name = response_name.into();
        let n = response.len();
        if regressors.ncols() == 0 {
            return Err(Error::InvalidData("at least one regressor is required".into()));
        }
        if names.len() != regressors.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} regressor columns",
                names.len(),
                regressors.ncols()
            )));
        }
        if regressors.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "regressors have {} rows but response has {}",
                regressors.nrows(),
                n
            )));
        }
        let p = regressors.ncols() + 1;
        if n <= p {
            return Err(Error::InvalidData(format!(
                "need more observations than coefficients (n = {n}, p = {p})"
            )));
        }
        if regressors.iter().chain(response.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value in data".into()));
        }
        let mut seen = HashSet::new();
        for name in names.iter().chain(std::iter::once(&response_name)) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidData(format!("duplicate column label `{name}`")));
            }
        }
        Ok(Self {
            names,
            regressors,
            response_name,
            response,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.regressors
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    /// Coefficient count including the intercept.
    pub fn p(&self) -> usize {
        self.regressors.ncols() + 1
    }

    /// Position of a regressor in the full design (intercept is 0).
    pub fn design_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name).map(|j| j + 1)
    }
}

/// `[1 X₂ … X_p]`, guaranteed full rank with an exact ones column first.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: DMatrix<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    pub fn new(columns: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != columns.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} columns",
                labels.len(),
                columns.ncols()
            )));
        }
        if columns.ncols() == 0 || columns.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidData("first design column must be the ones vector".into()));
        }
        linalg::check_full_rank(&columns)?;
        Ok(Self { columns, labels })
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    pub fn p(&self) -> usize {
        self.columns.ncols()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.columns.column(j).into_owned()
    }

    /// Same labels, column `j` swapped for `values`. Re-validates rank.
    pub fn with_column(&self, j: usize, values: &DVector<f64>) -> Result<Self> {
        let mut columns = self.columns.clone();
        columns.set_column(j, values);
        Self::new(columns, self.labels.clone())
    }

    /// `X₋ⱼ`: the design without column `j`.
    pub fn without_column(&self, j: usize) -> Result<Self> {
        self.check_regressor_index(j)?;
        let mut labels = self.labels.clone();
        labels.remove(j);
        Self::new(linalg::drop_column(&self.columns, j), labels)
    }

    pub(crate) fn check_regressor_index(&self, j: usize) -> Result<()> {
        if j == 0 || j >= self.p() {
            return Err(Error::InvalidIndex { index: j, p: self.p() });
        }
        Ok(())
    }
}

pub fn build_design(dataset: &Dataset) -> Result<DesignMatrix> {
    let n = dataset.n();
    let mut columns = DMatrix::from_element(n, dataset.p(), 1.0);
    columns.columns_mut(1, dataset.p() - 1).copy_from(dataset.regressors());
    let labels = std::iter::once(INTERCEPT_LABEL.to_string())
        .chain(dataset.names().iter().cloned())
        .collect();
    DesignMatrix::new(columns, labels)
}

/// Inference bundle shared by OLS, raised and residualized fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub coefficients: DVector<f64>,
    pub standard_errors: DVector<f64>,
    pub t_statistics: DVector<f64>,
    pub p_values: DVector<f64>,
    pub r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub sigma2_hat: f64,
    pub residuals: DVector<f64>,
    pub fitted: DVector<f64>,
    pub ssr: f64,
    pub df: usize,
    /// `(XᵗX)⁻¹` of the fitted design; covariance is `sigma2_hat` times this.
    pub covariance_scale: DMatrix<f64>,
}

impl FitSummary {
    pub fn stars(&self, j: usize) -> Stars {
        significance_stars(self.t_statistics[j], self.df)
    }

    /// `σ̂²·tr((XᵗX)⁻¹)`: the plug-in MSE of an unbiased linear fit.
    pub fn ols_mse(&self) -> f64 {
        self.sigma2_hat * self.covariance_scale.trace()
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.norm()
    }
}

/// Total sum of squares about the mean, with exact zero for numerically constant data.
pub(crate) fn centered_ss(v: &DVector<f64>) -> f64 {
    let mean = v.mean();
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let floor = (f64::EPSILON * scale).powi(2) * v.len() as f64 * 16.0;
    if ss <= floor {
        0.0
    } else {
        ss
    }
}

/// OLS fit of `response` on a full-rank design with intercept.
pub fn ols_fit(design: &DesignMatrix, response: &DVector<f64>) -> Result<FitSummary> {
    let ls = least_squares(design.columns(), response)?;
    Ok(summarize(design.columns(), response, ls.coefficients, ls.inverse_gram))
}

/// Assemble inference for coefficients `b` of `x` whose `(XᵗX)⁻¹` is `covariance_scale`.
/// Residuals are recomputed as `y − x b`.
pub(crate) fn summarize(
    x: &DMatrix<f64>,
    response: &DVector<f64>,
    coefficients: DVector<f64>,
    covariance_scale: DMatrix<f64>,
) -> FitSummary {
    let n = x.nrows();
    let p = x.ncols();
    let df = n - p;
    let fitted = x * &coefficients;
    let residuals = response - &fitted;
    let ssr = residuals.norm_squared();
    let sigma2_hat = ssr / df as f64;
    let tss = centered_ss(response);
    let (r_squared, f_statistic) = if tss == 0.0 {
        (0.0, 0.0)
    } else {
        let r2 = 1.0 - ssr / tss;
        let f = if p > 1 {
            ((tss - ssr) / (p - 1) as f64) / sigma2_hat
        } else {
            0.0
        };
        (r2, f)
    };
    let f_p_value = if p > 1 {
        f_upper_p(f_statistic, (p - 1) as f64, df as f64)
    } else {
        1.0
    };
    let standard_errors = covariance_scale
        .diagonal()
        .map(|d| (sigma2_hat * d.max(0.0)).sqrt());
    let t_statistics = coefficients.zip_map(&standard_errors, |b, se| {
        if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        }
    });
    let p_values = t_statistics.map(|t| t_two_sided_p(t, df as f64));
    FitSummary {
        coefficients,
        standard_errors,
        t_statistics,
        p_values,
        r_squared,
        f_statistic,
        f_p_value,
        sigma2_hat,
        residuals,
        fitted,
        ssr,
        df,
        covariance_scale,
    }
}

/// Regression of regressor `i` on every other design column.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryRegression {
    pub index: usize,
    /// Coefficients on `X₋ᵢ`, in design order with column `i` removed (intercept first).
    pub alpha_hat: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    pub r_squared: f64,
    /// Centered sum of squares of `Xᵢ`.
    pub tss: f64,
    /// `(X₋ᵢᵗX₋ᵢ)⁻¹`.
    pub reduced_inverse_gram: DMatrix<f64>,
}

impl AuxiliaryRegression {
    /// `1/(1−Rᵢ²)`, evaluated as `TSSᵢ/SSRᵢ`.
    pub fn vif(&self) -> f64 {
        self.tss / self.ssr
    }

    /// Entry of `α̂` for design column `j` (`j ≠ index`).
    pub fn alpha_for(&self, j: usize) -> f64 {
        self.alpha_hat[self.alpha_index(j)]
    }

    /// Position of design column `j` (`j ≠ index`) within `X₋ᵢ`.
    pub fn alpha_index(&self, j: usize) -> usize {
        assert_ne!(j, self.index);
        if j < self.index {
            j
        } else {
            j - 1
        }
    }

    /// Map a position in `X₋ᵢ` back to a design column.
    pub fn design_column(&self, k: usize) -> usize {
        if k < self.index {
            k
        } else {
            k + 1
        }
    }
}

pub fn auxiliary_regression(design: &DesignMatrix, i: usize) -> Result<AuxiliaryRegression> {
    design.check_regressor_index(i)?;
    let reduced = linalg::drop_column(design.columns(), i);
    let target = design.column(i);
    let ls = least_squares(&reduced, &target)?;
    let ssr = ls.residuals.norm_squared();
    let tss = centered_ss(&target);
    if ssr <= 0.0 || tss == 0.0 {
        return Err(Error::RankDeficient {
            smallest_singular_value: 0.0,
        });
    }
    Ok(AuxiliaryRegression {
        index: i,
        alpha_hat: ls.coefficients,
        residuals: ls.residuals,
        ssr,
        r_squared: 1.0 - ssr / tss,
        tss,
        reduced_inverse_gram: ls.inverse_gram,
    })
}

/// Significance markers: `*` 90%, `**` 95%, `***` 99%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TDecision {
    pub reject: bool,
    pub critical_value: f64,
    pub stars: Stars,
}

pub fn critical_value(df: usize, alpha: f64) -> f64 {
    t_quantile(1.0 - alpha / 2.0, df as f64)
}

pub fn significance_stars(t_stat: f64, df: usize) -> Stars {
    let t = t_stat.abs();
    if t > critical_value(df, 0.01) {
        Stars::Three
    } else if t > critical_value(df, 0.05) {
        Stars::Two
    } else if t > critical_value(df, 0.10) {
        Stars::One
    } else {
        Stars::None
    }
}

/// Two-sided test of a null coefficient: reject iff `|t| > t_df(1 − α/2)`.
pub fn t_decision(t_stat: f64, df: usize, alpha: f64) -> Result<TDecision> {
    if df == 0 {
        return Err(Error::InvalidParameter("degrees of freedom must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("significance level {alpha} outside (0, 1)")));
    }
    let critical_value = critical_value(df, alpha);
    Ok(TDecision {
        reject: t_stat.abs() > critical_value,
        critical_value,
        stars: significance_stars(t_stat, df),
    })
}
