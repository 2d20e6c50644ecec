//! Serializable reports and their plain-text rendering.
//!
//! Text output is derived from the same structs that are serialized to JSON,
//! so every printed number is also present in the JSON form.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::compare::{ComparisonVerdict, VerdictStatus};
use crate::diagnostics::{CvEstimate, DiagnosticsReport, Flags};
use crate::model::{FitSummary, Stars};
use crate::ridge::DataForm;
use crate::selection::SelectionReport;

/// Significant digits in text output.
pub const DIGITS: usize = 7;

/// Fixed-point with `digits` significant digits; scientific outside `[1e-4, 1e9)`.
pub fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..9).contains(&mag) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (9.9999995 → 10.000000).
    if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > (mag.max(0) as usize + 1) && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn num(v: f64) -> String {
    sig(v, DIGITS)
}

fn cv_text(cv: &CvEstimate) -> String {
    match cv {
        CvEstimate::Finite(v) => num(*v),
        CvEstimate::Divergent => "divergent".into(),
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub stars: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vif: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitBlock {
    pub coefficients: Vec<CoefficientRow>,
    pub r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub f_stars: String,
    pub sigma2_hat: f64,
    pub ssr: f64,
    pub df: usize,
}

impl FitBlock {
    /// `vif` lists regressors only; the intercept row gets none.
    pub fn new(labels: &[String], fit: &FitSummary, vif: Option<&[f64]>) -> Self {
        let coefficients = labels
            .iter()
            .enumerate()
            .map(|(j, label)| CoefficientRow {
                label: label.clone(),
                estimate: fit.coefficients[j],
                std_error: fit.standard_errors[j],
                t_statistic: fit.t_statistics[j],
                p_value: fit.p_values[j],
                stars: fit.stars(j).to_string(),
                vif: vif.and_then(|v| j.checked_sub(1).map(|k| v[k])),
            })
            .collect();
        Self {
            coefficients,
            r_squared: fit.r_squared,
            f_statistic: fit.f_statistic,
            f_p_value: fit.f_p_value,
            f_stars: f_stars(fit.f_p_value).to_string(),
            sigma2_hat: fit.sigma2_hat,
            ssr: fit.ssr,
            df: fit.df,
        }
    }

    fn render(&self, out: &mut String) {
        let with_vif = self.coefficients.iter().any(|c| c.vif.is_some());
        let _ = write!(
            out,
            "{:<14} {:>14} {:>14} {:>12} {:>12}     ",
            "", "estimate", "std. error", "t", "p-value"
        );
        if with_vif {
            let _ = write!(out, " {:>12}", "VIF");
        }
        out.push('\n');
        for c in &self.coefficients {
            let _ = write!(
                out,
                "{:<14} {:>14} {:>14} {:>12} {:>12} {:<4}",
                c.label,
                num(c.estimate),
                num(c.std_error),
                num(c.t_statistic),
                num(c.p_value),
                c.stars
            );
            if let Some(v) = c.vif {
                let _ = write!(out, " {:>12}", num(v));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "R^2            {}", num(self.r_squared));
        let _ = writeln!(
            out,
            "F              {}{} (p = {})",
            num(self.f_statistic),
            self.f_stars,
            num(self.f_p_value)
        );
        let _ = writeln!(out, "sigma^2        {}  (df = {})", num(self.sigma2_hat), self.df);
    }
}

fn f_stars(p: f64) -> Stars {
    if p < 0.01 {
        Stars::Three
    } else if p < 0.05 {
        Stars::Two
    } else if p < 0.10 {
        Stars::One
    } else {
        Stars::None
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub data: String,
    pub response: String,
    pub labels: Vec<String>,
    /// Labels of the correlation matrix rows: response first.
    pub correlation_labels: Vec<String>,
    pub correlation: Vec<Vec<f64>>,
    pub vif: Vec<f64>,
    pub condition_number: f64,
    pub eigenvalues: Vec<f64>,
    pub cv: Vec<CvEstimate>,
    pub flags: Flags,
}

impl DiagnoseReport {
    pub fn new(data: &str, rep: &DiagnosticsReport, flags: Flags) -> Self {
        let correlation_labels = std::iter::once(rep.response_name.clone())
            .chain(rep.labels.iter().cloned())
            .collect();
        Self {
            data: data.into(),
            response: rep.response_name.clone(),
            labels: rep.labels.clone(),
            correlation_labels,
            correlation: matrix_rows(&rep.correlation),
            vif: rep.vif.clone(),
            condition_number: rep.condition_number,
            eigenvalues: rep.eigenvalues.clone(),
            cv: rep.cv.clone(),
            flags,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OlsReport {
    pub data: String,
    pub response: String,
    pub fit: FitBlock,
    pub mse: f64,
    pub coefficient_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaiseReport {
    pub data: String,
    pub response: String,
    pub variable: String,
    pub lambda: f64,
    pub criterion: String,
    pub fit: FitBlock,
    pub mse: f64,
    pub ols_mse: f64,
    pub condition_number: f64,
    /// Sample-variance convention.
    pub cv_raised: CvEstimate,
    pub coefficient_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualizeReport {
    pub data: String,
    pub response: String,
    pub variable: String,
    pub fit: FitBlock,
    pub mse: f64,
    pub mse_with_bias: f64,
    pub condition_number: f64,
    pub cv_residualized: CvEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub label: String,
    pub estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RidgeReport {
    pub data: String,
    pub response: String,
    pub k: f64,
    pub k_rule: String,
    pub form: DataForm,
    pub coefficients: Vec<Estimate>,
    pub mse: f64,
    pub coefficient_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectReport {
    pub data: String,
    pub response: String,
    pub alpha: f64,
    #[serde(flatten)]
    pub selection: SelectionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub data: String,
    pub response: String,
    pub first: String,
    pub second: String,
    /// Verdicts use `β̂` and `σ̂²` in place of the unknown parameters.
    pub plug_in: bool,
    pub s: Vec<Vec<f64>>,
    pub s_eigenvalues: Vec<f64>,
    pub s_positive_definite: bool,
    pub inequality_lhs: Option<f64>,
    pub sigma2: f64,
    pub prefer_first: bool,
    pub status: VerdictStatus,
    pub mse_first: f64,
    pub mse_second: f64,
    pub theta: f64,
}

impl CompareReport {
    pub fn new(data: &str, response: &str, first: &str, second: &str, v: &ComparisonVerdict) -> Self {
        Self {
            data: data.into(),
            response: response.into(),
            first: first.into(),
            second: second.into(),
            plug_in: true,
            s: matrix_rows(&v.s),
            s_eigenvalues: v.s_eigenvalues.clone(),
            s_positive_definite: v.s_positive_definite,
            inequality_lhs: v.inequality_lhs,
            sigma2: v.sigma2,
            prefer_first: v.prefer_first,
            status: v.status,
            mse_first: v.mse_first,
            mse_second: v.mse_second,
            theta: v.theta_mse_diff,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveReport {
    pub data: String,
    pub response: String,
    pub variable: String,
    pub kind: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Report {
    Diagnose(DiagnoseReport),
    Ols(OlsReport),
    Raise(RaiseReport),
    Residualize(ResidualizeReport),
    Ridge(RidgeReport),
    Select(SelectReport),
    Compare(CompareReport),
    Curve(CurveReport),
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Two-column CSV of a curve; `None` for other reports.
    pub fn to_csv(&self) -> Option<String> {
        let Report::Curve(c) = self else { return None };
        let mut out = String::from("lambda,value\n");
        for p in &c.points {
            let _ = writeln!(out, "{},{}", p.lambda, p.value);
        }
        Some(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Diagnose(r) => render_diagnose(r, &mut out),
            Report::Ols(r) => {
                let _ = writeln!(out, "OLS fit of {} ({})\n", r.response, r.data);
                r.fit.render(&mut out);
                let _ = writeln!(out, "MSE            {}", num(r.mse));
                let _ = writeln!(out, "||beta||       {}", num(r.coefficient_norm));
            }
            Report::Raise(r) => {
                let _ = writeln!(
                    out,
                    "Raise regression of {} ({}), raising {} with lambda = {} [{}]\n",
                    r.response,
                    r.data,
                    r.variable,
                    num(r.lambda),
                    r.criterion
                );
                r.fit.render(&mut out);
                let _ = writeln!(out, "MSE            {}  (OLS {})", num(r.mse), num(r.ols_mse));
                let _ = writeln!(out, "CN             {}", num(r.condition_number));
                let _ = writeln!(out, "CV(raised)     {}", cv_text(&r.cv_raised));
                let _ = writeln!(out, "||beta(l)||    {}", num(r.coefficient_norm));
            }
            Report::Residualize(r) => {
                let _ = writeln!(
                    out,
                    "Residualization of {} ({}), residualizing {}\n",
                    r.response, r.data, r.variable
                );
                r.fit.render(&mut out);
                let _ = writeln!(out, "MSE            {}  (with bias term {})", num(r.mse), num(r.mse_with_bias));
                let _ = writeln!(out, "CN             {}", num(r.condition_number));
                let _ = writeln!(out, "CV(residual)   {}", cv_text(&r.cv_residualized));
            }
            Report::Ridge(r) => {
                let form = match r.form {
                    DataForm::Raw => "raw",
                    DataForm::Standardized => "standardized",
                };
                let _ = writeln!(
                    out,
                    "Ridge fit of {} ({}, {form} data), k = {} [{}]\n",
                    r.response,
                    r.data,
                    num(r.k),
                    r.k_rule
                );
                for c in &r.coefficients {
                    let _ = writeln!(out, "{:<14} {:>14}", c.label, num(c.estimate));
                }
                let _ = writeln!(out, "MSE (plug-in)  {}", num(r.mse));
                let _ = writeln!(out, "||beta_R||     {}", num(r.coefficient_norm));
            }
            Report::Select(r) => render_select(r, &mut out),
            Report::Compare(r) => render_compare(r, &mut out),
            Report::Curve(c) => {
                let _ = writeln!(out, "{} curve raising {} ({})", c.kind, c.variable, c.data);
                let _ = writeln!(out, "{:>12} {:>14}", "lambda", c.kind);
                for p in &c.points {
                    let _ = writeln!(out, "{:>12} {:>14}", num(p.lambda), num(p.value));
                }
            }
        }
        // Column padding leaves trailing blanks on short rows.
        out.lines().map(|l| l.trim_end().to_string() + "\n").collect()
    }
}

fn render_diagnose(r: &DiagnoseReport, out: &mut String) {
    let _ = writeln!(out, "Multicollinearity diagnostics for {} ({})\n", r.response, r.data);
    let _ = write!(out, "{:<10}", "");
    for l in &r.correlation_labels {
        let _ = write!(out, " {:>11}", l);
    }
    out.push('\n');
    for (l, row) in r.correlation_labels.iter().zip(&r.correlation) {
        let _ = write!(out, "{:<10}", l);
        for v in row {
            let _ = write!(out, " {:>11}", format!("{v:.7}"));
        }
        out.push('\n');
    }
    out.push('\n');
    let _ = writeln!(out, "{:<10} {:>14} {:>14} {:>6} {:>6}", "", "VIF", "CV", "VIF>10", "CV low");
    for (j, l) in r.labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<10} {:>14} {:>14} {:>6} {:>6}",
            l,
            num(r.vif[j]),
            cv_text(&r.cv[j]),
            if r.flags.vif_worry[j] { "yes" } else { "no" },
            if r.flags.cv_worry[j] { "yes" } else { "no" }
        );
    }
    let _ = writeln!(out, "\nCN             {}", num(r.condition_number));
    let eig: Vec<String> = r.eigenvalues.iter().map(|&e| num(e)).collect();
    let _ = writeln!(out, "eigenvalues    {}", eig.join(" "));
    let _ = writeln!(out, "\n{}", r.flags.narrative);
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), num)
}

fn render_select(r: &SelectReport, out: &mut String) {
    let s = &r.selection;
    let _ = writeln!(out, "Variable selection for raising ({}, {})\n", r.response, r.data);
    let _ = writeln!(
        out,
        "{:<8} {:>11} {:>11} {:>11} {:>4} {:>11} {:>11} {:>11}  VIF asymptotes",
        "", "VIF", "CV", "t", "", "lambda_min", "MSE(l_min)", "CN limit"
    );
    for c in &s.candidates {
        let asym: Vec<String> = c.vif_asymptotes.iter().map(|&v| num(v)).collect();
        let _ = writeln!(
            out,
            "{:<8} {:>11} {:>11} {:>11} {:>4} {:>11} {:>11} {:>11}  {}",
            c.label,
            num(c.vif),
            cv_text(&c.cv),
            num(c.t_statistic),
            c.stars,
            opt(c.lambda_min),
            opt(c.mse_at_lambda_min),
            num(c.cn_asymptote),
            asym.join(" ")
        );
    }
    let _ = writeln!(out, "\nOLS MSE        {}", num(s.ols_mse));
    for c in &s.candidates {
        if let Some(b) = c.mse_guarantee_bound {
            let _ = writeln!(
                out,
                "{}: lambda_min < 1, MSE stays at or below OLS for lambda <= {}",
                c.label,
                num(b)
            );
        }
    }
    out.push('\n');
    for rec in &s.recommendations {
        if rec.favored.is_empty() {
            let _ = writeln!(out, "- {}", rec.criterion);
        } else {
            let _ = writeln!(out, "- {}: {}", rec.criterion, rec.favored.join(", "));
        }
    }
}

fn render_compare(r: &CompareReport, out: &mut String) {
    let _ = writeln!(
        out,
        "Matrix MSE comparison ({}, plug-in beta and sigma^2)\n  first:  {}\n  second: {}\n",
        r.data, r.first, r.second
    );
    let eig: Vec<String> = r.s_eigenvalues.iter().map(|&e| num(e)).collect();
    let _ = writeln!(out, "eigenvalues of S  {}", eig.join(" "));
    let _ = writeln!(out, "S positive definite  {}", r.s_positive_definite);
    if let Some(lhs) = r.inequality_lhs {
        let _ = writeln!(out, "inequality lhs    {}  (sigma^2 = {})", num(lhs), num(r.sigma2));
    }
    let verdict = match r.status {
        VerdictStatus::PreferFirst => "first estimator preferred",
        VerdictStatus::NotPreferred => "inequality fails: no preference established",
        VerdictStatus::Inconclusive => "inconclusive: S is not positive definite",
    };
    let _ = writeln!(out, "verdict           {verdict}");
    let _ = writeln!(
        out,
        "MSE first {}, second {}, theta {}",
        num(r.mse_first),
        num(r.mse_second),
        num(r.theta)
    );
}
