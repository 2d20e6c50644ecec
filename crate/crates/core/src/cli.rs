//! Command-line surface: argument parsing, dispatch and exit codes.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::compare::{mtxmse_preference, LinearEstimatorMap};
use crate::data;
use crate::diagnostics::{classify, diagnose, VarianceConvention};
use crate::error::{Error, Result};
use crate::model::{build_design, ols_fit, Dataset, DesignMatrix};
use crate::raise::{
    cn_raised, cv_raised, estimator_norm_curve, lambda_grid, raise_fit, raise_mse_curve, raise_variable, vif_raised,
    DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_STEP,
};
use crate::report::{
    CompareReport, CurvePoint, CurveReport, DiagnoseReport, Estimate, FitBlock, OlsReport, RaiseReport, Report,
    ResidualizeReport, RidgeReport, SelectReport,
};
use crate::residualize::residualized_fit;
use crate::ridge::{hkb_k, ridge_fit, ridge_mse_min, DataForm};
use crate::selection::{solve_lambda, variable_report, LambdaCriterion};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "raisereg", version, about = "Multicollinearity diagnostics, raise regression, residualization and ridge")]
pub struct Cli {
    /// Output format; `csv` is only valid for `curve`.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    /// Significance level for t tests.
    #[arg(long, default_value_t = 0.10, global = true, allow_negative_numbers = true)]
    pub alpha: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV path, or the name of a bundled dataset (`cement`).
    #[arg(long)]
    pub data: String,

    /// Response column.
    #[arg(long, default_value = "Y")]
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionKind {
    MseMin,
    Vif,
    Cn,
    Cv,
    Norm,
}

#[derive(Debug, Args)]
pub struct CriterionArgs {
    /// Threshold for `vif` (default 10), `cn` (default 20) or `cv` (default 0.1002506).
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,

    /// Grid step for `cv` and `norm`.
    #[arg(long, default_value_t = DEFAULT_LAMBDA_STEP)]
    pub step: f64,

    /// Tolerance for `norm`.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,

    /// Upper end of the search grid for `norm`.
    #[arg(long, default_value_t = DEFAULT_LAMBDA_MAX)]
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KRule {
    Hkb,
    MseMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Norm,
    Vif,
    Cn,
    Mse,
    Cv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlations, VIFs, condition number and coefficients of variation.
    Diagnose {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Ordinary least squares fit.
    Ols {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Raise one regressor and refit.
    Raise {
        #[command(flatten)]
        data: DataArgs,
        /// Column to raise.
        #[arg(long = "var")]
        var: String,
        /// Explicit raising factor.
        #[arg(long, conflicts_with = "criterion", required_unless_present = "criterion", allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Rule choosing the raising factor.
        #[arg(long, value_enum)]
        criterion: Option<CriterionKind>,
        #[command(flatten)]
        opts: CriterionArgs,
    },
    /// Replace one regressor by its residual on the others.
    Residualize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long = "var")]
        var: String,
    },
    /// Ridge fit.
    Ridge {
        #[command(flatten)]
        data: DataArgs,
        /// Explicit ridge constant.
        #[arg(long, conflicts_with = "k_rule", required_unless_present = "k_rule", allow_negative_numbers = true)]
        k: Option<f64>,
        /// Rule choosing the ridge constant.
        #[arg(long, value_enum)]
        k_rule: Option<KRule>,
        /// Upper end of the `mse-min` grid.
        #[arg(long, default_value_t = 1.0)]
        k_max: f64,
        /// Step of the `mse-min` grid.
        #[arg(long, default_value_t = 1e-4)]
        k_step: f64,
        /// Fit on centered, unit-length regressors.
        #[arg(long)]
        standardized: bool,
    },
    /// Compare candidate variables for raising.
    Select {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Matrix-MSE comparison of two linear estimators: `ols`, `ridge:K` or `raise:VAR:LAMBDA`.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
    },
    /// Trace a quantity along a grid of raising factors.
    Curve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long = "var")]
        var: String,
        #[arg(long, value_enum)]
        kind: CurveKind,
        /// For `vif`: the column whose VIF is traced (default: the largest VIF).
        #[arg(long)]
        of: Option<String>,
        #[arg(long, default_value_t = DEFAULT_LAMBDA_MAX)]
        lambda_max: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA_STEP)]
        step: f64,
    },
}

/// Parse `args` (program name first), run the command, write the report to `out`
/// and any error line to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            let _ = writeln!(err, "{}", rendered.lines().next().unwrap_or("invalid arguments"));
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

/// Run a parsed command and render its report.
pub fn execute(cli: &Cli) -> Result<String> {
    if !(cli.alpha > 0.0 && cli.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("--alpha must lie in (0, 1), got {}", cli.alpha)));
    }
    let is_curve = matches!(cli.command, Command::Curve { .. });
    if cli.format == Format::Csv && !is_curve {
        return Err(Error::InvalidParameter("--format csv is only available for `curve`".into()));
    }
    let report = build_report(cli)?;
    Ok(match cli.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv().expect("curve report"),
    })
}

struct Loaded {
    name: String,
    dataset: Dataset,
    design: DesignMatrix,
}

impl Loaded {
    fn response(&self) -> &DVector<f64> {
        self.dataset.response()
    }

    fn index(&self, var: &str) -> Result<usize> {
        self.dataset.design_index(var).ok_or_else(|| {
            if var == self.dataset.response_name() {
                Error::InvalidParameter(format!("`{var}` is the response; choose a regressor"))
            } else {
                Error::MissingColumn(var.to_string())
            }
        })
    }
}

fn load(args: &DataArgs) -> Result<Loaded> {
    let dataset = match data::bundled(&args.data) {
        Some(text) => data::parse_csv(text, &args.response)?,
        None => data::load_csv(&args.data, &args.response)?,
    };
    let design = build_design(&dataset)?;
    Ok(Loaded {
        name: args.data.clone(),
        dataset,
        design,
    })
}

fn criterion_of(kind: CriterionKind, o: &CriterionArgs) -> LambdaCriterion {
    use crate::diagnostics::{CN_MODERATE, CV_THRESHOLD, VIF_THRESHOLD};
    match kind {
        CriterionKind::MseMin => LambdaCriterion::MseMin,
        CriterionKind::Vif => LambdaCriterion::VifThreshold(o.threshold.unwrap_or(VIF_THRESHOLD)),
        CriterionKind::Cn => LambdaCriterion::CnThreshold(o.threshold.unwrap_or(CN_MODERATE)),
        CriterionKind::Cv => LambdaCriterion::CvThreshold {
            threshold: o.threshold.unwrap_or(CV_THRESHOLD),
            step: o.step,
        },
        CriterionKind::Norm => LambdaCriterion::NormStabilization {
            step: o.step,
            tol: o.tol,
            max: o.lambda_max,
        },
    }
}

fn criterion_name(kind: CriterionKind) -> &'static str {
    match kind {
        CriterionKind::MseMin => "mse-min",
        CriterionKind::Vif => "vif",
        CriterionKind::Cn => "cn",
        CriterionKind::Cv => "cv",
        CriterionKind::Norm => "norm",
    }
}

fn build_report(cli: &Cli) -> Result<Report> {
    Ok(match &cli.command {
        Command::Diagnose { data } => {
            let l = load(data)?;
            let rep = diagnose(&l.dataset)?;
            let flags = classify(&rep);
            Report::Diagnose(DiagnoseReport::new(&l.name, &rep, flags))
        }
        Command::Ols { data } => {
            let l = load(data)?;
            let fit = ols_fit(&l.design, l.response())?;
            let vif = crate::diagnostics::vif(&l.design)?;
            Report::Ols(OlsReport {
                data: l.name.clone(),
                response: data.response.clone(),
                mse: fit.ols_mse(),
                coefficient_norm: fit.coefficient_norm(),
                fit: FitBlock::new(l.design.labels(), &fit, Some(&vif)),
            })
        }
        Command::Raise {
            data,
            var,
            lambda,
            criterion,
            opts,
        } => {
            let l = load(data)?;
            let i = l.index(var)?;
            let (lambda, name) = match (lambda, criterion) {
                (Some(v), None) => (*v, "explicit".to_string()),
                (None, Some(kind)) => (
                    solve_lambda(&l.design, i, l.response(), criterion_of(*kind, opts))?,
                    criterion_name(*kind).to_string(),
                ),
                _ => return Err(Error::InvalidParameter("give exactly one of --lambda or --criterion".into())),
            };
            let raised = raise_variable(&l.design, i, lambda)?;
            let rf = raise_fit(&raised, l.response())?;
            let ols = ols_fit(&l.design, l.response())?;
            Report::Raise(RaiseReport {
                data: l.name.clone(),
                response: data.response.clone(),
                variable: var.clone(),
                lambda,
                criterion: name,
                fit: FitBlock::new(raised.design().labels(), &rf.fit, Some(&rf.vif)),
                mse: rf.mse_estimate,
                ols_mse: ols.ols_mse(),
                condition_number: rf.condition_number,
                cv_raised: rf.cv_raised,
                coefficient_norm: rf.norm,
            })
        }
        Command::Residualize { data, var } => {
            let l = load(data)?;
            let i = l.index(var)?;
            let r = residualized_fit(&l.design, i, l.response())?;
            Report::Residualize(ResidualizeReport {
                data: l.name.clone(),
                response: data.response.clone(),
                variable: var.clone(),
                fit: FitBlock::new(r.design.labels(), &r.fit, Some(&r.vif)),
                mse: r.mse_estimate,
                mse_with_bias: r.mse_with_bias,
                condition_number: r.condition_number,
                cv_residualized: r.cv_residualized,
            })
        }
        Command::Ridge {
            data,
            k,
            k_rule,
            k_max,
            k_step,
            standardized,
        } => {
            let l = load(data)?;
            let form = if *standardized { DataForm::Standardized } else { DataForm::Raw };
            let (k, rule) = match (k, k_rule) {
                (Some(k), None) => (*k, "explicit"),
                (None, Some(KRule::Hkb)) => (hkb_k(&ols_fit(&l.design, l.response())?)?, "hkb"),
                (None, Some(KRule::MseMin)) => {
                    let grid = k_grid(*k_max, *k_step)?;
                    (ridge_mse_min(&l.design, l.response(), form, &grid)?.0, "mse-min")
                }
                _ => return Err(Error::InvalidParameter("give exactly one of --k or --k-rule".into())),
            };
            let fit = ridge_fit(&l.design, l.response(), k, form)?;
            Report::Ridge(RidgeReport {
                data: l.name.clone(),
                response: data.response.clone(),
                k,
                k_rule: rule.into(),
                form,
                coefficients: fit
                    .labels
                    .iter()
                    .zip(fit.coefficients.iter())
                    .map(|(label, &estimate)| Estimate {
                        label: label.clone(),
                        estimate,
                    })
                    .collect(),
                mse: fit.mse_estimate,
                coefficient_norm: fit.coefficients.norm(),
            })
        }
        Command::Select { data } => {
            let l = load(data)?;
            Report::Select(SelectReport {
                data: l.name.clone(),
                response: data.response.clone(),
                alpha: cli.alpha,
                selection: variable_report(&l.design, l.response(), cli.alpha)?,
            })
        }
        Command::Compare { data, first, second } => {
            let l = load(data)?;
            let ols = ols_fit(&l.design, l.response())?;
            let a = estimator_map(&l, first)?;
            let b = estimator_map(&l, second)?;
            let v = mtxmse_preference(&a, &b, l.design.columns(), &ols.coefficients, ols.sigma2_hat)?;
            Report::Compare(CompareReport::new(&l.name, &data.response, first, second, &v))
        }
        Command::Curve {
            data,
            var,
            kind,
            of,
            lambda_max,
            step,
        } => {
            let l = load(data)?;
            let i = l.index(var)?;
            let grid = lambda_grid(*lambda_max, *step)?;
            let of = of.as_deref().map(|name| l.index(name)).transpose()?;
            let points = curve_points(&l, i, *kind, of, &grid)?;
            let kind = match kind {
                CurveKind::Norm => "norm",
                CurveKind::Vif => "vif",
                CurveKind::Cn => "cn",
                CurveKind::Mse => "mse",
                CurveKind::Cv => "cv",
            };
            Report::Curve(CurveReport {
                data: l.name.clone(),
                response: data.response.clone(),
                variable: var.clone(),
                kind: kind.into(),
                points,
            })
        }
    })
}

fn k_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("--k-step must be positive, got {step}")));
    }
    if !(max >= 0.0 && max.is_finite()) {
        return Err(Error::NegativeK(max));
    }
    let count = (max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|j| j as f64 * step).collect())
}

fn curve_points(l: &Loaded, i: usize, kind: CurveKind, of: Option<usize>, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    let pts = |v: Vec<(f64, f64)>| v.into_iter().map(|(lambda, value)| CurvePoint { lambda, value }).collect();
    match kind {
        CurveKind::Norm => Ok(pts(estimator_norm_curve(&l.design, i, l.response(), grid)?)),
        CurveKind::Mse => {
            let ols = ols_fit(&l.design, l.response())?;
            let curve = raise_mse_curve(&ols, &crate::model::auxiliary_regression(&l.design, i)?)?;
            Ok(pts(grid.iter().map(|&x| (x, curve.mse_at(x))).collect()))
        }
        CurveKind::Vif | CurveKind::Cn | CurveKind::Cv => grid
            .iter()
            .map(|&lambda| {
                let raised = raise_variable(&l.design, i, lambda)?;
                let value = match kind {
                    CurveKind::Vif => {
                        let v = vif_raised(&raised)?;
                        match of {
                            Some(j) => v[j - 1],
                            None => v.into_iter().fold(f64::NEG_INFINITY, f64::max),
                        }
                    }
                    CurveKind::Cn => cn_raised(&raised)?,
                    _ => cv_raised(&raised, VarianceConvention::Population)?,
                };
                Ok(CurvePoint { lambda, value })
            })
            .collect(),
    }
}

/// `ols`, `ridge:K` or `raise:VAR:LAMBDA`.
fn estimator_map(l: &Loaded, spec: &str) -> Result<LinearEstimatorMap> {
    let bad = || Error::InvalidParameter(format!("estimator `{spec}` not understood; use ols, ridge:K or raise:VAR:LAMBDA"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["ols"] => LinearEstimatorMap::ols(&l.design),
        ["ridge", k] => LinearEstimatorMap::ridge(&l.design, number(k)?),
        ["raise", var, lambda] => LinearEstimatorMap::raise(&l.design, l.index(var)?, number(lambda)?),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("raisereg").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn lambda_and_criterion_conflict() {
        let (code, _, err) = call(&["raise", "--data", "cement", "--var", "X5", "--lambda", "1", "--criterion", "vif"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("cannot be used with"), "{err}");
        assert_eq!(err.lines().count(), 1);
        let (code, _, _) = call(&["raise", "--data", "cement", "--var", "X5"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn csv_only_for_curves() {
        let (code, _, err) = call(&["ols", "--data", "cement", "--format", "csv"]);
        assert_eq!(code, EXIT_USAGE);
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn unknown_column_is_a_user_error() {
        let (code, _, err) = call(&["residualize", "--data", "cement", "--var", "X9"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("X9"));
    }

    #[test]
    fn unattainable_threshold_is_numerical() {
        let (code, _, err) = call(&["raise", "--data", "cement", "--var", "X2", "--criterion", "vif"]);
        assert_eq!(code, EXIT_NUMERICAL, "{err}");
    }

    #[test]
    fn estimator_specs() {
        let l = load(&DataArgs {
            data: "cement".into(),
            response: "Y".into(),
        })
        .unwrap();
        assert!(estimator_map(&l, "ols").is_ok());
        assert!(estimator_map(&l, "ridge:0.5").is_ok());
        assert!(estimator_map(&l, "raise:X5:2").is_ok());
        assert!(matches!(estimator_map(&l, "raise:X5"), Err(Error::InvalidParameter(_))));
        assert!(matches!(estimator_map(&l, "raise:Q:1"), Err(Error::MissingColumn(_))));
    }
}
