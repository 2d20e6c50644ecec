//! Choosing which variable to raise and by how much.

use nalgebra::DVector;
use serde::Serialize;

use crate::diagnostics::{self, CvEstimate, VarianceConvention, CN_MODERATE, CV_THRESHOLD, VIF_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::{auxiliary_regression, ols_fit, DesignMatrix};
use crate::raise::{
    check_lambda, cn_asymptote, cn_raised, cv_raised, raise_mse_curve, raise_variable, vif_asymptotes, vif_raised,
    RaiseBasis, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_STEP,
};

/// λ resolution of the threshold bisection.
pub const BISECTION_TOLERANCE: f64 = 1e-3;
const BRACKET_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub index: usize,
    pub label: String,
    pub vif: f64,
    pub cv: CvEstimate,
    pub t_statistic: f64,
    pub stars: String,
    pub significant: bool,
    /// `None` when `β̂ᵢ = 0`.
    pub lambda_min: Option<f64>,
    pub mse_at_lambda_min: Option<f64>,
    pub mse_guarantee_bound: Option<f64>,
    pub vif_asymptotes: Vec<f64>,
    pub cn_asymptote: f64,
}

impl CandidateRow {
    pub fn max_vif_asymptote(&self) -> f64 {
        self.vif_asymptotes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Recommendation {
    pub criterion: String,
    pub favored: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub candidates: Vec<CandidateRow>,
    pub raising_needed: bool,
    pub ols_mse: f64,
    pub recommendations: Vec<Recommendation>,
}

/// Per-candidate summary and the variables each selection criterion favors.
/// Criteria are reported side by side; none is treated as decisive.
pub fn variable_report(design: &DesignMatrix, response: &DVector<f64>, alpha: f64) -> Result<SelectionReport> {
    let ols = ols_fit(design, response)?;
    let critical = crate::model::critical_value(ols.df, alpha);
    let (cn, _) = diagnostics::condition_number(design)?;
    let mut candidates = Vec::with_capacity(design.p() - 1);
    for i in 1..design.p() {
        let aux = auxiliary_regression(design, i)?;
        let (lambda_min, mse_at_lambda_min, mse_guarantee_bound) = match raise_mse_curve(&ols, &aux) {
            Ok(c) => (Some(c.lambda_min), Some(c.mse_min()), c.guarantee_bound()),
            Err(Error::ZeroCoefficient) => (None, None, None),
            Err(e) => return Err(e),
        };
        let t = ols.t_statistics[i];
        candidates.push(CandidateRow {
            index: i,
            label: design.labels()[i].clone(),
            vif: aux.vif(),
            cv: CvEstimate::of(&design.column(i), VarianceConvention::Population),
            t_statistic: t,
            stars: ols.stars(i).to_string(),
            significant: t.abs() > critical,
            lambda_min,
            mse_at_lambda_min,
            mse_guarantee_bound,
            vif_asymptotes: vif_asymptotes(design, i)?,
            cn_asymptote: cn_asymptote(design, i)?,
        });
    }
    let raising_needed = candidates.iter().any(|c| c.vif > VIF_THRESHOLD || c.cv.is_worrying()) || cn >= CN_MODERATE;
    let recommendations = if raising_needed {
        recommend(&candidates, alpha)
    } else {
        vec![Recommendation {
            criterion: "no raising needed".into(),
            favored: vec![],
        }]
    };
    Ok(SelectionReport {
        candidates,
        raising_needed,
        ols_mse: ols.ols_mse(),
        recommendations,
    })
}

fn recommend(candidates: &[CandidateRow], alpha: f64) -> Vec<Recommendation> {
    let labels = |pred: &dyn Fn(&CandidateRow) -> bool| -> Vec<String> {
        candidates.iter().filter(|c| pred(c)).map(|c| c.label.clone()).collect()
    };
    let argbest = |key: &dyn Fn(&CandidateRow) -> Option<f64>, highest: bool| -> Vec<String> {
        let scored: Vec<(f64, &CandidateRow)> = candidates.iter().filter_map(|c| key(c).map(|k| (k, c))).collect();
        let best = scored
            .iter()
            .map(|(k, _)| *k)
            .reduce(|a, b| if (b > a) == highest { b } else { a });
        match best {
            Some(b) => scored.iter().filter(|(k, _)| *k == b).map(|(_, c)| c.label.clone()).collect(),
            None => vec![],
        }
    };
    let level = (1.0 - alpha) * 100.0;
    let mut out = Vec::new();
    let significant = labels(&|c| c.significant);
    if significant.is_empty() {
        out.push(Recommendation {
            criterion: format!("no coefficient significant at {level:.0}%: raise the variable judged least important"),
            favored: vec![],
        });
    } else {
        out.push(Recommendation {
            criterion: format!("coefficient significant at {level:.0}% (significance is kept after raising)"),
            favored: significant,
        });
    }
    out.push(Recommendation {
        criterion: "highest VIF".into(),
        favored: argbest(&|c| Some(c.vif), true),
    });
    out.push(Recommendation {
        criterion: "lowest maximum VIF asymptote".into(),
        favored: argbest(&|c| Some(c.max_vif_asymptote()), false),
    });
    out.push(Recommendation {
        criterion: "lowest CN asymptote".into(),
        favored: argbest(&|c| Some(c.cn_asymptote), false),
    });
    out.push(Recommendation {
        criterion: format!("all VIF asymptotes below {VIF_THRESHOLD} and CN asymptote below {CN_MODERATE}"),
        favored: labels(&|c| c.max_vif_asymptote() < VIF_THRESHOLD && c.cn_asymptote < CN_MODERATE),
    });
    out.push(Recommendation {
        criterion: "lowest |CV|".into(),
        favored: argbest(&|c| c.cv.value().map(f64::abs), false),
    });
    out.push(Recommendation {
        criterion: "lowest MSE at lambda_min".into(),
        favored: argbest(&|c| c.mse_at_lambda_min, false),
    });
    out.push(Recommendation {
        criterion: "lambda_min above 1 (MSE below OLS for every lambda > 0)".into(),
        favored: labels(&|c| c.lambda_min.is_some_and(|l| l > 1.0)),
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaCriterion {
    /// `λ_min = h`.
    MseMin,
    /// Smallest `λ` with every VIF below the threshold.
    VifThreshold(f64),
    /// Smallest `λ` with the condition number below the threshold.
    CnThreshold(f64),
    /// First grid `λ` with `|CV(X̃ᵢ)|` above the threshold.
    CvThreshold { threshold: f64, step: f64 },
    /// First grid `λ` from which successive norms differ by less than `tol` up to `max`.
    NormStabilization { step: f64, tol: f64, max: f64 },
}

impl LambdaCriterion {
    pub fn cv_default() -> Self {
        LambdaCriterion::CvThreshold {
            threshold: CV_THRESHOLD,
            step: DEFAULT_LAMBDA_STEP,
        }
    }

    pub fn norm_default() -> Self {
        LambdaCriterion::NormStabilization {
            step: DEFAULT_LAMBDA_STEP,
            tol: 1e-3,
            max: DEFAULT_LAMBDA_MAX,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")))
            }
        };
        match *self {
            LambdaCriterion::MseMin => Ok(()),
            LambdaCriterion::VifThreshold(t) | LambdaCriterion::CnThreshold(t) => positive(t, "threshold"),
            LambdaCriterion::CvThreshold { threshold, step } => {
                positive(threshold, "threshold")?;
                positive(step, "step")
            }
            LambdaCriterion::NormStabilization { step, tol, max } => {
                positive(step, "step")?;
                if tol.is_nan() || tol <= 0.0 {
                    return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
                }
                check_lambda(max)
            }
        }
    }
}

pub fn solve_lambda(
    design: &DesignMatrix,
    i: usize,
    response: &DVector<f64>,
    criterion: LambdaCriterion,
) -> Result<f64> {
    criterion.validate()?;
    design.check_regressor_index(i)?;
    match criterion {
        LambdaCriterion::MseMin => {
            let ols = ols_fit(design, response)?;
            Ok(raise_mse_curve(&ols, &auxiliary_regression(design, i)?)?.lambda_min)
        }
        LambdaCriterion::VifThreshold(tau) => {
            let limit = vif_asymptotes(design, i)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
            if limit >= tau {
                return Err(Error::Unattainable(format!(
                    "largest VIF tends to {limit:.6} when raising {}, not below {tau}",
                    design.labels()[i]
                )));
            }
            bisect_below(tau, |l| {
                let v = vif_raised(&raise_variable(design, i, l)?)?;
                Ok(v.into_iter().fold(f64::NEG_INFINITY, f64::max))
            })
        }
        LambdaCriterion::CnThreshold(tau) => {
            let limit = cn_asymptote(design, i)?;
            if limit >= tau {
                return Err(Error::Unattainable(format!(
                    "condition number tends to {limit:.6} when raising {}, not below {tau}",
                    design.labels()[i]
                )));
            }
            bisect_below(tau, |l| cn_raised(&raise_variable(design, i, l)?))
        }
        LambdaCriterion::CvThreshold { threshold, step } => cv_threshold_lambda(design, i, threshold, step),
        LambdaCriterion::NormStabilization { step, tol, max } => {
            norm_stabilization_lambda(design, i, response, step, tol, max)
        }
    }
}

/// Smallest `λ` (to `BISECTION_TOLERANCE`) with `f(λ) < tau`, for nonincreasing `f`
/// whose limit is already known to be below `tau`.
fn bisect_below(tau: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if f(0.0)? < tau {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? >= tau {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::Unattainable(format!("threshold {tau} not reached for lambda up to {BRACKET_LIMIT:e}")));
        }
    }
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// First `k·step` with `|CV(X̃ᵢ)| > threshold` (population variance).
///
/// The crossing has a closed form, `λ* = −1 + sqrt(1 + (τ²x̄² − var(Xᵢ))/var(eᵢ))`; the grid point
/// is located from it and then confirmed by direct evaluation on both sides.
pub fn cv_threshold_lambda(design: &DesignMatrix, i: usize, threshold: f64, step: f64) -> Result<f64> {
    let conv = VarianceConvention::Population;
    let aux = auxiliary_regression(design, i)?;
    let x = design.column(i);
    let mean = x.mean();
    if mean == 0.0 {
        return Err(Error::ZeroMean(format!("column `{}` has zero mean", design.labels()[i])));
    }
    let var_e = conv.variance(&aux.residuals);
    if var_e == 0.0 {
        return Err(Error::Unattainable("auxiliary residuals have zero variance".into()));
    }
    let q = (threshold * threshold * mean * mean - conv.variance(&x)) / var_e;
    let crossing = if q <= 0.0 { 0.0 } else { -1.0 + (1.0 + q).sqrt() };
    let above = |k: usize| -> Result<bool> {
        let raised = raise_variable(design, i, k as f64 * step)?;
        Ok(cv_raised(&raised, conv)?.abs() > threshold)
    };
    let mut k = (crossing / step).floor() as usize;
    while !above(k)? {
        k += 1;
    }
    while k > 0 && above(k - 1)? {
        k -= 1;
    }
    Ok(k as f64 * step)
}

/// First grid `λ = k·step` (`k ≥ 1`) from which every successive difference
/// `|‖β̂(λ)‖ − ‖β̂(λ − step)‖|` up to `max` stays below `tol`.
///
/// A turning point of the norm makes the difference dip below `tol` briefly; that is
/// not stabilization, so the scan runs to `max` and keeps the last crossing.
pub fn norm_stabilization_lambda(
    design: &DesignMatrix,
    i: usize,
    response: &DVector<f64>,
    step: f64,
    tol: f64,
    max: f64,
) -> Result<f64> {
    LambdaCriterion::NormStabilization { step, tol, max }.validate()?;
    let basis = RaiseBasis::new(design, i, response)?;
    let count = (max / step + 1e-9).floor() as usize;
    let mut prev = basis.coefficients(0.0).norm();
    let mut last_above = 0;
    for k in 1..=count {
        let norm = basis.coefficients(k as f64 * step).norm();
        if (norm - prev).abs() >= tol {
            last_above = k;
        }
        prev = norm;
    }
    if last_above == count {
        return Err(Error::NotStabilized { tol, upper: max });
    }
    Ok((last_above + 1) as f64 * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cement;
    use crate::model::build_design;
    use nalgebra::DMatrix;

    fn cement_design() -> (DesignMatrix, DVector<f64>) {
        let ds = cement();
        (build_design(&ds).unwrap(), ds.response().clone())
    }

    #[test]
    fn cement_report() {
        let (x, y) = cement_design();
        let rep = variable_report(&x, &y, 0.10).unwrap();
        assert!(rep.raising_needed);
        let lmin: Vec<f64> = rep.candidates.iter().map(|c| c.lambda_min.unwrap()).collect();
        for (l, e) in lmin.iter().zip([0.230547, 2.01277, 54.8438, 24.2248]) {
            assert!((l / e - 1.0).abs() < 1e-4);
        }
        let both = rep
            .recommendations
            .iter()
            .find(|r| r.criterion.starts_with("all VIF asymptotes"))
            .unwrap();
        assert_eq!(both.favored, ["X3", "X5"]);
        let sig = &rep.recommendations[0];
        assert_eq!(sig.favored, ["X2"]);
        let mse = rep.recommendations.iter().find(|r| r.criterion.starts_with("lowest MSE")).unwrap();
        assert_eq!(mse.favored, ["X5"]);
        let vif = rep.recommendations.iter().find(|r| r.criterion == "highest VIF").unwrap();
        assert_eq!(vif.favored, ["X5"]);
    }

    #[test]
    fn orthogonal_design_needs_no_raising() {
        let cols = DMatrix::from_row_slice(
            6,
            3,
            &[1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        );
        let x = DesignMatrix::new(cols, vec!["(Intercept)".into(), "a".into(), "b".into()]).unwrap();
        let y = DVector::from_vec(vec![1.0, 2.0, 0.5, 3.0, 1.0, 2.5]);
        let rep = variable_report(&x, &y, 0.05).unwrap();
        assert!(!rep.raising_needed);
        assert_eq!(rep.recommendations[0].criterion, "no raising needed");
        assert!(rep.candidates.iter().all(|c| (c.vif - 1.0).abs() < 1e-12));
    }

    #[test]
    fn vif_threshold_cement_x5() {
        let (x, y) = cement_design();
        let l = solve_lambda(&x, 4, &y, LambdaCriterion::VifThreshold(10.0)).unwrap();
        assert!((l - 4.595).abs() < 0.01);
        let at = vif_raised(&raise_variable(&x, 4, l).unwrap()).unwrap();
        assert!(at.iter().all(|&v| v < 10.0));
        let before = vif_raised(&raise_variable(&x, 4, l - 2.0 * BISECTION_TOLERANCE).unwrap()).unwrap();
        assert!(before.iter().any(|&v| v >= 10.0));
    }

    #[test]
    fn cn_threshold_cement_x5() {
        let (x, y) = cement_design();
        let l = solve_lambda(&x, 4, &y, LambdaCriterion::CnThreshold(20.0)).unwrap();
        assert!((l - 15.93).abs() < 0.05);
        let cn = cn_raised(&raise_variable(&x, 4, l).unwrap()).unwrap();
        assert!(cn < 20.0 && cn > 19.99);
    }

    #[test]
    fn unattainable_when_asymptote_too_high() {
        let (x, y) = cement_design();
        assert!(matches!(
            solve_lambda(&x, 1, &y, LambdaCriterion::VifThreshold(10.0)),
            Err(Error::Unattainable(_))
        ));
        assert!(matches!(
            solve_lambda(&x, 1, &y, LambdaCriterion::CnThreshold(20.0)),
            Err(Error::Unattainable(_))
        ));
    }

    #[test]
    fn mse_min_matches_curve() {
        let (x, y) = cement_design();
        let ols = ols_fit(&x, &y).unwrap();
        let curve = raise_mse_curve(&ols, &auxiliary_regression(&x, 2).unwrap()).unwrap();
        assert_eq!(solve_lambda(&x, 2, &y, LambdaCriterion::MseMin).unwrap(), curve.lambda_min);
    }

    #[test]
    fn norm_stabilization_holds_from_the_returned_lambda() {
        let (x, y) = cement_design();
        let (step, tol) = (0.1, 1e-3);
        let lambda = norm_stabilization_lambda(&x, 4, &y, step, tol, 40.0).unwrap();
        let basis = RaiseBasis::new(&x, 4, &y).unwrap();
        let diff = |k: usize| {
            let l = k as f64 * step;
            (basis.coefficients(l).norm() - basis.coefficients(l - step).norm()).abs()
        };
        let k0 = (lambda / step).round() as usize;
        assert!(diff(k0 - 1) >= tol);
        assert!((k0..=400).all(|k| diff(k) < tol));
    }

    #[test]
    fn norm_stabilization_with_huge_tol_is_first_step() {
        let (x, y) = cement_design();
        assert_eq!(norm_stabilization_lambda(&x, 4, &y, 0.1, 1e300, 40.0).unwrap(), 0.1);
        assert!(matches!(
            norm_stabilization_lambda(&x, 4, &y, 0.1, 1e-12, 1.0),
            Err(Error::NotStabilized { .. })
        ));
    }

    #[test]
    fn invalid_criteria_rejected() {
        let (x, y) = cement_design();
        assert!(matches!(
            solve_lambda(&x, 4, &y, LambdaCriterion::VifThreshold(-1.0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            solve_lambda(&x, 0, &y, LambdaCriterion::MseMin),
            Err(Error::InvalidIndex { .. })
        ));
    }
}
