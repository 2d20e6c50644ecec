//! VIF, condition number, coefficient of variation and correlations, plus
//! the worry classification built on them.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{auxiliary_regression, build_design, centered_ss, Dataset, DesignMatrix};

pub const VIF_THRESHOLD: f64 = 10.0;
pub const CN_MODERATE: f64 = 20.0;
pub const CN_STRONG: f64 = 30.0;
/// Below this `|CV|` a regressor is nearly collinear with the intercept.
pub const CV_THRESHOLD: f64 = 0.1002506;
/// `|CV|` above this is reported as divergent rather than as rounding noise.
pub const CV_DIVERGENCE: f64 = 1e10;

/// Divisor used for variances: `n` or `n − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceConvention {
    Population,
    Sample,
}

impl VarianceConvention {
    pub fn variance(self, values: &DVector<f64>) -> f64 {
        let n = values.len() as f64;
        let ss = centered_ss(values);
        match self {
            VarianceConvention::Population => ss / n,
            VarianceConvention::Sample => ss / (n - 1.0),
        }
    }
}

/// Signed `sd/mean` of a column. Errors on an exactly zero mean.
pub fn column_cv(values: &DVector<f64>, convention: VarianceConvention) -> Result<f64> {
    let mean = values.mean();
    if mean == 0.0 {
        return Err(Error::ZeroMean("coefficient of variation undefined".into()));
    }
    Ok(convention.variance(values).sqrt() / mean)
}

/// A coefficient of variation that may diverge (zero-mean columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvEstimate {
    Finite(f64),
    Divergent,
}

impl CvEstimate {
    pub fn of(values: &DVector<f64>, convention: VarianceConvention) -> Self {
        match column_cv(values, convention) {
            Ok(cv) if cv.abs() <= CV_DIVERGENCE => CvEstimate::Finite(cv),
            _ => CvEstimate::Divergent,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            CvEstimate::Finite(v) => Some(v),
            CvEstimate::Divergent => None,
        }
    }

    /// Non-essential worry: `|CV| < CV_THRESHOLD`. Divergent is never worrying.
    pub fn is_worrying(self) -> bool {
        matches!(self, CvEstimate::Finite(v) if v.abs() < CV_THRESHOLD)
    }
}

impl Serialize for CvEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CvEstimate::Finite(v) => s.serialize_f64(*v),
            CvEstimate::Divergent => s.serialize_str("divergent"),
        }
    }
}

/// `VIF(i)` for every regressor column, in design order.
pub fn vif(design: &DesignMatrix) -> Result<Vec<f64>> {
    (1..design.p())
        .map(|i| auxiliary_regression(design, i).map(|aux| aux.vif()))
        .collect()
}

/// `sqrt(ξ_max/ξ_min)` of the unit-length-scaled Gram matrix, with its spectrum (descending).
pub fn condition_number_of(columns: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let sv = linalg::scaled_singular_values(columns)?;
    let smallest = *sv.last().expect("non-empty design");
    if smallest <= 0.0 {
        return Err(Error::RankDeficient {
            smallest_singular_value: smallest,
        });
    }
    let eigenvalues = sv.iter().map(|s| s * s).collect();
    Ok((sv[0] / smallest, eigenvalues))
}

pub fn condition_number(design: &DesignMatrix) -> Result<(f64, Vec<f64>)> {
    condition_number_of(design.columns())
}

/// Population-variance CV of each regressor.
pub fn coefficient_of_variation(dataset: &Dataset) -> Result<Vec<f64>> {
    dataset
        .regressors()
        .column_iter()
        .zip(dataset.names())
        .map(|(col, name)| {
            column_cv(&col.into_owned(), VarianceConvention::Population)
                .map_err(|_| Error::ZeroMean(format!("column `{name}` has zero mean")))
        })
        .collect()
}

/// Pearson correlations over `[Y, X₂, …, X_p]`.
pub fn correlation_matrix(dataset: &Dataset) -> Result<DMatrix<f64>> {
    let n = dataset.n();
    let k = dataset.p();
    let mut data = DMatrix::zeros(n, k);
    data.set_column(0, dataset.response());
    data.columns_mut(1, k - 1).copy_from(dataset.regressors());
    let labels: Vec<&str> = std::iter::once(dataset.response_name())
        .chain(dataset.names().iter().map(String::as_str))
        .collect();

    let mut centered = data.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let ss = centered_ss(&data.column(j).into_owned());
        if ss == 0.0 {
            return Err(Error::ZeroVariance(format!("column `{}` is constant", labels[j])));
        }
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        col /= ss.sqrt();
    }
    let mut corr = centered.transpose() * &centered;
    for j in 0..k {
        corr[(j, j)] = 1.0;
        for l in 0..j {
            let r = corr[(j, l)].clamp(-1.0, 1.0);
            corr[(j, l)] = r;
            corr[(l, j)] = r;
        }
    }
    Ok(corr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    /// Regressor labels, matching `vif` and `cv`.
    pub labels: Vec<String>,
    pub response_name: String,
    /// Bordered by the response: row/column 0 is `Y`.
    pub correlation: DMatrix<f64>,
    pub vif: Vec<f64>,
    pub condition_number: f64,
    pub eigenvalues: Vec<f64>,
    pub cv: Vec<CvEstimate>,
}

pub fn diagnose(dataset: &Dataset) -> Result<DiagnosticsReport> {
    let design = build_design(dataset)?;
    let (condition_number, eigenvalues) = condition_number(&design)?;
    let cv = dataset
        .regressors()
        .column_iter()
        .map(|c| CvEstimate::of(&c.into_owned(), VarianceConvention::Population))
        .collect();
    Ok(DiagnosticsReport {
        labels: dataset.names().to_vec(),
        response_name: dataset.response_name().to_string(),
        correlation: correlation_matrix(dataset)?,
        vif: vif(&design)?,
        condition_number,
        eigenvalues,
        cv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CnLevel {
    None,
    Moderate,
    Strong,
}

impl CnLevel {
    pub fn of(cn: f64) -> Self {
        if cn < CN_MODERATE {
            CnLevel::None
        } else if cn <= CN_STRONG {
            CnLevel::Moderate
        } else {
            CnLevel::Strong
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flags {
    pub vif_worry: Vec<bool>,
    pub cn_level: CnLevel,
    pub cv_worry: Vec<bool>,
    /// Some VIF above its threshold.
    pub essential: bool,
    /// Some `|CV|` below its threshold, or a strong CN that no VIF explains.
    pub non_essential: bool,
    pub narrative: String,
}

pub fn classify(report: &DiagnosticsReport) -> Flags {
    let vif_worry: Vec<bool> = report.vif.iter().map(|&v| v > VIF_THRESHOLD).collect();
    let cv_worry: Vec<bool> = report.cv.iter().map(|c| c.is_worrying()).collect();
    let cn_level = CnLevel::of(report.condition_number);
    let essential = vif_worry.iter().any(|&w| w);
    let non_essential = cv_worry.iter().any(|&w| w) || (!essential && cn_level == CnLevel::Strong);

    let pick = |flags: &[bool]| -> Vec<&str> {
        report
            .labels
            .iter()
            .zip(flags)
            .filter(|(_, &f)| f)
            .map(|(l, _)| l.as_str())
            .collect()
    };
    let mut lines = Vec::new();
    if essential {
        lines.push(format!(
            "worrying essential multicollinearity: VIF > {VIF_THRESHOLD} for {}",
            pick(&vif_worry).join(", ")
        ));
    }
    if non_essential {
        let low_cv = pick(&cv_worry);
        if low_cv.is_empty() {
            lines.push("worrying non-essential multicollinearity: CN > 30 while every VIF is below 10".into());
        } else {
            lines.push(format!(
                "worrying non-essential multicollinearity: |CV| < {CV_THRESHOLD} for {}",
                low_cv.join(", ")
            ));
        }
    }
    match cn_level {
        CnLevel::None => {}
        CnLevel::Moderate => lines.push(format!("moderate condition number ({:.4})", report.condition_number)),
        CnLevel::Strong => lines.push(format!("strong condition number ({:.4})", report.condition_number)),
    }
    if lines.is_empty() {
        lines.push("no worrying multicollinearity detected".into());
    }
    Flags {
        vif_worry,
        cn_level,
        cv_worry,
        essential,
        non_essential,
        narrative: lines.join("; "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cement;
    use approx::assert_relative_eq;

    fn dataset(cols: &[&[f64]], y: &[f64]) -> Dataset {
        let n = y.len();
        let x = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]);
        let names = (0..cols.len()).map(|j| format!("x{}", j + 2)).collect();
        Dataset::new(names, x, "y", DVector::from_column_slice(y)).unwrap()
    }

    #[test]
    fn cement_table_one() {
        let rep = diagnose(&cement()).unwrap();
        for (v, e) in rep.vif.iter().zip([38.49621, 254.42317, 46.868399, 282.5128]) {
            assert_relative_eq!(*v, e, max_relative = 1e-3);
        }
        assert!((rep.condition_number - 249.5783).abs() < 0.01);
        for (c, e) in rep.cv.iter().zip([0.7574338, 0.3104718, 0.5228758, 0.5360508]) {
            assert!((c.value().unwrap() - e).abs() < 1e-5);
        }
        assert!((rep.correlation[(2, 4)] + 0.9729550).abs() < 1e-6);
        let flags = classify(&rep);
        assert!(flags.essential);
        assert!(!flags.non_essential);
        assert_eq!(flags.cn_level, CnLevel::Strong);
    }

    #[test]
    fn orthogonal_centered_regressors_have_unit_vif() {
        let ds = dataset(
            &[&[1.0, -1.0, 1.0, -1.0, 0.0, 0.0], &[1.0, 1.0, -1.0, -1.0, 0.0, 0.0]],
            &[1.0, 2.0, 0.5, 3.0, 1.0, 2.5],
        );
        let design = build_design(&ds).unwrap();
        for v in vif(&design).unwrap() {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn condition_number_from_known_spectrum() {
        // Unit columns with inner product 0.6: Gram eigenvalues 1.6 and 0.4, ratio 4.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.0, 0.8]);
        let (cn, ev) = condition_number_of(&x).unwrap();
        assert_relative_eq!(cn, 2.0, epsilon = 1e-12);
        assert_relative_eq!(ev[0], 1.6, epsilon = 1e-12);
        assert_relative_eq!(ev[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_columns_have_unit_cn() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
        assert_relative_eq!(condition_number_of(&x).unwrap().0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn correlation_with_negation() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0];
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let ds = dataset(&[&a, &b[..]], &[0.0, 1.0, 3.0, 2.0, 7.0]);
        let corr = correlation_matrix(&ds).unwrap();
        assert_relative_eq!(corr[(1, 2)], -1.0, epsilon = 1e-15);
        assert_eq!(corr[(1, 1)], 1.0);
    }

    #[test]
    fn constant_column_has_zero_variance_error() {
        let ds = dataset(&[&[2.0, 2.0, 2.0, 2.0], &[1.0, 2.0, 3.0, 5.0]], &[1.0, 2.0, 4.0, 3.0]);
        assert!(matches!(correlation_matrix(&ds), Err(Error::ZeroVariance(_))));
        let cv = coefficient_of_variation(&ds).unwrap();
        assert_eq!(cv[0], 0.0);
    }

    #[test]
    fn cv_is_scale_invariant() {
        let x = DVector::from_vec(vec![3.0, 5.0, 4.0, 9.0, 1.0]);
        let base = column_cv(&x, VarianceConvention::Population).unwrap();
        let scaled = column_cv(&(&x * 7.5), VarianceConvention::Population).unwrap();
        assert_relative_eq!(base, scaled, max_relative = 1e-14);
        let neg = column_cv(&(-&x), VarianceConvention::Population).unwrap();
        assert_relative_eq!(neg, -base, max_relative = 1e-14);
    }

    #[test]
    fn zero_mean_cv_is_divergent() {
        let x = DVector::from_vec(vec![-1.0, 1.0, -2.0, 2.0]);
        assert!(column_cv(&x, VarianceConvention::Population).is_err());
        assert_eq!(CvEstimate::of(&x, VarianceConvention::Population), CvEstimate::Divergent);
        assert_eq!(serde_json::to_string(&CvEstimate::Divergent).unwrap(), "\"divergent\"");
    }

    fn report(vif: Vec<f64>, cn: f64, cv: Vec<f64>) -> DiagnosticsReport {
        let k = vif.len();
        DiagnosticsReport {
            labels: (0..k).map(|j| format!("x{j}")).collect(),
            response_name: "y".into(),
            correlation: DMatrix::identity(k + 1, k + 1),
            vif,
            condition_number: cn,
            eigenvalues: vec![],
            cv: cv.into_iter().map(CvEstimate::Finite).collect(),
        }
    }

    #[test]
    fn all_clear_has_no_flags() {
        let flags = classify(&report(vec![1.0, 1.0], 1.0, vec![1.0, 1.0]));
        assert!(!flags.essential && !flags.non_essential);
        assert_eq!(flags.cn_level, CnLevel::None);
        assert_eq!(flags.narrative, "no worrying multicollinearity detected");
    }

    #[test]
    fn low_cv_with_high_cn_is_non_essential() {
        let flags = classify(&report(vec![1.3, 2.1, 1.1], 39.35, vec![0.07033, 1.2, -0.9]));
        assert!(!flags.essential);
        assert!(flags.non_essential);
        assert_eq!(flags.cv_worry, vec![true, false, false]);
        assert_eq!(flags.cn_level, CnLevel::Strong);
    }

    #[test]
    fn cn_levels() {
        assert_eq!(CnLevel::of(19.99), CnLevel::None);
        assert_eq!(CnLevel::of(20.0), CnLevel::Moderate);
        assert_eq!(CnLevel::of(30.0), CnLevel::Moderate);
        assert_eq!(CnLevel::of(30.01), CnLevel::Strong);
    }
}
