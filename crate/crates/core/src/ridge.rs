//! Ridge estimator `(XᵗX + kI)⁻¹XᵗY`, the HKB choice of `k` and a plug-in MSE.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, spd_solve};
use crate::model::{centered_ss, DesignMatrix, FitSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataForm {
    /// The design as given, intercept included.
    Raw,
    /// Regressors mapped to `(x − x̄)/sqrt(n·var)`, response centered, no intercept.
    Standardized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub k: f64,
    pub form: DataForm,
    pub labels: Vec<String>,
    pub coefficients: DVector<f64>,
    pub mse_estimate: f64,
}

/// The matrix and response a ridge fit actually operates on.
#[derive(Debug, Clone)]
pub struct RidgeProblem {
    pub form: DataForm,
    pub labels: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Residual degrees of freedom of the underlying model with intercept.
    pub df: usize,
}

impl RidgeProblem {
    pub fn new(design: &DesignMatrix, response: &DVector<f64>, form: DataForm) -> Result<Self> {
        let df = design.n() - design.p();
        match form {
            DataForm::Raw => Ok(Self {
                form,
                labels: design.labels().to_vec(),
                x: design.columns().clone(),
                y: response.clone(),
                df,
            }),
            DataForm::Standardized => {
                let mut x = design.columns().columns(1, design.p() - 1).into_owned();
                for (j, mut col) in x.column_iter_mut().enumerate() {
                    let ss = centered_ss(&col.clone_owned());
                    if ss == 0.0 {
                        return Err(Error::ZeroVariance(format!("column `{}` is constant", design.labels()[j + 1])));
                    }
                    let mean = col.mean();
                    col.add_scalar_mut(-mean);
                    col /= ss.sqrt();
                }
                let y = response.add_scalar(-response.mean());
                Ok(Self {
                    form,
                    labels: design.labels()[1..].to_vec(),
                    x,
                    y,
                    df,
                })
            }
        }
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.x.transpose() * &self.x
    }

    pub fn coefficients(&self, k: f64) -> Result<DVector<f64>> {
        check_k(k)?;
        if k == 0.0 {
            return Ok(least_squares(&self.x, &self.y)?.coefficients);
        }
        let p = self.x.ncols();
        let a = self.gram() + DMatrix::identity(p, p) * k;
        let rhs = self.x.transpose() * &self.y;
        Ok(spd_solve(&a, &DMatrix::from_column_slice(p, 1, rhs.as_slice()))?.column(0).into_owned())
    }

    pub fn plug_in(&self) -> Result<RidgeMse> {
        let ls = least_squares(&self.x, &self.y)?;
        let sigma2 = ls.residuals.norm_squared() / self.df as f64;
        let eig = crate::linalg::symmetrize(&self.gram()).symmetric_eigen();
        let rotated = eig.eigenvectors.transpose() * &ls.coefficients;
        Ok(RidgeMse {
            sigma2,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            rotated_beta: rotated.iter().copied().collect(),
        })
    }
}

fn check_k(k: f64) -> Result<()> {
    if k >= 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeK(k))
    }
}

/// `σ̂²·Σ ξⱼ/(ξⱼ+k)² + k²·β̂ᵗ(XᵗX+kI)⁻²β̂`, evaluated in the Gram eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeMse {
    pub sigma2: f64,
    pub eigenvalues: Vec<f64>,
    /// `Qᵗβ̂` for the Gram eigenvectors `Q`.
    pub rotated_beta: Vec<f64>,
}

impl RidgeMse {
    pub fn at(&self, k: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.rotated_beta)
            .map(|(&xi, &b)| {
                let d = (xi + k) * (xi + k);
                (self.sigma2 * xi + k * k * b * b) / d
            })
            .sum()
    }
}

pub fn ridge_fit(design: &DesignMatrix, response: &DVector<f64>, k: f64, form: DataForm) -> Result<RidgeFit> {
    let problem = RidgeProblem::new(design, response, form)?;
    let coefficients = problem.coefficients(k)?;
    Ok(RidgeFit {
        k,
        form,
        labels: problem.labels.clone(),
        coefficients,
        mse_estimate: problem.plug_in()?.at(k),
    })
}

pub fn ridge_mse(design: &DesignMatrix, response: &DVector<f64>, k: f64, form: DataForm) -> Result<f64> {
    check_k(k)?;
    Ok(RidgeProblem::new(design, response, form)?.plug_in()?.at(k))
}

/// Hoerl–Kennard–Baldwin `k = p·σ̂²/β̂ᵗβ̂`, all `p` coefficients included.
pub fn hkb_k(ols: &FitSummary) -> Result<f64> {
    if ols.sigma2_hat == 0.0 {
        return Ok(0.0);
    }
    let norm_sq = ols.coefficients.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::ZeroCoefficientNorm);
    }
    Ok(ols.coefficients.len() as f64 * ols.sigma2_hat / norm_sq)
}

/// Grid argmin of the plug-in MSE, with the evaluated curve. Ties keep the first point.
pub fn ridge_mse_min(
    design: &DesignMatrix,
    response: &DVector<f64>,
    form: DataForm,
    grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &k in grid {
        check_k(k)?;
    }
    let mse = RidgeProblem::new(design, response, form)?.plug_in()?;
    let curve: Vec<(f64, f64)> = grid.iter().map(|&k| (k, mse.at(k))).collect();
    let best = curve
        .iter()
        .copied()
        .reduce(|best, pt| if pt.1 < best.1 { pt } else { best })
        .expect("non-empty grid");
    Ok((best.0, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cement;
    use crate::model::{build_design, ols_fit};
    use approx::assert_relative_eq;

    fn cement_design() -> (DesignMatrix, DVector<f64>) {
        let ds = cement();
        (build_design(&ds).unwrap(), ds.response().clone())
    }

    #[test]
    fn zero_k_is_ols() {
        let (x, y) = cement_design();
        let ols = ols_fit(&x, &y).unwrap();
        let r = ridge_fit(&x, &y, 0.0, DataForm::Raw).unwrap();
        assert_eq!(r.coefficients, ols.coefficients);
        assert_relative_eq!(r.mse_estimate, ols.ols_mse(), max_relative = 1e-8);
    }

    #[test]
    fn cement_table_two_raw() {
        let (x, y) = cement_design();
        let r1 = ridge_fit(&x, &y, 0.0077, DataForm::Raw).unwrap();
        for (b, e) in r1.coefficients.iter().zip([8.5642, 2.1048, 1.0651, 0.6683, 0.3998]) {
            assert!((b - e).abs() < 5e-4, "{b} vs {e}");
        }
        let r2 = ridge_fit(&x, &y, 0.0015, DataForm::Raw).unwrap();
        for (b, e) in r2.coefficients.iter().zip([27.9917, 1.9051, 0.8648, 0.4640, 0.2036]) {
            assert!((b - e).abs() < 5e-4, "{b} vs {e}");
        }
        // The plug-in MSE happens to reproduce the raw-data MSE column as well.
        assert!((r1.mse_estimate - 2991.8).abs() < 0.05);
        assert!((r2.mse_estimate - 2171.295).abs() < 0.05);
    }

    #[test]
    fn cement_raw_grid_argmin() {
        let (x, y) = cement_design();
        let grid: Vec<f64> = (0..=500).map(|j| j as f64 * 1e-4).collect();
        let (k, curve) = ridge_mse_min(&x, &y, DataForm::Raw, &grid).unwrap();
        assert_relative_eq!(k, 0.0015, max_relative = 1e-9);
        assert_eq!(curve.len(), 501);
    }

    #[test]
    fn cement_standardized_k_20_6() {
        let (x, y) = cement_design();
        let r = ridge_fit(&x, &y, 20.6, DataForm::Standardized).unwrap();
        for (b, e) in r.coefficients.iter().zip([1.6757, 1.8592, -1.211, -1.8771]) {
            assert!((b - e).abs() < 5e-4, "{b} vs {e}");
        }
        assert_eq!(r.labels, ["X2", "X3", "X4", "X5"]);
    }

    #[test]
    fn hkb_on_cement() {
        let (x, y) = cement_design();
        let k = hkb_k(&ols_fit(&x, &y).unwrap()).unwrap();
        assert!((k - 0.0077).abs() < 5e-5);
    }

    #[test]
    fn hkb_hand_formula() {
        let (x, y) = cement_design();
        let mut ols = ols_fit(&x, &y).unwrap();
        ols.coefficients = DVector::from_vec(vec![1.0, 2.0, 0.0, -2.0, 4.0]);
        ols.sigma2_hat = 0.5;
        assert_relative_eq!(hkb_k(&ols).unwrap(), 5.0 * 0.5 / 25.0, max_relative = 1e-15);
        ols.sigma2_hat = 0.0;
        assert_eq!(hkb_k(&ols).unwrap(), 0.0);
        ols.sigma2_hat = 1.0;
        ols.coefficients.fill(0.0);
        assert_eq!(hkb_k(&ols).unwrap_err(), Error::ZeroCoefficientNorm);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = cement_design();
        assert_eq!(ridge_fit(&x, &y, -1.0, DataForm::Raw).unwrap_err(), Error::NegativeK(-1.0));
        assert_eq!(ridge_mse_min(&x, &y, DataForm::Raw, &[]).unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn continuity_at_zero() {
        let (x, y) = cement_design();
        let ols = ols_fit(&x, &y).unwrap().coefficients;
        let r = ridge_fit(&x, &y, 1e-12, DataForm::Raw).unwrap().coefficients;
        assert!((r - &ols).norm() < 1e-6 * ols.norm());
    }
}
