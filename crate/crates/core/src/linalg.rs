//! Dense linear-algebra helpers shared by the estimators.
//!
//! Least squares always goes through a Householder QR of the design; normal
//! equations are only formed where a symmetric positive definite system is
//! the object of interest (ridge).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest singular value of the unit-length-scaled design below which the
/// design is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Scale every column to unit Euclidean length.
pub fn unit_scale_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::RankDeficient {
                smallest_singular_value: 0.0,
            });
        }
        col /= norm;
    }
    Ok(out)
}

/// Singular values of the unit-scaled matrix, descending.
pub fn scaled_singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let scaled = unit_scale_columns(m)?;
    let mut sv: Vec<f64> = scaled.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn check_full_rank(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() < m.ncols() {
        return Err(Error::RankDeficient {
            smallest_singular_value: 0.0,
        });
    }
    let sv = scaled_singular_values(m)?;
    let smallest = sv.last().copied().unwrap_or(0.0);
    if smallest < RANK_TOLERANCE {
        return Err(Error::RankDeficient {
            smallest_singular_value: smallest,
        });
    }
    Ok(())
}

/// Least-squares solution of `x b = y` with the pieces inference needs.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(XᵗX)⁻¹`, assembled as `R⁻¹R⁻ᵗ` from the QR factor.
    pub inverse_gram: DMatrix<f64>,
}

pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows but response has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    check_full_rank(x)?;
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty = qty.rows(0, p).into_owned();
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient {
            smallest_singular_value: 0.0,
        })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::RankDeficient {
            smallest_singular_value: 0.0,
        })?;
    let inverse_gram = &r_inv * r_inv.transpose();
    let residuals = y - x * &coefficients;
    Ok(LeastSquares {
        coefficients,
        residuals,
        inverse_gram,
    })
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = symmetrize(m);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solve `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = symmetrize(a).cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}

pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = symmetrize(a).cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.inverse())
}

/// Copy of `m` without column `j`.
pub fn drop_column(m: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    m.clone().remove_column(j)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
