//! Student t distribution through the regularized incomplete beta function.

use statrs::function::beta::beta_reg;

/// `P(|T| >= |t|)` for `T ~ t(df)`.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Cumulative distribution function of the t distribution.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile function: the `t` with `t_cdf(t, df) = prob`.
pub fn t_quantile(prob: f64, df: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability must lie in (0, 1)");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if prob == 0.5 {
        return 0.0;
    }
    if prob < 0.5 {
        return -t_quantile(1.0 - prob, df);
    }
    // Upper tail probability as target; comparing tails keeps precision for prob near 1.
    let target = 2.0 * (1.0 - prob);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_two_sided_p(hi, df) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_two_sided_p(mid, df) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Upper-tail probability of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_upper_p(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let x = d2 / (d2 + d1 * f);
    beta_reg(d2 / 2.0, d1 / 2.0, x).clamp(0.0, 1.0)
}
