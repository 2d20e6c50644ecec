#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raisereg::model::{build_design, Dataset, DesignMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one draw per call is plenty here.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Random full-rank dataset with correlated regressors and nonzero column means.
/// `cv` scales the spread of each regressor relative to its mean.
pub fn random_dataset(seed: u64, cv: f64) -> Dataset {
    let mut r = rng(seed);
    let n = r.gen_range(10..=30);
    let k = r.gen_range(2..=4);
    let base: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let mut x = DMatrix::zeros(n, k);
    for j in 0..k {
        let mean: f64 = r.gen_range(5.0..50.0) * if r.gen_bool(0.2) { -1.0 } else { 1.0 };
        let load = r.gen_range(0.0..0.95);
        for t in 0..n {
            let z = load * base[t] + (1.0 - load * load).sqrt() * normal(&mut r);
            x[(t, j)] = mean + cv * mean.abs() * z;
        }
    }
    let beta: Vec<f64> = (0..=k).map(|_| r.gen_range(-3.0..3.0)).collect();
    let noise = r.gen_range(0.1..2.0);
    let y = DVector::from_fn(n, |t, _| {
        beta[0] + (0..k).map(|j| beta[j + 1] * x[(t, j)]).sum::<f64>() + noise * normal(&mut r)
    });
    let names = (0..k).map(|j| format!("X{}", j + 2)).collect();
    Dataset::new(names, x, "Y", y).expect("valid random dataset")
}

pub fn random_design(seed: u64) -> (DesignMatrix, DVector<f64>) {
    let d = random_dataset(seed, 0.3);
    (build_design(&d).unwrap(), d.response().clone())
}

pub fn cement_design() -> (DesignMatrix, DVector<f64>) {
    let d = raisereg::data::cement();
    (build_design(&d).unwrap(), d.response().clone())
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// `|a − b| ≤ tol·max(1, scale)`.
pub fn close_scaled(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.abs().max(1.0)
}
