//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerics: the leg is recomputed in
//! `f64` from raw parameter values, the annotation statistics by direct
//! counting, and the correlations from their textbook formulas.
#![allow(dead_code)]

pub mod annotation;
pub mod checks;
pub mod fixtures;
pub mod gradcheck;
pub mod metrics;
pub mod synthetic;

/// Relative error with a floor on the denominator, so that gradients close
/// to zero are compared on an absolute scale of `floor`.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central difference of `f` around `x[i]`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, step: f64) -> f64 {
    let mut v = x.to_vec();
    v[i] = x[i] + step;
    let up = f(&v);
    v[i] = x[i] - step;
    let down = f(&v);
    (up - down) / (2.0 * step)
}
