#![allow(dead_code)]

use threshold_diffusion::quad::{integrate_finite, QuadSettings};
use threshold_diffusion::DiffusionParams;

pub fn params(mu1: f64, mu2: f64, s1: f64, s2: f64, a: f64) -> DiffusionParams {
    DiffusionParams::new(mu1, mu2, s1, s2, a).unwrap()
}

/// Six parameter sets covering every drift-sign combination and σ ratios 1..4.
pub fn battery() -> Vec<DiffusionParams> {
    vec![
        params(1.0, -1.0, 1.0, 2.0, 0.0),
        params(-1.0, 1.0, 1.0, 1.0, 0.0),
        params(0.5, 0.5, 2.0, 1.0, 0.3),
        params(-0.5, -1.0, 1.0, 3.0, -0.2),
        params(0.0, 0.0, 1.0, 4.0, 0.0),
        params(1.5, -0.5, 0.5, 1.0, 1.0),
    ]
}

pub fn tight() -> QuadSettings {
    QuadSettings {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        ..QuadSettings::default()
    }
}

/// Integrates `f` over `[lo, hi]` with a forced break at `cut`, where the
/// integrand may jump.
pub fn integrate_split(f: impl Fn(f64) -> f64, lo: f64, cut: f64, hi: f64, s: &QuadSettings) -> f64 {
    let mut v = 0.0;
    if cut > lo {
        v += integrate_finite(&f, lo, cut.min(hi), s).unwrap().value;
    }
    if cut < hi {
        v += integrate_finite(&f, cut.max(lo), hi, s).unwrap().value;
    }
    v
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Standard normal CDF via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
