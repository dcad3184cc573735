//! Transition densities `p(t; x, z)`, the threshold jump, the stationary
//! law, and the closed forms used as oracles.
//!
//! For a start `x >= a` the density is
//!
//! * `z >= a`: `(2/s2^2) e^{2 m2 (z-a)/s2^2} K(0, (z-a)+(x-a))` plus the
//!   Gaussian pair of a drifted Brownian motion killed at `a`;
//! * `z < a`: `(2/s1^2) e^{2 m1 (z-a)/s1^2} K(a-z, x-a)`,
//!
//! where `K(u, v) = int_0^inf conv(t; (b+u)/s1, -m1/s1, (b+v)/s2, m2/s2) db`
//! and `conv` is [`crate::quad::convolve_h_pair`]. Starts below `a` use the
//! reflection `X -> -X`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{std_normal_pdf, DiffusionParams};
use crate::potential::potential_q_to_zero_limit;
use crate::quad::{convolve_scaled, try_integrate_semi_infinite, QuadSettings};

/// Evaluation request for [`transition_density`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityQuery {
    pub params: DiffusionParams,
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub settings: QuadSettings,
}

impl DensityQuery {
    pub fn evaluate(&self) -> Result<f64> {
        transition_density(&self.params, self.t, self.x, self.z, &self.settings)
    }
}

/// Which side of the threshold an evaluation at `z = a` is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Above,
    Below,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("t must be positive (got {t})")))
    }
}

fn check_states(x: f64, z: f64) -> Result<()> {
    if x.is_finite() && z.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("x and z must be finite"))
    }
}

/// Tolerances for the inner (time) convolution. It is normalized to O(1),
/// so these are effectively relative.
fn inner_settings(outer: &QuadSettings) -> QuadSettings {
    QuadSettings {
        abs_tol: 1e-14,
        rel_tol: 1e-10,
        ..*outer
    }
}

/// `exp(ln_weight) K(u, v)` for a start at or above the threshold.
fn cross_integral(
    p: &DiffusionParams,
    t: f64,
    u: f64,
    v: f64,
    ln_weight: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    let (m1, m2, s1, s2) = (p.mu1(), p.mu2(), p.sigma1(), p.sigma2());
    let inner = inner_settings(settings);
    let d = p.deltas(1.0 / t)?;
    let rate = d.d2_plus + d.d1_minus;
    let integrand = |b: f64| {
        convolve_scaled(t, (b + u) / s1, -m1 / s1, (b + v) / s2, m2 / s2, ln_weight, &inner)
    };
    Ok(try_integrate_semi_infinite(integrand, 0.0, rate, settings)?.value)
}

/// Density of a drifted Brownian motion started at `x > a` that reaches
/// `z > a` at time `t` without touching `a`.
fn killed_gaussian(mu: f64, sigma: f64, a: f64, t: f64, x: f64, z: f64) -> f64 {
    let (d, e) = (x - a, z - a);
    if d <= 0.0 || e <= 0.0 {
        return 0.0;
    }
    let sd = sigma * t.sqrt();
    let free = std_normal_pdf((z - x - mu * t) / sd) / sd;
    free * -(-2.0 * d * e / (t * sigma * sigma)).exp_m1()
}

/// Density for a start at or above the threshold; `side` picks the branch
/// used when `z = a`.
fn upper_start(
    p: &DiffusionParams,
    t: f64,
    x: f64,
    z: f64,
    side: Side,
    settings: &QuadSettings,
) -> Result<f64> {
    let a = p.a();
    let (xa, za) = (x - a, z - a);
    let above = za > 0.0 || (za == 0.0 && side == Side::Above);
    let v = if above {
        let s2sq = p.sigma2() * p.sigma2();
        let ln_w = (2.0 / s2sq).ln() + 2.0 * p.mu2() * za / s2sq;
        cross_integral(p, t, 0.0, za + xa, ln_w, settings)?
            + killed_gaussian(p.mu2(), p.sigma2(), a, t, x, z)
    } else {
        let s1sq = p.sigma1() * p.sigma1();
        let ln_w = (2.0 / s1sq).ln() + 2.0 * p.mu1() * za / s1sq;
        cross_integral(p, t, -za, xa, ln_w, settings)?
    };
    Ok(v.max(0.0))
}

/// Density at `z` with an explicit side for `z = a`, for any start.
fn density_sided(
    p: &DiffusionParams,
    t: f64,
    x: f64,
    z: f64,
    side: Side,
    settings: &QuadSettings,
) -> Result<f64> {
    if x >= p.a() {
        upper_start(p, t, x, z, side, settings)
    } else {
        let flipped = match side {
            Side::Above => Side::Below,
            Side::Below => Side::Above,
        };
        upper_start(&p.reflected(), t, -x, -z, flipped, settings)
    }
}

/// Transition density `p(t; x, z)`.
///
/// At `z = a` the value is the one-sided limit from the start's side
/// (`z >= a` for `x >= a`, `z <= a` for `x < a`); use
/// [`threshold_limits`] for both.
pub fn transition_density(
    params: &DiffusionParams,
    t: f64,
    x: f64,
    z: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    check_time(t)?;
    check_states(x, z)?;
    settings.validate()?;
    let side = if x >= params.a() { Side::Above } else { Side::Below };
    density_sided(params, t, x, z, side, settings)
}

/// One-sided limits `(p(t; x, a+), p(t; x, a-))`.
pub fn threshold_limits(
    params: &DiffusionParams,
    t: f64,
    x: f64,
    settings: &QuadSettings,
) -> Result<(f64, f64)> {
    check_time(t)?;
    check_states(x, params.a())?;
    settings.validate()?;
    let a = params.a();
    Ok((
        density_sided(params, t, x, a, Side::Above, settings)?,
        density_sided(params, t, x, a, Side::Below, settings)?,
    ))
}

/// Jump `p(t; x, a+) - p(t; x, a-)` of the density across the threshold.
///
/// Evaluated from the single cross integral it reduces to, scaled by
/// `2 (1/s2^2 - 1/s1^2)`; exactly zero when the volatilities agree.
pub fn density_jump_at_threshold(
    params: &DiffusionParams,
    t: f64,
    x: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    check_time(t)?;
    check_states(x, 0.0)?;
    settings.validate()?;
    let (s1, s2) = (params.sigma1(), params.sigma2());
    if s1 == s2 {
        return Ok(0.0);
    }
    let factor = 2.0 * (1.0 / (s2 * s2) - 1.0 / (s1 * s1));
    let a = params.a();
    let k = if x >= a {
        cross_integral(params, t, 0.0, x - a, 0.0, settings)?
    } else {
        // K computed in the reflected frame, where the start lies above.
        cross_integral(&params.reflected(), t, 0.0, a - x, 0.0, settings)?
    };
    Ok(factor * k)
}

/// Stationary density, a two-sided exponential centred on the threshold.
/// Exists only for `mu1 > 0 > mu2`.
pub fn stationary_density(params: &DiffusionParams, z: f64) -> Result<f64> {
    potential_q_to_zero_limit(params, z)
}

/// Closed-form transition density of the driftless process with
/// volatilities `sigma1` (at or below `a`) and `sigma2` (above).
pub fn oscillating_bm_density(
    sigma1: f64,
    sigma2: f64,
    a: f64,
    t: f64,
    x: f64,
    z: f64,
) -> Result<f64> {
    // validates the volatilities
    DiffusionParams::new(0.0, 0.0, sigma1, sigma2, a)?;
    check_time(t)?;
    check_states(x, z)?;
    if x < a {
        return Ok(obm_upper(sigma2, sigma1, -a, t, -x, -z, true));
    }
    Ok(obm_upper(sigma1, sigma2, a, t, x, z, false))
}

/// Start at or above `a`. `below_inclusive` moves `z = a` to the lower
/// branch (used by the reflected evaluation).
fn obm_upper(s1: f64, s2: f64, a: f64, t: f64, x: f64, z: f64, below_inclusive: bool) -> f64 {
    let above = z > a || (z == a && !below_inclusive);
    if above {
        let sd = s2 * t.sqrt();
        let image = (s1 - s2) / (s1 + s2) * std_normal_pdf((x + z - 2.0 * a) / sd) / sd;
        image + std_normal_pdf((z - x) / sd) / sd
    } else {
        let w = (z - a) / s1 - (x - a) / s2;
        2.0 * s2 / ((s1 + s2) * s1 * (2.0 * PI * t).sqrt()) * (-w * w / (2.0 * t)).exp()
    }
}

/// Transition density with a common volatility and switching drift.
pub fn equal_sigma_density(
    mu1: f64,
    mu2: f64,
    sigma: f64,
    a: f64,
    t: f64,
    x: f64,
    z: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    let p = DiffusionParams::new(mu1, mu2, sigma, sigma, a)?;
    transition_density(&p, t, x, z, settings)
}

/// True iff the process run backwards in time has the law of the process
/// with negated drifts, which happens exactly for a single regime.
pub fn is_time_reversible(params: &DiffusionParams) -> bool {
    params.mu1() == params.mu2() && params.sigma1() == params.sigma2()
}

/// `p_X(t; x, z) - p_Z(t; z, x)`, where `Z` has both drifts negated.
pub fn time_reversal_gap(
    params: &DiffusionParams,
    t: f64,
    x: f64,
    z: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    let forward = transition_density(params, t, x, z, settings)?;
    let backward = transition_density(&params.drifts_negated(), t, z, x, settings)?;
    Ok(forward - backward)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    fn s() -> QuadSettings {
        QuadSettings::default()
    }

    #[test]
    fn brownian_reduction() {
        let p = DiffusionParams::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let v = transition_density(&p, 1.0, 0.0, 0.0, &s()).unwrap();
        assert!((v - INV_SQRT_2PI).abs() < 1e-8, "{v}");
        let v = transition_density(&p, 1.0, 0.0, 1.0, &s()).unwrap();
        assert!((v - 0.241_970_724_519_143_37).abs() < 1e-8, "{v}");
        let v = transition_density(&p, 1.0, -0.4, 0.9, &s()).unwrap();
        let want = std_normal_pdf(1.3);
        assert!((v - want).abs() < 1e-8, "{v}");
    }

    #[test]
    fn oscillating_limits() {
        let p = DiffusionParams::new(0.0, 0.0, 1.0, 2.0, 0.0).unwrap();
        let (up, down) = threshold_limits(&p, 1.0, 0.0, &s()).unwrap();
        assert!((up - 0.132_980_760_133_810_9).abs() < 1e-7, "{up}");
        assert!((down - 0.531_923_040_535_243_6).abs() < 1e-7, "{down}");
        let jump = density_jump_at_threshold(&p, 1.0, 0.0, &s()).unwrap();
        assert!((jump + INV_SQRT_2PI).abs() < 1e-7, "{jump}");
    }

    #[test]
    fn closed_form_examples() {
        let v = oscillating_bm_density(1.0, 1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!((v - INV_SQRT_2PI).abs() < 1e-15);
        assert!(oscillating_bm_density(1.0, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
        let v = equal_sigma_density(0.5, 0.5, 1.0, 0.0, 1.0, 0.0, 0.5, &s()).unwrap();
        assert!((v - INV_SQRT_2PI).abs() < 1e-8, "{v}");
    }

    #[test]
    fn equal_sigma_has_no_jump() {
        let p = DiffusionParams::new(1.0, -1.0, 1.5, 1.5, 0.2).unwrap();
        assert_eq!(density_jump_at_threshold(&p, 1.0, 0.3, &s()).unwrap(), 0.0);
    }

    #[test]
    fn reversibility() {
        let mk = |m1, m2, s1, s2| DiffusionParams::new(m1, m2, s1, s2, 0.0).unwrap();
        assert!(is_time_reversible(&mk(0.0, 0.0, 1.0, 1.0)));
        assert!(!is_time_reversible(&mk(1.0, 1.0, 1.0, 2.0)));
        assert!(!is_time_reversible(&mk(1.0, -1.0, 1.0, 1.0)));
    }

    #[test]
    fn rejects_bad_time() {
        let p = DiffusionParams::new(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            transition_density(&p, 0.0, 0.0, 0.0, &s()),
            Err(Error::Domain(_))
        ));
    }
}
