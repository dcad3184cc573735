//! Resolvent densities: the law of `X` at an independent exponential time of
//! rate `q`, and its `q -> 0` limit.

use crate::error::{Error, Result};
use crate::params::DiffusionParams;

/// Evaluation request for [`potential_density`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialQuery {
    pub params: DiffusionParams,
    pub q: f64,
    pub x: f64,
    pub z: f64,
}

impl PotentialQuery {
    pub fn evaluate(&self) -> Result<f64> {
        potential_density(&self.params, self.q, self.x, self.z)
    }
}

/// Density of `X_{e_q}` at `z` for a start at `x`, where `e_q` is an
/// independent exponential time with rate `q`.
///
/// At `x = a` the upper-start formulas are used; at `z = a` the branch
/// follows the start side (`z >= a` joins the upper branch when `x >= a`,
/// `z <= a` joins the lower branch when `x < a`).
pub fn potential_density(params: &DiffusionParams, q: f64, x: f64, z: f64) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::domain(format!("q must be positive (got {q})")));
    }
    if !x.is_finite() || !z.is_finite() {
        return Err(Error::domain("x and z must be finite"));
    }
    let d = params.deltas(q)?;
    let a = params.a();
    let (xa, za) = (x - a, z - a);
    let v = if x >= a {
        let k = (d.d2_minus - d.d1_minus) / (d.d2_plus + d.d1_minus);
        let scale = q / d.r2;
        if z >= x {
            scale * ((-d.d2_minus * (z - x)).exp() + k * (-d.d2_minus * za - d.d2_plus * xa).exp())
        } else if z >= a {
            scale * ((-d.d2_plus * (x - z)).exp() + k * (-d.d2_plus * xa - d.d2_minus * za).exp())
        } else {
            let ratio = (d.d1_plus + d.d1_minus) / (d.d2_plus + d.d1_minus);
            q / d.r1 * ratio * (-d.d2_plus * xa + d.d1_plus * za).exp()
        }
    } else {
        let k = (d.d1_plus - d.d2_plus) / (d.d1_minus + d.d2_plus);
        let scale = q / d.r1;
        if z <= x {
            scale * ((-d.d1_plus * (x - z)).exp() + k * (d.d1_plus * za + d.d1_minus * xa).exp())
        } else if z <= a {
            scale * ((-d.d1_minus * (z - x)).exp() + k * (d.d1_minus * xa + d.d1_plus * za).exp())
        } else {
            let ratio = (d.d2_minus + d.d2_plus) / (d.d1_minus + d.d2_plus);
            q / d.r2 * ratio * (d.d1_minus * xa - d.d2_minus * za).exp()
        }
    };
    Ok(v.max(0.0))
}

/// `q -> 0` limit of the resolvent density, independent of the start.
///
/// Exists only when both drifts point towards the threshold
/// (`mu1 > 0`, `mu2 < 0`); it is then the stationary law, a two-sided
/// exponential with normalizing constant `-mu1 mu2 / (mu1 - mu2)`.
pub fn potential_q_to_zero_limit(params: &DiffusionParams, z: f64) -> Result<f64> {
    let (mu1, mu2) = (params.mu1(), params.mu2());
    if !(mu1 > 0.0 && mu2 < 0.0) {
        return Err(Error::NoStationaryLaw { mu1, mu2 });
    }
    if !z.is_finite() {
        return Err(Error::domain(format!("z must be finite (got {z})")));
    }
    let norm = -mu1 * mu2 / (mu1 - mu2);
    let za = z - params.a();
    let (mu, s2) = if za >= 0.0 {
        (mu2, params.sigma2() * params.sigma2())
    } else {
        (mu1, params.sigma1() * params.sigma1())
    };
    Ok(norm * 2.0 / s2 * (2.0 * mu * za / s2).exp())
}
