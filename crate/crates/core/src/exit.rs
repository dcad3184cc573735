//! The q-harmonic functions `g-` (decreasing) and `g+` (increasing), glued
//! at the threshold so that both are C^1, and the exit-time Laplace
//! transforms built from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{DeltaSet, DiffusionParams};

/// Values of `g-` and `g+` at one point. Both equal 1 at the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GPair {
    pub g_minus_at: f64,
    pub g_plus_at: f64,
}

fn positive_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q must be positive (got {q})")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite (got {v})")))
    }
}

pub(crate) fn ln_g_minus_with(d: &DeltaSet, a: f64, x: f64) -> f64 {
    if x > a {
        -d.d2_plus * (x - a)
    } else {
        let dist = a - x;
        let mix = d.one_minus_c_minus() + d.c_minus * (-(d.d1_plus + d.d1_minus) * dist).exp();
        d.d1_plus * dist + mix.ln()
    }
}

pub(crate) fn ln_g_plus_with(d: &DeltaSet, a: f64, x: f64) -> f64 {
    if x <= a {
        d.d1_minus * (x - a)
    } else {
        let dist = x - a;
        let mix = d.one_minus_c_plus() + d.c_plus * (-(d.d2_minus + d.d2_plus) * dist).exp();
        d.d2_minus * dist + mix.ln()
    }
}

/// `ln g-(x)`; finite for any finite `x`.
pub fn ln_g_minus(params: &DiffusionParams, q: f64, x: f64) -> Result<f64> {
    positive_q(q)?;
    finite("x", x)?;
    Ok(ln_g_minus_with(&params.deltas(q)?, params.a(), x))
}

/// `ln g+(x)`; finite for any finite `x`.
pub fn ln_g_plus(params: &DiffusionParams, q: f64, x: f64) -> Result<f64> {
    positive_q(q)?;
    finite("x", x)?;
    Ok(ln_g_plus_with(&params.deltas(q)?, params.a(), x))
}

pub fn g_minus(params: &DiffusionParams, q: f64, x: f64) -> Result<f64> {
    ln_g_minus(params, q, x).map(f64::exp)
}

pub fn g_plus(params: &DiffusionParams, q: f64, x: f64) -> Result<f64> {
    ln_g_plus(params, q, x).map(f64::exp)
}

pub fn g_pair(params: &DiffusionParams, q: f64, x: f64) -> Result<GPair> {
    Ok(GPair {
        g_minus_at: g_minus(params, q, x)?,
        g_plus_at: g_plus(params, q, x)?,
    })
}

/// `E_x[exp(-q T_y)]` for `y <= x`.
pub fn one_sided_down(params: &DiffusionParams, q: f64, x: f64, y: f64) -> Result<f64> {
    positive_q(q)?;
    finite("x", x)?;
    finite("y", y)?;
    if y > x {
        return Err(Error::domain(format!("need y <= x (got y = {y}, x = {x})")));
    }
    let d = params.deltas(q)?;
    let a = params.a();
    Ok((ln_g_minus_with(&d, a, x) - ln_g_minus_with(&d, a, y)).exp())
}

/// `E_x[exp(-q T_z)]` for `x <= z`.
pub fn one_sided_up(params: &DiffusionParams, q: f64, x: f64, z: f64) -> Result<f64> {
    positive_q(q)?;
    finite("x", x)?;
    finite("z", z)?;
    if x > z {
        return Err(Error::domain(format!("need x <= z (got x = {x}, z = {z})")));
    }
    let d = params.deltas(q)?;
    let a = params.a();
    Ok((ln_g_plus_with(&d, a, x) - ln_g_plus_with(&d, a, z)).exp())
}

/// Start `x` inside `[y, z]`, exit transform rate `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitQuery {
    pub params: DiffusionParams,
    pub q: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ExitQuery {
    pub fn new(params: DiffusionParams, q: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let query = Self { params, q, x, y, z };
        query.validate()?;
        Ok(query)
    }

    fn validate(&self) -> Result<()> {
        positive_q(self.q)?;
        for (name, v) in [("x", self.x), ("y", self.y), ("z", self.z)] {
            finite(name, v)?;
        }
        if self.y == self.z {
            return Err(Error::DegenerateInterval {
                lower: self.y,
                upper: self.z,
            });
        }
        if !(self.y <= self.x && self.x <= self.z) {
            return Err(Error::domain(format!(
                "need y <= x <= z (got y = {}, x = {}, z = {})",
                self.y, self.x, self.z
            )));
        }
        Ok(())
    }
}

/// `(E_x[e^{-q T_y}; T_y < T_z], E_x[e^{-q T_z}; T_z < T_y])`.
pub fn two_sided_exit(query: &ExitQuery) -> Result<(f64, f64)> {
    query.validate()?;
    let d = query.params.deltas(query.q)?;
    let a = query.params.a();
    let (x, y, z) = (query.x, query.y, query.z);

    let lgm = |u| ln_g_minus_with(&d, a, u);
    let lgp = |u| ln_g_plus_with(&d, a, u);
    let ln_down = lgm(x) - lgm(y);
    let ln_up = lgp(x) - lgp(z);
    // One-sided transforms between the two barriers.
    let ln_zy = lgm(z) - lgm(y);
    let ln_yz = lgp(y) - lgp(z);

    let det = -(ln_zy + ln_yz).exp_m1();
    if !(det.is_finite() && det > 0.0) {
        return Err(Error::DegenerateInterval { lower: y, upper: z });
    }
    let down = (ln_down.exp() - (ln_zy + ln_up).exp()) / det;
    let up = (ln_up.exp() - (ln_yz + ln_down).exp()) / det;
    Ok((down.max(0.0), up.max(0.0)))
}
