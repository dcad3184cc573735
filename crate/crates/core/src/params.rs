//! Model parameters, the rate constants of the q-harmonic functions, and the
//! first-passage kernel `h` shared by every other module.
//!
//! Regime convention, fixed library-wide: a state `x <= a` evolves with
//! `(mu1, sigma1)`; a state `x > a` evolves with `(mu2, sigma2)`.

use serde::Serialize;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Exponents beyond this are treated as exact underflow in the `h` kernel.
const H_UNDERFLOW_EXPONENT: f64 = 745.0;

/// The five-tuple defining the threshold diffusion
/// `dX = mu(X) dt + sigma(X) dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionParams {
    mu1: f64,
    mu2: f64,
    sigma1: f64,
    sigma2: f64,
    a: f64,
}

impl DiffusionParams {
    pub fn new(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, a: f64) -> Result<Self> {
        for (name, v) in [("mu1", mu1), ("mu2", mu2), ("a", a)] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite (got {v})")));
            }
        }
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(name, format!("must be positive (got {v})")));
            }
        }
        Ok(Self {
            mu1,
            mu2,
            sigma1,
            sigma2,
            a,
        })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// True when `x` belongs to the lower regime (`x <= a`).
    #[inline]
    pub fn is_lower(&self, x: f64) -> bool {
        x <= self.a
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        if self.is_lower(x) {
            self.mu1
        } else {
            self.mu2
        }
    }

    #[inline]
    pub fn volatility(&self, x: f64) -> f64 {
        if self.is_lower(x) {
            self.sigma1
        } else {
            self.sigma2
        }
    }

    /// Parameters of `-X`: `(-mu2, -mu1, sigma2, sigma1, -a)`.
    ///
    /// The boundary convention flips with the reflection (`-X` uses the
    /// upper pair at `-a`), which is immaterial for densities and transforms.
    pub fn reflected(&self) -> Self {
        Self {
            mu1: -self.mu2,
            mu2: -self.mu1,
            sigma1: self.sigma2,
            sigma2: self.sigma1,
            a: -self.a,
        }
    }

    /// Same volatilities and threshold with both drifts negated.
    pub fn drifts_negated(&self) -> Self {
        Self {
            mu1: -self.mu1,
            mu2: -self.mu2,
            ..*self
        }
    }

    /// Same dynamics with the threshold moved to `a + shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            a: self.a + shift,
            ..*self
        }
    }

    pub fn deltas(&self, q: f64) -> Result<DeltaSet> {
        DeltaSet::new(self, q)
    }
}

/// Rate constants `delta_i^{+/-}` and pasting constants `c_{+/-}` at transform
/// variable `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSet {
    pub q: f64,
    pub d1_plus: f64,
    pub d1_minus: f64,
    pub d2_plus: f64,
    pub d2_minus: f64,
    /// `sqrt(2 q sigma1^2 + mu1^2)`
    pub r1: f64,
    /// `sqrt(2 q sigma2^2 + mu2^2)`
    pub r2: f64,
    pub c_minus: f64,
    pub c_plus: f64,
}

impl DeltaSet {
    /// Accepts `q = 0`, returning the limiting rates. The pasting constants
    /// are NaN there when a regime has zero drift (their denominators vanish).
    pub fn new(params: &DiffusionParams, q: f64) -> Result<Self> {
        if !q.is_finite() || q < 0.0 {
            return Err(Error::domain(format!("q must be finite and >= 0 (got {q})")));
        }
        let (d1_plus, d1_minus, r1) = rates(q, params.mu1, params.sigma1);
        let (d2_plus, d2_minus, r2) = rates(q, params.mu2, params.sigma2);
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::NAN };
        Ok(Self {
            q,
            d1_plus,
            d1_minus,
            d2_plus,
            d2_minus,
            r1,
            r2,
            c_minus: ratio(d1_plus - d2_plus, d1_minus + d1_plus),
            c_plus: ratio(d2_minus - d1_minus, d2_minus + d2_plus),
        })
    }

    /// `1 - c_-`, evaluated without cancellation.
    pub fn one_minus_c_minus(&self) -> f64 {
        (self.d1_minus + self.d2_plus) / (self.d1_minus + self.d1_plus)
    }

    /// `1 - c_+`, evaluated without cancellation.
    pub fn one_minus_c_plus(&self) -> f64 {
        (self.d2_plus + self.d1_minus) / (self.d2_minus + self.d2_plus)
    }

    /// `delta_1^- + delta_2^+`, the rate shared by every cross-threshold term.
    pub fn cross_rate(&self) -> f64 {
        self.d1_minus + self.d2_plus
    }
}

/// Returns `(delta^+, delta^-, radical)` for one regime; the root that would
/// suffer cancellation is recovered from `delta^+ delta^- = 2q / sigma^2`.
fn rates(q: f64, mu: f64, sigma: f64) -> (f64, f64, f64) {
    let s2 = sigma * sigma;
    let r = (2.0 * q * s2 + mu * mu).sqrt();
    if mu >= 0.0 {
        let sum = r + mu;
        let plus = sum / s2;
        let minus = if sum > 0.0 { 2.0 * q / sum } else { 0.0 };
        (plus, minus, r)
    } else {
        let diff = r - mu;
        (2.0 * q / diff, diff / s2, r)
    }
}

/// Validated argument triple for the first-passage kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HArgs {
    t: f64,
    x: f64,
    mu: f64,
}

impl HArgs {
    pub fn new(t: f64, x: f64, mu: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::domain(format!("h kernel needs t > 0 (got {t})")));
        }
        if !x.is_finite() || !mu.is_finite() {
            return Err(Error::domain("h kernel needs finite x and mu"));
        }
        Ok(Self { t, x, mu })
    }
}

/// First-passage density `|x| / sqrt(2 pi t^3) exp(-(x + mu t)^2 / (2t))` of
/// a unit-volatility Brownian motion with drift `mu` to level 0 from `x`.
pub fn h_kernel(args: HArgs) -> f64 {
    h_raw(args.t, args.x, args.mu)
}

#[inline]
pub(crate) fn h_raw(t: f64, x: f64, mu: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let e = (x + mu * t).powi(2) / (2.0 * t);
    if e > H_UNDERFLOW_EXPONENT {
        return 0.0;
    }
    x.abs() / (2.0 * std::f64::consts::PI * t * t * t).sqrt() * (-e).exp()
}

/// `ln h(t; x, 0)` for `x > 0`.
#[inline]
pub(crate) fn ln_h_driftless(t: f64, x: f64) -> f64 {
    x.ln() - LN_SQRT_2PI - 1.5 * t.ln() - x * x / (2.0 * t)
}

/// Laplace transform `int_0^inf e^{-qt} h(t; x, mu) dt`.
pub fn h_laplace(q: f64, x: f64, mu: f64) -> Result<f64> {
    if !q.is_finite() || q < 0.0 {
        return Err(Error::domain(format!("q must be finite and >= 0 (got {q})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let root = (mu * mu + 2.0 * q).sqrt();
    Ok((-(mu + x.signum() * root) * x).exp())
}

/// Standard normal density.
#[inline]
pub(crate) fn std_normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y - LN_SQRT_2PI).exp()
}
