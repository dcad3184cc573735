//! Numerical inverse Laplace transforms: Gaver-Stehfest (real abscissae)
//! and fixed Talbot (complex contour).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A Laplace transform `F(q) = int_0^inf e^{-qt} f(t) dt`.
pub trait Transform {
    fn at_real(&self, q: f64) -> Result<f64>;

    /// Evaluation off the real axis; `None` when the transform is only
    /// known for real arguments.
    fn at_complex(&self, _s: Complex64) -> Option<Result<Complex64>> {
        None
    }
}

/// Adapter for real-only transforms given as closures.
pub struct RealFn<F>(pub F);

impl<F: Fn(f64) -> Result<f64>> Transform for RealFn<F> {
    fn at_real(&self, q: f64) -> Result<f64> {
        (self.0)(q)
    }
}

/// Adapter for transforms with a complex-analytic closed form.
pub struct ComplexFn<F>(pub F);

impl<F: Fn(Complex64) -> Complex64> Transform for ComplexFn<F> {
    fn at_real(&self, q: f64) -> Result<f64> {
        Ok((self.0)(Complex64::new(q, 0.0)).re)
    }

    fn at_complex(&self, s: Complex64) -> Option<Result<Complex64>> {
        Some(Ok((self.0)(s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    GaverStehfest,
    Talbot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InversionSettings {
    pub method: Method,
    /// Gaver-Stehfest: even, 6..=18. Talbot: node count >= 2.
    pub terms: usize,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self::gaver_stehfest(16)
    }
}

impl InversionSettings {
    pub fn gaver_stehfest(terms: usize) -> Self {
        Self {
            method: Method::GaverStehfest,
            terms,
        }
    }

    pub fn talbot(terms: usize) -> Self {
        Self {
            method: Method::Talbot,
            terms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::GaverStehfest if self.terms % 2 != 0 || !(6..=18).contains(&self.terms) => {
                Err(Error::Settings(format!(
                    "Gaver-Stehfest needs an even term count in 6..=18 (got {})",
                    self.terms
                )))
            }
            Method::Talbot if self.terms < 2 => Err(Error::Settings(format!(
                "Talbot needs at least 2 nodes (got {})",
                self.terms
            ))),
            _ => Ok(()),
        }
    }
}

/// Approximates `f(t)` from its transform.
pub fn invert<T: Transform + ?Sized>(transform: &T, t: f64, settings: &InversionSettings) -> Result<f64> {
    settings.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("t must be positive (got {t})")));
    }
    match settings.method {
        Method::GaverStehfest => gaver_stehfest(transform, t, settings.terms),
        Method::Talbot => talbot(transform, t, settings.terms),
    }
}

/// An inverted value with a precision diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inversion {
    pub value: f64,
    /// `|f_n - f_{n-2}|` between the requested Gaver-Stehfest term count and
    /// the next smaller one; large spreads mean double precision is
    /// exhausted. Zero for Talbot.
    pub spread: f64,
}

impl Inversion {
    /// Whether the two term counts agree within `tol`.
    pub fn is_stable(&self, tol: f64) -> bool {
        self.spread <= tol
    }
}

/// [`invert`] together with a term-count stability check.
pub fn invert_checked<T: Transform + ?Sized>(
    transform: &T,
    t: f64,
    settings: &InversionSettings,
) -> Result<Inversion> {
    let value = invert(transform, t, settings)?;
    let spread = match settings.method {
        Method::GaverStehfest if settings.terms > 6 => {
            let coarse = invert(transform, t, &InversionSettings::gaver_stehfest(settings.terms - 2))?;
            (value - coarse).abs()
        }
        _ => 0.0,
    };
    Ok(Inversion { value, spread })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Stehfest weights `V_1..V_n` for even `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let sum: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * factorial(2 * j)
                        / (factorial(half - j)
                            * factorial(j)
                            * factorial(j - 1)
                            * factorial(k - j)
                            * factorial(2 * j - k))
                })
                .sum();
            if (k + half) % 2 == 0 {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

fn gaver_stehfest<T: Transform + ?Sized>(transform: &T, t: f64, n: usize) -> Result<f64> {
    let ln2_t = std::f64::consts::LN_2 / t;
    let mut acc = 0.0;
    for (i, v) in stehfest_weights(n).iter().enumerate() {
        let q = (i + 1) as f64 * ln2_t;
        acc += v * transform.at_real(q)?;
    }
    Ok(acc * ln2_t)
}

fn talbot<T: Transform + ?Sized>(transform: &T, t: f64, m: usize) -> Result<f64> {
    let unavailable = || Error::Settings("Talbot inversion needs complex evaluation".into());
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * transform.at_real(r)? * (r * t).exp();
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let fs = transform.at_complex(s).ok_or_else(unavailable)??;
        acc += ((s * t).exp() * fs * Complex64::new(1.0, sigma)).re;
    }
    Ok(r / m as f64 * acc)
}
