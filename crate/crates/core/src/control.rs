//! Survival control with two admissible (drift, volatility) pairs.
//!
//! The controller picks `(mu_bar, sigma_bar)` or `(mu_low, sigma_low)` with
//! `sigma_low < sigma_bar`, aiming to maximise `P(X_T >= a)`. The optimal
//! policy switches at the moving level `a + alpha (T - t)`: the riskier pair
//! at or below it, the safer pair above.

use serde::Serialize;

use crate::density::transition_density;
use crate::error::{Error, Result};
use crate::params::DiffusionParams;
use crate::quad::{try_integrate_finite, QuadSettings};

/// How far outside `[0, 1]` a computed value may land before it is
/// reported as an accuracy failure.
const PROBABILITY_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlProblem {
    pub mu_bar: f64,
    pub sigma_bar: f64,
    pub mu_low: f64,
    pub sigma_low: f64,
    pub a: f64,
    /// Horizon `T`.
    pub horizon: f64,
}

impl ControlProblem {
    pub fn new(
        mu_bar: f64,
        sigma_bar: f64,
        mu_low: f64,
        sigma_low: f64,
        a: f64,
        horizon: f64,
    ) -> Result<Self> {
        for (name, v) in [("mu_bar", mu_bar), ("mu_low", mu_low), ("a", a)] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite (got {v})")));
            }
        }
        if !(sigma_low.is_finite() && sigma_low > 0.0) {
            return Err(Error::param("sigma_low", format!("must be positive (got {sigma_low})")));
        }
        if !(sigma_bar.is_finite() && sigma_bar > sigma_low) {
            return Err(Error::param(
                "sigma_bar",
                format!("must exceed sigma_low = {sigma_low} (got {sigma_bar})"),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be positive (got {horizon})")));
        }
        Ok(Self {
            mu_bar,
            sigma_bar,
            mu_low,
            sigma_low,
            a,
            horizon,
        })
    }

    /// Slope of the moving threshold.
    pub fn alpha(&self) -> f64 {
        alpha(self)
    }

    /// Drift paired with an admissible volatility, or `None`.
    pub fn paired_drift(&self, sigma: f64) -> Option<f64> {
        if sigma == self.sigma_bar {
            Some(self.mu_bar)
        } else if sigma == self.sigma_low {
            Some(self.mu_low)
        } else {
            None
        }
    }

    /// Threshold diffusion followed by `X_t - alpha (T - t)` under the
    /// optimal policy: `(mu_bar + alpha, mu_low + alpha, sigma_bar, sigma_low, a)`.
    pub fn equivalent_params(&self) -> DiffusionParams {
        let al = self.alpha();
        DiffusionParams::new(
            self.mu_bar + al,
            self.mu_low + al,
            self.sigma_bar,
            self.sigma_low,
            self.a,
        )
        .expect("validated problem yields valid parameters")
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::domain(format!("t must lie in [0, {}] (got {t})", self.horizon)))
        }
    }
}

/// `alpha = (mu_bar sigma_low - mu_low sigma_bar) / (sigma_bar - sigma_low)`.
pub fn alpha(problem: &ControlProblem) -> f64 {
    (problem.mu_bar * problem.sigma_low - problem.mu_low * problem.sigma_bar)
        / (problem.sigma_bar - problem.sigma_low)
}

/// Switching level `a + alpha (T - t)`.
pub fn optimal_threshold(problem: &ControlProblem, t: f64) -> Result<f64> {
    problem.check_time(t)?;
    Ok(problem.a + problem.alpha() * (problem.horizon - t))
}

/// `sigma_bar` at or below the switching level, `sigma_low` above it.
pub fn optimal_volatility(problem: &ControlProblem, state: f64, t: f64) -> Result<f64> {
    let level = optimal_threshold(problem, t)?;
    Ok(if state <= level {
        problem.sigma_bar
    } else {
        problem.sigma_low
    })
}

/// Optimal survival probability `V(x) = int_a^inf p(T; x - alpha T, z) dz`
/// for the equivalent threshold diffusion.
pub fn value_function(problem: &ControlProblem, x: f64, settings: &QuadSettings) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite (got {x})")));
    }
    let p = problem.equivalent_params();
    let al = problem.alpha();
    let t = problem.horizon;
    let start = x - al * t;
    let upper = start.max(problem.a)
        + 12.0 * problem.sigma_bar * t.sqrt()
        + (problem.mu_bar.abs() + problem.mu_low.abs() + al.abs()) * t;

    let v = try_integrate_finite(
        |z| transition_density(&p, t, start, z, settings),
        problem.a,
        upper,
        settings,
    )?
    .value;
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&v) {
        return Err(Error::Accuracy {
            estimate: v,
            error: (v - v.clamp(0.0, 1.0)).abs(),
            target: PROBABILITY_SLACK,
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

/// One admissible (drift, volatility) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Choice {
    pub mu: f64,
    pub sigma: f64,
}

/// Policies that pick `below` at or under the level `a + slope (T - t)` and
/// `above` over it. Such policies are simulated in the frame moving with the
/// level, where they are a fixed-threshold diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Switching {
    pub level_at_horizon: f64,
    pub slope: f64,
    pub below: Choice,
    pub above: Choice,
}

/// A feedback volatility rule `sigma(state, t)`; the drift follows from the
/// problem's pairing.
pub trait Policy: Sync {
    fn volatility(&self, state: f64, t: f64) -> f64;

    /// Threshold structure under `problem`, which lets the simulator use a
    /// threshold-aware step instead of a generic Euler step.
    fn switching(&self, _problem: &ControlProblem) -> Option<Switching> {
        None
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Policy for F {
    fn volatility(&self, state: f64, t: f64) -> f64 {
        self(state, t)
    }
}

/// The threshold policy, optionally with its two choices swapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPolicy {
    pub problem: ControlProblem,
    pub alpha: f64,
    reversed: bool,
}

impl OptimalPolicy {
    pub fn new(problem: ControlProblem) -> Self {
        Self {
            problem,
            alpha: problem.alpha(),
            reversed: false,
        }
    }

    /// Same moving level, with `sigma_low` below it and `sigma_bar` above.
    pub fn reversed(problem: ControlProblem) -> Self {
        Self {
            reversed: true,
            ..Self::new(problem)
        }
    }

    fn choices(&self) -> (Choice, Choice) {
        let p = &self.problem;
        let bar = Choice {
            mu: p.mu_bar,
            sigma: p.sigma_bar,
        };
        let low = Choice {
            mu: p.mu_low,
            sigma: p.sigma_low,
        };
        if self.reversed {
            (low, bar)
        } else {
            (bar, low)
        }
    }
}

impl Policy for OptimalPolicy {
    fn volatility(&self, state: f64, t: f64) -> f64 {
        let level = self.problem.a + self.alpha * (self.problem.horizon - t);
        let (below, above) = self.choices();
        if state <= level {
            below.sigma
        } else {
            above.sigma
        }
    }

    fn switching(&self, problem: &ControlProblem) -> Option<Switching> {
        if *problem != self.problem {
            return None;
        }
        let (below, above) = self.choices();
        Some(Switching {
            level_at_horizon: self.problem.a,
            slope: self.alpha,
            below,
            above,
        })
    }
}

/// Always the same volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantPolicy(pub f64);

impl Policy for ConstantPolicy {
    fn volatility(&self, _state: f64, _t: f64) -> f64 {
        self.0
    }

    fn switching(&self, problem: &ControlProblem) -> Option<Switching> {
        let choice = Choice {
            mu: problem.paired_drift(self.0)?,
            sigma: self.0,
        };
        Some(Switching {
            level_at_horizon: problem.a,
            slope: 0.0,
            below: choice,
            above: choice,
        })
    }
}
