//! Monte Carlo simulation of the threshold diffusion and of controlled runs.
//!
//! Every path owns a ChaCha8 stream selected by `(seed, path_index)`, so
//! ensembles are identical whether paths run serially or on any number of
//! threads. Normals come from `rand_distr::StandardNormal` (ziggurat);
//! generator versions are pinned through the crate manifest.
//!
//! The default [`Scheme::ThresholdCorrected`] step works in the coordinate
//! `(x - a) / sigma(x)`, in which the driftless process is a skew Brownian
//! motion with drifts `mu / sigma`. A step that touches the threshold
//! (detected exactly, including the bridge probability of an unobserved
//! touch) keeps its endpoint distance `m` and leaves upwards with odds
//! `sigma1 / sigma2 * exp((nu1 + nu2) m)`: the skew odds tilted by the
//! Girsanov weight of each exit side. This is exact for a single regime.
//! Plain Euler-Maruyama is available as [`Scheme::Euler`]; its weak error
//! near the threshold decays only like `sqrt(dt)`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{ControlProblem, Policy, Switching};
use crate::error::{Error, Result};
use crate::format::format_g17;
use crate::params::DiffusionParams;

/// Beyond this exponent the bridge touch probability is treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Separates the auxiliary uniform streams from the normal stream.
const AUX_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Scheme {
    #[default]
    ThresholdCorrected,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: DiffusionParams,
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(
        params: DiffusionParams,
        x0: f64,
        horizon: f64,
        dt: f64,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self> {
        let config = Self {
            params,
            x0,
            horizon,
            dt,
            n_paths,
            seed,
            scheme: Scheme::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        validate_run(self.x0, self.horizon, self.dt, self.n_paths)
    }

    /// Number of steps; the step actually taken is `horizon / n_steps`,
    /// which never exceeds `dt`.
    pub fn n_steps(&self) -> usize {
        step_count(self.horizon, self.dt)
    }
}

fn validate_run(x0: f64, horizon: f64, dt: f64, n_paths: usize) -> Result<()> {
    if !x0.is_finite() {
        return Err(Error::Config(format!("x0 must be finite (got {x0})")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive (got {horizon})")));
    }
    if !(dt.is_finite() && dt > 0.0 && dt <= horizon) {
        return Err(Error::Config(format!("dt must lie in (0, horizon] (got {dt})")));
    }
    if n_paths == 0 {
        return Err(Error::Config("n_paths must be at least 1".into()));
    }
    Ok(())
}

fn step_count(horizon: f64, dt: f64) -> usize {
    ((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// An estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub value: f64,
    pub se: f64,
}

/// Fraction of paths ending in `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub frequency: f64,
    pub se: f64,
}

/// Terminal values of a simulated ensemble, in path-index order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    terminal_values: Vec<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.terminal_values.len()
    }

    pub fn terminal_values(&self) -> &[f64] {
        &self.terminal_values
    }

    pub fn mean(&self) -> Stat {
        mean_and_se(self.terminal_values.iter().copied())
    }

    /// Frequency of `X_T >= level`.
    pub fn survival(&self, level: f64) -> Stat {
        mean_and_se(
            self.terminal_values
                .iter()
                .map(|&x| if x >= level { 1.0 } else { 0.0 }),
        )
    }

    /// `bins` equal-width bins on `[lo, hi)`; frequencies are relative to
    /// the whole ensemble, so mass outside the range is not redistributed.
    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Result<Vec<Bin>> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || bins == 0 {
            return Err(Error::domain(format!(
                "histogram needs lo < hi and bins >= 1 (got [{lo}, {hi}), {bins})"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in &self.terminal_values {
            if x >= lo && x < hi {
                let k = (((x - lo) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
        }
        let n = self.n_paths() as f64;
        Ok(counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let f = c as f64 / n;
                let se = if n > 1.0 {
                    (f * (1.0 - f) * n / (n - 1.0) / n).sqrt()
                } else {
                    0.0
                };
                Bin {
                    lo: lo + k as f64 * width,
                    hi: lo + (k + 1) as f64 * width,
                    frequency: f,
                    se,
                }
            })
            .collect())
    }

    /// CSV with header `path_index,terminal_value`, 17 significant digits,
    /// `\n` line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(b"path_index,terminal_value\n")?;
        for (i, &x) in self.terminal_values.iter().enumerate() {
            writeln!(out, "{i},{}", format_g17(x))?;
        }
        out.flush()
    }
}

/// Sample mean and `sd / sqrt(n)` with the unbiased sample variance.
fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> Stat {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return Stat {
            value: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = sum / n as f64;
    if n == 1 {
        return Stat {
            value: mean,
            se: 0.0,
        };
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    Stat {
        value: mean,
        se: (ss / (n - 1) as f64 / n as f64).sqrt(),
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One-step transition for a fixed parameter set.
#[derive(Debug, Clone, Copy)]
struct Stepper {
    a: f64,
    lower: Regime,
    upper: Regime,
    /// `ln(p / (1 - p))` for the skew `p = sigma1 / (sigma1 + sigma2)`.
    skew_log_odds: f64,
    /// `nu_lower + nu_upper`, the drift tilt of the exit side.
    nu_sum: f64,
    scheme: Scheme,
}

#[derive(Debug, Clone, Copy)]
struct Regime {
    mu: f64,
    sigma: f64,
    inv_sigma: f64,
    /// Drift in the normalized coordinate, `mu / sigma`.
    nu: f64,
}

impl Regime {
    fn new(mu: f64, sigma: f64) -> Self {
        Self {
            mu,
            sigma,
            inv_sigma: 1.0 / sigma,
            nu: mu / sigma,
        }
    }
}

impl Stepper {
    fn new(p: &DiffusionParams, scheme: Scheme) -> Self {
        Self {
            a: p.a(),
            lower: Regime::new(p.mu1(), p.sigma1()),
            upper: Regime::new(p.mu2(), p.sigma2()),
            skew_log_odds: (p.sigma1() / p.sigma2()).ln(),
            nu_sum: p.mu1() / p.sigma1() + p.mu2() / p.sigma2(),
            scheme,
        }
    }

    #[inline]
    fn step<R: Rng>(&self, x: f64, h: f64, sqrt_h: f64, xi: f64, aux: &mut R) -> f64 {
        let r = if x <= self.a { &self.lower } else { &self.upper };
        match self.scheme {
            Scheme::Euler => x + r.mu * h + r.sigma * sqrt_h * xi,
            Scheme::ThresholdCorrected => {
                let y = (x - self.a) * r.inv_sigma;
                let u = y + r.nu * h + sqrt_h * xi;
                let yu = y * u;
                let touched = yu <= 0.0 || {
                    let e = 2.0 * yu / h;
                    e < BRIDGE_CUTOFF && aux.random::<f64>() < (-e).exp()
                };
                if !touched {
                    self.a + r.sigma * u
                } else {
                    let m = u.abs();
                    let log_odds = self.skew_log_odds + self.nu_sum * m;
                    if aux.random::<f64>() * (1.0 + (-log_odds).exp()) < 1.0 {
                        self.a + self.upper.sigma * m
                    } else {
                        self.a - self.lower.sigma * m
                    }
                }
            }
        }
    }
}

fn run_path(stepper: &Stepper, x0: f64, n_steps: usize, h: f64, rng: &mut ChaCha8Rng) -> f64 {
    let sqrt_h = h.sqrt();
    let mut x = x0;
    for _ in 0..n_steps {
        let xi: f64 = rng.sample(StandardNormal);
        x = stepper.step(x, h, sqrt_h, xi, rng);
    }
    x
}

/// Simulates `n_paths` independent paths and keeps their terminal values.
pub fn simulate_paths(config: &SimConfig) -> Result<PathEnsemble> {
    config.validate()?;
    let stepper = Stepper::new(&config.params, config.scheme);
    let n_steps = config.n_steps();
    let h = config.horizon / n_steps as f64;
    let terminal_values = (0..config.n_paths)
        .into_par_iter()
        .map(|i| run_path(&stepper, config.x0, n_steps, h, &mut path_rng(config.seed, i)))
        .collect();
    Ok(PathEnsemble {
        terminal_values,
        dt: config.dt,
        horizon: config.horizon,
        seed: config.seed,
    })
}

/// Runs each path at `dt` and at `dt / 2` on the same Brownian motion: each
/// coarse increment is the normalized sum of two fine ones.
pub fn simulate_coupled_halving(config: &SimConfig) -> Result<(PathEnsemble, PathEnsemble)> {
    config.validate()?;
    let stepper = Stepper::new(&config.params, config.scheme);
    let n_steps = config.n_steps();
    let h = config.horizon / n_steps as f64;
    let (sqrt_h, half, sqrt_half) = (h.sqrt(), 0.5 * h, (0.5 * h).sqrt());
    let pairs: Vec<(f64, f64)> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut normals = path_rng(config.seed, i);
            let mut aux_coarse = path_rng(config.seed ^ AUX_SEED_MIX, 2 * i);
            let mut aux_fine = path_rng(config.seed ^ AUX_SEED_MIX, 2 * i + 1);
            let (mut coarse, mut fine) = (config.x0, config.x0);
            for _ in 0..n_steps {
                let xi1: f64 = normals.sample(StandardNormal);
                let xi2: f64 = normals.sample(StandardNormal);
                fine = stepper.step(fine, half, sqrt_half, xi1, &mut aux_fine);
                fine = stepper.step(fine, half, sqrt_half, xi2, &mut aux_fine);
                let xi = (xi1 + xi2) * std::f64::consts::FRAC_1_SQRT_2;
                coarse = stepper.step(coarse, h, sqrt_h, xi, &mut aux_coarse);
            }
            (coarse, fine)
        })
        .collect();
    let (coarse, fine): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let wrap = |terminal_values, dt| PathEnsemble {
        terminal_values,
        dt,
        horizon: config.horizon,
        seed: config.seed,
    };
    Ok((wrap(coarse, config.dt), wrap(fine, 0.5 * config.dt)))
}

/// Monte Carlo estimate of `E[exp(-q T_level)]`, with the hitting time
/// read off the simulation grid. Paths that do not reach `level` within the
/// horizon contribute 0.
pub fn empirical_hitting_transform(config: &SimConfig, level: f64, q: f64) -> Result<Stat> {
    config.validate()?;
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::domain(format!("q must be positive (got {q})")));
    }
    if !level.is_finite() {
        return Err(Error::domain(format!("level must be finite (got {level})")));
    }
    if config.x0 == level {
        return Ok(Stat { value: 1.0, se: 0.0 });
    }
    let stepper = Stepper::new(&config.params, config.scheme);
    let n_steps = config.n_steps();
    let h = config.horizon / n_steps as f64;
    let sqrt_h = h.sqrt();
    let side = (config.x0 - level).signum();
    let samples: Vec<f64> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(config.seed, i);
            let mut x = config.x0;
            for k in 1..=n_steps {
                let xi: f64 = rng.sample(StandardNormal);
                x = stepper.step(x, h, sqrt_h, xi, &mut rng);
                if (x - level) * side <= 0.0 {
                    return (-q * k as f64 * h).exp();
                }
            }
            0.0
        })
        .collect();
    Ok(mean_and_se(samples.into_iter()))
}

/// Simulates the controlled state from `x0` over the problem horizon and
/// keeps terminal values; `survival(problem.a)` estimates the policy's
/// survival probability.
///
/// Threshold policies run the corrected scheme in the frame that moves with
/// the switching level; constant policies draw the exact Gaussian terminal
/// law; any other policy takes Euler steps, with its drift paired to the
/// returned volatility. An inadmissible volatility is reported for the
/// lowest path index and earliest time at which it occurs.
pub fn simulate_policy<P: Policy + ?Sized>(
    problem: &ControlProblem,
    policy: &P,
    x0: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let horizon = problem.horizon;
    validate_run(x0, horizon, dt, n_paths)?;
    let terminal_values = match policy.switching(problem) {
        Some(sw) if sw.below == sw.above => constant_run(&sw, x0, horizon, n_paths, seed),
        Some(sw) => switching_run(&sw, x0, horizon, dt, n_paths, seed)?,
        None => generic_run(problem, policy, x0, dt, n_paths, seed)?,
    };
    Ok(PathEnsemble {
        terminal_values,
        dt,
        horizon,
        seed,
    })
}

fn constant_run(sw: &Switching, x0: f64, horizon: f64, n_paths: usize, seed: u64) -> Vec<f64> {
    let c = sw.below;
    let sd = c.sigma * horizon.sqrt();
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let xi: f64 = path_rng(seed, i).sample(StandardNormal);
            x0 + c.mu * horizon + sd * xi
        })
        .collect()
}

fn switching_run(
    sw: &Switching,
    x0: f64,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    // In xi = x - (L + slope (T - t)) the level is fixed at 0 and each
    // drift gains `slope`.
    let frame = DiffusionParams::new(
        sw.below.mu + sw.slope,
        sw.above.mu + sw.slope,
        sw.below.sigma,
        sw.above.sigma,
        0.0,
    )?;
    let start = x0 - (sw.level_at_horizon + sw.slope * horizon);
    let stepper = Stepper::new(&frame, Scheme::ThresholdCorrected);
    let n_steps = step_count(horizon, dt);
    let h = horizon / n_steps as f64;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            run_path(&stepper, start, n_steps, h, &mut path_rng(seed, i)) + sw.level_at_horizon
        })
        .collect())
}

fn generic_run<P: Policy + ?Sized>(
    problem: &ControlProblem,
    policy: &P,
    x0: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n_steps = step_count(problem.horizon, dt);
    let h = problem.horizon / n_steps as f64;
    let sqrt_h = h.sqrt();
    let results: Vec<Result<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut x = x0;
            for k in 0..n_steps {
                let t = k as f64 * h;
                let sigma = policy.volatility(x, t);
                let mu = problem.paired_drift(sigma).ok_or(Error::Policy {
                    t,
                    state: x,
                    value: sigma,
                })?;
                let xi: f64 = rng.sample(StandardNormal);
                x += mu * h + sigma * sqrt_h * xi;
            }
            Ok(x)
        })
        .collect();
    results.into_iter().collect()
}
