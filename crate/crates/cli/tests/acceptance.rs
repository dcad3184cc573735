//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Oracles are closed forms and a Gauss-Legendre rule written here,
//! independent of the library's own quadrature.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rayon::prelude::*;
use threshold_diffusion::{
    alpha, density_jump_at_threshold, empirical_hitting_transform, g_minus, g_plus, invert,
    is_time_reversible, one_sided_down, one_sided_up, potential_density, simulate_paths,
    simulate_policy, stationary_density, threshold_limits, transition_density, two_sided_exit,
    value_function, ConstantPolicy, ControlProblem, DiffusionParams, ExitQuery, InversionSettings,
    OptimalPolicy, Policy, QuadSettings, SimConfig,
};
use threshold_diffusion::laplace::RealFn;

type Res<T> = Result<T, String>;

fn params(mu1: f64, mu2: f64, s1: f64, s2: f64, a: f64) -> DiffusionParams {
    DiffusionParams::new(mu1, mu2, s1, s2, a).expect("valid parameters")
}

fn battery() -> [DiffusionParams; 6] {
    [
        params(1.0, -1.0, 1.0, 2.0, 0.0),
        params(-1.0, 1.0, 1.0, 1.0, 0.0),
        params(0.5, 0.5, 2.0, 1.0, 0.3),
        params(-0.5, -1.0, 1.0, 3.0, -0.2),
        params(0.0, 0.0, 1.0, 4.0, 0.0),
        params(1.5, -0.5, 0.5, 1.0, 1.0),
    ]
}

struct Check {
    label: String,
    value: f64,
    limit: f64,
    at_least: bool,
}

impl Check {
    fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.limit
        } else {
            self.value <= self.limit
        }
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, label: impl Into<String>, value: f64, limit: f64) {
        // NaN never passes
        let value = if value.is_nan() { f64::INFINITY } else { value };
        self.0.push(Check { label: label.into(), value, limit, at_least: false });
    }

    fn at_least(&mut self, label: impl Into<String>, value: f64, limit: f64) {
        let value = if value.is_nan() { f64::NEG_INFINITY } else { value };
        self.0.push(Check { label: label.into(), value, limit, at_least: true });
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |m: f64, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) })
}

fn lib<T>(r: threshold_diffusion::Result<T>) -> Res<T> {
    r.map_err(|e| e.to_string())
}

fn normal_pdf(z: f64, mean: f64, var: f64) -> f64 {
    (-(z - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite Gauss-Legendre with equal panels on each piece between the
/// sorted break points.
fn integrate(f: &(dyn Fn(f64) -> Res<f64> + Sync), edges: &[f64], panels: usize) -> Res<f64> {
    let rule = gauss_legendre(10);
    let mut nodes = Vec::new();
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let mid = w[0] + (k as f64 + 0.5) * h;
            for &(x, wt) in &rule {
                nodes.push((mid + 0.5 * h * x, 0.5 * h * wt));
            }
        }
    }
    nodes.par_iter().map(|&(x, w)| f(x).map(|v| v * w)).sum()
}

fn edges(lo: f64, breaks: &[f64], hi: f64) -> Vec<f64> {
    let mut e: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    e.push(lo);
    e.push(hi);
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

/// Zero-drift oscillating Brownian motion: `X / sigma(X)` is skew Brownian
/// motion that leaves 0 upwards with probability `s1 / (s1 + s2)`.
fn oscillating_oracle(s1: f64, s2: f64, t: f64, x: f64, z: f64) -> f64 {
    let beta = s1 / (s1 + s2);
    let y0 = if x > 0.0 { x / s2 } else { x / s1 };
    let phi = |d: f64| normal_pdf(d, 0.0, t);
    if z > 0.0 {
        let y = z / s2;
        let v = if y0 >= 0.0 {
            phi(y - y0) + (2.0 * beta - 1.0) * phi(y + y0)
        } else {
            2.0 * beta * phi(y - y0)
        };
        v / s2
    } else {
        let y = z / s1;
        let v = if y0 >= 0.0 {
            2.0 * (1.0 - beta) * phi(y - y0)
        } else {
            phi(y - y0) - (2.0 * beta - 1.0) * phi(y + y0)
        };
        v / s1
    }
}

/// Law of a drifted Brownian motion at an exponential time of rate `q`.
fn single_regime_resolvent(mu: f64, sigma: f64, q: f64, x: f64, z: f64) -> f64 {
    let s2 = sigma * sigma;
    let root = (mu * mu + 2.0 * q * s2).sqrt();
    q * ((mu * (z - x) - (z - x).abs() * root) / s2).exp() / root
}

/// `E_x[exp(-q T_b)]` for a drifted Brownian motion.
fn single_regime_hit(mu: f64, sigma: f64, q: f64, x: f64, b: f64) -> f64 {
    let s2 = sigma * sigma;
    let d = b - x;
    ((mu * d - d.abs() * (mu * mu + 2.0 * q * s2).sqrt()) / s2).exp()
}

/// Two-sided exit of a drifted Brownian motion from `[y, z]`.
fn single_regime_two_sided(mu: f64, sigma: f64, q: f64, x: f64, y: f64, z: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let th = (mu * mu + 2.0 * q * s2).sqrt() / s2;
    let w = ((z - y) * th).sinh();
    let down = (-mu * (x - y) / s2).exp() * ((z - x) * th).sinh() / w;
    let up = (mu * (z - x) / s2).exp() * ((x - y) * th).sinh() / w;
    (down, up)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn c1_oscillating(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let zs: Vec<f64> = linspace(0.01, 4.0, 41).into_iter().flat_map(|z| [z, -z]).collect();
    let mut points = Vec::new();
    for t in [0.25, 1.0, 4.0] {
        for x in [0.0, 0.5, 2.0] {
            for &z in &zs {
                points.push((t, x, z));
            }
        }
    }
    let p = params(0.0, 0.0, 1.0, 2.0, 0.0);
    let diffs = points
        .par_iter()
        .map(|&(t, x, z)| lib(transition_density(&p, t, x, z, &s)).map(|v| v - oscillating_oracle(1.0, 2.0, t, x, z)))
        .collect::<Res<Vec<f64>>>()?;
    c.at_most(format!("max |p - oracle| over {} points", points.len()), max_abs(diffs), 1e-5);
    Ok(())
}

fn c2_limits(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let p = params(0.0, 0.0, 1.0, 2.0, 0.0);
    let (above, below) = lib(threshold_limits(&p, 1.0, 0.0, &s))?;
    c.at_most("|p(1;0,0+) - 0.132981|", (above - 0.132981).abs(), 1e-5);
    c.at_most("|p(1;0,0-) - 0.531923|", (below - 0.531923).abs(), 1e-5);
    let jump = lib(density_jump_at_threshold(&p, 1.0, 0.0, &s))?;
    c.at_most("|jump + 0.398942|", (jump + 0.398942).abs(), 1e-5);
    let eps = 1e-9;
    let side = (lib(transition_density(&p, 1.0, 0.0, eps, &s))? - above).abs()
        + (lib(transition_density(&p, 1.0, 0.0, -eps, &s))? - below).abs();
    c.at_most("limits agree with the density just off the threshold", side, 1e-6);

    // the jump read off the density itself, on both sides of a
    let seen = |q: &DiffusionParams, x: f64| -> Res<f64> {
        let a = q.a();
        Ok(lib(transition_density(q, 1.0, x, a + eps, &s))? - lib(transition_density(q, 1.0, x, a - eps, &s))?)
    };
    let equal = [params(1.0, -1.0, 1.5, 1.5, 0.2), params(-0.3, 0.8, 0.7, 0.7, -1.0), params(0.0, 2.0, 1.0, 1.0, 0.0)];
    let mut worst_equal: f64 = 0.0;
    for q in equal {
        for x in [-0.5, q.a(), 1.0] {
            worst_equal = worst_equal
                .max(lib(density_jump_at_threshold(&q, 1.0, x, &s))?.abs())
                .max(seen(&q, x)?.abs());
        }
    }
    c.at_most("max |jump| with sigma1 = sigma2", worst_equal, 1e-6);
    let mut smallest: f64 = f64::INFINITY;
    let mut consistency: f64 = 0.0;
    for q in [params(0.0, 0.0, 1.0, 1.5, 0.0), params(1.0, -1.0, 2.0, 1.0, 0.5), params(-0.4, 0.3, 0.5, 3.0, -0.5)] {
        for x in [-0.5, 0.0, 1.0] {
            let jump = lib(density_jump_at_threshold(&q, 1.0, x, &s))?;
            smallest = smallest.min(jump.abs());
            consistency = consistency.max((jump - seen(&q, x)?).abs());
        }
    }
    c.at_most("max |jump - (p(a+) - p(a-))| with sigma1 != sigma2", consistency, 1e-6);
    c.at_least("min |jump| with sigma1 != sigma2", smallest, 1e-3);
    Ok(())
}

fn c3_single_regime(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let mut gauss: f64 = 0.0;
    let mut resolvent: f64 = 0.0;
    for (mu, sigma, a) in [(0.0, 1.0, 0.0), (0.7, 1.3, 0.4), (-1.2, 0.6, -0.3)] {
        let p = params(mu, mu, sigma, sigma, a);
        let grid = linspace(-1.0, 1.0, 5);
        for &x in &grid {
            for &dz in &grid {
                let z = x + mu + 1.5 * dz;
                let v = lib(transition_density(&p, 1.0, x, z, &s))?;
                gauss = gauss.max((v - normal_pdf(z, x + mu, sigma * sigma)).abs());
                for q in [0.2, 1.0, 5.0] {
                    let u = lib(potential_density(&p, q, x, z))?;
                    resolvent = resolvent.max((u - single_regime_resolvent(mu, sigma, q, x, z)).abs());
                }
            }
        }
    }
    c.at_most("max |p - Gaussian| on 5x5 grids", gauss, 1e-6);
    c.at_most("max |u - closed-form resolvent|", resolvent, 1e-10);
    Ok(())
}

const LAPLACE_POINTS: [(f64, f64); 3] = [(0.5, 1.0), (0.5, -0.5), (-0.5, 1.0)];

fn c4_laplace(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
    let mut time: f64 = 0.0;
    for q in [0.5, 1.0, 2.0] {
        for (x, z) in LAPLACE_POINTS {
            // t = e^r; the exponential weight is negligible past t = 80 / q
            let f = |r: f64| {
                let t = r.exp();
                lib(transition_density(&p, t, x, z, &s)).map(|v| q * (-q * t).exp() * v * t)
            };
            let lt = integrate(&f, &[(1e-5f64).ln(), (80.0 / q).ln()], 80)?;
            time = time.max((lt - lib(potential_density(&p, q, x, z))?).abs());
        }
    }
    c.at_most("max |int q e^{-qt} p dt - u_q|", time, 1e-4);

    let mut inversion: f64 = 0.0;
    for (x, z) in LAPLACE_POINTS {
        let f = RealFn(|q: f64| Ok(potential_density(&p, q, x, z)? / q));
        let v = lib(invert(&f, 1.0, &InversionSettings::default()))?;
        inversion = inversion.max((v - lib(transition_density(&p, 1.0, x, z, &s))?).abs());
    }
    c.at_most("max |Gaver-Stehfest(u_q / q)(1) - p(1)|", inversion, 1e-4);
    Ok(())
}

fn c5_normalization(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let mut density: f64 = 0.0;
    let mut resolvent: f64 = 0.0;
    for p in battery() {
        let a = p.a();
        let smax = p.sigma1().max(p.sigma2());
        let mmax = p.mu1().abs().max(p.mu2().abs());
        for x in [a - 0.4, a + 0.4] {
            for t in [0.25f64, 1.0, 4.0] {
                let half = 12.0 * smax * t.sqrt() + mmax * t;
                let f = |z: f64| lib(transition_density(&p, t, x, z, &s));
                let mass = integrate(&f, &edges(x - half, &[a, x], x + half), 60)?;
                density = density.max((mass - 1.0).abs());
            }
            for q in [0.3, 1.0, 3.0] {
                let f = |z: f64| lib(potential_density(&p, q, x, z));
                let mass = integrate(&f, &edges(a - 600.0, &[a - 20.0, a, x, a + 20.0], a + 600.0), 400)?;
                resolvent = resolvent.max((mass - 1.0).abs());
            }
        }
    }
    c.at_most("max |int p dz - 1| over the battery", density, 1e-4);
    c.at_most("max |int u_q dz - 1| over the battery", resolvent, 1e-6);
    Ok(())
}

fn c6_chapman_kolmogorov(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
    let mut worst: f64 = 0.0;
    for x in [-0.5, 0.0, 0.8] {
        for z in [-0.6, 0.3, 1.0] {
            let f = |y: f64| {
                Ok(lib(transition_density(&p, 0.5, x, y, &s))? * lib(transition_density(&p, 0.5, y, z, &s))?)
            };
            let v = integrate(&f, &edges(-12.0, &[0.0, x, z], 12.0), 40)?;
            worst = worst.max((v - lib(transition_density(&p, 1.0, x, z, &s))?).abs());
        }
    }
    c.at_most("max |int p(.5;x,y) p(.5;y,z) dy - p(1;x,z)| on 3x3 grid", worst, 1e-3);
    Ok(())
}

fn c7_stationary(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let p = params(1.0, -1.0, 1.0, 1.0, 0.0);
    let mut exact: f64 = 0.0;
    for z in linspace(-4.0, 4.0, 33) {
        exact = exact.max((lib(stationary_density(&p, z))? - (-2.0 * z.abs()).exp()).abs());
    }
    c.at_most("max |pi(z) - e^{-2|z|}|", exact, 1e-12);
    let mut late: f64 = 0.0;
    for z in [-1.0, 0.0, 1.0] {
        late = late.max((lib(transition_density(&p, 30.0, 0.0, z, &s))? - (-2.0 * z.abs()).exp()).abs());
    }
    c.at_most("max |p(30;0,z) - e^{-2|z|}| at z in {-1,0,1}", late, 1e-2);

    let n = 100_000;
    let config = lib(SimConfig::new(p, 0.0, 30.0, 1e-3, n, 1))?;
    let bins = lib(lib(simulate_paths(&config))?.histogram(-3.0, 3.0, 20))?;
    let cdf = |z: f64| if z < 0.0 { 0.5 * (2.0 * z).exp() } else { 1.0 - 0.5 * (-2.0 * z).exp() };
    let ratios = bins.iter().map(|b| {
        let m = cdf(b.hi) - cdf(b.lo);
        (b.frequency - m) / (m * (1.0 - m) / n as f64).sqrt()
    });
    c.at_most("Monte Carlo T=30 histogram: max bin deviation in SE", max_abs(ratios), 3.0);
    Ok(())
}

fn c8_exit(c: &mut Checks) -> Res<()> {
    let h = 1e-5;
    let mut pasting: f64 = 0.0;
    for p in [params(1.0, -1.0, 1.0, 2.0, 0.0), params(0.4, 1.1, 0.5, 2.5, -0.7), params(-2.0, 0.0, 3.0, 1.0, 1.0)] {
        let a = p.a();
        for q in [0.2, 1.0, 5.0] {
            for g in [g_minus, g_plus] {
                let f = |u: f64| lib(g(&p, q, u));
                let right = (-3.0 * f(a)? + 4.0 * f(a + h)? - f(a + 2.0 * h)?) / (2.0 * h);
                let left = (3.0 * f(a)? - 4.0 * f(a - h)? + f(a - 2.0 * h)?) / (2.0 * h);
                pasting = pasting.max((right - left).abs());
            }
        }
    }
    c.at_most("smooth pasting: max |g'(a+) - g'(a-)|", pasting, 1e-6);

    let mut single: f64 = 0.0;
    for (mu, sigma, a) in [(0.0, 1.0, 0.0), (1.0, 0.5, 0.3), (-0.8, 2.0, -1.0)] {
        let p = params(mu, mu, sigma, sigma, a);
        for q in [0.1, 1.0, 4.0] {
            for (x, y, z) in [(0.0, -1.0, 1.0), (0.5, -2.0, 0.7), (-1.0, -1.5, 2.0)] {
                single = single.max((lib(one_sided_down(&p, q, x, y))? - single_regime_hit(mu, sigma, q, x, y)).abs());
                single = single.max((lib(one_sided_up(&p, q, x, z))? - single_regime_hit(mu, sigma, q, x, z)).abs());
                let (d, u) = lib(two_sided_exit(&lib(ExitQuery::new(p, q, x, y, z))?))?;
                let (dw, uw) = single_regime_two_sided(mu, sigma, q, x, y, z);
                single = single.max((d - dw).abs()).max((u - uw).abs());
            }
        }
    }
    c.at_most("single-regime transforms vs closed forms", single, 1e-12);

    // from above the threshold the path sees only the upper regime until it
    // reaches a, so the drifted-Brownian formula is exact there
    let p = params(1.0, -1.0, 1.0, 2.0, 0.0);
    let (q, x0) = (0.5, 0.8);
    let exact = single_regime_hit(-1.0, 2.0, q, x0, 0.0);
    c.at_most(
        "one_sided_down to the threshold vs upper-regime formula",
        (lib(one_sided_down(&p, q, x0, 0.0))? - exact).abs(),
        1e-12,
    );
    let dt: f64 = 1e-4;
    let config = lib(SimConfig::new(p, x0, 40.0, dt, 100_000, 2))?;
    let est = lib(empirical_hitting_transform(&config, 0.0, q))?;
    c.at_most(
        "Monte Carlo hitting transform: (|est - exact| - sqrt(dt)) in SE",
        ((est.value - exact).abs() - dt.sqrt()) / est.se,
        3.0,
    );
    Ok(())
}

fn c9_control(c: &mut Checks) -> Res<()> {
    let s = QuadSettings::default();
    let p = lib(ControlProblem::new(1.0, 2.0, -1.0, 1.0, 0.0, 1.0))?;
    c.at_most("|alpha(1,2,-1,1) - 3|", (alpha(&p) - 3.0).abs(), 0.0);
    let mut slope: f64 = 0.0;
    for (mb, sb, ml, sl) in [(1.0, 2.0, -1.0, 1.0), (0.2, 3.5, -1.7, 0.3), (-2.0, 1.01, 0.4, 1.0), (5.0, 4.0, 1.0, 0.5)] {
        let q = lib(ControlProblem::new(mb, sb, ml, sl, 0.0, 1.0))?;
        let al = alpha(&q);
        let common = (mb - ml) / (sb - sl);
        let scale = common.abs().max(1.0);
        slope = slope
            .max(((ml + al) / sl - common).abs() / scale)
            .max(((mb + al) / sb - common).abs() / scale);
    }
    c.at_most("slope identity (relative)", slope, 1e-12);
    let zero = lib(ControlProblem::new(0.0, 2.0, 0.0, 1.0, 0.0, 1.0))?;
    c.at_most("|V(0) - 2/3| for the zero-drift problem", (lib(value_function(&zero, 0.0, &s))? - 2.0 / 3.0).abs(), 1e-3);

    let benchmarks = [(zero, 0.0), (p, 0.0), (lib(ControlProblem::new(-0.5, 1.5, -1.0, 0.5, 0.0, 1.0))?, 0.3)];
    let (dt, n) = (1e-3, 100_000);
    for (k, (prob, x0)) in benchmarks.into_iter().enumerate() {
        let seed = 10 + k as u64;
        let v = lib(value_function(&prob, x0, &s))?;
        let best = lib(simulate_policy(&prob, &OptimalPolicy::new(prob), x0, dt, n, seed))?.survival(prob.a);
        c.at_most(format!("benchmark {}: |MC - V| in SE", k + 1), (best.value - v).abs() / best.se, 3.0);
        let others: [(&str, &dyn Policy); 3] = [
            ("constant sigma_bar", &ConstantPolicy(prob.sigma_bar)),
            ("constant sigma_low", &ConstantPolicy(prob.sigma_low)),
            ("reversed threshold", &OptimalPolicy::reversed(prob)),
        ];
        for (name, policy) in others {
            let other = lib(simulate_policy(&prob, policy, x0, dt, n, seed + 20))?.survival(prob.a);
            let pooled = (best.se * best.se + other.se * other.se).sqrt();
            c.at_least(
                format!("benchmark {}: (optimal - {name}) / pooled SE", k + 1),
                (best.value - other.value) / pooled,
                -3.0,
            );
        }
    }
    Ok(())
}

fn c10_time_reversal(c: &mut Checks) -> Res<()> {
    let sets = [
        params(0.0, 0.0, 1.0, 1.0, 0.0),
        params(-0.6, -0.6, 2.0, 2.0, 1.0),
        params(1.0, -1.0, 1.0, 1.0, 0.0),
        params(0.5, 0.5, 1.0, 3.0, 0.0),
        params(1.0, -1.0, 1.0, 2.0, 0.0),
        params(0.3, 0.2, 1.5, 1.5, -0.5),
    ];
    let wrong = sets
        .iter()
        .filter(|p| is_time_reversible(p) != (p.mu1() == p.mu2() && p.sigma1() == p.sigma2()))
        .count();
    c.at_most("misclassified parameter sets (of 6)", wrong as f64, 0.0);
    // Z runs with the drifts reversed
    let s = QuadSettings::default();
    let p = sets[4];
    let z_params = params(-p.mu1(), -p.mu2(), p.sigma1(), p.sigma2(), p.a());
    let mut witness: f64 = 0.0;
    for x in [-1.0, -0.5, 0.5] {
        for z in [-0.5, 0.25, 1.0] {
            let gap = lib(transition_density(&p, 1.0, x, z, &s))? - lib(transition_density(&z_params, 1.0, z, x, &s))?;
            witness = witness.max(gap.abs());
        }
    }
    c.at_least("witness max |p_X(1;x,z) - p_Z(1;z,x)|", witness, 1e-3);
    Ok(())
}

fn c11_determinism(c: &mut Checks) -> Res<()> {
    let dir = std::env::temp_dir().join(format!("threshold-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let run = |name: &str, threads: Option<&str>| -> Res<Vec<u8>> {
        let out = dir.join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_threshold-diffusion"));
        cmd.args([
            "simulate", "--mu1", "1", "--mu2", "-1", "--sigma1", "1", "--sigma2", "2", "--a", "0", "--x0", "0.5",
            "--T", "1", "--dt", "1e-3", "--paths", "20000", "--seed", "42", "--summary",
        ])
        .arg(dir.join(format!("{name}.json")))
        .arg("--output")
        .arg(&out);
        match threads {
            Some(t) => cmd.env("THRESHOLD_DIFFUSION_THREADS", t),
            None => cmd.env_remove("THRESHOLD_DIFFUSION_THREADS"),
        };
        let status = cmd.status().map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("simulate exited with {status}"));
        }
        std::fs::read(out).map_err(|e| e.to_string())
    };
    let first = run("first.csv", None)?;
    let second = run("second.csv", None)?;
    let serial = run("serial.csv", Some("1"))?;
    let parallel = run("parallel.csv", Some("4"))?;
    let _ = std::fs::remove_dir_all(&dir);
    let differs = |a: &[u8], b: &[u8]| if a == b { 0.0 } else { 1.0 };
    c.at_least("CSV rows", first.iter().filter(|&&b| b == b'\n').count() as f64, 20_001.0);
    c.at_most("two runs differ", differs(&first, &second), 0.0);
    c.at_most("serial and parallel differ", differs(&serial, &parallel), 0.0);
    c.at_most("default pool and serial differ", differs(&first, &serial), 0.0);
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Checks) -> Res<()>); 11] = [
        ("oscillating Brownian motion oracle", c1_oscillating),
        ("one-sided limits at the threshold", c2_limits),
        ("single-regime reduction", c3_single_regime),
        ("Laplace consistency", c4_laplace),
        ("normalization", c5_normalization),
        ("Chapman-Kolmogorov", c6_chapman_kolmogorov),
        ("stationary law", c7_stationary),
        ("exit transforms", c8_exit),
        ("control problem", c9_control),
        ("time reversal", c10_time_reversal),
        ("simulation determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut checks = Checks::default();
        let outcome = run(&mut checks);
        let passed = outcome.is_ok() && checks.0.iter().all(Check::passed);
        for ch in &checks.0 {
            println!(
                "    {} {}: {:.3e} ({} {:e})",
                if ch.passed() { "ok  " } else { "FAIL" },
                ch.label,
                ch.value,
                if ch.at_least { ">=" } else { "<=" },
                ch.limit
            );
        }
        if let Err(e) = &outcome {
            println!("    error: {e}");
        }
        println!(
            "criterion {:>2} {} {} ({:.1}s)",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            name,
            start.elapsed().as_secs_f64()
        );
        if !passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
