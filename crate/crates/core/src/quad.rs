//! Adaptive Gauss-Kronrod quadrature (G10/K21 pairs with global bisection),
//! semi-infinite integration by doubling panels, and the first-passage
//! convolution `int_0^t h(t - s; x1, mu1) h(s; x2, mu2) ds`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ln_h_driftless, std_normal_pdf};

/// Tolerances shared by every quadrature call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Tail mass below which a semi-infinite integral is truncated.
    pub truncation_epsilon: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_subdivisions: 2000,
            truncation_epsilon: 1e-12,
        }
    }
}

impl QuadSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) || !ok(self.truncation_epsilon) {
            return Err(Error::Settings(format!(
                "tolerances must be positive (abs {}, rel {}, truncation {})",
                self.abs_tol, self.rel_tol, self.truncation_epsilon
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Settings("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// A quadrature value together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

// Kronrod abscissae and weights; even indices are also Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_589_928_312_400,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod panel. Only interior nodes are evaluated, so the
/// integrand never sees the endpoints.
fn kronrod21<F>(f: &F, lo: f64, hi: f64) -> Result<Segment>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Integrand { at: x })
        }
    };

    let fc = eval(center)?;
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment {
        lo,
        hi,
        value,
        error,
    })
}

/// Fallible form of [`integrate_finite`]: integrand errors are propagated.
pub fn try_integrate_finite<F>(f: F, lo: f64, hi: f64, settings: &QuadSettings) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    settings.validate()?;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::domain(format!(
            "integration bounds must be finite with lo <= hi (got [{lo}, {hi}])"
        )));
    }
    if lo == hi {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }

    let first = kronrod21(&f, lo, hi)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut segments = 1;

    while total_err > settings.target(total) {
        if segments >= settings.max_subdivisions {
            return Err(Error::Accuracy {
                estimate: total,
                error: total_err,
                target: settings.target(total),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Cannot bisect further in double precision.
            return Err(Error::Accuracy {
                estimate: total,
                error: total_err,
                target: settings.target(total),
            });
        }
        let left = kronrod21(&f, worst.lo, mid)?;
        let right = kronrod21(&f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        segments += 1;

        // Running sums drift; refresh them occasionally.
        if segments % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }

    Ok(Estimate {
        value: heap.iter().map(|s| s.value).sum(),
        error: heap.iter().map(|s| s.error).sum(),
    })
}

/// Integrates `f` over `[lo, hi]` to `max(abs_tol, rel_tol |value|)`.
pub fn integrate_finite<F>(f: F, lo: f64, hi: f64, settings: &QuadSettings) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    try_integrate_finite(|x| Ok(f(x)), lo, hi, settings)
}

const MAX_PANELS: usize = 60;

/// Fallible form of [`integrate_semi_infinite`].
pub fn try_integrate_semi_infinite<F>(
    f: F,
    lo: f64,
    decay_rate_hint: f64,
    settings: &QuadSettings,
) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    settings.validate()?;
    if !(decay_rate_hint.is_finite() && decay_rate_hint > 0.0) {
        return Err(Error::domain(format!(
            "decay rate hint must be positive (got {decay_rate_hint})"
        )));
    }
    if !lo.is_finite() {
        return Err(Error::domain(format!("lower bound must be finite (got {lo})")));
    }

    let eps = settings.truncation_epsilon;
    let base = 1.0 / decay_rate_hint;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut start = lo;
    let mut f_start = f(lo)?.abs();
    let mut width = base;
    for _ in 0..MAX_PANELS {
        let end = start + width;
        let panel = try_integrate_finite(&f, start, end, settings)?;
        value += panel.value;
        error += panel.error;
        let f_end = f(end)?;
        if !f_end.is_finite() {
            return Err(Error::Integrand { at: end });
        }
        let f_end = f_end.abs();
        let tail = f_end / decay_rate_hint;
        if panel.value.abs() <= eps && tail <= eps && f_end <= f_start {
            return Ok(Estimate {
                value,
                error: error + tail,
            });
        }
        start = end;
        f_start = f_end;
        width *= 2.0;
    }
    Err(Error::Accuracy {
        estimate: value,
        error: f64::INFINITY,
        target: eps,
    })
}

/// Integrates `f` over `[lo, inf)` given that `f(u)` eventually decays at
/// least like `exp(-decay_rate_hint u)`.
///
/// Panels of length `1/rate, 2/rate, 4/rate, ...` are added until a panel
/// contributes less than the truncation epsilon, the tail bound
/// `|f(end)| / rate` is below it too, and `|f|` did not grow across the panel.
pub fn integrate_semi_infinite<F>(
    f: F,
    lo: f64,
    decay_rate_hint: f64,
    settings: &QuadSettings,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    try_integrate_semi_infinite(|x| Ok(f(x)), lo, decay_rate_hint, settings)
}

/// Half-width of the Gaussian window used by the convolution substitution.
const CONV_WINDOW: f64 = 9.0;

/// `int_0^t h(t - s; x1, mu1) h(s; x2, mu2) ds`.
///
/// The integral is rewritten as `h(t; x1 + x2, 0)` times a Gaussian average
/// over a variable `y` in which the driftless product becomes `phi(y) rho(y)`
/// with a bounded, smooth weight `rho`. This removes the essential
/// singularities at both ends of the time interval.
pub fn convolve_h_pair(
    t: f64,
    x1: f64,
    mu1: f64,
    x2: f64,
    mu2: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    convolve_scaled(t, x1, mu1, x2, mu2, 0.0, settings)
}

/// `exp(ln_scale)` times the convolution, with the scale folded into the
/// exponent so that huge weights on tiny convolutions stay finite.
pub(crate) fn convolve_scaled(
    t: f64,
    x1: f64,
    mu1: f64,
    x2: f64,
    mu2: f64,
    ln_scale: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("convolution needs t > 0 (got {t})")));
    }
    if !(x1.is_finite() && x2.is_finite() && mu1.is_finite() && mu2.is_finite()) {
        return Err(Error::domain("convolution needs finite displacements and drifts"));
    }
    if x1 == 0.0 || x2 == 0.0 {
        return Ok(0.0);
    }
    // h(t; -x, -mu) = h(t; x, mu)
    let (x1, m1) = if x1 < 0.0 { (-x1, -mu1) } else { (x1, mu1) };
    let (x2, m2) = if x2 < 0.0 { (-x2, -mu2) } else { (x2, mu2) };

    let s = x1 + x2;
    let (m1sq, m2sq) = (m1 * m1, m2 * m2);
    let mm = m1sq.min(m2sq);
    let ln_pref = ln_scale - m1 * x1 - m2 * x2 - 0.5 * mm * t + ln_h_driftless(t, s);
    if ln_pref < -745.0 {
        return Ok(0.0);
    }
    let (e1, e2) = (0.5 * (m1sq - mm) * t, 0.5 * (m2sq - mm) * t);
    let sqrt_t = t.sqrt();
    let prod = 4.0 * x1 * x2;

    let weight = |y: f64| -> Result<f64> {
        let y2t = y * y * t;
        let sd = y.abs() * sqrt_t * (prod + y2t).sqrt();
        let (w, one_minus_w) = if y >= 0.0 {
            let aa = s * s + y2t;
            (
                (2.0 * x2 * s + y2t + sd) / (2.0 * aa),
                2.0 * x1 * x1 / (2.0 * x1 * s + y2t + sd),
            )
        } else {
            let aa = s * s + y2t;
            (
                2.0 * x2 * x2 / (2.0 * x2 * s + y2t + sd),
                (2.0 * x1 * s + y2t + sd) / (2.0 * aa),
            )
        };
        let rho = 2.0 * x1 * x2 / (s * (x1 * w + x2 * one_minus_w));
        Ok(std_normal_pdf(y) * rho * (-e1 * one_minus_w - e2 * w).exp())
    };

    let lower = try_integrate_finite(weight, -CONV_WINDOW, 0.0, settings)?;
    let upper = try_integrate_finite(weight, 0.0, CONV_WINDOW, settings)?;
    Ok(ln_pref.exp() * (lower.value + upper.value))
}
