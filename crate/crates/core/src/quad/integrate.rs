//! One-dimensional adaptive Gauss–Kronrod (10/21-point) integration.
//!
//! Globally adaptive: the interval with the largest error estimate is bisected
//! until the summed estimate meets the tolerance. Error estimates follow the
//! QUADPACK `qk21` rescaling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Abscissae of the 21-point Kronrod rule on [-1, 1] (non-negative half).
/// Odd indices are the 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_977_211_008,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule shared by every adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-8,
            abs: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
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

fn gauss_kronrod_21<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::numeric(
            format!("non-finite integrand on [{a}, {b}]"),
            None,
        ));
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates a fallible integrand over `[a, b]`. Integrable endpoint
/// singularities are fine: the rule never evaluates the endpoints.
pub fn integrate_fallible<F>(mut f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_pieces(&mut f, &[a, b], tol)
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
{
    integrate_fallible(|x| Ok(f(x)), a, b, tol)
}

/// Integrates over consecutive intervals `breaks[0]..breaks[1]..` with a single
/// shared error budget.
pub fn integrate_pieces<F>(f: &mut F, breaks: &[f64], tol: &Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if breaks.len() < 2 {
        return Err(Error::domain("integration needs at least one interval"));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let seg = gauss_kronrod_21(f, w[0], w[1])?;
            value += seg.value;
            error += seg.error;
            heap.push(seg);
        }
    }
    let mut subdivisions = heap.len();
    loop {
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            break;
        }
        // Segments too narrow to split stay out of the heap but keep their share.
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        let width = worst.b - worst.a;
        if width <= 1e3 * f64::EPSILON * worst.a.abs().max(worst.b.abs())
            || mid <= worst.a
            || mid >= worst.b
        {
            continue;
        }
        if subdivisions >= tol.max_subdivisions {
            return Err(Error::numeric(
                format!(
                    "adaptive quadrature hit {} subdivisions with error {error:e} > target {target:e}",
                    tol.max_subdivisions
                ),
                Some(value),
            ));
        }
        let left = gauss_kronrod_21(f, worst.a, mid)?;
        let right = gauss_kronrod_21(f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    let error = error.max(0.0);
    Ok(Estimate {
        value,
        error,
        subdivisions,
    })
}

/// `∫_a^∞ f`, split at `a + scale`; the tail is mapped by
/// `x = a + scale τ^{-p}`, `τ ∈ (0, 1]`.
///
/// An integrand decaying like `x^{-α}` becomes `τ^{p(α-1)-1}` on the tail, so
/// `p ≈ 2/(α-1)` keeps it regular; `p = 1` suits exponential decay.
pub fn integrate_to_infinity<F>(
    mut f: F,
    a: f64,
    scale: f64,
    tail_power: f64,
    tol: &Tolerance,
) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(scale > 0.0) || !(tail_power >= 1.0) {
        return Err(Error::domain(format!(
            "semi-infinite map needs scale > 0 and power >= 1, got {scale}, {tail_power}"
        )));
    }
    let p = tail_power;
    // Parameter z in [0, 2): z < 1 is the head x = a + scale z, z >= 1 the tail
    // with τ = 2 - z.
    let mut g = |z: f64| -> Result<f64> {
        if z < 1.0 {
            Ok(scale * f(a + scale * z)?)
        } else {
            let tau = 2.0 - z;
            let x = a + scale * tau.powf(-p);
            if !x.is_finite() {
                return Ok(0.0);
            }
            let y = f(x)?;
            if y == 0.0 {
                return Ok(0.0);
            }
            Ok(y * scale * p * tau.powf(-p - 1.0))
        }
    };
    integrate_pieces(&mut g, &[0.0, 1.0, 2.0], tol)
}

/// `∫_a^∞ f` for an integrand with roughly exponential decay on `scale`.
pub fn integrate_semi_infinite<F>(mut f: F, a: f64, scale: f64, tol: &Tolerance) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
{
    integrate_to_infinity(|x| Ok(f(x)), a, scale, 1.0, tol)
}
