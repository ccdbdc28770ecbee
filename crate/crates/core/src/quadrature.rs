//! Globally adaptive Gauss-Kronrod (10/21) quadrature for complex-valued
//! integrands over a collection of panels.
//!
//! Each panel carries a tag so that one adaptive run can span several
//! coordinate charts (the measure module integrates every density piece in
//! its own local coordinate and refines all of them against one shared
//! error budget).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Complex, Error, Result};

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

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Integral value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: Complex::new(0.0, 0.0),
        error: 0.0,
    };
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

/// One integration interval `[lo, hi]` in the coordinate chart `chart`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub chart: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of live subintervals before giving up.
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-12,
            max_panels: 4000,
        }
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Single 21-point Kronrod evaluation with the embedded 10-point Gauss error.
pub fn gk21<F>(f: &F, lo: f64, hi: f64) -> Estimate
where
    F: Fn(f64) -> Complex + ?Sized,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = f(center);

    let mut gauss = Complex::new(0.0, 0.0);
    let mut kronrod = f_center * WGK[10];
    let mut res_abs = f_center.norm() * WGK[10];
    let mut fv1 = [Complex::new(0.0, 0.0); 10];
    let mut fv2 = [Complex::new(0.0, 0.0); 10];

    for j in 0..10 {
        let x = half * XGK[j];
        let a = f(center - x);
        let b = f(center + x);
        fv1[j] = a;
        fv2[j] = b;
        kronrod += (a + b) * WGK[j];
        res_abs += (a.norm() + b.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (a + b) * WG[j / 2];
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[10] * (f_center - mean).norm();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }

    let abs_half = half.abs();
    let err = ((kronrod - gauss) * half).norm();
    let value = kronrod * half;
    let error = rescale_error(err, res_abs * abs_half, res_asc * abs_half);
    if value.re.is_finite() && value.im.is_finite() {
        Estimate { value, error }
    } else {
        Estimate {
            value,
            error: f64::INFINITY,
        }
    }
}

struct Live {
    panel: Panel,
    est: Estimate,
    depth: u32,
}

impl PartialEq for Live {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Live {}
impl PartialOrd for Live {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Live {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptively integrates `f(chart, x)` over the union of `panels`, always
/// bisecting the panel with the largest error estimate.
pub fn integrate_panels<F>(f: F, panels: &[Panel], tol: Tolerance) -> Result<Estimate>
where
    F: Fn(usize, f64) -> Complex,
{
    let mut heap = BinaryHeap::new();
    let mut total = Estimate::ZERO;
    for p in panels.iter().filter(|p| p.hi > p.lo) {
        let est = gk21(&|x| f(p.chart, x), p.lo, p.hi);
        total = total + est;
        heap.push(Live {
            panel: *p,
            est,
            depth: 0,
        });
    }

    loop {
        let target = tol.abs.max(tol.rel * total.value.norm());
        if total.error <= target {
            return Ok(total);
        }
        if heap.len() >= tol.max_panels {
            break;
        }
        let Some(worst) = heap.pop() else {
            return Ok(total);
        };
        let Panel { chart, lo, hi } = worst.panel;
        let mid = 0.5 * (lo + hi);
        if worst.depth > 200 || mid <= lo || mid >= hi {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        let left = gk21(&|x| f(chart, x), lo, mid);
        let right = gk21(&|x| f(chart, x), mid, hi);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        for (est, lo, hi) in [(left, lo, mid), (right, mid, hi)] {
            heap.push(Live {
                panel: Panel { chart, lo, hi },
                est,
                depth: worst.depth + 1,
            });
        }
    }

    // Re-sum from scratch to shed accumulated roundoff in the running totals.
    let resummed = heap.iter().fold(Estimate::ZERO, |acc, l| acc + l.est);
    let target = tol.abs.max(tol.rel * resummed.value.norm());
    if resummed.error <= target {
        return Ok(resummed);
    }
    Err(Error::QuadratureFailure {
        achieved: resummed.error,
        requested: target,
    })
}

/// Convenience wrapper for a single finite interval.
pub fn integrate<F>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Estimate>
where
    F: Fn(f64) -> Complex,
{
    integrate_panels(|_, x| f(x), &[Panel { chart: 0, lo, hi }], tol)
}
