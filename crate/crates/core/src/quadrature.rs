//! Adaptive Gauss–Kronrod (10/21 point) quadrature on finite and semi-infinite intervals.

use alloc::vec::Vec;

use crate::math::abs;
use crate::{Error, Result};

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
    0.123_491_976_262_065_851_077_208_224_605_054,
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

/// Value of an integral together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Tolerances for the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-15, rel: 1e-12, max_intervals: 400 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    magnitude: f64,
    floor: f64,
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[10];
    let mut resabs = abs(resk);
    let mut resg = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (abs(f1) + abs(f2));
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[10] * abs(fc - mean);
    for j in 0..10 {
        resasc += WGK[j] * (abs(fv1[j] - mean) + abs(fv2[j] - mean));
    }
    let value = resk * half;
    let resabs = resabs * abs(half);
    let resasc = resasc * abs(half);
    if !value.is_finite() || !resasc.is_finite() {
        return Err(Error::Convergence { what: "quadrature (non-finite integrand)" });
    }
    let mut error = abs((resk - resg) * half);
    if resasc != 0.0 && error != 0.0 {
        let scale = libm::pow(200.0 * error / resasc, 1.5);
        error = resasc * if scale < 1.0 { scale } else { 1.0 };
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if error < floor {
        error = floor;
    }
    Ok(Panel { a, b, value, error, magnitude: resabs, floor })
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut panels: Vec<Panel> = alloc::vec![kronrod21(&mut f, a, b)?];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let magnitude: f64 = panels.iter().map(|p| p.magnitude).sum();
        let roundoff = 50.0 * f64::EPSILON * magnitude;
        let target = tol.abs.max(tol.rel * abs(value)).max(roundoff);
        if error <= target {
            return Ok(Estimate { value, error });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::Convergence { what: "adaptive quadrature" });
        }
        let refinable = |p: &Panel| p.error > 1.0001 * p.floor;
        let Some(worst) = panels.iter().enumerate().filter(|(_, p)| refinable(p)).fold(
            None,
            |best: Option<usize>, (i, p)| match best {
                Some(b) if panels[b].error >= p.error => Some(b),
                _ => Some(i),
            },
        ) else {
            return Ok(Estimate { value, error });
        };
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            return Err(Error::Convergence { what: "adaptive quadrature (interval exhausted)" });
        }
        panels.push(kronrod21(&mut f, p.a, mid)?);
        panels.push(kronrod21(&mut f, mid, p.b)?);
    }
}

/// Integral of `f` over `[a, ∞)` through the map `x = a + (1 - s)/s`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    integrate(
        |s| {
            let y = (1.0 - s) / s;
            let v = f(a + y);
            if v == 0.0 {
                0.0
            } else {
                v / (s * s)
            }
        },
        0.0,
        1.0,
        tol,
    )
}
