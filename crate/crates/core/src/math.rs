//! Elementary functions routed through `libm` so results do not depend on the host libm.

pub use core::f64::consts::{LN_2, PI};

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn tgamma(x: f64) -> f64 {
    libm::tgamma(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `log(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + ln_1p(exp(lo - hi))
}

/// `x^ν - 1` for `x = 1 + d`, accurate when `d` is small.
#[inline]
pub fn pow1p_m1(d: f64, nu: f64) -> f64 {
    exp_m1(nu * ln_1p(d))
}

/// `n` points spaced evenly in `log` between `lo` and `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let (a, b) = (ln(lo), ln(hi));
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else if i == 0 {
                        lo
                    } else {
                        exp(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// `n` evenly spaced points between `lo` and `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    let half = n as f64 / 2.0;
    powf(PI, half) / tgamma(half + 1.0)
}
