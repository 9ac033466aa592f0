//! Limits of slowly converging sequences.

use alloc::vec::Vec;

/// Extrapolated limit of a sequence together with its spread-based error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limit {
    pub value: f64,
    pub error: f64,
}

/// Value at `h = 0` of the polynomial through `(h_i, v_i)` (Neville's scheme).
pub fn polynomial_at_zero(h: &[f64], v: &[f64]) -> f64 {
    let n = h.len();
    let mut p: Vec<f64> = v.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

/// Richardson-type extrapolation of samples `v_i` taken at abscissae `h_i → 0`.
///
/// Each window of `order + 1` consecutive samples yields one extrapolant; the estimate
/// is the last one and the error bar is the spread of the last three. Samples are
/// expressed relative to the final sample so exactly constant data extrapolates
/// to itself without rounding.
pub fn richardson(h: &[f64], v: &[f64], order: usize) -> Option<Limit> {
    let n = h.len().min(v.len());
    let w = order + 1;
    if n < w {
        return None;
    }
    let base = v[n - 1];
    let deltas: Vec<f64> = v[..n].iter().map(|x| x - base).collect();
    let extrapolants: Vec<f64> =
        (0..=n - w).map(|s| base + polynomial_at_zero(&h[s..s + w], &deltas[s..s + w])).collect();
    let last = extrapolants[extrapolants.len() - 1];
    let tail = &extrapolants[extrapolants.len().saturating_sub(3)..];
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(Limit { value: last, error: hi - lo })
}

/// Least-squares line `v ≈ c0 + c1 h`; returns `(c0, c1)`.
pub fn linear_fit(h: &[f64], v: &[f64]) -> Option<(f64, f64)> {
    let n = h.len().min(v.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mh = h[..n].iter().sum::<f64>() / nf;
    let mv = v[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (h[i] - mh) * (h[i] - mh);
        sxy += (h[i] - mh) * (v[i] - mv);
    }
    if sxx == 0.0 {
        return Some((mv, 0.0));
    }
    let slope = sxy / sxx;
    Some((mv - slope * mh, slope))
}
