//! Nonlinearity families `f`, evaluated in log space.
//!
//! A [`Family`] couples a catalogue member ([`Base`]) with a dimension and a shift
//! `c`, so that `f_c(u) = f(u + c)`. Everything is expressed through `L = log f` and the
//! scaled derivatives `(1+x) L'(x)` and `(1+x)^2 L''(x)`, which keeps families such as
//! `exp(exp(u))` usable far past the overflow of `f` itself.

mod growth;
mod tail;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::constants::DimensionConstants;
use crate::math::{abs, exp, exp_m1, ln, ln_1p, powf, LN_2};
use crate::{Error, Result};

pub use growth::{
    check_growth_conditions, estimate_gamma, estimate_q, GammaEstimate, GrowthChecks, GrowthReport, QEstimate,
};
pub use tail::{asymptotic_tail_log_f, TailPoint};

/// Largest `log f` the shooting layer accepts; keeps `f` itself representable.
pub const LOG_F_CAP: f64 = 690.0;

/// Catalogue members. Parameters follow the JSON keys `p`, `nu`, `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Base {
    /// `f ≡ 1`.
    Constant,
    /// `e^u`.
    Exp,
    /// `(1+u)^p`.
    Power { p: f64 },
    /// `exp((log(1+u))^ν)`, `ν > 1`.
    ExpLogPower { nu: f64 },
    /// `exp((1+u)^ν)`, `ν > 0`.
    ExpPower { nu: f64 },
    /// `exp(u + β(1+u)^ν)`, `0 < ν < 1`.
    ExpPlusPower { beta: f64, nu: f64 },
    /// `exp(e^u)`.
    ExpExp,
    /// `e^u (1+u)^ν`.
    ExpTimesPower { nu: f64 },
    /// `(1+u)^p (1 + β (log(2+u))^{-ν})`.
    LogRatio { p: f64, beta: f64, nu: f64 },
    /// `(1+u)^p exp(β (log(1+u))^ν)`, `0 < ν < 1`.
    ExpLogCorrection { p: f64, beta: f64, nu: f64 },
    /// `(1+u)^p (log(2+u))^ν`.
    LogPower { p: f64, nu: f64 },
}

/// Kernel that the tail integral is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// `e^{-y}`, the exponential profile, with `Ff' = 1`.
    Exponential,
    /// `(1 + y/p)^{-p}`, the pure power profile, with `Ff' = p/(p-1)`.
    Power(f64),
}

impl Reference {
    pub fn q(&self) -> f64 {
        match *self {
            Reference::Exponential => 1.0,
            Reference::Power(p) => p / (p - 1.0),
        }
    }

    #[inline]
    pub(crate) fn log_kernel(&self, y: f64) -> f64 {
        match *self {
            Reference::Exponential => -y,
            Reference::Power(p) => -p * ln_1p(y / p),
        }
    }
}

#[inline]
fn pow_or_zero(base: f64, e: f64) -> f64 {
    if base == 0.0 {
        if e > 0.0 {
            0.0
        } else if e == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        powf(base, e)
    }
}

/// `ℓ(x+s)^ν - ℓ(x)^ν` given `ℓ = ℓ(x)` and `d = ℓ(x+s) - ℓ(x)`.
#[inline]
fn log_power_increment(l: f64, d: f64, nu: f64) -> f64 {
    if l == 0.0 {
        pow_or_zero(d, nu)
    } else {
        powf(l, nu) * exp_m1(nu * ln_1p(d / l))
    }
}

/// `(1+r)^ν - 1 - νr`.
fn pow1p_excess(r: f64, nu: f64) -> f64 {
    if abs(r) < 1e-2 {
        let mut term = nu * r;
        let mut sum = 0.0;
        for k in 2..12 {
            term *= (nu - (k - 1) as f64) * r / k as f64;
            sum += term;
        }
        sum
    } else {
        exp_m1(nu * ln_1p(r)) - nu * r
    }
}

/// `e^s - 1 - s`.
fn expm1_excess(s: f64) -> f64 {
    if abs(s) < 1e-2 {
        let mut term = s;
        let mut sum = 0.0;
        for k in 2..12 {
            term *= s / k as f64;
            sum += term;
        }
        sum
    } else {
        exp_m1(s) - s
    }
}

/// `log(1+r) - r`.
fn ln1p_excess(r: f64) -> f64 {
    if abs(r) < 1e-2 {
        let mut pow = r;
        let mut sum = 0.0;
        for k in 2..14 {
            pow *= -r;
            sum += pow / k as f64;
        }
        sum
    } else {
        ln_1p(r) - r
    }
}

impl Base {
    /// `log f(x)`.
    pub fn log_f(&self, x: f64) -> f64 {
        let l = || ln_1p(x);
        match *self {
            Base::Constant => 0.0,
            Base::Exp => x,
            Base::Power { p } => p * l(),
            Base::ExpLogPower { nu } => pow_or_zero(l(), nu),
            Base::ExpPower { nu } => powf(1.0 + x, nu),
            Base::ExpPlusPower { beta, nu } => x + beta * powf(1.0 + x, nu),
            Base::ExpExp => exp(x),
            Base::ExpTimesPower { nu } => x + nu * l(),
            Base::LogRatio { p, beta, nu } => p * l() + ln_1p(beta * powf(ln(2.0 + x), -nu)),
            Base::ExpLogCorrection { p, beta, nu } => p * l() + beta * pow_or_zero(l(), nu),
            Base::LogPower { p, nu } => p * l() + nu * ln(ln(2.0 + x)),
        }
    }

    /// `(1+x) L'(x)` and `(1+x)^2 L''(x)` where `L = log f`.
    pub fn scaled_derivatives(&self, x: f64) -> (f64, f64) {
        let z = 1.0 + x;
        match *self {
            Base::Constant => (0.0, 0.0),
            Base::Exp => (z, 0.0),
            Base::Power { p } => (p, -p),
            Base::ExpLogPower { nu } => {
                let l = ln_1p(x);
                let a = nu * pow_or_zero(l, nu - 1.0);
                let b = nu * (nu - 1.0) * pow_or_zero(l, nu - 2.0);
                (a, b - a)
            }
            Base::ExpPower { nu } => {
                let zn = powf(z, nu);
                (nu * zn, nu * (nu - 1.0) * zn)
            }
            Base::ExpPlusPower { beta, nu } => {
                let zn = powf(z, nu);
                (z + beta * nu * zn, beta * nu * (nu - 1.0) * zn)
            }
            Base::ExpExp => {
                let e = exp(x);
                (z * e, z * z * e)
            }
            Base::ExpTimesPower { nu } => (z + nu, -nu),
            Base::LogRatio { p, beta, nu } => {
                let w = 2.0 + x;
                let m = ln(w);
                let g = 1.0 + beta * powf(m, -nu);
                let c1 = beta * nu * powf(m, -nu - 1.0) / g;
                let c2 = beta * nu * powf(m, -nu - 2.0) * (nu + 1.0 + m) / g;
                let zw = z / w;
                (p - zw * c1, -p + zw * zw * (c2 - c1 * c1))
            }
            Base::ExpLogCorrection { p, beta, nu } => {
                let l = ln_1p(x);
                let a = p + beta * nu * pow_or_zero(l, nu - 1.0);
                let b = beta * nu * (nu - 1.0) * pow_or_zero(l, nu - 2.0);
                (a, b - a)
            }
            Base::LogPower { p, nu } => {
                let w = 2.0 + x;
                let m = ln(w);
                let zw = z / w;
                (p + nu * zw / m, -p - nu * (1.0 + m) * zw * zw / (m * m))
            }
        }
    }

    /// `log f(x+s) - log f(x)` for `s ≥ 0`, given also `r = s/(1+x)`.
    ///
    /// Both forms of the increment are passed so each family can use the one that is
    /// exact for its leading behaviour.
    pub fn increment(&self, x: f64, s: f64, r: f64) -> f64 {
        let z = 1.0 + x;
        let d = || ln_1p(r);
        match *self {
            Base::Constant => 0.0,
            Base::Exp => s,
            Base::Power { p } => p * d(),
            Base::ExpLogPower { nu } => log_power_increment(ln_1p(x), d(), nu),
            Base::ExpPower { nu } => powf(z, nu) * exp_m1(nu * d()),
            Base::ExpPlusPower { beta, nu } => s + beta * powf(z, nu) * exp_m1(nu * d()),
            Base::ExpExp => exp(x) * exp_m1(s),
            Base::ExpTimesPower { nu } => s + nu * d(),
            Base::LogRatio { p, beta, nu } => {
                let w = 2.0 + x;
                let m = ln(w);
                let mn = powf(m, -nu);
                let g = 1.0 + beta * mn;
                let dm = ln_1p(s / w);
                p * d() + ln_1p(beta * mn * exp_m1(-nu * ln_1p(dm / m)) / g)
            }
            Base::ExpLogCorrection { p, beta, nu } => p * d() + beta * log_power_increment(ln_1p(x), d(), nu),
            Base::LogPower { p, nu } => {
                let w = 2.0 + x;
                let m = ln(w);
                p * d() + nu * ln_1p(ln_1p(s / w) / m)
            }
        }
    }

    /// `log f(x+s) - log f(x) - s L'(x)` for exponential-type bases, computed without
    /// cancellation; `None` for power-type bases or when not representable.
    pub fn increment_excess(&self, x: f64, s: f64, r: f64) -> Option<f64> {
        let z = 1.0 + x;
        let v = match *self {
            Base::Exp => 0.0,
            Base::ExpPower { nu } => powf(z, nu) * pow1p_excess(r, nu),
            Base::ExpPlusPower { beta, nu } => beta * powf(z, nu) * pow1p_excess(r, nu),
            Base::ExpExp => exp(x) * expm1_excess(s),
            Base::ExpTimesPower { nu } => nu * ln1p_excess(r),
            Base::ExpLogPower { nu } => {
                let l = ln_1p(x);
                if l == 0.0 {
                    return None;
                }
                let d = ln_1p(r);
                powf(l, nu) * pow1p_excess(d / l, nu) + nu * powf(l, nu - 1.0) * ln1p_excess(r)
            }
            _ => return None,
        };
        v.is_finite().then_some(v)
    }

    /// Reference kernel for the tail integral, or `None` when `∫ 1/f` diverges.
    pub fn reference(&self) -> Option<Reference> {
        match *self {
            Base::Constant => None,
            Base::Power { p } => (p > 1.0).then_some(Reference::Power(p)),
            Base::LogRatio { p, .. } | Base::ExpLogCorrection { p, .. } | Base::LogPower { p, .. } => {
                Some(Reference::Power(p))
            }
            _ => Some(Reference::Exponential),
        }
    }

    /// Upper end of the `u` window used for the asymptotic estimators.
    fn asymptotic_window(&self) -> (f64, f64) {
        match *self {
            Base::Constant | Base::Exp => (10.0, 1e12),
            Base::Power { .. } => (10.0, 1e300),
            Base::ExpLogPower { .. } => (1e3, 1e300),
            Base::ExpPower { nu } => (10.0, powf(1e8, 1.0 / nu).min(1e300)),
            Base::ExpPlusPower { .. } => (10.0, 1e14),
            Base::ExpExp => (2.0, 16.0),
            Base::ExpTimesPower { .. } => (10.0, 1e12),
            Base::LogRatio { .. } | Base::ExpLogCorrection { .. } | Base::LogPower { .. } => (10.0, 1e300),
        }
    }
}

/// JSON description of a family: `{"family": ..., "N": ..., "params": {...}, "shift": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub shift: f64,
}

impl FamilySpec {
    pub fn new(family: &str, n: u32) -> Self {
        Self { family: family.to_string(), n, params: BTreeMap::new(), shift: 0.0 }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn shifted(mut self, c: f64) -> Self {
        self.shift = c;
        self
    }
}

/// Every family name accepted in [`FamilySpec::family`].
pub const FAMILY_NAMES: [&str; 12] = [
    "const",
    "exp",
    "power",
    "exp_log_power",
    "exp_power",
    "exp_plus_power",
    "exp_exp",
    "exp_times_power",
    "jl_log_ratio",
    "jl_exp_log_power",
    "jl_log_power",
    "f_n_gamma",
];

/// Growth exponent `k` and limit `γ` of `(F f' - q_JL)(-log F)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Declared {
    pub k: f64,
    pub gamma: f64,
}

/// Position of a family relative to the Type I / Type II threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Critical, `0<k<2, γ>0` or `k=2, γ>γ_crit`.
    #[serde(rename = "(A)")]
    A,
    /// Critical, `0<k<2, γ<0` or `k=2, γ<γ_crit`.
    #[serde(rename = "(B)")]
    B,
    /// Critical with `γ` exactly on the threshold.
    #[serde(rename = "boundary")]
    Boundary,
    /// `q > q_JL`: the oscillating regime.
    #[serde(rename = "q>qJL")]
    QAbove,
    /// `q < q_JL`: the monotone regime.
    #[serde(rename = "q<qJL")]
    QBelow,
    /// `∫ 1/f = ∞`; outside the theory.
    #[serde(rename = "F=inf")]
    Divergent,
}

/// Side of the threshold for a critical family with exponent `k` and limit `gamma`.
///
/// `margin` widens the boundary band, for use with estimated values.
pub fn threshold_side(n: u32, k: f64, gamma: f64, margin: f64) -> Side {
    let crit = DimensionConstants::new(n.max(3)).map(|c| c.gamma_crit).unwrap_or(0.0);
    let threshold = if k >= 2.0 - 1e-12 { crit } else { 0.0 };
    if gamma > threshold + margin {
        Side::A
    } else if gamma < threshold - margin {
        Side::B
    } else {
        Side::Boundary
    }
}

/// A nonlinearity in a fixed dimension, possibly translated.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    base: Base,
    spec: FamilySpec,
    consts: DimensionConstants,
    shift: f64,
}

fn get(spec: &FamilySpec, key: &str) -> Result<f64> {
    spec.params
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("family `{}` needs parameter `{key}`", spec.family)))
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.to_string()))
    }
}

impl Family {
    pub fn from_spec(spec: &FamilySpec) -> Result<Self> {
        let consts = DimensionConstants::new(spec.n)?;
        let allowed: &[&str] = match spec.family.as_str() {
            "const" | "exp" | "exp_exp" => &[],
            "power" => &["p"],
            "exp_log_power" | "exp_power" | "exp_times_power" | "jl_log_power" => &["nu"],
            "exp_plus_power" | "jl_log_ratio" | "jl_exp_log_power" => &["beta", "nu"],
            "f_n_gamma" => &["gamma"],
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        if let Some(extra) = spec.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("family `{}` does not take parameter `{extra}`", spec.family)));
        }
        if spec.params.values().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".to_string()));
        }
        require(spec.shift.is_finite() && spec.shift >= 0.0, "shift must be finite and non-negative")?;
        let jl = || -> Result<f64> {
            require(spec.n >= 11, "Joseph–Lundgren power families need N ≥ 11")?;
            Ok(consts.p_jl)
        };
        let base = match spec.family.as_str() {
            "const" => Base::Constant,
            "exp" => Base::Exp,
            "exp_exp" => Base::ExpExp,
            "power" => {
                let p = get(spec, "p")?;
                require(p > 0.0, "power needs p > 0")?;
                Base::Power { p }
            }
            "exp_log_power" => {
                let nu = get(spec, "nu")?;
                require(nu > 1.0, "exp_log_power needs nu > 1")?;
                Base::ExpLogPower { nu }
            }
            "exp_power" => {
                let nu = get(spec, "nu")?;
                require(nu > 0.0, "exp_power needs nu > 0")?;
                Base::ExpPower { nu }
            }
            "exp_plus_power" => {
                let (beta, nu) = (get(spec, "beta")?, get(spec, "nu")?);
                require(nu > 0.0 && nu < 1.0, "exp_plus_power needs 0 < nu < 1")?;
                Base::ExpPlusPower { beta, nu }
            }
            "exp_times_power" => Base::ExpTimesPower { nu: get(spec, "nu")? },
            "jl_log_ratio" => {
                let (beta, nu) = (get(spec, "beta")?, get(spec, "nu")?);
                require(nu > 0.0, "jl_log_ratio needs nu > 0")?;
                require(beta > -powf(LN_2, nu), "jl_log_ratio needs beta > -(log 2)^nu")?;
                Base::LogRatio { p: jl()?, beta, nu }
            }
            "jl_exp_log_power" => {
                let (beta, nu) = (get(spec, "beta")?, get(spec, "nu")?);
                require(nu > 0.0 && nu < 1.0, "jl_exp_log_power needs 0 < nu < 1")?;
                Base::ExpLogCorrection { p: jl()?, beta, nu }
            }
            "jl_log_power" => Base::LogPower { p: jl()?, nu: get(spec, "nu")? },
            "f_n_gamma" => {
                let gamma = get(spec, "gamma")?;
                match spec.n {
                    10 => Base::ExpTimesPower { nu: gamma },
                    n if n >= 11 => {
                        require(gamma > -LN_2, "f_n_gamma needs gamma > -log 2")?;
                        Base::LogRatio { p: consts.p_jl, beta: gamma, nu: 1.0 }
                    }
                    _ => return Err(Error::InvalidParameter("f_n_gamma needs N ≥ 10".to_string())),
                }
            }
            _ => unreachable!(),
        };
        let family = Self { base, spec: spec.clone(), consts, shift: spec.shift };
        family.validate_positive()?;
        Ok(family)
    }

    fn validate_positive(&self) -> Result<()> {
        for i in 0..=64 {
            let u = if i == 0 { 0.0 } else { powf(10.0, -2.0 + 0.25 * i as f64) };
            let l = self.base.log_f(u + self.shift);
            if l.is_nan() || l == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter(format!(
                    "family `{}` is not positive at u = {u}",
                    self.spec.family
                )));
            }
        }
        Ok(())
    }

    /// Same family translated by a further `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::from_spec(&self.spec.clone().shifted(self.shift + c))
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn n(&self) -> u32 {
        self.consts.n
    }

    pub fn constants(&self) -> &DimensionConstants {
        &self.consts
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn arg(&self, u: f64) -> Result<f64> {
        if u.is_nan() || u < -self.shift {
            return Err(Error::Domain { value: u, lower: -self.shift });
        }
        Ok(u + self.shift)
    }

    /// `log f(u)`.
    pub fn eval_log_f(&self, u: f64) -> Result<f64> {
        Ok(self.base.log_f(self.arg(u)?))
    }

    /// `f'(u)/f(u)`.
    pub fn dlog_f(&self, u: f64) -> Result<f64> {
        let x = self.arg(u)?;
        Ok(self.base.scaled_derivatives(x).0 / (1.0 + x))
    }

    /// `(log f)''(u)`.
    pub fn d2log_f(&self, u: f64) -> Result<f64> {
        let x = self.arg(u)?;
        let z = 1.0 + x;
        Ok(self.base.scaled_derivatives(x).1 / (z * z))
    }

    /// `f''/f'`, i.e. `L'' / L' + L'`.
    pub fn second_over_first(&self, u: f64) -> Result<f64> {
        let x = self.arg(u)?;
        let (s1, s2) = self.base.scaled_derivatives(x);
        Ok((s2 / s1 + s1) / (1.0 + x))
    }

    /// `f'(u)^2 / (f(u) f''(u))` evaluated without forming `f`.
    pub fn q_ratio(&self, u: f64) -> Result<f64> {
        let (s1, s2) = self.base.scaled_derivatives(self.arg(u)?);
        Ok(1.0 / (1.0 + s2 / (s1 * s1)))
    }

    /// `log f` on all of ℝ: the catalogue formula for `u ≥ 0`, and for `u < 0` the
    /// exponential continuation `log f(0) + (f'/f)(0) u`, which keeps `f` positive and `C¹`.
    pub fn log_f_extended(&self, u: f64) -> f64 {
        if u >= 0.0 {
            self.base.log_f(u + self.shift)
        } else {
            let x0 = self.shift;
            let l0 = self.base.log_f(x0);
            let d = self.base.scaled_derivatives(x0).0 / (1.0 + x0);
            if d.is_finite() {
                l0 + d * u
            } else {
                l0
            }
        }
    }

    /// `f'/f` matching [`Family::log_f_extended`].
    pub fn dlog_f_extended(&self, u: f64) -> f64 {
        let x = self.shift + u.max(0.0);
        self.base.scaled_derivatives(x).0 / (1.0 + x)
    }

    /// Reference kernel and its `q`, or `None` if `F = ∞`.
    pub fn reference(&self) -> Option<Reference> {
        self.base.reference()
    }

    /// Full tail data at `u`: `log f`, `log F`, `K = F f` and `F f' - q`.
    pub fn tail(&self, u: f64) -> Result<TailPoint> {
        tail::tail_point(&self.base, self.arg(u)?)
    }

    /// `log F(u)`.
    pub fn eval_log_big_f(&self, u: f64) -> Result<f64> {
        Ok(self.tail(u)?.log_big_f)
    }

    /// `F(u) = ∫_u^∞ ds / f(s)`; underflows to 0 when `F` is below the double range.
    pub fn eval_big_f(&self, u: f64) -> Result<f64> {
        Ok(exp(self.eval_log_big_f(u)?))
    }

    /// `F⁻¹(y)` for `0 < y ≤ F(0)`.
    pub fn invert_big_f(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::OutOfRange { value: y, lower: 0.0, upper: f64::INFINITY });
        }
        self.invert_log_big_f(ln(y), None)
    }

    /// `u` with `log F(u) = target`, starting Newton from `hint` when given.
    pub fn invert_log_big_f(&self, target: f64, hint: Option<f64>) -> Result<f64> {
        let x = tail::invert(&self.base, self.shift, target, hint.map(|h| h + self.shift))?;
        Ok(x - self.shift)
    }

    /// Declared `(k, γ)` when the family is critical (`q = q_JL(N)`).
    pub fn declared(&self) -> Option<Declared> {
        let n = self.consts.n;
        let exp_critical = n == 10;
        let d = |k: f64, gamma: f64| Some(Declared { k, gamma });
        match self.base {
            Base::Constant => None,
            Base::Exp if exp_critical => d(1.0, 0.0),
            Base::ExpLogPower { nu } if exp_critical => d(1.0 - 1.0 / nu, 1.0 / nu),
            Base::ExpPower { nu } if exp_critical => d(1.0, (1.0 - nu) / nu),
            Base::ExpPlusPower { beta, nu } if exp_critical => d(2.0 - nu, beta * nu * (1.0 - nu)),
            Base::ExpExp if exp_critical => d(1.0, -1.0),
            Base::ExpTimesPower { nu } if exp_critical => d(2.0, nu),
            Base::Power { p } if n >= 11 && abs(p - self.consts.p_jl) <= 1e-12 * p => d(1.0, 0.0),
            Base::LogRatio { p, beta, nu } => d(1.0 + nu, nu * beta * powf(p - 1.0, nu - 1.0)),
            Base::ExpLogCorrection { p, beta, nu } => d(1.0 - nu, -nu * beta * powf(p - 1.0, -nu - 1.0)),
            Base::LogPower { p, nu } => d(1.0, -nu / (p - 1.0)),
            _ => None,
        }
    }

    /// Position relative to the Type I/II threshold using the declared constants.
    pub fn declared_side(&self) -> Side {
        let Some(reference) = self.reference() else {
            return Side::Divergent;
        };
        if let Some(dec) = self.declared() {
            return threshold_side(self.consts.n, dec.k, dec.gamma, 0.0);
        }
        let q = reference.q();
        if q > self.consts.q_jl {
            Side::QAbove
        } else {
            Side::QBelow
        }
    }

    /// Largest `α` with `log f(α) ≤ 690` (capped at `1e15`).
    pub fn alpha_cap(&self) -> f64 {
        let within = |u: f64| self.base.log_f(u + self.shift) <= LOG_F_CAP;
        if within(1e15) {
            return 1e15;
        }
        let (mut lo, mut hi) = (0.0_f64, 1e15_f64);
        if !within(lo) {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = if hi > 4.0 * (lo + 1.0) { libm::sqrt((lo + 1.0) * (hi + 1.0)) - 1.0 } else { 0.5 * (lo + hi) };
            if within(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        lo
    }

    /// `u` window (in the family's own argument) for asymptotic estimators.
    pub(crate) fn asymptotic_window(&self) -> (f64, f64) {
        let (lo, hi) = self.base.asymptotic_window();
        ((lo - self.shift).max(0.0), (hi - self.shift).max(1.0))
    }
}
