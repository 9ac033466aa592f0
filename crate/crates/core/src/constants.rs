//! Dimension-dependent constants of the Joseph–Lundgren theory.

use serde::{Deserialize, Serialize};

use crate::math::sqrt;
use crate::{Error, Result};

/// Constants determined by the space dimension alone.
///
/// `p_jl` is `+∞` for `n ≤ 10`; it is serialized as `null` in that case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub n: u32,
    pub q_jl: f64,
    #[serde(with = "infinite_as_null")]
    pub p_jl: f64,
    pub a: f64,
    pub gamma_crit: f64,
    pub hardy_const: f64,
}

impl DimensionConstants {
    pub fn new(n: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(alloc::format!("dimension must be at least 3, got {n}")));
        }
        let nf = n as f64;
        let root = sqrt(nf - 1.0);
        let p_jl = if n >= 11 { 1.0 + 4.0 / (nf - 4.0 - 2.0 * root) } else { f64::INFINITY };
        Ok(Self {
            n,
            q_jl: (nf - 2.0 * root) / 4.0,
            p_jl,
            a: 1.0 + root,
            gamma_crit: 1.0 / (4.0 * root),
            hardy_const: (nf - 2.0) * (nf - 2.0) / 4.0,
        })
    }

    /// `(N+2)/(N-2)`, the Sobolev exponent.
    pub fn sobolev_exponent(&self) -> f64 {
        let nf = self.n as f64;
        (nf + 2.0) / (nf - 2.0)
    }

    /// `λ*` of the exponential nonlinearity, `2(N-2)`.
    pub fn exponential_lambda_star(&self) -> f64 {
        2.0 * (self.n as f64 - 2.0)
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
