//! Points of the unit interval: exact residues, error-tracked fixed-point
//! fractions, and the 128-bit torus representation analyses work on.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};

/// The value of one `beta_k` in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleValue {
    /// `residue / denominator`, `0 <= residue < denominator`.
    Exact {
        residue: BigUint,
        denominator: Arc<BigUint>,
    },
    /// `frac * 2^-64`, within `err * 2^-64` (mod 1) of the true value.
    Fixed { frac: u64, err: u64 },
}

/// One term `beta_k = x_k(t) mod 1` of a generated stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitSample {
    /// Generator index the value was taken from.
    pub k: u64,
    pub value: SampleValue,
}

impl UnitSample {
    pub fn exact(k: u64, residue: BigUint, denominator: Arc<BigUint>) -> Result<Self> {
        if residue >= *denominator {
            return Err(Error::Domain(format!(
                "residue {residue} not below denominator {denominator}"
            )));
        }
        Ok(Self {
            k,
            value: SampleValue::Exact {
                residue,
                denominator,
            },
        })
    }

    pub fn fixed(k: u64, frac: u64, err: u64) -> Self {
        Self {
            k,
            value: SampleValue::Fixed { frac, err },
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.value, SampleValue::Exact { .. })
    }

    /// Rounded to 53 bits. This is the one lossy conversion samples go through.
    pub fn to_f64(&self) -> f64 {
        self.to_torus().to_f64()
    }

    pub fn to_torus(&self) -> Torus {
        match &self.value {
            SampleValue::Exact {
                residue,
                denominator,
            } => {
                let scaled: BigUint = (residue << 128u32) / denominator.as_ref();
                Torus(scaled.to_u128().expect("residue below denominator"))
            }
            SampleValue::Fixed { frac, .. } => Torus(u128::from(*frac) << 64),
        }
    }
}

/// A point of R/Z stored as `value * 2^-128`.
///
/// Integer combinations of torus points are computed with wrapping
/// arithmetic, which is reduction mod 1 for free. Exact samples convert with
/// error below 2^-128, so `m . beta mod 1` is off by at most `|m|_1 * 2^-128`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Torus(pub u128);

impl Torus {
    pub const ZERO: Torus = Torus(0);

    /// Reduces `x` mod 1 first; NaN and infinities map to 0.
    pub fn from_f64(x: f64) -> Self {
        if !x.is_finite() {
            return Self::ZERO;
        }
        let frac = x - x.floor();
        // frac in [0, 1]; 1.0 can appear after rounding and wraps to 0
        if frac >= 1.0 {
            return Self::ZERO;
        }
        Torus((frac * 2f64.powi(128)) as u128)
    }

    /// Value in `[0, 1)` rounded to nearest `f64`.
    pub fn to_f64(self) -> f64 {
        let v = self.0 as f64 * 2f64.powi(-128);
        // rounding can produce exactly 1.0 for values within 2^-54 of 1
        if v >= 1.0 {
            1.0 - f64::EPSILON / 2.0
        } else {
            v
        }
    }

    /// Representative in `[-1/2, 1/2)`.
    pub fn to_signed_f64(self) -> f64 {
        (self.0 as i128) as f64 * 2f64.powi(-128)
    }

    pub fn scale(self, m: i64) -> Torus {
        Torus(self.0.wrapping_mul(m as i128 as u128))
    }

    pub fn add(self, other: Torus) -> Torus {
        Torus(self.0.wrapping_add(other.0))
    }

    /// `m . x mod 1`.
    pub fn dot(m: &[i64], x: &[Torus]) -> Torus {
        m.iter()
            .zip(x)
            .fold(Torus::ZERO, |acc, (&mi, &xi)| acc.add(xi.scale(mi)))
    }

    /// `(cos 2 pi x, sin 2 pi x)`, evaluated on the centred representative.
    pub fn unit_phasor(self) -> (f64, f64) {
        let (s, c) = (std::f64::consts::TAU * self.to_signed_f64()).sin_cos();
        (c, s)
    }
}
