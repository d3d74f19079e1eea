use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default cap on `k * log2(t) + target_frac_bits`: enough for 20 000 powers
/// of a seed below 2 at 64 trustworthy bits plus 96 guard bits (~20 kbit mantissas).
pub const DEFAULT_PRECISION_CAP_BITS: u64 = 20_096;

/// Extra working bits for [`fixed_point_pow`] on top of the target precision.
const POW_GUARD_BITS: u64 = 64;

/// Upper limit on the number of bits any power computation may allocate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionCap(pub u64);

impl Default for PrecisionCap {
    fn default() -> Self {
        Self(DEFAULT_PRECISION_CAP_BITS)
    }
}

/// `mantissa * 2^-frac_bits`, off from the real value it stands for by at most
/// `err_ulps * 2^-frac_bits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointReal {
    mantissa: BigInt,
    frac_bits: u32,
    err_ulps: BigUint,
}

impl FixedPointReal {
    /// Exact dyadic value `mantissa * 2^-frac_bits`.
    pub fn from_dyadic(mantissa: BigInt, frac_bits: u32) -> Self {
        Self {
            mantissa,
            frac_bits,
            err_ulps: BigUint::zero(),
        }
    }

    pub fn from_parts(mantissa: BigInt, frac_bits: u32, err_ulps: BigUint) -> Self {
        Self {
            mantissa,
            frac_bits,
            err_ulps,
        }
    }

    /// `floor(num * 2^frac_bits / den)`, exact when the quotient is.
    pub fn from_ratio(num: &BigInt, den: &BigUint, frac_bits: u32) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let den = BigInt::from(den.clone());
        let (mantissa, rem) = (num << frac_bits).div_mod_floor(&den);
        let err_ulps = if rem.is_zero() { BigUint::zero() } else { BigUint::one() };
        Ok(Self {
            mantissa,
            frac_bits,
            err_ulps,
        })
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn err_ulps(&self) -> &BigUint {
        &self.err_ulps
    }

    pub fn is_exact(&self) -> bool {
        self.err_ulps.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits();
        // keep 64 significant bits before scaling so huge mantissas do not overflow
        let drop = bits.saturating_sub(64);
        let top = (&self.mantissa >> drop).to_f64().unwrap_or(f64::NAN);
        let exp = drop as i64 - i64::from(self.frac_bits);
        top * 2f64.powi(exp.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }

    /// Conservative upper bound on `log2 |value|` (for budget checks).
    pub fn log2_upper(&self) -> f64 {
        let bits = self.mantissa.bits();
        if bits == 0 {
            return f64::NEG_INFINITY;
        }
        let drop = bits.saturating_sub(53);
        let mut top = (self.mantissa.abs() >> drop).to_f64().unwrap_or(f64::MAX);
        if drop > 0 {
            top += 1.0;
        }
        top.log2() + drop as f64 - f64::from(self.frac_bits) + 1e-12
    }

    /// Same value at `frac_bits`; truncation adds one ulp to the error bound.
    pub fn rescale(&self, frac_bits: u32) -> Self {
        use std::cmp::Ordering;
        match frac_bits.cmp(&self.frac_bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let shift = frac_bits - self.frac_bits;
                Self {
                    mantissa: &self.mantissa << shift,
                    frac_bits,
                    err_ulps: &self.err_ulps << shift,
                }
            }
            Ordering::Less => {
                let shift = self.frac_bits - frac_bits;
                let mask = (BigUint::one() << shift) - 1u32;
                let truncated = !(self.mantissa.magnitude() & &mask).is_zero();
                let mut err_ulps = ceil_shr(&self.err_ulps, shift);
                if truncated {
                    err_ulps += 1u32;
                }
                Self {
                    // arithmetic shift floors toward -inf
                    mantissa: &self.mantissa >> shift,
                    frac_bits,
                    err_ulps,
                }
            }
        }
    }

    /// Product rounded down to `frac_bits`, with the error bound propagated:
    /// `|XY - xy| <= |x| e_y + |y| e_x + e_x e_y` (in the product's ulps),
    /// plus one ulp when truncation discards nonzero bits.
    pub fn mul(&self, other: &Self, frac_bits: u32) -> Self {
        let product = &self.mantissa * &other.mantissa;
        let product_frac = self.frac_bits + other.frac_bits;
        let propagated = self.mantissa.magnitude() * &other.err_ulps
            + other.mantissa.magnitude() * &self.err_ulps
            + &self.err_ulps * &other.err_ulps;
        if frac_bits >= product_frac {
            let shift = frac_bits - product_frac;
            return Self {
                mantissa: product << shift,
                frac_bits,
                err_ulps: propagated << shift,
            };
        }
        let shift = product_frac - frac_bits;
        let mask = (BigUint::one() << shift) - 1u32;
        let truncated = !(product.magnitude() & &mask).is_zero();
        let mut err_ulps = ceil_shr(&propagated, shift);
        if truncated {
            err_ulps += 1u32;
        }
        Self {
            mantissa: product >> shift,
            frac_bits,
            err_ulps,
        }
    }

    /// Fractional part truncated to 64 bits, with its error in units of 2^-64.
    ///
    /// The error saturates at `u64::MAX`, which means "no information".
    pub fn frac_u64(&self) -> (u64, u64) {
        let modulus = BigInt::one() << self.frac_bits;
        let frac = self.mantissa.mod_floor(&modulus);
        let (frac64, err64) = if self.frac_bits >= 64 {
            let shift = self.frac_bits - 64;
            let mask = (BigInt::one() << shift) - 1;
            let dropped = if (&frac & &mask).is_zero() { 0u32 } else { 1 };
            let top = (frac >> shift).to_u64().unwrap_or(u64::MAX);
            let err = ceil_shr(&self.err_ulps, shift) + dropped;
            (top, err)
        } else {
            let shift = 64 - self.frac_bits;
            let top = (frac << shift).to_u64().unwrap_or(u64::MAX);
            (top, &self.err_ulps << shift)
        };
        (frac64, err64.to_u64().unwrap_or(u64::MAX))
    }
}

fn ceil_shr(value: &BigUint, shift: u32) -> BigUint {
    if shift == 0 {
        return value.clone();
    }
    let mask = (BigUint::one() << shift) - 1u32;
    let q = value >> shift;
    if (value & &mask).is_zero() {
        q
    } else {
        q + 1u32
    }
}

/// `t^k` with every rounding accounted for in `err_ulps`, returned at
/// `target_frac_bits`.
///
/// The working precision is `target + ceil(k log2 t) + 2 ceil(log2 k) + 64`;
/// requests with `ceil(k log2 t) + target` above `cap` are refused.
pub fn fixed_point_pow(
    t: &FixedPointReal,
    k: u64,
    target_frac_bits: u32,
    cap: PrecisionCap,
) -> Result<FixedPointReal> {
    if t.mantissa.sign() != Sign::Plus || t.mantissa <= (BigInt::one() << t.frac_bits) {
        return Err(Error::Domain("fixed_point_pow requires t > 1".into()));
    }
    let growth = (k as f64 * t.log2_upper()).ceil();
    let required = if growth.is_finite() && growth < u64::MAX as f64 {
        growth as u64 + u64::from(target_frac_bits)
    } else {
        u64::MAX
    };
    if required > cap.0 {
        return Err(Error::PrecisionBudget {
            k,
            target_frac_bits,
            required,
            cap: cap.0,
        });
    }
    let log_k = 64 - k.leading_zeros() as u64;
    let working = u64::from(target_frac_bits) + growth as u64 + 2 * log_k + POW_GUARD_BITS;
    let working = u32::try_from(working).map_err(|_| Error::PrecisionBudget {
        k,
        target_frac_bits,
        required,
        cap: cap.0,
    })?;

    let mut base = t.rescale(working.max(t.frac_bits));
    let mut acc = FixedPointReal::from_dyadic(BigInt::one() << working, working);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base, working);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base, working);
        }
    }
    Ok(acc.rescale(target_frac_bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Pow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact_value(x: &FixedPointReal) -> BigRational {
        BigRational::new(x.mantissa.clone(), BigInt::one() << x.frac_bits)
    }

    fn err_bound(x: &FixedPointReal) -> BigRational {
        BigRational::new(BigInt::from(x.err_ulps.clone()), BigInt::one() << x.frac_bits)
    }

    #[test]
    fn dyadic_powers_are_exact() {
        let t = FixedPointReal::from_dyadic(3.into(), 1);
        let r = fixed_point_pow(&t, 3, 64, PrecisionCap::default()).unwrap();
        assert!(r.is_exact());
        assert_eq!(exact_value(&r), BigRational::new(27.into(), 8.into()));
        assert_eq!(r.to_f64(), 3.375);

        let two = FixedPointReal::from_dyadic(2.into(), 0);
        let r = fixed_point_pow(&two, 10, 64, PrecisionCap::default()).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.to_f64(), 1024.0);
    }

    #[test]
    fn sqrt2_power_matches_rational_oracle() {
        // t = 141421356/100000000, k = 100, compare at 64 fractional bits
        let num = BigInt::from(141_421_356u64);
        let den = BigUint::from(100_000_000u64);
        let t = FixedPointReal::from_ratio(&num, &den, 128).unwrap();
        let r = fixed_point_pow(&t, 100, 64, PrecisionCap::default()).unwrap();
        let exact = BigRational::new(Pow::pow(&num, 100u32), BigInt::from(Pow::pow(&den, 100u32)));
        let diff = (exact_value(&r) - &exact).abs();
        assert!(diff <= err_bound(&r));
        // error stays below 2^-40 absolute: input rounding at 2^-128 times k t^(k-1)
        assert!(diff < BigRational::new(1.into(), BigInt::one() << 40));
        let frac = exact.clone() - BigRational::from_integer(exact.to_integer());
        let (f64bits, err) = r.frac_u64();
        let approx = BigRational::new(BigInt::from(f64bits), BigInt::one() << 64);
        let slack = BigRational::new(BigInt::from(err), BigInt::one() << 64);
        assert!((approx - frac).abs() <= slack);
    }

    #[test]
    fn error_bound_is_honest() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let den: u64 = rng.random_range(2..1_000_000);
            let num: u64 = rng.random_range(den + 1..2 * den + 1);
            let k: u32 = rng.random_range(1..=50);
            let frac_bits: u32 = rng.random_range(8..96);
            let t = FixedPointReal::from_ratio(&num.into(), &den.into(), frac_bits).unwrap();
            if t.mantissa <= (BigInt::one() << frac_bits) {
                continue;
            }
            let r = fixed_point_pow(&t, u64::from(k), 64, PrecisionCap::default()).unwrap();
            let exact = BigRational::new(
                Pow::pow(BigInt::from(num), k),
                Pow::pow(BigInt::from(den), k),
            );
            assert!(
                (exact_value(&r) - exact).abs() <= err_bound(&r),
                "t = {num}/{den}, k = {k}, frac_bits = {frac_bits}"
            );
        }
    }

    #[test]
    fn budget_error_is_explicit() {
        let t = FixedPointReal::from_dyadic(3.into(), 1);
        let err = fixed_point_pow(&t, 100_000, 64, PrecisionCap::default()).unwrap_err();
        assert!(matches!(err, Error::PrecisionBudget { k: 100_000, .. }));
        assert!(fixed_point_pow(&t, 100_000, 64, PrecisionCap(100_000)).is_ok());
    }

    #[test]
    fn rejects_t_not_above_one() {
        let one = FixedPointReal::from_dyadic(1.into(), 0);
        assert!(fixed_point_pow(&one, 3, 64, PrecisionCap::default()).is_err());
        let half = FixedPointReal::from_dyadic(1.into(), 1);
        assert!(fixed_point_pow(&half, 3, 64, PrecisionCap::default()).is_err());
    }

    #[test]
    fn mul_propagates_error() {
        let a = FixedPointReal::from_parts(BigInt::from(3) << 10, 10, BigUint::from(2u32));
        let b = FixedPointReal::from_parts(BigInt::from(5) << 10, 10, BigUint::from(1u32));
        let c = a.mul(&b, 10);
        // |x| e_y + |y| e_x + e_x e_y = 3072 + 10240 + 2 ulps of 2^-20, rounded up at 2^-10
        assert_eq!(c.err_ulps, BigUint::from(14u32));
        assert_eq!(c.to_f64(), 15.0);
    }
}
