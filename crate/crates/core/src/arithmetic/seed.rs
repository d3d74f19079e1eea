use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::prime::is_probable_prime;
use crate::error::{Error, Result};

/// Default size of the random prime denominator.
pub const DEFAULT_SEED_BITS: u32 = 256;

/// Number of denominators tried before an interval is declared too narrow.
const MAX_DENOMINATOR_DRAWS: usize = 64;

/// Open interval `(lo, hi)` with rational endpoints, `0 <= lo < hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo.is_negative() {
            return Err(Error::Domain(format!("interval lower end {lo} is negative")));
        }
        if lo >= hi {
            return Err(Error::Domain(format!("degenerate interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_integers(lo: i64, hi: i64) -> Result<Self> {
        Self::new(BigRational::from_integer(lo.into()), BigRational::from_integer(hi.into()))
    }

    /// `(0, 1)`, the seed domain of the integer-coefficient generators.
    pub fn unit() -> Self {
        Self {
            lo: BigRational::zero(),
            hi: BigRational::one(),
        }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    /// Strict containment of `num/den`.
    pub fn contains(&self, num: &BigUint, den: &BigUint) -> bool {
        let x = BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()));
        self.lo < x && x < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// An exact seed `t = p/q` with prime `q`, lying strictly inside its domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalSeed {
    numerator: BigUint,
    denominator: BigUint,
    interval: Interval,
}

impl RationalSeed {
    /// Validates coprimality, primality of the denominator and strict
    /// containment in `interval`.
    pub fn new(numerator: BigUint, denominator: BigUint, interval: Interval) -> Result<Self> {
        if !is_probable_prime(&denominator) {
            return Err(Error::Domain(format!("seed denominator {denominator} is not prime")));
        }
        if !numerator.gcd(&denominator).is_one() {
            return Err(Error::Domain(format!(
                "seed {numerator}/{denominator} is not in lowest terms"
            )));
        }
        if !interval.contains(&numerator, &denominator) {
            return Err(Error::Domain(format!(
                "seed {numerator}/{denominator} is outside {interval}"
            )));
        }
        Ok(Self {
            numerator,
            denominator,
            interval,
        })
    }

    /// Seed in `(0, 1)` from machine integers; handy for fixtures.
    pub fn unit(numerator: u64, denominator: u64) -> Result<Self> {
        Self::new(numerator.into(), denominator.into(), Interval::unit())
    }

    /// Parses `"p/q"`.
    pub fn parse(s: &str, interval: Interval) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::Validation(format!("seed {s:?} is not of the form p/q")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<BigUint>()
                .map_err(|e| Error::Validation(format!("seed {s:?}: {e}")))
        };
        Self::new(parse(p)?, parse(q)?, interval)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numerator.clone().into(), self.denominator.clone().into())
    }

    /// Nearest-ish `f64`; lossy, for display only.
    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for RationalSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Uniform integer in `[0, bound)` by masked rejection.
fn random_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    let bytes = (bits as usize).div_ceil(8);
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill_bytes(&mut buf);
        let excess = bytes as u64 * 8 - bits;
        if excess > 0 {
            let last = bytes - 1;
            buf[last] &= 0xff >> excess;
        }
        let candidate = BigUint::from_bytes_le(&buf);
        if candidate < *bound {
            return candidate;
        }
    }
}

/// Uniform odd integer with exactly `bits` bits.
fn random_odd_with_bits(rng: &mut ChaCha8Rng, bits: u32) -> BigUint {
    let bytes = (bits as usize).div_ceil(8);
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    let mut n = BigUint::from_bytes_le(&buf);
    n &= (BigUint::one() << bits) - 1u32;
    n.set_bit(u64::from(bits) - 1, true);
    n.set_bit(0, true);
    n
}

/// Deterministic source of random rational seeds.
///
/// One sampler per worker; parallel sweeps derive independent substreams with
/// [`SeedSampler::substream`].
#[derive(Clone, Debug)]
pub struct SeedSampler {
    rng: ChaCha8Rng,
    bit_width: u32,
}

impl SeedSampler {
    pub fn new(rng_seed: u64, bit_width: u32) -> Result<Self> {
        Self::substream(rng_seed, 0, bit_width)
    }

    /// Independent stream `stream` of the master seed `rng_seed`.
    pub fn substream(rng_seed: u64, stream: u64, bit_width: u32) -> Result<Self> {
        if bit_width < 2 {
            return Err(Error::Domain(format!(
                "seed bit width must be >= 2 (odd prime denominators), got {bit_width}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(stream);
        Ok(Self { rng, bit_width })
    }

    pub fn bit_width(&self) -> u32 {
        self.bit_width
    }

    /// Uniform `bit_width`-bit odd prime, by rejection.
    pub fn random_prime(&mut self) -> BigUint {
        loop {
            let candidate = random_odd_with_bits(&mut self.rng, self.bit_width);
            if is_probable_prime(&candidate) {
                return candidate;
            }
        }
    }

    /// Draws `p/q`: `q` a uniform `bit_width`-bit odd prime, `p` uniform among
    /// the integers placing `p/q` strictly inside `interval`.
    pub fn sample_seed(&mut self, interval: &Interval) -> Result<RationalSeed> {
        for _ in 0..MAX_DENOMINATOR_DRAWS {
            let q = self.random_prime();
            let qi = BigInt::from(q.clone());
            // smallest p with p/q > lo, largest p with p/q < hi
            let lo_scaled = interval.lo.numer() * &qi;
            let p_min: BigInt = lo_scaled.div_floor(interval.lo.denom()) + 1;
            let hi_scaled = interval.hi.numer() * &qi;
            let p_max: BigInt = -((-hi_scaled).div_floor(interval.hi.denom())) - 1;
            if p_min > p_max {
                continue;
            }
            let (p_min, p_max) = match (p_min.to_biguint(), p_max.to_biguint()) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let span = &p_max - &p_min + 1u32;
            // multiples of q are the only non-coprime numerators; at most a
            // few of them can sit in the range, so rejection terminates
            let multiples = &p_max / &q - (&p_min - 1u32) / &q;
            if multiples >= span {
                continue;
            }
            loop {
                let p = &p_min + random_below(&mut self.rng, &span);
                if !(&p % &q).is_zero() {
                    return Ok(RationalSeed {
                        numerator: p,
                        denominator: q,
                        interval: interval.clone(),
                    });
                }
            }
        }
        Err(Error::Width {
            bits: self.bit_width,
            lo: interval.lo.to_string(),
            hi: interval.hi.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|i| i * i <= n).all(|i| n % i != 0)
    }

    #[test]
    fn pinned_8_bit_draw() {
        let mut sampler = SeedSampler::new(2024, 8).unwrap();
        let seed = sampler.sample_seed(&Interval::unit()).unwrap();
        let p = seed.numerator().to_u64().unwrap();
        let q = seed.denominator().to_u64().unwrap();
        assert!(trial_division(q));
        assert!((128..256).contains(&q));
        assert!(0 < p && p < q);
        assert_eq!(seed.to_string(), "112/199");
    }

    #[test]
    fn unit_interval_invariants() {
        let mut sampler = SeedSampler::new(7, 64).unwrap();
        for _ in 0..50 {
            let seed = sampler.sample_seed(&Interval::unit()).unwrap();
            assert!(is_probable_prime(seed.denominator()));
            assert!(seed.numerator().gcd(seed.denominator()).is_one());
            assert!(seed.numerator() < seed.denominator());
            assert_eq!(seed.denominator().bits(), 64);
        }
    }

    #[test]
    fn shifted_interval() {
        let interval = Interval::from_integers(1, 2).unwrap();
        let mut sampler = SeedSampler::new(11, 16).unwrap();
        for _ in 0..100 {
            let seed = sampler.sample_seed(&interval).unwrap();
            let q = seed.denominator();
            assert!(q < seed.numerator());
            assert!(*seed.numerator() < q * 2u32);
        }
    }

    #[test]
    fn reproducible() {
        let interval = Interval::unit();
        let a: Vec<_> = {
            let mut s = SeedSampler::substream(5, 3, 128).unwrap();
            (0..4).map(|_| s.sample_seed(&interval).unwrap()).collect()
        };
        let b: Vec<_> = {
            let mut s = SeedSampler::substream(5, 3, 128).unwrap();
            (0..4).map(|_| s.sample_seed(&interval).unwrap()).collect()
        };
        assert_eq!(a, b);
        let mut other = SeedSampler::substream(5, 4, 128).unwrap();
        assert_ne!(a[0], other.sample_seed(&interval).unwrap());
    }

    #[test]
    fn narrow_interval_is_width_error() {
        let lo = BigRational::new(1.into(), 3.into());
        let hi = BigRational::new(BigInt::from(1) * 1_000_001, BigInt::from(3_000_000));
        let interval = Interval::new(lo, hi).unwrap();
        let mut sampler = SeedSampler::new(1, 8).unwrap();
        assert!(matches!(sampler.sample_seed(&interval), Err(Error::Width { .. })));
    }

    #[test]
    fn constructor_validation() {
        assert!(RationalSeed::unit(1, 3).is_ok());
        assert!(RationalSeed::unit(3, 3).is_err());
        assert!(RationalSeed::unit(2, 9).is_err());
        assert!(RationalSeed::unit(4, 3).is_err());
        let g = Interval::from_integers(1, 2).unwrap();
        assert!(RationalSeed::new(3u32.into(), 2u32.into(), g.clone()).is_ok());
        assert!(RationalSeed::parse("5/3", g).is_ok());
        assert!(RationalSeed::parse("5:3", Interval::unit()).is_err());
        assert!(Interval::from_integers(1, 1).is_err());
    }
}
