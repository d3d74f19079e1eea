//! The `x_k(t)` families and the constructions that turn scalar streams
//! `beta_k = x_k(t) mod 1` into sequences of d-dimensional points.
//!
//! Integer-coefficient families (`x_k(t) = c_k t`) are evaluated exactly as
//! `(c_k p mod q) / q` for a seed `t = p/q`. Koksma's powers `t^k` have no
//! modular shortcut and go through error-tracked fixed point.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::arithmetic::{factorial_mod, modpow, FixedPointReal, Interval, PrecisionCap, RationalSeed};
use crate::error::{Error, Result};
use crate::sample::{Torus, UnitSample};

/// Guard bits on top of `ceil(K log2 a)` for the power iteration.
pub const KOKSMA_GUARD_BITS: u64 = 96;

/// Integer coefficients `a_k` of a linear generator `x_k(t) = a_k t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoefficientSeq {
    /// `a_k` is the k-th entry (1-based).
    Explicit(Arc<Vec<BigInt>>),
    /// `a_k = start + (k - 1) stride`.
    Arithmetic { start: BigInt, stride: BigInt },
}

impl CoefficientSeq {
    fn coefficient(&self, k: u64) -> Result<BigInt> {
        match self {
            CoefficientSeq::Explicit(values) => {
                values.get(k as usize - 1).cloned().ok_or(Error::Length {
                    needed: k as usize,
                    available: values.len(),
                })
            }
            CoefficientSeq::Arithmetic { start, stride } => Ok(start + stride * BigInt::from(k - 1)),
        }
    }
}

/// Reindexing `a_1, a_2, ...` of positive, pairwise distinct integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexSeq {
    Explicit(Arc<Vec<u64>>),
    /// `a_i = start + (i - 1) stride`.
    Stride { start: u64, stride: u64 },
}

impl IndexSeq {
    fn validate(&self) -> Result<()> {
        match self {
            IndexSeq::Explicit(values) => {
                if values.contains(&0) {
                    return Err(Error::Validation("permutation indices must be positive".into()));
                }
            }
            IndexSeq::Stride { start, stride } => {
                if *start == 0 || *stride == 0 {
                    return Err(Error::Validation(
                        "stride permutation needs start >= 1 and stride >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Maps 1-based stream positions to generator indices, checking that the
    /// consumed prefix has no repeats.
    fn resolve(&self, positions: &[u64]) -> Result<Vec<u64>> {
        let max = positions.iter().copied().max().unwrap_or(0);
        match self {
            IndexSeq::Explicit(values) => {
                if max as usize > values.len() {
                    return Err(Error::Length {
                        needed: max as usize,
                        available: values.len(),
                    });
                }
                let mut seen = HashSet::with_capacity(max as usize);
                for &a in &values[..max as usize] {
                    if !seen.insert(a) {
                        return Err(Error::Validation(format!("permutation index {a} repeats")));
                    }
                }
                Ok(positions.iter().map(|&i| values[i as usize - 1]).collect())
            }
            IndexSeq::Stride { start, stride } => positions
                .iter()
                .map(|&i| {
                    (i - 1)
                        .checked_mul(*stride)
                        .and_then(|v| v.checked_add(*start))
                        .ok_or_else(|| Error::Validation("permutation index overflows u64".into()))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// `x_k(t) = k^p t` on `(0, 1)`.
    WeylPower { p: u32 },
    /// `x_k(t) = M^k t` on `(0, 1)`.
    Multiplicative { base: u64 },
    /// `x_k(t) = k! t` on `(0, 1)`.
    Factorial,
    /// `x_k(t) = k^k t` on `(0, 1)`.
    SelfPower,
    /// `x_k(t) = a_k t` on `(0, 1)`.
    LinearInteger(CoefficientSeq),
    /// `x_k(t) = t^k` on `(1, hi)`.
    Koksma { hi: BigRational },
}

/// Which generator, optionally read through a reindexing `a_1, a_2, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub permutation: Option<IndexSeq>,
}

impl GeneratorSpec {
    pub fn new(family: Family) -> Result<Self> {
        let spec = Self {
            family,
            permutation: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_permutation(mut self, permutation: IndexSeq) -> Result<Self> {
        self.permutation = Some(permutation);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            Family::WeylPower { p } if *p == 0 => {
                return Err(Error::Validation("Weyl power p must be >= 1".into()))
            }
            Family::Multiplicative { base } if *base < 2 => {
                return Err(Error::Validation("multiplicative base M must be >= 2".into()))
            }
            Family::Koksma { hi } if *hi <= BigRational::one() => {
                return Err(Error::Validation(format!("Koksma interval (1, {hi}) is empty")))
            }
            _ => {}
        }
        if let Some(perm) = &self.permutation {
            perm.validate()?;
        }
        Ok(())
    }

    /// The seed domain `G`.
    pub fn seed_interval(&self) -> Interval {
        match &self.family {
            Family::Koksma { hi } => Interval::new(BigRational::one(), hi.clone())
                .expect("validated Koksma interval"),
            _ => Interval::unit(),
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.family, Family::Koksma { .. })
    }
}

/// `beta_1 .. beta_n` for `seed`.
pub fn beta_stream(
    spec: &GeneratorSpec,
    seed: &RationalSeed,
    n: usize,
    cap: PrecisionCap,
) -> Result<Vec<UnitSample>> {
    if n == 0 {
        return Err(Error::Validation("stream length must be >= 1".into()));
    }
    let positions: Vec<u64> = (1..=n as u64).collect();
    beta_at_positions(spec, seed, &positions, cap)
}

/// Stream values at arbitrary 1-based positions (after reindexing).
pub fn beta_at_positions(
    spec: &GeneratorSpec,
    seed: &RationalSeed,
    positions: &[u64],
    cap: PrecisionCap,
) -> Result<Vec<UnitSample>> {
    if positions.contains(&0) {
        return Err(Error::Validation("stream positions are 1-based".into()));
    }
    let interval = spec.seed_interval();
    if !interval.contains(seed.numerator(), seed.denominator()) {
        return Err(Error::Domain(format!("seed {seed} is outside {interval}")));
    }
    let indices = match &spec.permutation {
        Some(perm) => perm.resolve(positions)?,
        None => positions.to_vec(),
    };
    match &spec.family {
        Family::Koksma { hi } => koksma_at(hi, seed, &indices, cap),
        family => {
            let q = Arc::new(seed.denominator().clone());
            let coefficients = coefficients_mod(family, &q, &indices)?;
            coefficients
                .into_iter()
                .zip(&indices)
                .map(|(c, &k)| UnitSample::exact(k, (c * seed.numerator()) % q.as_ref(), q.clone()))
                .collect()
        }
    }
}

/// Walks a one-multiply recurrence `c_k = step(k, c_{k-1})` up to the largest
/// requested index, recording the requested values in request order.
fn walk_recurrence(
    indices: &[u64],
    first: BigUint,
    mut step: impl FnMut(u64, &BigUint) -> Result<BigUint>,
) -> Result<Vec<BigUint>> {
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by_key(|&i| indices[i]);
    let mut out = vec![BigUint::zero(); indices.len()];
    let mut k = 1u64;
    let mut current = first;
    for i in order {
        while k < indices[i] {
            k += 1;
            current = step(k, &current)?;
        }
        out[i] = current.clone();
    }
    Ok(out)
}

fn coefficients_mod(family: &Family, q: &BigUint, indices: &[u64]) -> Result<Vec<BigUint>> {
    let max = indices.iter().copied().max().unwrap_or(0);
    match family {
        Family::WeylPower { p } => {
            let p = BigUint::from(*p);
            indices.iter().map(|&k| modpow(&BigUint::from(k), &p, q)).collect()
        }
        Family::SelfPower => indices
            .iter()
            .map(|&k| modpow(&BigUint::from(k), &BigUint::from(k), q))
            .collect(),
        Family::Multiplicative { base } => {
            let m = BigUint::from(*base);
            // sparse requests far out are cheaper by direct powering
            if max > 4 * indices.len() as u64 + 64 {
                indices.iter().map(|&k| modpow(&m, &BigUint::from(k), q)).collect()
            } else {
                walk_recurrence(indices, &m % q, |_, prev| Ok((prev * &m) % q))
            }
        }
        Family::Factorial => walk_recurrence(indices, BigUint::one() % q, |k, prev| {
            factorial_mod(k, q, Some(prev))
        }),
        Family::LinearInteger(seq) => {
            let qi = BigInt::from(q.clone());
            indices
                .iter()
                .map(|&k| {
                    let c = seq.coefficient(k)?.mod_floor(&qi);
                    Ok(c.to_biguint().expect("mod_floor is nonnegative"))
                })
                .collect()
        }
        Family::Koksma { .. } => unreachable!("Koksma is not an integer-coefficient family"),
    }
}

/// Fractional precision for evaluating `t^k`, `k <= max_index`, `t < hi`.
pub fn koksma_precision_bits(hi: &BigRational, max_index: u64) -> u64 {
    ceil_log2_power(hi, max_index) + KOKSMA_GUARD_BITS
}

/// Exact `ceil(k log2 x)` for `x >= 1`: the least `b` with `x^k <= 2^b`.
fn ceil_log2_power(x: &BigRational, k: u64) -> u64 {
    if k == 0 || *x <= BigRational::one() {
        return 0;
    }
    let estimate = (k as f64 * x.to_f64().unwrap_or(f64::MAX).log2()).ceil();
    if !(estimate < u32::MAX as f64) {
        return u64::MAX / 2;
    }
    let num = Pow::pow(x.numer().magnitude(), k);
    let den = Pow::pow(x.denom().magnitude(), k);
    let fits = |b: u64| num <= &den << b;
    let mut b = (estimate as u64).saturating_sub(2);
    while !fits(b) {
        b += 1;
    }
    b
}

fn koksma_at(
    hi: &BigRational,
    seed: &RationalSeed,
    indices: &[u64],
    cap: PrecisionCap,
) -> Result<Vec<UnitSample>> {
    let max = indices.iter().copied().max().unwrap_or(0);
    let bits = koksma_precision_bits(hi, max);
    if bits > cap.0 {
        return Err(Error::PrecisionBudget {
            k: max,
            target_frac_bits: 64,
            required: bits,
            cap: cap.0,
        });
    }
    let bits = bits as u32;
    let t = FixedPointReal::from_ratio(&BigInt::from(seed.numerator().clone()), seed.denominator(), bits)?;

    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by_key(|&i| indices[i]);
    let mut out: Vec<Option<UnitSample>> = vec![None; indices.len()];
    let mut k = 1u64;
    let mut power = t.clone();
    for i in order {
        while k < indices[i] {
            power = power.mul(&t, bits);
            k += 1;
        }
        let (frac, err) = power.frac_u64();
        out[i] = Some(UnitSample::fixed(k, frac, err));
    }
    Ok(out.into_iter().map(|s| s.expect("every index visited")).collect())
}

/// How scalar streams become d-dimensional points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Coordinate j of point k is `x_{(k-1)d + j + o}(t_j)`: one seed per coordinate.
    Interleaved,
    /// Coordinate j of point k is `beta_{(k-1)h + j + o}` of a single stream.
    Sliding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowConfig {
    pub d: usize,
    pub h: usize,
    pub o: usize,
    pub construction: Construction,
}

impl WindowConfig {
    pub fn sliding(d: usize, h: usize, o: usize) -> Result<Self> {
        let cfg = Self {
            d,
            h,
            o,
            construction: Construction::Sliding,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `h` is unused by this construction and recorded as `d`.
    pub fn interleaved(d: usize, o: usize) -> Result<Self> {
        let cfg = Self {
            d,
            h: d,
            o,
            construction: Construction::Interleaved,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.h == 0 {
            return Err(Error::Validation(format!(
                "window needs d >= 1 and h >= 1, got d = {}, h = {}",
                self.d, self.h
            )));
        }
        Ok(())
    }

    pub fn seeds_required(&self) -> usize {
        match self.construction {
            Construction::Interleaved => self.d,
            Construction::Sliding => 1,
        }
    }

    /// Stream length consumed by `count` sliding windows.
    pub fn required_len(&self, count: usize) -> usize {
        if count == 0 {
            return 0;
        }
        self.o + (count - 1) * self.h + self.d
    }

    /// Number of full sliding windows in a stream of length `len`.
    pub fn max_windows(&self, len: usize) -> usize {
        if len < self.o + self.d {
            0
        } else {
            (len - self.o - self.d) / self.h + 1
        }
    }
}

/// The first `count` sliding windows of `stream`.
pub fn window_vectors<T: Clone>(stream: &[T], cfg: &WindowConfig, count: usize) -> Result<Vec<Vec<T>>> {
    cfg.validate()?;
    if cfg.construction != Construction::Sliding {
        return Err(Error::Validation(
            "window_vectors applies to the sliding construction".into(),
        ));
    }
    let needed = cfg.required_len(count);
    if needed > stream.len() {
        return Err(Error::Length {
            needed,
            available: stream.len(),
        });
    }
    Ok((0..count)
        .map(|k| {
            let start = k * cfg.h + cfg.o;
            stream[start..start + cfg.d].to_vec()
        })
        .collect())
}

/// `count` interleaved points, coordinate j drawn from `seeds[j]`.
pub fn interleaved_vectors(
    spec: &GeneratorSpec,
    seeds: &[RationalSeed],
    offset: usize,
    count: usize,
    cap: PrecisionCap,
) -> Result<Vec<Vec<UnitSample>>> {
    let d = seeds.len();
    if d == 0 {
        return Err(Error::Arity { expected: 1, got: 0 });
    }
    let mut columns = Vec::with_capacity(d);
    for (j, seed) in seeds.iter().enumerate() {
        let positions: Vec<u64> = (0..count)
            .map(|k| (k * d + j + 1 + offset) as u64)
            .collect();
        columns.push(beta_at_positions(spec, seed, &positions, cap)?);
    }
    Ok((0..count)
        .map(|k| columns.iter().map(|col| col[k].clone()).collect())
        .collect())
}

/// `count` points under `cfg`, exact samples preserved.
pub fn build_points(
    spec: &GeneratorSpec,
    seeds: &[RationalSeed],
    cfg: &WindowConfig,
    count: usize,
    cap: PrecisionCap,
) -> Result<Vec<Vec<UnitSample>>> {
    cfg.validate()?;
    if seeds.len() != cfg.seeds_required() {
        return Err(Error::Arity {
            expected: cfg.seeds_required(),
            got: seeds.len(),
        });
    }
    match cfg.construction {
        Construction::Interleaved => interleaved_vectors(spec, seeds, cfg.o, count, cap),
        Construction::Sliding => {
            let stream = beta_stream(spec, &seeds[0], cfg.required_len(count), cap)?;
            window_vectors(&stream, cfg, count)
        }
    }
}

/// Like [`build_points`] but converted to torus coordinates; sliding windows
/// convert each stream element once.
pub fn build_torus_points(
    spec: &GeneratorSpec,
    seeds: &[RationalSeed],
    cfg: &WindowConfig,
    count: usize,
    cap: PrecisionCap,
) -> Result<Vec<Vec<Torus>>> {
    cfg.validate()?;
    if seeds.len() != cfg.seeds_required() {
        return Err(Error::Arity {
            expected: cfg.seeds_required(),
            got: seeds.len(),
        });
    }
    match cfg.construction {
        Construction::Interleaved => Ok(interleaved_vectors(spec, seeds, cfg.o, count, cap)?
            .iter()
            .map(|p| p.iter().map(UnitSample::to_torus).collect())
            .collect()),
        Construction::Sliding => {
            let stream: Vec<Torus> = beta_stream(spec, &seeds[0], cfg.required_len(count), cap)?
                .iter()
                .map(UnitSample::to_torus)
                .collect();
            window_vectors(&stream, cfg, count)
        }
    }
}

/// Simply equidistributed stream that fails under shift 2: odd terms are
/// `frac(k t)/2 in [0, 1/2)`, even terms `(1 + frac(k t))/2 in [1/2, 1)`.
pub fn half_interval_interleave(seed: &RationalSeed, n: usize) -> Result<Vec<UnitSample>> {
    let q = seed.denominator();
    let denominator = Arc::new(q * 2u32);
    (1..=n as u64)
        .map(|i| {
            let k = i.div_ceil(2);
            let r = (BigUint::from(k) * seed.numerator()) % q;
            let residue = if i % 2 == 1 { r } else { r + q };
            UnitSample::exact(i, residue, denominator.clone())
        })
        .collect()
}

/// Parses one integer per line; blank lines and `#` comments are skipped.
pub fn parse_integer_lines(text: &str) -> Result<Vec<BigInt>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<BigInt>()
                .map_err(|e| Error::Validation(format!("bad integer {l:?}: {e}")))
        })
        .collect()
}
