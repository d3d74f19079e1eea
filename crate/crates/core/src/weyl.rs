//! Weyl sums `W_N(beta, m) = (1/N) sum_k e(m . beta_k)`, criterion scans over
//! frequency lattices, and the frequency vectors that make a family fail.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arithmetic::{PrecisionCap, RationalSeed};
use crate::checkpoints;
use crate::error::{Error, Result};
use crate::generators::{build_torus_points, GeneratorSpec, WindowConfig};
use crate::sample::{SampleValue, Torus, UnitSample};
use crate::summation::ComplexSum;

/// Nonzero frequency vector `m in Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(components: Vec<i64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("multi-index must have at least one component".into()));
        }
        if components.iter().all(|&c| c == 0) {
            return Err(Error::Validation("multi-index m = 0 is excluded".into()));
        }
        Ok(Self(components))
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sup_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// `r(m) = prod_i max(1, |m_i|)`.
    pub fn r(&self) -> f64 {
        self.0.iter().map(|c| c.unsigned_abs().max(1) as f64).product()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }

    /// First nonzero component positive.
    pub fn is_canonical(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    /// Every `m` with `0 < |m|_inf <= radius`, in lexicographic order.
    pub fn lattice(d: usize, radius: u64) -> Vec<MultiIndex> {
        let r = radius as i64;
        let side = (2 * r + 1) as usize;
        let total = side.pow(d as u32);
        (0..total)
            .filter_map(|mut code| {
                let mut m = vec![0i64; d];
                for c in m.iter_mut().rev() {
                    *c = (code % side) as i64 - r;
                    code /= side;
                }
                MultiIndex::new(m).ok()
            })
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;

    /// Accepts `"(2,-1)"`, `"2,-1"` or `"2 -1"`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: std::result::Result<Vec<i64>, _> = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect();
        let parts = parts.map_err(|e| Error::Validation(format!("bad multi-index {s:?}: {e}")))?;
        MultiIndex::new(parts)
    }
}

/// `W_N(m)` recorded at a grid of N values.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylSeries {
    pub m: MultiIndex,
    pub checkpoints: Vec<usize>,
    pub values: Vec<Complex64>,
    pub magnitudes: Vec<f64>,
}

impl WeylSeries {
    pub fn final_value(&self) -> Complex64 {
        *self.values.last().expect("series has at least one checkpoint")
    }

    pub fn final_magnitude(&self) -> f64 {
        *self.magnitudes.last().expect("series has at least one checkpoint")
    }

    /// `W_N(-m) = conj(W_N(m))`.
    pub fn conjugate(&self) -> Self {
        Self {
            m: self.m.negated(),
            checkpoints: self.checkpoints.clone(),
            values: self.values.iter().map(Complex64::conj).collect(),
            magnitudes: self.magnitudes.clone(),
        }
    }

    pub fn at(&self, n: usize) -> Option<Complex64> {
        self.checkpoints
            .iter()
            .position(|&c| c == n)
            .map(|i| self.values[i])
    }
}

/// `e(m . x)` for one point.
pub fn phasor(m: &MultiIndex, x: &[Torus]) -> Complex64 {
    let (c, s) = Torus::dot(m.components(), x).unit_phasor();
    Complex64::new(c, s)
}

/// Weyl sums of `points` at each checkpoint, with compensated accumulation.
pub fn weyl_sum<P: AsRef<[Torus]>>(points: &[P], m: &MultiIndex, checkpoints: &[usize]) -> Result<WeylSeries> {
    checkpoints::validate(checkpoints, points.len())?;
    let last = *checkpoints.last().unwrap();
    let mut acc = ComplexSum::default();
    let mut values = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for (i, p) in points[..last].iter().enumerate() {
        let x = p.as_ref();
        if x.len() != m.dim() {
            return Err(Error::Dimension {
                expected: m.dim(),
                got: x.len(),
            });
        }
        acc += phasor(m, x);
        if i + 1 == checkpoints[next] {
            values.push(acc.value() / (i + 1) as f64);
            next += 1;
        }
    }
    let magnitudes = values.iter().map(|z| z.norm()).collect();
    Ok(WeylSeries {
        m: m.clone(),
        checkpoints: checkpoints.to_vec(),
        values,
        magnitudes,
    })
}

/// `m . beta mod 1` evaluated in exact rationals; `None` for fixed-point samples.
pub fn exact_phase(m: &MultiIndex, point: &[UnitSample]) -> Result<Option<BigRational>> {
    if point.len() != m.dim() {
        return Err(Error::Dimension {
            expected: m.dim(),
            got: point.len(),
        });
    }
    let mut total = BigRational::zero();
    for (&mi, s) in m.components().iter().zip(point) {
        match &s.value {
            SampleValue::Exact {
                residue,
                denominator,
            } => {
                total += BigRational::new(
                    BigInt::from(mi) * BigInt::from(residue.clone()),
                    BigInt::from(denominator.as_ref().clone()),
                );
            }
            SampleValue::Fixed { .. } => return Ok(None),
        }
    }
    let floor = total.floor();
    Ok(Some(total - floor))
}

/// All Weyl series of a criterion scan, keyed by `m`.
#[derive(Clone, Debug)]
pub struct CriterionScan {
    pub d: usize,
    pub radius: u64,
    pub series: BTreeMap<MultiIndex, WeylSeries>,
}

impl CriterionScan {
    /// Largest final `|W_N|` among canonical representatives.
    pub fn worst(&self) -> (&MultiIndex, f64) {
        self.series
            .iter()
            .filter(|(m, _)| m.is_canonical())
            .map(|(m, s)| (m, s.final_magnitude()))
            .fold(None, |best: Option<(&MultiIndex, f64)>, (m, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((m, v)),
            })
            .expect("scan is never empty")
    }

    /// Canonical `m` whose final `|W_N|` is at least `threshold`.
    pub fn flagged(&self, threshold: f64) -> Vec<&MultiIndex> {
        self.series
            .iter()
            .filter(|(m, s)| m.is_canonical() && s.final_magnitude() >= threshold)
            .map(|(m, _)| m)
            .collect()
    }
}

/// Weyl sums for every `0 < |m|_inf <= radius` over precomputed points. Only
/// canonical `m` are summed; the rest follow by conjugation.
pub fn scan_points<P: AsRef<[Torus]> + Sync>(
    points: &[P],
    d: usize,
    radius: u64,
    checkpoints: &[usize],
) -> Result<CriterionScan> {
    if radius == 0 {
        return Err(Error::Validation("m_radius must be >= 1".into()));
    }
    let canonical: Vec<MultiIndex> = MultiIndex::lattice(d, radius)
        .into_iter()
        .filter(MultiIndex::is_canonical)
        .collect();
    let computed: Vec<WeylSeries> = canonical
        .par_iter()
        .map(|m| weyl_sum(points, m, checkpoints))
        .collect::<Result<_>>()?;
    let mut series = BTreeMap::new();
    for s in computed {
        let conj = s.conjugate();
        series.insert(conj.m.clone(), conj);
        series.insert(s.m.clone(), s);
    }
    Ok(CriterionScan { d, radius, series })
}

/// Generates `N = max(checkpoints)` points for the seed(s) and scans them.
pub fn criterion_scan(
    spec: &GeneratorSpec,
    seeds: &[RationalSeed],
    cfg: &WindowConfig,
    radius: u64,
    checkpoints: &[usize],
    cap: PrecisionCap,
) -> Result<CriterionScan> {
    let n = *checkpoints
        .last()
        .ok_or_else(|| Error::Validation("empty checkpoint list".into()))?;
    let points = build_torus_points(spec, seeds, cfg, n, cap)?;
    scan_points(&points, cfg.d, radius, checkpoints)
}

/// Null vector of `sum_j m_j (k + j - 1)^p = const in k`, i.e. the vanishing
/// of the coefficients of `k^1 .. k^p`; scaled to coprime integers with the
/// first nonzero entry positive.
pub fn degenerate_m_weyl(p: u32) -> Result<MultiIndex> {
    if p == 0 {
        return Err(Error::Validation("degenerate_m_weyl needs p >= 1".into()));
    }
    let rows = p as usize;
    let cols = rows + 1;
    // coefficient of k^i in (k + j)^p is C(p, i) j^(p - i), j = 0..p
    let binom = |n: u32, k: u32| -> BigInt { (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1)) };
    let mut a: Vec<Vec<BigRational>> = (1..=p)
        .map(|i| {
            (0..cols as u32)
                .map(|j| BigRational::from_integer(binom(p, i) * num_traits::pow(BigInt::from(j), (p - i) as usize)))
                .collect()
        })
        .collect();

    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let Some(sel) = (row..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, sel);
        let inv = a[row][col].recip();
        for v in a[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..rows {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..cols {
                    let delta = &factor * &a[row][c];
                    a[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    if free.len() != 1 {
        return Err(Error::Domain(format!(
            "expected a one-dimensional kernel, found dimension {}",
            free.len()
        )));
    }
    let f = free[0];
    let mut x = vec![BigRational::zero(); cols];
    x[f] = BigRational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = -a[r][f].clone();
    }

    let lcm = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let mut ints: Vec<BigInt> = x.iter().map(|v| (v * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    for v in ints.iter_mut() {
        *v = &*v / &gcd;
    }
    if ints.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative()) {
        for v in ints.iter_mut() {
            *v = -&*v;
        }
    }
    let comps = ints
        .iter()
        .map(|v| {
            v.to_i64()
                .ok_or_else(|| Error::Domain(format!("kernel entry {v} exceeds i64")))
        })
        .collect::<Result<Vec<_>>>()?;
    MultiIndex::new(comps)
}

/// `(M, -1)`: `M x_k - x_{k+1} = 0` for `x_k = M^k t`.
pub fn degenerate_m_multiplicative(base: u64) -> Result<MultiIndex> {
    if base < 2 {
        return Err(Error::Validation("multiplicative base M must be >= 2".into()));
    }
    let m = i64::try_from(base).map_err(|_| Error::Domain(format!("M = {base} exceeds i64")))?;
    MultiIndex::new(vec![m, -1])
}

/// `sum_j m_j (k + j - 1)^p` for a given `k`, exact.
pub fn weyl_power_frequency(m: &MultiIndex, p: u32, k: u64) -> BigInt {
    m.components()
        .iter()
        .enumerate()
        .map(|(j, &mj)| BigInt::from(mj) * num_traits::pow(BigInt::from(k + j as u64), p as usize))
        .sum()
}
