//! Monte Carlo over seeds: moments of `Y_k(m) = e(m . beta_k)`, the
//! Davenport–Erdős–LeVeque series, covariance decay fits, exact orthogonality
//! certificates for `k! t` and `k^k t`, and the triangular digit scheme that
//! turns one Bernoulli sequence into an i.i.d. uniform family.
//!
//! Every replicate `i` draws its seeds from substream `i` of the master rng
//! seed, so results do not depend on how replicates are spread over threads.
//! Reductions always run in replicate order.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::{Pow, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arithmetic::{PrecisionCap, RationalSeed, SeedSampler, DEFAULT_SEED_BITS};
use crate::checkpoints;
use crate::error::{Error, Result};
use crate::generators::{build_torus_points, GeneratorSpec, WindowConfig};
use crate::sample::Torus;
use crate::weyl::{phasor, MultiIndex};

/// Default number of Monte Carlo seeds.
pub const DEFAULT_N_SEEDS: usize = 256;

/// Replicates evaluated concurrently before their results are folded in.
const BATCH: usize = 64;

/// Far-pair covariance envelope is `LEMMA3_ENVELOPE / ln(N)^2`.
pub const LEMMA3_ENVELOPE: f64 = 1.0;

/// Monte Carlo budget and reproducibility parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    pub n_seeds: usize,
    pub master_seed: u64,
    pub seed_bits: u32,
    pub cap: PrecisionCap,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_seeds: DEFAULT_N_SEEDS,
            master_seed: 0,
            seed_bits: DEFAULT_SEED_BITS,
            cap: PrecisionCap::default(),
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.n_seeds < 2 {
            return Err(Error::Validation(format!(
                "Monte Carlo needs n_seeds >= 2, got {}",
                self.n_seeds
            )));
        }
        Ok(())
    }

    /// Seeds of replicate `i`: one per coordinate for interleaved windows.
    pub fn replicate_seeds(&self, spec: &GeneratorSpec, cfg: &WindowConfig, i: usize) -> Result<Vec<RationalSeed>> {
        let mut sampler = SeedSampler::substream(self.master_seed, i as u64, self.seed_bits)?;
        let interval = spec.seed_interval();
        (0..cfg.seeds_required())
            .map(|_| sampler.sample_seed(&interval))
            .collect()
    }

    fn replicate_points(&self, spec: &GeneratorSpec, cfg: &WindowConfig, count: usize, i: usize) -> Result<Vec<Vec<Torus>>> {
        let seeds = self.replicate_seeds(spec, cfg, i)?;
        build_torus_points(spec, &seeds, cfg, count, self.cap)
    }
}

/// Runs `f` on every replicate, in parallel, and returns results in
/// replicate order.
fn replicates<R: Send>(mc: &McConfig, f: impl Fn(usize) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    (0..mc.n_seeds).into_par_iter().map(f).collect()
}

/// Sample mean and its standard error for complex observations.
pub fn mean_and_stderr(values: &[Complex64]) -> (Complex64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mean_and_stderr_real(values: &[f64]) -> (f64, f64) {
    let z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (m, s) = mean_and_stderr(&z);
    (m.re, s)
}

/// `Y_k(m)` for every point.
pub fn y_values<P: AsRef<[Torus]>>(points: &[P], m: &MultiIndex) -> Result<Vec<Complex64>> {
    points
        .iter()
        .map(|p| {
            let x = p.as_ref();
            if x.len() != m.dim() {
                return Err(Error::Dimension {
                    expected: m.dim(),
                    got: x.len(),
                });
            }
            Ok(phasor(m, x))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentTarget {
    /// `E Y_k`.
    MeanY { k: usize },
    /// `E Y_k conj(Y_l)`.
    Cross { k: usize, l: usize },
    /// `E |S_N|`.
    MeanAbsS { n: usize },
    /// `E |S_N|^2`.
    MeanAbsS2 { n: usize },
}

impl MomentTarget {
    fn points_needed(self) -> usize {
        match self {
            MomentTarget::MeanY { k } => k,
            MomentTarget::Cross { k, l } => k.max(l),
            MomentTarget::MeanAbsS { n } | MomentTarget::MeanAbsS2 { n } => n,
        }
    }

    pub fn name(self) -> String {
        match self {
            MomentTarget::MeanY { k } => format!("E Y_{k}"),
            MomentTarget::Cross { k, l } => format!("E Y_{k} conj(Y_{l})"),
            MomentTarget::MeanAbsS { n } => format!("E|S_{n}|"),
            MomentTarget::MeanAbsS2 { n } => format!("E|S_{n}|^2"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub target: MomentTarget,
    pub value: Complex64,
    pub stderr: f64,
    pub n_seeds: usize,
}

/// Plain Monte Carlo estimate of a seed-space moment.
pub fn mc_moment(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    target: MomentTarget,
    mc: &McConfig,
) -> Result<MomentEstimate> {
    mc.validate()?;
    let needed = target.points_needed();
    if needed == 0 {
        return Err(Error::Validation("moment indices are 1-based".into()));
    }
    let samples = replicates(mc, |i| {
        let pts = mc.replicate_points(spec, cfg, needed, i)?;
        let y = y_values(&pts, m)?;
        Ok(match target {
            MomentTarget::MeanY { k } => y[k - 1],
            MomentTarget::Cross { k, l } => y[k - 1] * y[l - 1].conj(),
            MomentTarget::MeanAbsS { n } => Complex64::new(y[..n].iter().sum::<Complex64>().norm(), 0.0),
            MomentTarget::MeanAbsS2 { n } => Complex64::new(y[..n].iter().sum::<Complex64>().norm_sqr(), 0.0),
        })
    })?;
    let (value, stderr) = mean_and_stderr(&samples);
    Ok(MomentEstimate {
        target,
        value,
        stderr,
        n_seeds: mc.n_seeds,
    })
}

/// Generators whose `Y_k`, `Y_l` are exactly orthogonal past a lag `c(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrthogonalFamily {
    Factorial,
    SelfPower,
}

impl OrthogonalFamily {
    fn coefficient(self, k: u64) -> BigInt {
        match self {
            OrthogonalFamily::Factorial => (1..=k).map(BigInt::from).product(),
            OrthogonalFamily::SelfPower => Pow::pow(BigInt::from(k), k as u32),
        }
    }

    /// `sum_i m_i c_{k+i-1}`: the integer frequency of `Y_k` as a function of `t`.
    pub fn frequency(self, k: u64, m: &MultiIndex) -> BigInt {
        m.components()
            .iter()
            .enumerate()
            .map(|(i, &mi)| BigInt::from(mi) * self.coefficient(k + i as u64))
            .sum()
    }
}

fn check_pair(k: u64, l: u64) -> Result<()> {
    if k == 0 || l == 0 {
        return Err(Error::Validation("indices are 1-based".into()));
    }
    if k == l {
        return Err(Error::Validation("exact frequency needs k != l".into()));
    }
    Ok(())
}

/// `sum_i m_i ((k+i-1)! - (l+i-1)!)`; nonzero certifies `E Y_k conj(Y_l) = 0`.
pub fn exact_frequency_factorial(k: u64, l: u64, m: &MultiIndex) -> Result<BigInt> {
    check_pair(k, l)?;
    Ok(OrthogonalFamily::Factorial.frequency(k, m) - OrthogonalFamily::Factorial.frequency(l, m))
}

/// Same for `x_k = k^k t`.
pub fn exact_frequency_self_power(k: u64, l: u64, m: &MultiIndex) -> Result<BigInt> {
    check_pair(k, l)?;
    Ok(OrthogonalFamily::SelfPower.frequency(k, m) - OrthogonalFamily::SelfPower.frequency(l, m))
}

/// Outcome of searching for `c(m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagScan {
    /// `None` when a zero-frequency pair exists at a lag beyond `max_lag`.
    pub c: Option<u64>,
    pub max_lag: u64,
    /// Pairs `(k, l)`, `1 <= l < k <= probe_bound`, that were examined.
    pub probe_bound: u64,
    /// Every examined pair with zero frequency.
    pub zero_pairs: Vec<(u64, u64)>,
    pub pairs_examined: u64,
}

/// Smallest `L` such that every examined pair with `k - l > L` has a nonzero
/// frequency, over `1 <= l < k <= max(4 max_lag, 40)`.
pub fn c_of_m_scan(family: OrthogonalFamily, m: &MultiIndex, max_lag: u64) -> Result<LagScan> {
    if max_lag == 0 {
        return Err(Error::Validation("max_lag must be >= 1".into()));
    }
    let probe_bound = (4 * max_lag).max(40);
    let mut by_value: HashMap<BigInt, Vec<u64>> = HashMap::new();
    for k in 1..=probe_bound {
        by_value.entry(family.frequency(k, m)).or_default().push(k);
    }
    let mut zero_pairs: Vec<(u64, u64)> = by_value
        .values()
        .flat_map(|ks| {
            ks.iter()
                .enumerate()
                .flat_map(move |(a, &l)| ks[a + 1..].iter().map(move |&k| (k, l)))
        })
        .collect();
    zero_pairs.sort_unstable();
    let worst = zero_pairs.iter().map(|(k, l)| k - l).max().unwrap_or(0);
    Ok(LagScan {
        c: (worst <= max_lag).then_some(worst),
        max_lag,
        probe_bound,
        zero_pairs,
        pairs_examined: probe_bound * (probe_bound - 1) / 2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Consistent with the property (a finite-N heuristic).
    Pass,
    /// Bounded away from the property beyond Monte Carlo error.
    Refuted,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Seed-averaged partial-sum statistics at every `n <= n_max`.
struct PartialSumMoments {
    /// `E |S_n|`, `n = 1..=n_max`.
    abs: Vec<f64>,
    /// `E |S_n|^2`.
    abs2: Vec<f64>,
    /// Standard errors at the checkpoints.
    abs_stderr: Vec<f64>,
    abs2_stderr: Vec<f64>,
}

fn partial_sum_moments(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    n_max: usize,
    grid: &[usize],
    mc: &McConfig,
) -> Result<PartialSumMoments> {
    mc.validate()?;
    let mut abs_sum = vec![0.0; n_max];
    let mut abs2_sum = vec![0.0; n_max];
    let mut at_grid_abs: Vec<Vec<f64>> = vec![Vec::with_capacity(mc.n_seeds); grid.len()];
    let mut at_grid_abs2: Vec<Vec<f64>> = vec![Vec::with_capacity(mc.n_seeds); grid.len()];
    for start in (0..mc.n_seeds).step_by(BATCH) {
        let end = (start + BATCH).min(mc.n_seeds);
        let batch: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let pts = mc.replicate_points(spec, cfg, n_max, i)?;
                let y = y_values(&pts, m)?;
                let mut s = Complex64::zero();
                Ok(y.iter()
                    .map(|v| {
                        s += v;
                        s.norm()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for abs in batch {
            for (n, &a) in abs.iter().enumerate() {
                abs_sum[n] += a;
                abs2_sum[n] += a * a;
            }
            for (g, &n) in grid.iter().enumerate() {
                at_grid_abs[g].push(abs[n - 1]);
                at_grid_abs2[g].push(abs[n - 1] * abs[n - 1]);
            }
        }
    }
    let inv = 1.0 / mc.n_seeds as f64;
    Ok(PartialSumMoments {
        abs: abs_sum.iter().map(|v| v * inv).collect(),
        abs2: abs2_sum.iter().map(|v| v * inv).collect(),
        abs_stderr: at_grid_abs.iter().map(|v| mean_and_stderr_real(v).1).collect(),
        abs2_stderr: at_grid_abs2.iter().map(|v| mean_and_stderr_real(v).1).collect(),
    })
}

/// Law-of-large-numbers diagnostics for `S_N = sum_{k<=N} Y_k(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SllnDiagnostics {
    pub m: MultiIndex,
    pub checkpoints: Vec<usize>,
    pub n_seeds: usize,
    /// `E|S_N|/N`.
    pub s_over_n: Vec<f64>,
    pub s_over_n_stderr: Vec<f64>,
    /// `E|S_N|^2/N^2`.
    pub s2_over_n2: Vec<f64>,
    pub s2_over_n2_stderr: Vec<f64>,
    /// `sum_{n0 <= n <= N} (1/n) E|S_n|^2/n^2`, `n0` the first checkpoint.
    pub del_partial_sums: Vec<f64>,
    /// Share of the final partial sum added over `(N/10, N]`.
    pub last_decade_increase: Option<f64>,
    /// Least-squares slope of `log E|S_N|^2/N^2` against `log N`.
    pub decay_slope: Option<f64>,
    pub verdict: Verdict,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let slope_se = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Some((slope, intercept, r2, slope_se))
}

fn diagnostics_from(m: &MultiIndex, grid: Vec<usize>, mom: &PartialSumMoments, n_seeds: usize) -> SllnDiagnostics {
    let n0 = grid[0];
    let n_max = *grid.last().unwrap();
    let mut running = 0.0;
    let mut partial = vec![0.0; n_max + 1];
    for n in n0..=n_max {
        let nf = n as f64;
        running += mom.abs2[n - 1] / (nf * nf * nf);
        partial[n] = running;
    }
    let s_over_n = grid.iter().map(|&n| mom.abs[n - 1] / n as f64).collect();
    let s_over_n_stderr = grid.iter().zip(&mom.abs_stderr).map(|(&n, s)| s / n as f64).collect();
    let s2: Vec<f64> = grid.iter().map(|&n| mom.abs2[n - 1] / (n * n) as f64).collect();
    let s2_stderr = grid
        .iter()
        .zip(&mom.abs2_stderr)
        .map(|(&n, s)| s / (n * n) as f64)
        .collect();
    let last_decade_increase = (n_max / 10 >= n0 && partial[n_max] > 0.0)
        .then(|| (partial[n_max] - partial[n_max / 10]) / partial[n_max]);
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(&s2)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
        .unzip();
    let decay_slope = least_squares(&xs, &ys).map(|f| f.0);
    SllnDiagnostics {
        m: m.clone(),
        del_partial_sums: grid.iter().map(|&n| partial[n]).collect(),
        checkpoints: grid,
        n_seeds,
        s_over_n,
        s_over_n_stderr,
        s2_over_n2: s2,
        s2_over_n2_stderr: s2_stderr,
        last_decade_increase,
        decay_slope,
        verdict: Verdict::Inconclusive,
    }
}

/// Partial sums of `sum (1/n) E(|S_n|/n)^2` estimated at every `n`: a
/// flattening trend (< 5% added over the last decade) passes, a harmonic-like
/// trend (> 25%) is refuted.
pub fn del_criterion(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    n_max: usize,
    mc: &McConfig,
) -> Result<SllnDiagnostics> {
    let grid = checkpoints::default_grid(n_max);
    let mom = partial_sum_moments(spec, cfg, m, n_max, &grid, mc)?;
    let mut diag = diagnostics_from(m, grid, &mom, mc.n_seeds);
    diag.verdict = match diag.last_decade_increase {
        Some(r) if r < 0.05 => Verdict::Pass,
        Some(r) if r > 0.25 => Verdict::Refuted,
        _ => Verdict::Inconclusive,
    };
    Ok(diag)
}

/// Weak complete equidistribution check through `E|S_N|/N -> 0`.
///
/// Pass: non-increasing within 3 standard errors and final value at most
/// `max(0.1, 5 stderr)`. Refuted: final value exceeds 0.1 by more than
/// 5 standard errors and has not dropped by 10% over the last decade.
pub fn wcud_check(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    grid: &[usize],
    mc: &McConfig,
) -> Result<SllnDiagnostics> {
    let n_max = *grid
        .last()
        .ok_or_else(|| Error::Validation("empty checkpoint list".into()))?;
    checkpoints::validate(grid, n_max)?;
    let mom = partial_sum_moments(spec, cfg, m, n_max, grid, mc)?;
    let mut diag = diagnostics_from(m, grid.to_vec(), &mom, mc.n_seeds);
    diag.verdict = wcud_verdict(&diag.checkpoints, &diag.s_over_n, &diag.s_over_n_stderr);
    Ok(diag)
}

fn wcud_verdict(grid: &[usize], v: &[f64], se: &[f64]) -> Verdict {
    let last = v.len() - 1;
    let decreasing = v
        .windows(2)
        .zip(se.windows(2))
        .all(|(w, s)| w[1] <= w[0] + 3.0 * s[0].max(s[1]))
        && (last == 0 || v[last] < v[0]);
    if decreasing && v[last] <= 0.1f64.max(5.0 * se[last]) {
        return Verdict::Pass;
    }
    let n_last = grid[last];
    let reference = grid.iter().rposition(|&n| n <= n_last / 10).unwrap_or(0);
    let no_decay = v[last] >= 0.9 * v[reference];
    if v[last] - 5.0 * se[last] > 0.1 && no_decay {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    Fitted,
    /// Fewer than three lags carry signal above 3 standard errors.
    Inconclusive,
}

/// Log-log fit of `|E(Y_k conj(Y_l) + Y_l conj(Y_k))|` against the lag `k - l`
/// at fixed `k + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub k_plus_l: usize,
    pub lags: Vec<usize>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub delta_hat: Option<f64>,
    pub c_hat: Option<f64>,
    pub r_squared: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// Decay at least as fast as `lag^(-1/d)` within two slope standard errors.
    pub compatible_with_inverse_d: Option<bool>,
    pub status: FitStatus,
}

/// Symmetrized covariances `2 Re E Y_k conj(Y_l)` for the given index pairs.
fn symmetrized_covariances(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    pairs: &[(usize, usize)],
    mc: &McConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    mc.validate()?;
    let needed = pairs.iter().map(|&(k, l)| k.max(l)).max().unwrap_or(1);
    let per_seed = replicates(mc, |i| {
        let pts = mc.replicate_points(spec, cfg, needed, i)?;
        let y = y_values(&pts, m)?;
        Ok(pairs
            .iter()
            .map(|&(k, l)| 2.0 * (y[k - 1] * y[l - 1].conj()).re)
            .collect::<Vec<f64>>())
    })?;
    Ok((0..pairs.len())
        .map(|j| {
            let col: Vec<f64> = per_seed.iter().map(|r| r[j]).collect();
            mean_and_stderr_real(&col)
        })
        .unzip())
}

pub fn lemma2_decay_fit(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    lags: &[usize],
    k_plus_l: usize,
    mc: &McConfig,
) -> Result<DecayFit> {
    if lags.is_empty() || lags.contains(&0) {
        return Err(Error::Validation("lags must be >= 1".into()));
    }
    let pairs: Vec<(usize, usize)> = lags
        .iter()
        .map(|&lag| {
            if lag + 2 > k_plus_l {
                return Err(Error::Validation(format!("lag {lag} too large for k + l = {k_plus_l}")));
            }
            let l = (k_plus_l - lag) / 2;
            Ok((l + lag, l))
        })
        .collect::<Result<_>>()?;
    let (estimates, stderr) = symmetrized_covariances(spec, cfg, m, &pairs, mc)?;
    let signal: Vec<(f64, f64)> = lags
        .iter()
        .zip(estimates.iter().zip(&stderr))
        .filter(|(_, (e, s))| e.abs() > 3.0 * **s && **e != 0.0)
        .map(|(&lag, (e, _))| ((lag as f64).ln(), e.abs().ln()))
        .collect();
    let mut fit = DecayFit {
        k_plus_l,
        lags: lags.to_vec(),
        estimates,
        stderr,
        delta_hat: None,
        c_hat: None,
        r_squared: None,
        slope_stderr: None,
        compatible_with_inverse_d: None,
        status: FitStatus::Inconclusive,
    };
    if signal.len() >= 3 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = signal.into_iter().unzip();
        if let Some((slope, intercept, r2, se)) = least_squares(&xs, &ys) {
            let delta = -slope;
            fit.delta_hat = Some(delta);
            fit.c_hat = Some(intercept.exp());
            fit.r_squared = Some(r2);
            fit.slope_stderr = Some(se);
            fit.compatible_with_inverse_d = Some(delta + 2.0 * se >= 1.0 / cfg.d as f64);
            fit.status = FitStatus::Fitted;
        }
    }
    Ok(fit)
}

/// Far-pair covariance check: pairs with `min(l, k - l) >= sqrt(N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma3Report {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    pub max_abs: f64,
    /// `max_abs * ln(N)^2`: the constant the data imply for a `c / ln(N)^2` envelope.
    pub c_hat: f64,
    pub envelope: f64,
    /// `4 max stderr`: deviations below this are invisible to the Monte Carlo.
    pub resolution: f64,
    /// `N + N^(3/2) + c_hat N^2 / ln(N)^2`.
    pub second_moment_budget: f64,
    pub verdict: Verdict,
}

pub fn lemma3_check(
    spec: &GeneratorSpec,
    cfg: &WindowConfig,
    m: &MultiIndex,
    n: usize,
    n_pairs: usize,
    mc: &McConfig,
) -> Result<Lemma3Report> {
    if n < 16 {
        return Err(Error::Validation(format!("lemma3_check needs N >= 16, got {n}")));
    }
    if n_pairs == 0 {
        return Err(Error::Validation("n_pairs must be >= 1".into()));
    }
    let gap = (n as f64).sqrt().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(mc.master_seed ^ 0x4c33_5f70_6169_7273);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| {
            let l = rng.random_range(gap..=n - gap);
            let k = rng.random_range(l + gap..=n);
            (k, l)
        })
        .collect();
    let (estimates, stderr) = symmetrized_covariances(spec, cfg, m, &pairs, mc)?;
    let ln2 = (n as f64).ln().powi(2);
    let envelope = LEMMA3_ENVELOPE / ln2;
    let max_abs = estimates.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let exceeds = estimates
        .iter()
        .zip(&stderr)
        .any(|(e, s)| e.abs() - 4.0 * s > envelope);
    let resolution = 4.0 * stderr.iter().fold(0.0f64, |a, s| a.max(*s));
    let noisy = resolution >= 1.0;
    let verdict = if exceeds {
        Verdict::Refuted
    } else if noisy {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let c_hat = max_abs * ln2;
    let nf = n as f64;
    Ok(Lemma3Report {
        n,
        pairs,
        estimates,
        stderr,
        max_abs,
        c_hat,
        envelope,
        resolution,
        second_moment_budget: nf + nf.powf(1.5) + c_hat * nf * nf / ln2,
        verdict,
    })
}

/// `T_{i+j-1} - (i-1)`, `T_n = n(n+1)/2`: the source digit of bit `j` of `U_i`.
pub fn gamma_index(i: u64, j: u64) -> Result<u64> {
    if i == 0 || j == 0 {
        return Err(Error::Validation("gamma_index is 1-based".into()));
    }
    let n = i
        .checked_add(j - 1)
        .ok_or_else(|| Error::Validation("gamma_index overflow".into()))?;
    let t = n
        .checked_mul(n + 1)
        .map(|v| v / 2)
        .ok_or_else(|| Error::Validation("gamma_index overflow".into()))?;
    Ok(t - (i - 1))
}

/// Source digit indices of `U_i`, most significant first.
pub fn gamma_sources(i: u64, bits_per_uniform: u32) -> Result<Vec<u64>> {
    (1..=u64::from(bits_per_uniform)).map(|j| gamma_index(i, j)).collect()
}

/// A finite supply of Bernoulli digits `X_1, X_2, ...`.
pub trait BitSource {
    /// The first `count` digits.
    fn bits(&self, count: usize) -> Result<Vec<bool>>;
}

/// Binary expansion digits of the fractional part of a seed.
#[derive(Clone, Debug)]
pub struct SeedBits(pub RationalSeed);

impl BitSource for SeedBits {
    fn bits(&self, count: usize) -> Result<Vec<bool>> {
        let q = self.0.denominator();
        let mut r: BigUint = self.0.numerator() % q;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            r <<= 1u32;
            if r >= *q {
                r -= q;
                out.push(true);
            } else {
                out.push(false);
            }
        }
        Ok(out)
    }
}

/// Raw bytes, most significant bit first.
#[derive(Clone, Debug)]
pub struct ByteBits(pub Vec<u8>);

impl BitSource for ByteBits {
    fn bits(&self, count: usize) -> Result<Vec<bool>> {
        let available = self.0.len() * 8;
        if count > available {
            return Err(Error::Length {
                needed: count,
                available,
            });
        }
        Ok((0..count).map(|n| self.0[n / 8] & (0x80 >> (n % 8)) != 0).collect())
    }
}

/// Largest `f64`-exact uniform resolution.
pub const MAX_BITS_PER_UNIFORM: u32 = 53;

/// `U_i = sum_j X_{gamma_index(i, j)} 2^-j`, `i = 1..=count`.
pub fn gamma_stream(bits: &dyn BitSource, count: usize, bits_per_uniform: u32) -> Result<Vec<f64>> {
    if count == 0 || bits_per_uniform == 0 || bits_per_uniform > MAX_BITS_PER_UNIFORM {
        return Err(Error::Validation(format!(
            "gamma_stream needs count >= 1 and 1 <= bits_per_uniform <= {MAX_BITS_PER_UNIFORM}"
        )));
    }
    // gamma_index(i, j) grows with i and j, so U_count's last digit is the deepest
    let needed = gamma_index(count as u64, u64::from(bits_per_uniform))? as usize;
    let x = bits.bits(needed)?;
    if x.len() < needed {
        return Err(Error::Length {
            needed,
            available: x.len(),
        });
    }
    (1..=count as u64)
        .map(|i| {
            let mut u = 0.0;
            let mut scale = 0.5;
            for j in 1..=u64::from(bits_per_uniform) {
                if x[gamma_index(i, j)? as usize - 1] {
                    u += scale;
                }
                scale *= 0.5;
            }
            Ok(u)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Family;
    use crate::weyl::degenerate_m_multiplicative;
    use std::collections::HashSet;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn mc(n_seeds: usize) -> McConfig {
        McConfig {
            n_seeds,
            seed_bits: 128,
            ..McConfig::default()
        }
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(exact_frequency_factorial(3, 2, &mi(&[1])).unwrap(), BigInt::from(4));
        assert_eq!(exact_frequency_factorial(2, 1, &mi(&[1, -1])).unwrap(), BigInt::from(-3));
        assert!(exact_frequency_factorial(2, 2, &mi(&[1])).is_err());
        assert_eq!(exact_frequency_self_power(3, 2, &mi(&[1])).unwrap(), BigInt::from(27 - 4));
    }

    #[test]
    fn frequency_is_antisymmetric() {
        for (k, l) in [(5u64, 2u64), (9, 1), (4, 3)] {
            let m = mi(&[2, -1, 3]);
            assert_eq!(
                exact_frequency_factorial(k, l, &m).unwrap(),
                -exact_frequency_factorial(l, k, &m).unwrap()
            );
        }
    }

    #[test]
    fn c_of_m_basic_cases() {
        let scan = c_of_m_scan(OrthogonalFamily::Factorial, &mi(&[1]), 10).unwrap();
        assert_eq!(scan.c, Some(0));
        assert!(scan.zero_pairs.is_empty());
        let scan = c_of_m_scan(OrthogonalFamily::SelfPower, &mi(&[1]), 10).unwrap();
        assert_eq!(scan.c, Some(0));
        let scan = c_of_m_scan(OrthogonalFamily::Factorial, &mi(&[1, -1]), 10).unwrap();
        assert_eq!(scan.c, Some(0));
        // (3,-1): g(k) = k!(2 - k) vanishes only at k = 2, values stay distinct
        let scan = c_of_m_scan(OrthogonalFamily::Factorial, &mi(&[3, -1]), 10).unwrap();
        assert_eq!(scan.c, Some(0));
    }

    #[test]
    fn c_of_m_reports_coincidences() {
        // search small m for one with a coincident frequency
        let mut found = None;
        'outer: for a in -5..=5i64 {
            for b in -5..=5i64 {
                if a == 0 && b == 0 {
                    continue;
                }
                let scan = c_of_m_scan(OrthogonalFamily::Factorial, &mi(&[a, b]), 10).unwrap();
                if let Some(&(k, l)) = scan.zero_pairs.first() {
                    found = Some(((a, b), k, l, scan));
                    break 'outer;
                }
            }
        }
        let ((a, b), k, l, scan) = found.expect("some small m has a coincidence");
        let m = mi(&[a, b]);
        assert!(exact_frequency_factorial(k, l, &m).unwrap().is_zero());
        let c = scan.c.unwrap();
        assert!(c >= k - l);
        for k in 1..=scan.probe_bound {
            for l in 1..k {
                if k - l > c {
                    assert!(!exact_frequency_factorial(k, l, &m).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn gamma_indices_from_the_construction() {
        assert_eq!(gamma_index(1, 3).unwrap(), 6);
        assert_eq!(gamma_index(4, 1).unwrap(), 7);
        assert_eq!(gamma_index(2, 2).unwrap(), 5);
        assert_eq!(gamma_index(3, 2).unwrap(), 8);
        assert_eq!(gamma_sources(1, 4).unwrap(), vec![1, 3, 6, 10]);
        assert_eq!(gamma_sources(2, 3).unwrap(), vec![2, 5, 9]);
        assert_eq!(gamma_sources(3, 2).unwrap(), vec![4, 8]);
        assert!(gamma_index(0, 1).is_err());
    }

    #[test]
    fn gamma_index_is_injective() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for i in 1..=1000 {
            for j in 1..=1000 {
                assert!(seen.insert(gamma_index(i, j).unwrap()), "({i}, {j})");
            }
        }
    }

    #[test]
    fn gamma_stream_constant_sources() {
        let zeros = ByteBits(vec![0; 64]);
        assert!(gamma_stream(&zeros, 4, 8).unwrap().iter().all(|&u| u == 0.0));
        let ones = ByteBits(vec![0xff; 64]);
        assert!(gamma_stream(&ones, 4, 8).unwrap().iter().all(|&u| u == 255.0 / 256.0));
        assert!(matches!(gamma_stream(&ByteBits(vec![0; 1]), 4, 8), Err(Error::Length { .. })));
    }

    #[test]
    fn seed_bits_are_binary_digits() {
        // 1/3 = 0.010101..._2
        let bits = SeedBits(RationalSeed::unit(1, 3).unwrap()).bits(6).unwrap();
        assert_eq!(bits, vec![false, true, false, true, false, true]);
        let bytes = ByteBits(vec![0b1010_0000]).bits(4).unwrap();
        assert_eq!(bytes, vec![true, false, true, false]);
    }

    #[test]
    fn factorial_moments_vanish() {
        let spec = GeneratorSpec::new(Family::Factorial).unwrap();
        let cfg = WindowConfig::sliding(1, 1, 0).unwrap();
        let m = mi(&[1]);
        let mc = mc(256);
        let e = mc_moment(&spec, &cfg, &m, MomentTarget::MeanY { k: 7 }, &mc).unwrap();
        assert!(e.value.norm() <= 3.0 * e.stderr, "{e:?}");
        let e = mc_moment(&spec, &cfg, &m, MomentTarget::Cross { k: 3, l: 2 }, &mc).unwrap();
        assert!(e.value.norm() <= 3.0 * e.stderr, "{e:?}");
        assert!(mc_moment(&spec, &cfg, &m, MomentTarget::MeanY { k: 7 }, &McConfig { n_seeds: 1, ..mc }).is_err());
    }

    #[test]
    fn weyl_power_second_moment_grows_linearly() {
        // E|S_N|^2 = int |sin(pi N t)/sin(pi t)|^2 dt = N over (0, 1)
        let spec = GeneratorSpec::new(Family::WeylPower { p: 1 }).unwrap();
        let cfg = WindowConfig::sliding(1, 1, 0).unwrap();
        let e = mc_moment(&spec, &cfg, &mi(&[1]), MomentTarget::MeanAbsS2 { n: 100 }, &mc(512)).unwrap();
        assert!((e.value.re - 100.0).abs() <= 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn degenerate_pair_is_refuted_deterministically() {
        let spec = GeneratorSpec::new(Family::Multiplicative { base: 2 }).unwrap();
        let cfg = WindowConfig::sliding(2, 1, 0).unwrap();
        let m = degenerate_m_multiplicative(2).unwrap();
        let grid = checkpoints::default_grid(500);
        for n_seeds in [2, 5] {
            let d = wcud_check(&spec, &cfg, &m, &grid, &mc(n_seeds)).unwrap();
            assert_eq!(d.verdict, Verdict::Refuted);
            assert!(d.s_over_n.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn del_partial_sums_nondecreasing() {
        let spec = GeneratorSpec::new(Family::WeylPower { p: 1 }).unwrap();
        let cfg = WindowConfig::sliding(1, 1, 0).unwrap();
        let d = del_criterion(&spec, &cfg, &mi(&[1]), 2000, &mc(32)).unwrap();
        assert!(d.del_partial_sums.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(d.verdict, Verdict::Pass);
    }

    #[test]
    fn decay_fit_controls() {
        let cfg2 = WindowConfig::sliding(2, 1, 0).unwrap();
        let spec = GeneratorSpec::new(Family::Multiplicative { base: 2 }).unwrap();
        let fit = lemma2_decay_fit(&spec, &cfg2, &degenerate_m_multiplicative(2).unwrap(), &[2, 4, 8, 16], 40, &mc(8)).unwrap();
        assert_eq!(fit.status, FitStatus::Fitted);
        assert!(fit.delta_hat.unwrap().abs() < 1e-9);
        assert!(fit.estimates.iter().all(|e| (e - 2.0).abs() < 1e-12));
        assert_eq!(fit.compatible_with_inverse_d, Some(false));

        let cfg1 = WindowConfig::sliding(1, 1, 0).unwrap();
        let spec = GeneratorSpec::new(Family::Factorial).unwrap();
        let fit = lemma2_decay_fit(&spec, &cfg1, &mi(&[1]), &[2, 4, 8, 16], 40, &mc(64)).unwrap();
        assert_eq!(fit.status, FitStatus::Inconclusive);
        assert!(fit.delta_hat.is_none());
    }

    #[test]
    fn lemma3_verdicts() {
        let cfg1 = WindowConfig::sliding(1, 1, 0).unwrap();
        let factorial = GeneratorSpec::new(Family::Factorial).unwrap();
        let r = lemma3_check(&factorial, &cfg1, &mi(&[1]), 256, 16, &mc(256)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.pairs.iter().all(|&(k, l)| l >= 16 && k - l >= 16 && k <= 256));

        let cfg2 = WindowConfig::sliding(2, 1, 0).unwrap();
        let mult = GeneratorSpec::new(Family::Multiplicative { base: 2 }).unwrap();
        let r = lemma3_check(&mult, &cfg2, &degenerate_m_multiplicative(2).unwrap(), 256, 8, &mc(4)).unwrap();
        assert_eq!(r.verdict, Verdict::Refuted);
        assert!(lemma3_check(&mult, &cfg2, &degenerate_m_multiplicative(2).unwrap(), 8, 8, &mc(4)).is_err());
    }
}
