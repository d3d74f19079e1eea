//! Star and extreme discrepancy in one dimension, a brute-force star
//! discrepancy oracle for tiny instances, and the Erdős–Turán–Koksma bound.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::weyl::{MultiIndex, WeylSeries};

/// Size limits of [`star_discrepancy_oracle`].
pub const ORACLE_MAX_DIM: usize = 3;
pub const ORACLE_MAX_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscrepancyKind {
    StarExact1d,
    ExtremeExact1d,
    StarOracle,
    EtkUpperBound,
}

impl DiscrepancyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscrepancyKind::StarExact1d => "star_exact_1d",
            DiscrepancyKind::ExtremeExact1d => "extreme_exact_1d",
            DiscrepancyKind::StarOracle => "star_oracle",
            DiscrepancyKind::EtkUpperBound => "etk_upper_bound",
        }
    }
}

/// Box realizing a discrepancy value.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// Anchored box `[0, corner)` (open) or `[0, corner]` (closed).
    Anchored { corner: Vec<f64>, closed: bool },
    /// One-dimensional interval `(lo, hi)` or `[lo, hi]`.
    Interval { lo: f64, hi: f64, closed: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscrepancyResult {
    pub n: usize,
    pub d: usize,
    pub value: f64,
    pub kind: DiscrepancyKind,
    pub witness: Option<Witness>,
}

fn sorted_checked(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Validation("discrepancy needs at least one sample".into()));
    }
    if let Some(bad) = samples.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(Error::Domain(format!("sample {bad} outside [0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// `max_i max(i/N - x_(i), x_(i) - (i-1)/N)` over the sorted sample.
pub fn star_discrepancy_1d(samples: &[f64]) -> Result<DiscrepancyResult> {
    let x = sorted_checked(samples)?;
    let n = x.len() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut witness = None;
    for (i, &xi) in x.iter().enumerate() {
        let above = (i + 1) as f64 / n - xi;
        let below = xi - i as f64 / n;
        if above > best {
            best = above;
            witness = Some(Witness::Anchored {
                corner: vec![xi],
                closed: true,
            });
        }
        if below > best {
            best = below;
            witness = Some(Witness::Anchored {
                corner: vec![xi],
                closed: false,
            });
        }
    }
    Ok(DiscrepancyResult {
        n: x.len(),
        d: 1,
        value: best,
        kind: DiscrepancyKind::StarExact1d,
        witness,
    })
}

/// `1/N + max_i (i/N - x_(i)) - min_i (i/N - x_(i))`.
pub fn extreme_discrepancy_1d(samples: &[f64]) -> Result<DiscrepancyResult> {
    let x = sorted_checked(samples)?;
    let n = x.len() as f64;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut arg_hi, mut arg_lo) = (0, 0);
    for (i, &xi) in x.iter().enumerate() {
        let v = (i + 1) as f64 / n - xi;
        if v > hi {
            hi = v;
            arg_hi = i;
        }
        if v < lo {
            lo = v;
            arg_lo = i;
        }
    }
    let value = (1.0 / n + hi - lo).min(1.0);
    let (a, b) = (x[arg_lo.min(arg_hi)], x[arg_lo.max(arg_hi)]);
    Ok(DiscrepancyResult {
        n: x.len(),
        d: 1,
        value,
        kind: DiscrepancyKind::ExtremeExact1d,
        witness: Some(Witness::Interval {
            lo: a,
            hi: b,
            closed: true,
        }),
    })
}

/// Supremum over anchored boxes by enumeration: every corner whose coordinates
/// are sample coordinates or 1, each with open and closed counts.
pub fn star_discrepancy_oracle<P: AsRef<[f64]> + Sync>(points: &[P]) -> Result<DiscrepancyResult> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Validation("discrepancy needs at least one point".into()));
    }
    let d = points[0].as_ref().len();
    if d == 0 || d > ORACLE_MAX_DIM || n > ORACLE_MAX_POINTS {
        return Err(Error::Size(format!(
            "d = {d}, N = {n}; limits are d <= {ORACLE_MAX_DIM}, N <= {ORACLE_MAX_POINTS}"
        )));
    }
    for p in points {
        let p = p.as_ref();
        if p.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: p.len(),
            });
        }
        if let Some(bad) = p.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::Domain(format!("coordinate {bad} outside [0, 1)")));
        }
    }
    let grids: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut g: Vec<f64> = points.iter().map(|p| p.as_ref()[j]).collect();
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    let nf = n as f64;

    let evaluate = |corner: &[f64]| -> (f64, bool) {
        let mut open = 0usize;
        let mut closed = 0usize;
        for p in points {
            let p = p.as_ref();
            if p.iter().zip(corner).all(|(x, b)| x < b) {
                open += 1;
            }
            if p.iter().zip(corner).all(|(x, b)| x <= b) {
                closed += 1;
            }
        }
        let vol: f64 = corner.iter().product();
        let v_open = (open as f64 / nf - vol).abs();
        let v_closed = (closed as f64 / nf - vol).abs();
        if v_closed > v_open {
            (v_closed, true)
        } else {
            (v_open, false)
        }
    };

    // parallel over the first coordinate, then a sequential odometer over the rest
    let best = grids[0]
        .par_iter()
        .map(|&b0| {
            let mut best = (f64::NEG_INFINITY, Vec::new(), false);
            let mut idx = vec![0usize; d - 1];
            loop {
                let mut corner = Vec::with_capacity(d);
                corner.push(b0);
                corner.extend(idx.iter().enumerate().map(|(j, &i)| grids[j + 1][i]));
                let (v, closed) = evaluate(&corner);
                if v > best.0 {
                    best = (v, corner, closed);
                }
                let mut j = 0;
                loop {
                    if j == d - 1 {
                        return best;
                    }
                    idx[j] += 1;
                    if idx[j] < grids[j + 1].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
            }
        })
        .reduce(
            || (f64::NEG_INFINITY, Vec::new(), false),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    Ok(DiscrepancyResult {
        n,
        d,
        value: best.0,
        kind: DiscrepancyKind::StarOracle,
        witness: Some(Witness::Anchored {
            corner: best.1,
            closed: best.2,
        }),
    })
}

/// `(3/2)^d (2/(H+1) + sum_{0<|m|_inf<=H} |W_N(m)| / r(m))`, reading each
/// series at checkpoint `n`.
pub fn etk_bound(weyl: &BTreeMap<MultiIndex, WeylSeries>, h: u64, d: usize, n: usize) -> Result<DiscrepancyResult> {
    if h == 0 {
        return Err(Error::Validation("ETK bound needs H >= 1".into()));
    }
    let mut total = 2.0 / (h as f64 + 1.0);
    for m in MultiIndex::lattice(d, h) {
        let w = weyl
            .get(&m)
            .and_then(|s| s.at(n))
            .ok_or_else(|| Error::Completeness(format!("{m} at N = {n}")))?;
        total += w.norm() / m.r();
    }
    Ok(DiscrepancyResult {
        n,
        d,
        value: 1.5f64.powi(d as i32) * total,
        kind: DiscrepancyKind::EtkUpperBound,
        witness: None,
    })
}

/// Median and 10%/90% quantiles (nearest-rank) of a sample.
pub fn quantile_summary(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let idx = ((q * (v.len() - 1) as f64).round() as usize).min(v.len() - 1);
        v[idx]
    };
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    (median, pick(0.1), pick(0.9))
}

/// 1-D star discrepancy of every prefix `samples[..N]`, `N` in `checkpoints`.
pub fn star_discrepancy_trend(samples: &[f64], checkpoints: &[usize]) -> Result<Vec<f64>> {
    crate::checkpoints::validate(checkpoints, samples.len())?;
    checkpoints
        .iter()
        .map(|&n| star_discrepancy_1d(&samples[..n]).map(|r| r.value))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Torus;
    use crate::weyl::scan_points;

    /// Oracle for the oracle: scan a fine grid of anchored intervals directly.
    fn dense_star_1d(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mut best: f64 = 0.0;
        let mut corners: Vec<f64> = x.to_vec();
        corners.push(1.0);
        for &b in &corners {
            for eps in [0.0, 1e-12] {
                let c = b + eps;
                let count = x.iter().filter(|&&v| v < c).count() as f64;
                best = best.max((count / n - c.min(1.0)).abs());
            }
        }
        best
    }

    #[test]
    fn one_d_examples() {
        assert_eq!(star_discrepancy_1d(&[0.5]).unwrap().value, 0.5);
        assert_eq!(star_discrepancy_1d(&[0.25, 0.75]).unwrap().value, 0.25);
        assert_eq!(star_discrepancy_1d(&[0.0, 0.0]).unwrap().value, 1.0);
        assert_eq!(extreme_discrepancy_1d(&[0.25, 0.75]).unwrap().value, 0.5);
        assert_eq!(extreme_discrepancy_1d(&[0.5]).unwrap().value, 1.0);
        assert!(star_discrepancy_1d(&[1.0]).is_err());
        assert!(star_discrepancy_1d(&[-0.1]).is_err());
        assert!(star_discrepancy_1d(&[]).is_err());
    }

    #[test]
    fn brute_force_cross_checks() {
        assert!((dense_star_1d(&[0.25, 0.75]) - 0.25).abs() < 1e-9);
        assert!((dense_star_1d(&[0.5]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn oracle_small_cases() {
        // the box [0, 0.5]^2 holds the point with volume 1/4
        let r = star_discrepancy_oracle(&[[0.5, 0.5]]).unwrap();
        assert_eq!(r.value, 0.75);
        assert_eq!(
            r.witness,
            Some(Witness::Anchored {
                corner: vec![0.5, 0.5],
                closed: true
            })
        );
        // anchored boxes missing the point reach volume 1/2, e.g. [0, 1) x [0, 0.5)
        assert_eq!(star_discrepancy_oracle(&[[0.5]]).unwrap().value, 0.5);
        let lattice = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]];
        let r = star_discrepancy_oracle(&lattice).unwrap();
        assert_eq!(r.value, 0.4375);
        assert!(matches!(
            star_discrepancy_oracle(&vec![[0.1, 0.1]; 65]),
            Err(Error::Size(_))
        ));
        assert!(matches!(star_discrepancy_oracle(&[[0.1; 4]]), Err(Error::Size(_))));
    }

    #[test]
    fn lattice_value_by_hand() {
        // closed box [0, 0.25] x [0, 0.75] holds 2 of 4 points, volume 3/16: 5/16
        // closed box [0, 0.75] x [0, 0.75] holds all 4, volume 9/16: 7/16
        let lattice = [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]];
        let r = star_discrepancy_oracle(&lattice).unwrap();
        assert_eq!(
            r.witness,
            Some(Witness::Anchored {
                corner: vec![0.75, 0.75],
                closed: true
            })
        );
    }

    #[test]
    fn etk_single_point() {
        let pts = [[Torus::from_f64(0.5)]];
        let scan = scan_points(&pts, 1, 1, &[1]).unwrap();
        // m = 1 and m = -1 both contribute |W_1| = 1: 1.5 (1 + 1 + 1)
        let b = etk_bound(&scan.series, 1, 1, 1).unwrap();
        assert!((b.value - 4.5).abs() < 1e-15);
        assert!(matches!(etk_bound(&scan.series, 2, 1, 1), Err(Error::Completeness(_))));
    }

    #[test]
    fn quantiles() {
        let (med, q10, q90) = quantile_summary(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!(med, 3.0);
        assert_eq!(q10, 1.0);
        assert_eq!(q90, 5.0);
    }
}
