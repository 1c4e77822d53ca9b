//! Exhaustive references for tiny instances.
//!
//! These are correctness oracles, not solvers: every routine enumerates all
//! `2^m` sign patterns and is capped at `m ≤ 24`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::SignVector;
use crate::potential::{power_term_delta, taylor_gap_threshold};

pub const MAX_ENUMERATION: usize = 24;
pub const MAX_OFFLINE_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumerationReport {
    /// `2^m`.
    pub total: u64,
    pub hits: u64,
    pub fraction: f64,
    pub threshold: f64,
}

impl EnumerationReport {
    fn new(total: u64, hits: u64, threshold: f64) -> Self {
        EnumerationReport {
            total,
            hits,
            fraction: hits as f64 / total as f64,
            threshold,
        }
    }
}

/// `min_x ‖Σ_t x_t v_t‖∞` over all `x ∈ {-1,+1}^T`.
///
/// `x_1 = +1` is fixed (a global flip leaves the norm unchanged) and the
/// remaining `2^(T−1)` patterns are walked in Gray-code order, so each
/// pattern costs one vector update.
pub fn offline_optimum(vectors: &[SignVector]) -> Result<u64> {
    let t = vectors.len();
    if t > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            what: "T",
            got: t,
            cap: MAX_ENUMERATION,
        });
    }
    let Some(first) = vectors.first() else {
        return Ok(0);
    };
    let n = first.len();
    if n > MAX_OFFLINE_DIM {
        return Err(Error::TooLarge {
            what: "n",
            got: n,
            cap: MAX_OFFLINE_DIM,
        });
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    let cols: Vec<Vec<i64>> = vectors.iter().map(SignVector::to_vec).collect();
    let mut signs = vec![1i64; t];
    let mut sum = vec![0i64; n];
    for (col, &x) in cols.iter().zip(&signs) {
        for (s, &v) in sum.iter_mut().zip(col) {
            *s += x * v;
        }
    }
    let norm = |s: &[i64]| s.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    let mut best = norm(&sum);
    for step in 1u64..(1u64 << (t - 1)) {
        // Gray code: flip sign 1 + (index of the lowest set bit)
        let flip = 1 + step.trailing_zeros() as usize;
        signs[flip] = -signs[flip];
        let delta = 2 * signs[flip];
        for (s, &v) in sum.iter_mut().zip(&cols[flip]) {
            *s += delta * v;
        }
        best = best.min(norm(&sum));
        if best == 0 {
            break;
        }
    }
    Ok(best)
}

/// All `2^m` signed sums `Σ y_i a_i`, built as left-half plus right-half so
/// every sum is a single addition of two directly accumulated partial sums.
fn for_each_signed_sum(weights: &[f64], mut f: impl FnMut(f64)) {
    let half = weights.len() / 2;
    let partials = |ws: &[f64]| -> Vec<f64> {
        (0u64..(1u64 << ws.len()))
            .map(|mask| {
                ws.iter()
                    .enumerate()
                    .map(|(i, &a)| if mask >> i & 1 == 1 { a } else { -a })
                    .sum()
            })
            .collect()
    };
    let left = partials(&weights[..half]);
    let right = partials(&weights[half..]);
    for &l in &left {
        for &r in &right {
            f(l + r);
        }
    }
}

fn check_len(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::EmptyWeights);
    }
    if weights.len() > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            what: "m",
            got: weights.len(),
            cap: MAX_ENUMERATION,
        });
    }
    Ok(())
}

/// Fraction of sign patterns with `|Σ y_i a_i| ≥ √(Σ a_i² / 2)`.
pub fn pz_enumerate(weights: &[f64]) -> Result<EnumerationReport> {
    check_len(weights)?;
    let half_energy = weights.iter().map(|a| a * a).sum::<f64>() / 2.0;
    let mut hits = 0u64;
    // squared comparison keeps integer-weight boundary cases exact
    for_each_signed_sum(weights, |s| hits += (s * s >= half_energy) as u64);
    Ok(EnumerationReport::new(
        1 << weights.len(),
        hits,
        half_energy.sqrt(),
    ))
}

/// Fraction of the `2^m` signed sums inside `[center − S, center + S]`.
/// Every weight must satisfy `|a_i| ≥ 1`.
pub fn spread_enumerate(weights: &[f64], center: f64, halfwidth: f64) -> Result<EnumerationReport> {
    check_len(weights)?;
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, a)| a.abs() < 1.0 || a.is_nan())
    {
        return Err(Error::WeightTooSmall { index, value });
    }
    let (lo, hi) = (center - halfwidth, center + halfwidth);
    let mut hits = 0u64;
    for_each_signed_sum(weights, |s| hits += (lo <= s && s <= hi) as u64);
    Ok(EnumerationReport::new(1 << weights.len(), hits, halfwidth))
}

fn binomials(m: usize) -> Vec<u64> {
    let mut row = vec![1u64];
    for _ in 0..m {
        let mut next = vec![1u64; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// Fraction of all-ones sums (`m − 2k`, multiplicity `C(m,k)`) inside
/// `[center − S, center + S]`.
pub fn all_ones_fraction(m: usize, center: f64, halfwidth: f64) -> f64 {
    let hits: u64 = binomials(m)
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let s = m as f64 - 2.0 * *k as f64;
            center - halfwidth <= s && s <= center + halfwidth
        })
        .map(|(_, &c)| c)
        .sum();
    hits as f64 / (1u64 << m) as f64
}

/// Largest all-ones mass any closed interval of length `2S` can hold: the
/// `⌊S⌋ + 1` largest binomial coefficients, i.e. the central window aligned
/// with the parity of `m`.
///
/// This is the bound for arbitrary weights `|a_i| ≥ 1`. The window
/// `[−S, S]` itself is only maximal when it is aligned; for `m = 4`,
/// `S = 1` it holds `6/16` while weights `(1,1,1,2)` put `8/16` there.
pub fn all_ones_max_fraction(m: usize, halfwidth: f64) -> f64 {
    if halfwidth < 0.0 {
        return 0.0;
    }
    let mut coeffs = binomials(m);
    coeffs.sort_unstable_by(|a, b| b.cmp(a));
    let take = (halfwidth.floor() as usize + 1).min(coeffs.len());
    coeffs[..take].iter().sum::<u64>() as f64 / (1u64 << m) as f64
}

/// Slack of the second-order bound for `f(x) = (cn − x²)^(−p)`:
///
/// ```text
/// f(x+η) − f(x) ≤ 2p x η / (cn−x²)^(p+1) + 4p(p+1) cn / (cn−x²)^(p+2)
/// ```
///
/// Both sides are scaled by `(cn)^p`. Errors when
/// `cn − x² < 3(p+2)(√(cn)+1)`.
pub fn taylor_slack(d: i64, eta: f64, c: f64, n: usize, p: u32) -> Result<f64> {
    if !(-1.0..=1.0).contains(&eta) {
        return Err(Error::Precondition(format!("|η| = {} > 1", eta.abs())));
    }
    let cn = c * n as f64;
    let x = d as f64;
    let g = cn - x * x;
    let threshold = taylor_gap_threshold(c, n, p);
    if g < threshold {
        return Err(Error::Precondition(format!(
            "gap {g} below the Taylor threshold {threshold}"
        )));
    }
    let pf = p as f64;
    let rp = (cn / g).powi(p as i32);
    let lhs = power_term_delta(x, eta, cn, p, 1.0)
        .ok_or_else(|| Error::Precondition("move leaves the admissible range".into()))?;
    let rhs = 2.0 * pf * x * eta * rp / g + 4.0 * pf * (pf + 1.0) * cn * rp / (g * g);
    Ok(rhs - lhs)
}

pub fn taylor_bound_check(d: i64, eta: f64, c: f64, n: usize, p: u32) -> Result<bool> {
    Ok(taylor_slack(d, eta, c, n, p)? >= 0.0)
}

/// Every integer `d ≥ 0` inside the Taylor precondition for `(c, n, p)`.
pub fn taylor_range(c: f64, n: usize, p: u32) -> impl Iterator<Item = i64> {
    let cn = c * n as f64;
    let threshold = taylor_gap_threshold(c, n, p);
    (0i64..).take_while(move |&d| cn - (d * d) as f64 >= threshold)
}
