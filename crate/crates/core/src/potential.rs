//! Gap function, power and cosh potentials, and the linear/quadratic split
//! of a one-step potential change.
//!
//! Per coordinate the power potential is evaluated in normalized form:
//! with `r_j = cn / g_j`,
//!
//! ```text
//! Φ_j = c^p n^(p-1) g_j^(-p)            = r_j^p / n
//! a_j = 2p c^p n^(p-1) d_j g_j^(-(p+1)) = 2p (d_j / g_j) Φ_j
//! Q_j = 4p(p+1) c^p n^p c g_j^(-(p+2))  = 4p(p+1) r_j^(p+2) / (c n²)
//! ```
//!
//! so nothing of size `c^p n^(p-1)` is ever formed.
//!
//! Red coordinates (combined strategy) are counted as if they sat at 0 and
//! did not move: they add `1/n` to Φ, nothing to `L`, and their `g = cn`
//! term to `Q`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameState, SignVector, StrategyParams};

/// `c·n − d²`. Non-positive values are breaches.
#[inline]
pub fn gap(d: i64, c: f64, n: usize) -> f64 {
    let d = d as f64;
    c * n as f64 - d * d
}

/// Normalized power term `(cn/g)^p / n`, `None` on breach.
#[inline]
fn power_term(d: f64, cn: f64, p: i32, n: f64) -> Option<f64> {
    let g = cn - d * d;
    if g <= 0.0 {
        return None;
    }
    Some((cn / g).powi(p) / n)
}

/// `Φ_j(d + η) − Φ_j(d)` without cancellation, `None` if either side breaches.
///
/// Uses `r' − r = cn·η(2d+η)/(g g')` and `r'^p − r^p = (r' − r) Σ r'^i r^(p−1−i)`.
#[inline]
pub fn power_term_delta(d: f64, eta: f64, cn: f64, p: u32, n: f64) -> Option<f64> {
    let g = cn - d * d;
    let moved = d + eta;
    let g_new = cn - moved * moved;
    if g <= 0.0 || g_new <= 0.0 {
        return None;
    }
    let r = cn / g;
    let r_new = cn / g_new;
    let diff = cn * (eta * (2.0 * d + eta)) / (g * g_new);
    let mut acc = 0.0;
    let mut hi = 1.0;
    let mut lo = r.powi(p as i32 - 1);
    for _ in 0..p {
        acc += hi * lo;
        hi *= r_new;
        lo /= r;
    }
    Some(diff * acc / n)
}

/// Position of coordinate `j` as seen by the power potential.
#[inline]
pub(crate) fn counted_d(state: &GameState, j: usize) -> i64 {
    if state.is_green(j) {
        state.d()[j]
    } else {
        0
    }
}

/// `c^p n^(p−1) Σ_j g_j^(−p)` over the counted positions; `+∞` on breach.
pub fn power_potential(state: &GameState) -> f64 {
    let params = state.params();
    let n = state.n();
    let cn = params.cn(n);
    let nf = n as f64;
    let p = params.p as i32;
    let mut sum = 0.0;
    for j in 0..n {
        match power_term(counted_d(state, j) as f64, cn, p, nf) {
            Some(term) => sum += term,
            None => return f64::INFINITY,
        }
    }
    sum
}

/// Number of counted coordinates with `g_j ≤ 0`.
pub fn breach_count(state: &GameState) -> usize {
    let c = state.params().c;
    let n = state.n();
    (0..n)
        .filter(|&j| gap(counted_d(state, j), c, n) <= 0.0)
        .count()
}

/// `Σ_i cosh(λ d_i)` over all coordinates.
pub fn cosh_potential(state: &GameState, lambda: f64) -> f64 {
    state.d().iter().map(|&d| (lambda * d as f64).cosh()).sum()
}

/// Linear and quadratic parts of a one-step change of the power potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqDiagnostics {
    /// `Σ_j a_j v_j`; the chosen sign multiplies it.
    pub l: f64,
    pub q: f64,
    /// Per-coordinate weights `a_j` (zero for red coordinates).
    pub weights: Vec<f64>,
    pub per_class_q: BTreeMap<usize, f64>,
}

/// Splits `Φ(t) − Φ(t−1) ≤ L·x + Q` at the current state for arriving `v`.
pub fn lq_decomposition(state: &GameState, v: &SignVector) -> Result<LqDiagnostics> {
    let n = state.n();
    if v.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let params = state.params();
    let cn = params.cn(n);
    let nf = n as f64;
    let p = params.p as f64;
    let pi = params.p as i32;
    let q_scale = 4.0 * p * (p + 1.0) / (params.c * nf * nf);
    let beta = params.beta();
    let mut weights = Vec::with_capacity(n);
    let mut per_class_q = BTreeMap::new();
    let mut l = 0.0;
    let mut q = 0.0;
    for j in 0..n {
        let d = counted_d(state, j);
        let g = gap(d, params.c, n);
        if g <= 0.0 {
            return Err(Error::Breach { index: j, d });
        }
        let r = cn / g;
        let phi_j = r.powi(pi) / nf;
        let a = if state.is_green(j) {
            2.0 * p * (d as f64 / g) * phi_j
        } else {
            0.0
        };
        let q_j = q_scale * r.powi(pi + 2);
        l += a * v.get(j) as f64;
        q += q_j;
        weights.push(a);
        *per_class_q
            .entry(class_index(g, params.c, n, beta)?)
            .or_insert(0.0) += q_j;
    }
    Ok(LqDiagnostics {
        l,
        q,
        weights,
        per_class_q,
    })
}

/// The unique `k ≥ 0` with `cn β^(−k−1) < g ≤ cn β^(−k)`.
pub fn class_index(g: f64, c: f64, n: usize, beta: f64) -> Result<usize> {
    let cn = c * n as f64;
    if !(g > 0.0 && g <= cn) {
        return Err(Error::GapOutOfRange { gap: g, cn });
    }
    let upper = |k: usize| cn / beta.powi(k as i32);
    let mut k = ((cn / g).ln() / beta.ln()).floor().max(0.0) as usize;
    // log rounding can land one class off on either side of a boundary
    while k > 0 && g > upper(k) {
        k -= 1;
    }
    while g <= upper(k + 1) {
        k += 1;
    }
    Ok(k)
}

/// Counts `n_k` of coordinates per class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClassHistogram {
    pub counts: BTreeMap<usize, usize>,
}

impl ClassHistogram {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, k: usize) -> usize {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// First class violating `n_k ≤ min(n, n β^(−kp) H)`, if any.
    pub fn bound_violation(
        &self,
        n: usize,
        params: &StrategyParams,
    ) -> Option<(usize, usize, f64)> {
        let beta = params.beta();
        self.counts.iter().find_map(|(&k, &count)| {
            let bound =
                (n as f64).min(n as f64 * beta.powi(-((k as i32) * params.p as i32)) * params.h);
            (count as f64 > bound).then_some((k, count, bound))
        })
    }
}

/// Class histogram of the counted positions; errors on breach.
pub fn class_histogram(state: &GameState) -> Result<ClassHistogram> {
    class_histogram_with(state, class_index)
}

pub(crate) fn class_histogram_with(
    state: &GameState,
    classify: impl Fn(f64, f64, usize, f64) -> Result<usize>,
) -> Result<ClassHistogram> {
    let params = state.params();
    let n = state.n();
    let beta = params.beta();
    let mut hist = ClassHistogram::default();
    for j in 0..n {
        let d = counted_d(state, j);
        let g = gap(d, params.c, n);
        if g <= 0.0 {
            return Err(Error::Breach { index: j, d });
        }
        *hist
            .counts
            .entry(classify(g, params.c, n, beta)?)
            .or_insert(0) += 1;
    }
    Ok(hist)
}

/// Smallest gap at which the per-coordinate bound
/// `Φ_j(d+η) − Φ_j(d) ≤ a_j η + Q_j` is guaranteed for `|η| ≤ 1`.
///
/// Over `[d−1, d+1]` the gap shrinks by at most `2√(cn)+1`; at
/// `g ≥ 3(p+2)(√(cn)+1)` that keeps `(g/g(z))^(p+2) ≤ e^(2/3) < 2`, which is
/// what the second-order remainder needs.
pub fn taylor_gap_threshold(c: f64, n: usize, p: u32) -> f64 {
    3.0 * (p as f64 + 2.0) * ((c * n as f64).sqrt() + 1.0)
}

/// Constant `C_Q` with `Q ≤ C_Q n^(−1+2/p)` whenever `Φ ≤ H`.
///
/// `Q n^(1−2/p) = 4p(p+1)/c · Σ r_j^(p+2) / n^(1+2/p)` under `Σ r_j^p ≤ Hn`,
/// `r_j ≥ 1`; the sum is convex in `r_j^p`, so the supremum puts all excess
/// potential on one coordinate: `(Hn)^(1+2/p) + n`.
pub fn q_bound_constant(params: &StrategyParams) -> f64 {
    let p = params.p as f64;
    4.0 * p * (p + 1.0) * (params.h.powf(1.0 + 2.0 / p) + 1.0) / params.c
}

/// `C_Q n^(−1+2/p)`.
pub fn q_bound(params: &StrategyParams, n: usize) -> f64 {
    q_bound_constant(params) * (n as f64).powf(-1.0 + 2.0 / params.p as f64)
}

/// Cosh-potential analogue of [`LqDiagnostics`]: `L = λ Σ sinh(λd_i) v_i`,
/// `Q = λ² Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoshLq {
    pub l: f64,
    pub q: f64,
    pub phi: f64,
}

pub fn cosh_lq(state: &GameState, v: &SignVector, lambda: f64) -> CoshLq {
    let mut phi = 0.0;
    let mut s = 0.0;
    for (j, &d) in state.d().iter().enumerate() {
        let z = lambda * d as f64;
        phi += z.cosh();
        s += z.sinh() * v.get(j) as f64;
    }
    CoshLq {
        l: lambda * s,
        q: lambda * lambda * phi,
        phi,
    }
}
