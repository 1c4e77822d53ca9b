//! Single-step probes on injected states.

use serde::Serialize;

use super::parallel_map;
use crate::error::{Error, Result};
use crate::game::{Color, GameState, RngStream, StrategyParams};
use crate::potential::{cosh_potential, power_potential, q_bound};
use crate::stats::{fit_line, LineFit, MeanStderr};
use crate::strategy::{choose_sign_cosh_greedy, choose_sign_power_greedy, Strategy, StrategyKind};

/// Wraps arbitrary discrepancies in a synthetic state. Counted coordinates
/// at or beyond `√(cn)` are rejected unless `breach_ok`.
pub fn inject_state(
    d: Vec<i64>,
    colors: Option<Vec<Color>>,
    params: StrategyParams,
    breach_ok: bool,
) -> Result<GameState> {
    let state = GameState::synthetic(d, colors, params)?;
    if !breach_ok {
        let cn = params.cn(state.n());
        for (j, &dj) in state.d().iter().enumerate() {
            if state.is_green(j) && (dj as f64).powi(2) >= cn {
                return Err(Error::Breach { index: j, d: dj });
            }
        }
    }
    Ok(state)
}

/// Largest `|d|` with `cn/(cn − d²) ≤ r`.
fn position_for_ratio(r: f64, cn: f64) -> i64 {
    let mut d = (cn * (1.0 - 1.0 / r)).max(0.0).sqrt().floor() as i64;
    while d > 0 && cn / (cn - (d * d) as f64) > r {
        d -= 1;
    }
    d
}

/// `elevated` coordinates at a common position chosen so that the power
/// potential is as close to `target` from below as integer positions allow;
/// the rest sit at 0. Signs alternate.
pub fn state_with_potential(
    n: usize,
    elevated: usize,
    target: f64,
    params: StrategyParams,
) -> Result<GameState> {
    if elevated == 0 || elevated > n {
        return Err(Error::Precondition(format!(
            "elevated count {elevated} not in 1..={n}"
        )));
    }
    if target < 1.0 {
        return Err(Error::Precondition(format!(
            "target potential {target} < 1"
        )));
    }
    let rp = (target * n as f64 - (n - elevated) as f64) / elevated as f64;
    let d = position_for_ratio(rp.powf(1.0 / params.p as f64), params.cn(n));
    let values = (0..n)
        .map(|j| {
            if j >= elevated {
                0
            } else if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    inject_state(values, None, params, false)
}

/// A ragged state with power potential in `[0.98·target, target]`, built by
/// random upward moves of random coordinates.
pub fn random_state_with_potential(
    n: usize,
    target: f64,
    params: StrategyParams,
    rng: &mut RngStream,
) -> Result<GameState> {
    let cn = params.cn(n);
    let nf = n as f64;
    let p = params.p as i32;
    let term = |d: i64| (cn / (cn - (d * d) as f64)).powi(p) / nf;
    let max_jump = ((0.05 * cn.sqrt()) as u64).max(1);
    let mut d = vec![0i64; n];
    let mut phi = 1.0;
    let mut misses = 0;
    while phi < 0.98 * target && misses < 10_000 {
        let j = rng.below(n as u64) as usize;
        let step = 1 + rng.below(max_jump) as i64;
        let next = d[j].abs() + step;
        if (next * next) as f64 >= cn {
            misses += 1;
            continue;
        }
        let candidate = phi - term(d[j]) + term(next);
        if candidate > target {
            misses += 1;
            continue;
        }
        phi = candidate;
        d[j] = if rng.coin().value() > 0 { next } else { -next };
    }
    inject_state(d, None, params, false)
}

/// Every coordinate at `⌈arccosh(2)/λ⌉`, the smallest common position with
/// cosh potential at least `2n`.
pub fn cosh_boundary_state(n: usize, params: StrategyParams) -> Result<GameState> {
    let lambda = params.lambda(n);
    let d = (2f64.acosh() / lambda).ceil() as i64;
    inject_state(vec![d; n], None, params, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftProbeReport {
    pub n: usize,
    pub phi: f64,
    /// `Q` at the state (it does not depend on the vector).
    pub q: f64,
    /// `C_Q n^(−1+2/p)`.
    pub q_bound: f64,
    pub samples: usize,
    pub delta_phi: MeanStderr,
    pub max_delta_phi: f64,
    pub frac_l_ge_10q: f64,
    pub frac_l_ge_10_q_bound: f64,
    pub ties: usize,
    pub breaches: usize,
}

/// Samples fresh vectors at `state` and plays the power-greedy sign.
pub fn drift_probe(state: &GameState, samples: usize, seed: u64) -> Result<DriftProbeReport> {
    let params = *state.params();
    let phi = power_potential(state);
    if !(params.h / 2.0..=params.h).contains(&phi) {
        return Err(Error::Precondition(format!(
            "drift probe needs Φ in [H/2, H] = [{}, {}], got {phi}",
            params.h / 2.0,
            params.h
        )));
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be ≥ 1".into()));
    }
    let n = state.n();
    let bound = q_bound(&params, n);
    let mut rng = RngStream::new(seed, 0);
    let mut deltas = Vec::with_capacity(samples);
    let (mut big_q, mut big_bound, mut ties, mut breaches) = (0, 0, 0, 0);
    let mut q = 0.0;
    for _ in 0..samples {
        let v = rng.sample_vector(n);
        let diag = choose_sign_power_greedy(state, &v, &mut rng);
        ties += diag.tie as usize;
        breaches += diag.breach as usize;
        let (Some(delta), Some(l), Some(qq)) = (diag.delta_phi, diag.l, diag.q) else {
            continue;
        };
        q = qq;
        deltas.push(delta);
        big_q += (l.abs() >= 10.0 * qq) as usize;
        big_bound += (l.abs() >= 10.0 * bound) as usize;
    }
    let s = samples as f64;
    Ok(DriftProbeReport {
        n,
        phi,
        q,
        q_bound: bound,
        samples,
        delta_phi: MeanStderr::of(&deltas),
        max_delta_phi: deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        frac_l_ge_10q: big_q as f64 / s,
        frac_l_ge_10_q_bound: big_bound as f64 / s,
        ties,
        breaches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoshProbeReport {
    pub n: usize,
    pub lambda: f64,
    pub phi: f64,
    /// `λ² Φ`.
    pub q: f64,
    pub samples: usize,
    /// Empirical `Pr[|L| ≥ (c_cosh/2) Q]`.
    pub frac_l_ge_half_c_q: f64,
    pub delta_phi: MeanStderr,
    pub max_delta_phi: f64,
}

/// Samples fresh vectors at `state` and plays the cosh-greedy sign.
pub fn cosh_drift_probe(state: &GameState, samples: usize, seed: u64) -> Result<CoshProbeReport> {
    let params = *state.params();
    let n = state.n();
    let lambda = params.lambda(n);
    let phi = cosh_potential(state, lambda);
    if phi < 2.0 * n as f64 {
        return Err(Error::Precondition(format!(
            "cosh probe needs Φ ≥ 2n = {}, got {phi}",
            2 * n
        )));
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be ≥ 1".into()));
    }
    let mut rng = RngStream::new(seed, 0);
    let mut deltas = Vec::with_capacity(samples);
    let mut hits = 0;
    let mut q = 0.0;
    for _ in 0..samples {
        let v = rng.sample_vector(n);
        let diag = choose_sign_cosh_greedy(state, &v, &mut rng);
        let (l, qq) = (diag.l.unwrap_or(0.0), diag.q.unwrap_or(0.0));
        q = qq;
        hits += (l.abs() >= params.c_cosh / 2.0 * qq) as usize;
        deltas.push(diag.delta_phi.unwrap_or(0.0));
    }
    Ok(CoshProbeReport {
        n,
        lambda,
        phi,
        q,
        samples,
        frac_l_ge_half_c_q: hits as f64 / samples as f64,
        delta_phi: MeanStderr::of(&deltas),
        max_delta_phi: deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Smallest count for a histogram bin to enter the tail fit.
pub const TAIL_FIT_MIN_COUNT: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorityTailReport {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub trials: usize,
    /// `histogram[y]`: chip-rounds at folded position `y` in the second half.
    pub histogram: Vec<u64>,
    /// Largest folded position over all rounds and trials.
    pub max_position: u64,
    /// `ln(frequency)` against position over `y ≥ 1` bins with at least
    /// [`TAIL_FIT_MIN_COUNT`] entries.
    pub fit: Option<LineFit>,
    /// Mean one-step change of `|d|` for chips off the origin (second half).
    pub mean_displacement: f64,
    /// `K` from the fitted slope: a walk with drift `ε` towards 0 has
    /// stationary ratio `(1−ε)/(1+ε) ≈ e^(−2ε)`, and `ε = K/√n`.
    pub fitted_k: Option<f64>,
}

impl MajorityTailReport {
    /// `mean_displacement ≤ −K/(2√n)` with the fitted `K > 0`.
    pub fn drift_holds(&self) -> bool {
        match self.fitted_k {
            Some(k) if k > 0.0 => self.mean_displacement <= -k / (2.0 * (self.n as f64).sqrt()),
            _ => false,
        }
    }
}

struct TailTrial {
    histogram: Vec<u64>,
    max_position: u64,
    displacement: i64,
    moves: u64,
}

fn tail_trial(n: usize, horizon: u64, params: StrategyParams, index: u64) -> Result<TailTrial> {
    let mut state = GameState::new(n, params)?;
    let strategy = Strategy::new(StrategyKind::Majority);
    let mut rng = RngStream::new(params.seed, index);
    let mut out = TailTrial {
        histogram: Vec::new(),
        max_position: 0,
        displacement: 0,
        moves: 0,
    };
    let mut before = vec![0u64; n];
    for round in 1..=horizon {
        let second_half = round > horizon / 2;
        if second_half {
            for (b, d) in before.iter_mut().zip(state.d()) {
                *b = d.unsigned_abs();
            }
        }
        strategy.play_round(&mut state, &mut rng);
        for (j, d) in state.d().iter().enumerate() {
            let y = d.unsigned_abs();
            out.max_position = out.max_position.max(y);
            if second_half {
                let y = y as usize;
                if y >= out.histogram.len() {
                    out.histogram.resize(y + 1, 0);
                }
                out.histogram[y] += 1;
                if before[j] > 0 {
                    out.displacement += y as i64 - before[j] as i64;
                    out.moves += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Runs the majority rule for `trials` games of `horizon` rounds and
/// summarizes folded chip positions over the second half of each run.
pub fn majority_tail_probe(
    n: usize,
    horizon: u64,
    trials: usize,
    params: StrategyParams,
    threads: usize,
) -> Result<MajorityTailReport> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if horizon < 100 * n as u64 {
        return Err(Error::Precondition(format!(
            "majority tail probe needs T ≥ 100n = {}",
            100 * n
        )));
    }
    if trials == 0 {
        return Err(Error::Precondition("trials must be ≥ 1".into()));
    }
    let runs = parallel_map(threads, trials as u64, |i| {
        tail_trial(n, horizon, params, i)
    });
    let mut histogram: Vec<u64> = Vec::new();
    let (mut max_position, mut displacement, mut moves) = (0, 0i64, 0u64);
    for run in runs {
        let run = run?;
        if run.histogram.len() > histogram.len() {
            histogram.resize(run.histogram.len(), 0);
        }
        for (h, c) in histogram.iter_mut().zip(&run.histogram) {
            *h += c;
        }
        max_position = max_position.max(run.max_position);
        displacement += run.displacement;
        moves += run.moves;
    }
    let total: u64 = histogram.iter().sum();
    let (xs, ys): (Vec<f64>, Vec<f64>) = histogram
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c >= TAIL_FIT_MIN_COUNT)
        .map(|(y, &c)| (y as f64, (c as f64 / total as f64).ln()))
        .unzip();
    let fit = fit_line(&xs, &ys);
    let sqrt_n = (n as f64).sqrt();
    Ok(MajorityTailReport {
        n,
        t: horizon,
        trials,
        histogram,
        max_position,
        fit,
        mean_displacement: if moves == 0 {
            0.0
        } else {
            displacement as f64 / moves as f64
        },
        fitted_k: fit.map(|f| -f.slope * sqrt_n / 2.0),
    })
}
