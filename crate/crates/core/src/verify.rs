//! Deterministic invariant suite.
//!
//! Each check is seeded and exhaustive where possible; [`run_all`] returns
//! one [`CheckResult`] per invariant.

use serde::Serialize;

use crate::error::Result;
use crate::game::{GameState, RngStream, SignVector, StrategyParams};
use crate::harness::random_state_with_potential;
use crate::oracle::{
    all_ones_max_fraction, offline_optimum, pz_enumerate, spread_enumerate, taylor_bound_check,
    taylor_range,
};
use crate::potential::{class_histogram_with, class_index, power_potential, power_term_delta};
use crate::strategy::{choose_sign_power_greedy, Strategy, StrategyKind};

/// Deliberate defects for testing the checker itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Shift every class index up by `p + 2`.
    ClassBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: u64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, cases: u64, failure: Option<String>) -> Self {
        CheckResult {
            name,
            passed: failure.is_none(),
            cases,
            detail: failure.unwrap_or_else(|| "ok".into()),
        }
    }
}

/// `|Φ(0) − 1| ≤ 1e−12` for `n = 1..=max_n`.
pub fn check_phi_zero(max_n: usize) -> CheckResult {
    let params = StrategyParams::default();
    let failure = (1..=max_n).find_map(|n| {
        let phi = power_potential(&GameState::new(n, params).ok()?);
        ((phi - 1.0).abs() > 1e-12).then(|| format!("n = {n}: Φ(0) = {phi}"))
    });
    CheckResult::new("phi(0) = 1", max_n as u64, failure)
}

/// `d_j ≡ t (mod 2)` after every round of `trajectories` seeded games,
/// cycling through the strategies.
pub fn check_parity(trajectories: u64) -> CheckResult {
    let mut steps = 0;
    for i in 0..trajectories {
        let kind = StrategyKind::ALL[i as usize % StrategyKind::ALL.len()];
        let n = 1 + (i as usize * 7) % 40;
        let params = StrategyParams {
            seed: 0x9a71,
            ..Default::default()
        };
        let mut state = GameState::new(n, params).expect("n ≥ 1");
        let mut rng = RngStream::new(params.seed, i);
        let strategy = Strategy::new(kind);
        for _ in 0..4 * n + 20 {
            strategy.play_round(&mut state, &mut rng);
            steps += 1;
            if let Err(e) = state.check_invariants() {
                return CheckResult::new(
                    "parity",
                    steps,
                    Some(format!("{kind}, trajectory {i}: {e}")),
                );
            }
        }
    }
    CheckResult::new("parity", steps, None)
}

/// The power-greedy sign never has the larger potential change, recomputed
/// per coordinate for both signs. Half the trajectories use a small `c` so
/// that states get close to the gap.
pub fn check_greedy_dominance(trajectories: u64) -> CheckResult {
    let mut steps = 0;
    for i in 0..trajectories {
        let n = 2 + (i as usize * 5) % 48;
        let c = if i % 2 == 0 { 1e5 } else { 24.0 };
        let params = StrategyParams {
            c,
            seed: 0xd0d0,
            ..Default::default()
        };
        let mut state = GameState::new(n, params).expect("n ≥ 1");
        let mut rng = RngStream::new(params.seed, i);
        for _ in 0..2 * n + 10 {
            let v = rng.sample_vector(n);
            let diag = choose_sign_power_greedy(&state, &v, &mut rng);
            steps += 1;
            if !diag.breach {
                let change = |s: i64| -> Option<f64> {
                    let cn = params.cn(n);
                    (0..n)
                        .map(|j| {
                            power_term_delta(
                                state.d()[j] as f64,
                                (s * v.get(j)) as f64,
                                cn,
                                params.p,
                                n as f64,
                            )
                        })
                        .sum()
                };
                let chosen = change(diag.x.value());
                let other = change(-diag.x.value());
                let ok = match (chosen, other) {
                    (Some(a), Some(b)) => a <= b,
                    (Some(_), None) => true,
                    _ => false,
                };
                if !ok {
                    return CheckResult::new(
                        "greedy dominance",
                        steps,
                        Some(format!(
                            "trajectory {i}, t = {}: {chosen:?} vs {other:?}",
                            state.t()
                        )),
                    );
                }
            }
            state.apply_step(&v, diag.x).expect("dimension matches");
        }
    }
    CheckResult::new("greedy dominance", steps, None)
}

/// `n_k ≤ min(n, n H β^(−kp))` on seeded states with `Φ ≤ H`.
pub fn check_class_bound(states: u64, fault: Fault) -> CheckResult {
    let params = StrategyParams::default();
    let shift = params.p as usize + 2;
    let classify = |g: f64, c: f64, n: usize, beta: f64| -> Result<usize> {
        let k = class_index(g, c, n, beta)?;
        Ok(if fault == Fault::ClassBoundary {
            k + shift
        } else {
            k
        })
    };
    let sizes = [4usize, 16, 32, 64, 128];
    let mut rng = RngStream::new(0xc1a55, 0);
    for i in 0..states {
        let n = sizes[i as usize % sizes.len()];
        let target = 1.0 + rng.uniform() * (params.h - 1.0);
        let state = match random_state_with_potential(n, target, params, &mut rng) {
            Ok(s) => s,
            Err(e) => return CheckResult::new("class-count bound", i, Some(e.to_string())),
        };
        let hist = match class_histogram_with(&state, classify) {
            Ok(h) => h,
            Err(e) => return CheckResult::new("class-count bound", i, Some(e.to_string())),
        };
        if let Some((k, count, bound)) = hist.bound_violation(n, &params) {
            return CheckResult::new(
                "class-count bound",
                i + 1,
                Some(format!("state {i} (n = {n}): n_{k} = {count} > {bound:.3}")),
            );
        }
    }
    CheckResult::new("class-count bound", states, None)
}

/// The per-coordinate second-order bound over every admissible `d ≥ 0`
/// and `η = ±1` at default `c` and `p`.
pub fn check_taylor(ns: &[usize]) -> CheckResult {
    let params = StrategyParams::default();
    let mut cases = 0;
    for &n in ns {
        for d in taylor_range(params.c, n, params.p) {
            for eta in [-1.0, 1.0] {
                cases += 1;
                match taylor_bound_check(d, eta, params.c, n, params.p) {
                    Ok(true) => {}
                    Ok(false) => {
                        return CheckResult::new(
                            "taylor bound",
                            cases,
                            Some(format!("n = {n}, d = {d}, η = {eta}")),
                        )
                    }
                    Err(e) => return CheckResult::new("taylor bound", cases, Some(e.to_string())),
                }
            }
        }
    }
    CheckResult::new("taylor bound", cases, None)
}

fn random_weights(rng: &mut RngStream, m: usize, min_abs: f64) -> Vec<f64> {
    let style = rng.below(4);
    (0..m)
        .map(|_| {
            let mag = match style {
                0 => 1.0,
                1 => (1 + rng.below(5)) as f64,
                2 => min_abs + rng.uniform() * 10.0,
                _ => min_abs + (-rng.uniform().max(1e-12).ln()) * 3.0,
            };
            if rng.coin().value() > 0 {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Fraction `≥ 1/4` on `(1,1,1)` (exactly `1/4`) and on `vectors` seeded
/// weight vectors with `m ≤ 16`.
pub fn check_pz(vectors: u64) -> CheckResult {
    let tight = pz_enumerate(&[1.0, 1.0, 1.0]).expect("three weights");
    if tight.fraction != 0.25 {
        return CheckResult::new(
            "pz lower bound",
            1,
            Some(format!("(1,1,1): {}", tight.fraction)),
        );
    }
    let mut rng = RngStream::new(0x9a2, 0);
    for i in 0..vectors {
        let m = 1 + rng.below(16) as usize;
        let w = random_weights(&mut rng, m, 0.01);
        let r = pz_enumerate(&w).expect("m ≤ 16");
        if r.fraction < 0.25 {
            return CheckResult::new(
                "pz lower bound",
                i + 2,
                Some(format!("{w:?}: {}", r.fraction)),
            );
        }
    }
    CheckResult::new("pz lower bound", vectors + 1, None)
}

/// Every interval of length `2S` holds at most the all-ones maximum, for
/// seeded `|a_i| ≥ 1`, `m ≤ 12`; centered and shifted windows.
pub fn check_spread(vectors: u64) -> CheckResult {
    let mut rng = RngStream::new(0x5b4e, 0);
    for i in 0..vectors {
        let m = 1 + rng.below(12) as usize;
        let w = random_weights(&mut rng, m, 1.0);
        let s = rng.uniform() * 2.0 * (m as f64).sqrt();
        let bound = all_ones_max_fraction(m, s);
        for center in [0.0, (rng.uniform() - 0.5) * 4.0 * s] {
            let r = spread_enumerate(&w, center, s).expect("m ≤ 12, |a| ≥ 1");
            if r.fraction > bound {
                return CheckResult::new(
                    "spread maximality",
                    i + 1,
                    Some(format!(
                        "{w:?}, S = {s}, center = {center}: {} > {bound}",
                        r.fraction
                    )),
                );
            }
        }
    }
    CheckResult::new("spread maximality", vectors, None)
}

/// Every strategy's final value is at least the offline optimum on all
/// `n ≤ max_n`, `T ≤ max_t` instances for `seeds` seeds.
pub fn check_online_offline(seeds: u64, max_n: usize, max_t: usize) -> CheckResult {
    let mut cases = 0;
    for seed in 0..seeds {
        for n in 1..=max_n {
            for t in 1..=max_t {
                let mut rng = RngStream::new(seed, (n * 1000 + t) as u64);
                let vectors: Vec<SignVector> = (0..t).map(|_| rng.sample_vector(n)).collect();
                let best = offline_optimum(&vectors).expect("T ≤ 64");
                for kind in StrategyKind::ALL {
                    let params = StrategyParams {
                        seed,
                        ..Default::default()
                    };
                    let mut state = GameState::new(n, params).expect("n ≥ 1");
                    let mut coins = RngStream::new(seed, u64::MAX - t as u64);
                    let strategy = Strategy::new(kind);
                    for v in &vectors {
                        strategy.play_vector(&mut state, v, &mut coins);
                    }
                    cases += 1;
                    if state.current_value() < best {
                        return CheckResult::new(
                            "online >= offline",
                            cases,
                            Some(format!(
                                "{kind}, seed {seed}, n = {n}, T = {t}: {} < {best}",
                                state.current_value()
                            )),
                        );
                    }
                }
            }
        }
    }
    CheckResult::new("online >= offline", cases, None)
}

/// The full suite at the sizes used by `balance verify`.
pub fn run_all(fault: Fault) -> Vec<CheckResult> {
    vec![
        check_phi_zero(1024),
        check_parity(100),
        check_greedy_dominance(100),
        check_class_bound(10_000, fault),
        check_taylor(&[16, 64]),
        check_pz(1000),
        check_spread(1000),
        check_online_offline(100, 6, 12),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        assert!(check_phi_zero(64).passed);
        assert!(check_parity(10).passed);
        assert!(check_greedy_dominance(10).passed);
        assert!(check_class_bound(200, Fault::None).passed);
        assert!(check_taylor(&[4]).passed);
        assert!(check_pz(50).passed);
        assert!(check_spread(50).passed);
        assert!(check_online_offline(2, 4, 6).passed);
    }

    #[test]
    fn class_fault_is_caught() {
        let r = check_class_bound(10, Fault::ClassBoundary);
        assert!(!r.passed);
        assert_eq!(r.name, "class-count bound");
    }
}
