//! For a state with every coordinate at ±d the linear term is `a·Σ ±v_j`,
//! so the drift-probe probability is an exact binomial tail.

use balance_core::harness::{drift_probe, state_with_potential};
use balance_core::stats::binomial_3sigma;
use balance_core::StrategyParams;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

fn choose(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

/// `Pr[|S_n| ≥ threshold]` for a sum of `n` fair signs.
fn tail(n: u64, threshold: f64) -> f64 {
    let mut hits = BigUint::zero();
    for k in 0..=n {
        if ((n as f64) - 2.0 * k as f64).abs() >= threshold {
            hits += choose(n, k);
        }
    }
    let total = BigUint::from(1u32) << n as usize;
    (hits * BigUint::from(1_000_000_000u64) / total)
        .to_f64()
        .unwrap()
        / 1e9
}

#[test]
fn probe_matches_binomial_tail() {
    let params = StrategyParams::default();
    let samples = 10_000;
    for (n, frac) in [(64usize, 1.0), (256, 1.0), (256, 0.55)] {
        let state = state_with_potential(n, n, frac * params.h, params).unwrap();
        let d = state.d()[0].abs() as f64;
        let cn = params.cn(n);
        let g = cn - d * d;
        let r = cn / g;
        let p = params.p as f64;
        let nf = n as f64;
        let a = 2.0 * p * (d / g) * r.powf(p) / nf;
        let q = nf * 4.0 * p * (p + 1.0) * r.powf(p + 2.0) / (params.c * nf * nf);
        let exact = tail(n as u64, 10.0 * q / a);
        let report = drift_probe(&state, samples, 5).unwrap();
        assert!((report.q / q - 1.0).abs() < 1e-9);
        let tol = binomial_3sigma(exact, samples);
        assert!(
            (report.frac_l_ge_10q - exact).abs() <= tol,
            "n={n}: {} vs exact {exact}",
            report.frac_l_ge_10q
        );
    }
    assert!((tail(256, 18.56) - 0.23497).abs() < 1e-4);
}
