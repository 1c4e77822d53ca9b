//! Signing rules.
//!
//! | kind          | rule                                                         |
//! |---------------|--------------------------------------------------------------|
//! | `random`      | fair coin, ignores the vector                                |
//! | `power`       | minimize the increase of the power potential (rule 1)        |
//! | `cosh`        | minimize the increase of `Σ cosh(λ d_i)`                     |
//! | `majority`    | move the majority of non-zero chips towards 0 (rule 2)       |
//! | `combined`    | rule 1 on green chips at odd rounds, rule 2 at even rounds   |
//!
//! A strategy sees the state, the arriving vector and a random stream, never
//! the horizon.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::{Color, GameState, RngStream, Sign, SignVector};
use crate::potential::{counted_d, power_potential, power_term_delta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Power,
    Cosh,
    Majority,
    Combined,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Random,
        StrategyKind::Power,
        StrategyKind::Cosh,
        StrategyKind::Majority,
        StrategyKind::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Power => "power",
            StrategyKind::Cosh => "cosh",
            StrategyKind::Majority => "majority",
            StrategyKind::Combined => "combined",
        }
    }

    pub fn is_greedy(self) -> bool {
        matches!(self, StrategyKind::Power | StrategyKind::Cosh)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "power" | "power_greedy" => Ok(StrategyKind::Power),
            "cosh" | "cosh_greedy" => Ok(StrategyKind::Cosh),
            "majority" => Ok(StrategyKind::Majority),
            "combined" => Ok(StrategyKind::Combined),
            other => Err(format!(
                "unknown strategy '{other}' (expected random, power, cosh, majority or combined)"
            )),
        }
    }
}

/// Which rule produced a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Potential minimization (power or cosh).
    Potential,
    Majority,
    Random,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::Potential => "1",
            Rule::Majority => "2",
            Rule::Random => "random",
        }
    }
}

/// What happened when one sign was chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub x: Sign,
    /// Potential change for the chosen sign; `None` for rules that do not
    /// evaluate a potential or when the chosen move breaches.
    pub delta_phi: Option<f64>,
    /// Potential change had the other sign been chosen.
    pub delta_phi_other: Option<f64>,
    pub l: Option<f64>,
    pub q: Option<f64>,
    pub tie: bool,
    pub breach: bool,
    pub recolored: bool,
    pub rule_used: Rule,
}

impl StepDiagnostics {
    fn plain(x: Sign, tie: bool, rule_used: Rule) -> Self {
        StepDiagnostics {
            x,
            delta_phi: None,
            delta_phi_other: None,
            l: None,
            q: None,
            tie,
            breach: false,
            recolored: false,
            rule_used,
        }
    }
}

/// Uniform sign, independent of everything else.
pub fn choose_sign_random(rng: &mut RngStream) -> StepDiagnostics {
    StepDiagnostics::plain(rng.coin(), false, Rule::Random)
}

/// Greedy on the power potential over the counted (green) coordinates.
///
/// Exact ties (bitwise-equal potential changes) are broken by one coin draw.
/// When a sign would breach, candidates are ranked by breach count, then by
/// the largest counted `|d_j|` after the move.
pub fn choose_sign_power_greedy(
    state: &GameState,
    v: &SignVector,
    rng: &mut RngStream,
) -> StepDiagnostics {
    let params = state.params();
    let n = state.n();
    let nf = n as f64;
    let cn = params.cn(n);
    let p = params.p;
    let pf = p as f64;
    let q_scale = 4.0 * pf * (pf + 1.0) / (params.c * nf * nf);

    let mut plus = 0.0;
    let mut minus = 0.0;
    let mut l = 0.0;
    let mut q = 0.0;
    let mut finite = true;
    for j in 0..n {
        let d = counted_d(state, j) as f64;
        let g = cn - d * d;
        if !state.is_green(j) {
            q += q_scale;
            continue;
        }
        let vj = v.get(j) as f64;
        match (
            power_term_delta(d, vj, cn, p, nf),
            power_term_delta(d, -vj, cn, p, nf),
        ) {
            (Some(up), Some(down)) => {
                plus += up;
                minus += down;
                let r = cn / g;
                let phi_j = r.powi(p as i32) / nf;
                l += 2.0 * pf * (d / g) * phi_j * vj;
                q += q_scale * r.powi(p as i32 + 2);
            }
            _ => {
                finite = false;
                break;
            }
        }
    }

    if finite {
        let (x, tie) = if plus < minus {
            (Sign::Plus, false)
        } else if minus < plus {
            (Sign::Minus, false)
        } else {
            (rng.coin(), true)
        };
        let (chosen, other) = if x == Sign::Plus {
            (plus, minus)
        } else {
            (minus, plus)
        };
        return StepDiagnostics {
            x,
            delta_phi: Some(chosen),
            delta_phi_other: Some(other),
            l: Some(l),
            q: Some(q),
            tie,
            breach: false,
            recolored: false,
            rule_used: Rule::Potential,
        };
    }

    let before = power_potential(state);
    let plus_key = breach_key(state, v, Sign::Plus);
    let minus_key = breach_key(state, v, Sign::Minus);
    let (x, tie) = match plus_key.partial_cmp(&minus_key) {
        Some(std::cmp::Ordering::Less) => (Sign::Plus, false),
        Some(std::cmp::Ordering::Greater) => (Sign::Minus, false),
        _ => (rng.coin(), true),
    };
    let (chosen, other) = if x == Sign::Plus {
        (plus_key, minus_key)
    } else {
        (minus_key, plus_key)
    };
    let delta = |k: (usize, u64, f64)| (k.0 == 0 && before.is_finite()).then_some(k.2 - before);
    StepDiagnostics {
        x,
        delta_phi: delta(chosen),
        delta_phi_other: delta(other),
        l: None,
        q: None,
        tie,
        breach: chosen.0 > 0,
        recolored: false,
        rule_used: Rule::Potential,
    }
}

/// `(breach count, max counted |d| if breached, Φ after)` for one candidate.
fn breach_key(state: &GameState, v: &SignVector, x: Sign) -> (usize, u64, f64) {
    let n = state.n();
    let cn = state.params().cn(n);
    let after: Vec<i64> = (0..n)
        .map(|j| {
            if state.is_green(j) {
                state.d()[j] + x.value() * v.get(j)
            } else {
                0
            }
        })
        .collect();
    let breaches = after
        .iter()
        .filter(|&&d| cn - (d * d) as f64 <= 0.0)
        .count();
    if breaches > 0 {
        let max_abs = after.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
        return (breaches, max_abs, f64::INFINITY);
    }
    let p = state.params().p as i32;
    let nf = n as f64;
    let phi = after
        .iter()
        .map(|&d| {
            let g = cn - (d * d) as f64;
            (cn / g).powi(p) / nf
        })
        .sum();
    (0, 0, phi)
}

/// Greedy on `Σ cosh(λ d_i)`.
///
/// With `S = Σ_i v_i sinh(λ d_i)` the change is exactly
/// `ΔΦ(x) = (cosh λ − 1) Φ + x sinh(λ) S`, reported with `L = λS`, `Q = λ²Φ`.
pub fn choose_sign_cosh_greedy(
    state: &GameState,
    v: &SignVector,
    rng: &mut RngStream,
) -> StepDiagnostics {
    let lambda = state.params().lambda(state.n());
    let mut phi = 0.0;
    let mut s = 0.0;
    for (j, &d) in state.d().iter().enumerate() {
        let z = lambda * d as f64;
        phi += z.cosh();
        s += z.sinh() * v.get(j) as f64;
    }
    let half = (0.5 * lambda).sinh();
    let even = 2.0 * half * half * phi;
    let odd = lambda.sinh() * s;
    let plus = even + odd;
    let minus = even - odd;
    let (x, tie) = if plus < minus {
        (Sign::Plus, false)
    } else if minus < plus {
        (Sign::Minus, false)
    } else {
        (rng.coin(), true)
    };
    let (chosen, other) = if x == Sign::Plus {
        (plus, minus)
    } else {
        (minus, plus)
    };
    StepDiagnostics {
        x,
        delta_phi: Some(chosen),
        delta_phi_other: Some(other),
        l: Some(lambda * s),
        q: Some(lambda * lambda * phi),
        tie,
        breach: false,
        recolored: false,
        rule_used: Rule::Potential,
    }
}

/// Majority rule: every chip off the origin votes for the sign that moves it
/// towards 0; strict majority wins, otherwise a coin decides.
pub fn choose_sign_majority(
    state: &GameState,
    v: &SignVector,
    rng: &mut RngStream,
) -> StepDiagnostics {
    let votes: i64 = state
        .d()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0)
        .map(|(j, &d)| -d.signum() * v.get(j))
        .sum();
    match Sign::of(votes) {
        Some(x) => StepDiagnostics::plain(x, false, Rule::Majority),
        None => StepDiagnostics::plain(rng.coin(), true, Rule::Majority),
    }
}

/// Rule 1 on green chips at odd rounds, rule 2 on all chips at even rounds.
/// Rounds are numbered from 1, so the arriving round is `t + 1`.
pub fn choose_sign_combined(
    state: &GameState,
    v: &SignVector,
    rng: &mut RngStream,
) -> StepDiagnostics {
    if (state.t() + 1) % 2 == 1 {
        choose_sign_power_greedy(state, v, rng)
    } else {
        choose_sign_majority(state, v, rng)
    }
}

/// Outcome of [`recolor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Recolor {
    /// Red chips at 0 turned green.
    pub promoted: usize,
    /// The masked potential exceeded `H` and every chip turned red.
    pub phase_started: bool,
}

impl Recolor {
    pub fn changed(&self) -> bool {
        self.promoted > 0 || self.phase_started
    }
}

/// Red chips at 0 turn green; then, if the masked power potential exceeds
/// `H`, every chip turns red and a new phase begins.
pub fn recolor(state: &mut GameState) -> Recolor {
    let mut out = Recolor::default();
    let d = state.d().to_vec();
    for (color, &dj) in state.colors_mut().iter_mut().zip(&d) {
        if *color == Color::Red && dj == 0 {
            *color = Color::Green;
            out.promoted += 1;
        }
    }
    if power_potential(state) > state.params().h {
        state.set_colors(Color::Red);
        state.bump_phase();
        out.phase_started = true;
    }
    out
}

/// A signing rule selected by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
}

impl Strategy {
    pub fn new(kind: StrategyKind) -> Self {
        Strategy { kind }
    }

    pub fn choose(
        &self,
        state: &GameState,
        v: &SignVector,
        rng: &mut RngStream,
    ) -> StepDiagnostics {
        match self.kind {
            StrategyKind::Random => choose_sign_random(rng),
            StrategyKind::Power => choose_sign_power_greedy(state, v, rng),
            StrategyKind::Cosh => choose_sign_cosh_greedy(state, v, rng),
            StrategyKind::Majority => choose_sign_majority(state, v, rng),
            StrategyKind::Combined => choose_sign_combined(state, v, rng),
        }
    }

    /// One full round: draw `v`, choose `x`, apply, recolor (combined only).
    pub fn play_round(&self, state: &mut GameState, rng: &mut RngStream) -> StepDiagnostics {
        let v = rng.sample_vector(state.n());
        self.play_vector(state, &v, rng)
    }

    /// As [`Strategy::play_round`] with a caller-supplied vector.
    pub fn play_vector(
        &self,
        state: &mut GameState,
        v: &SignVector,
        rng: &mut RngStream,
    ) -> StepDiagnostics {
        let mut diag = self.choose(state, v, rng);
        state
            .apply_step(v, diag.x)
            .expect("vector length matches the state dimension");
        if self.kind == StrategyKind::Combined {
            diag.recolored = recolor(state).changed();
        }
        diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::StrategyParams;
    use crate::potential::cosh_potential;

    fn state(d: &[i64]) -> GameState {
        GameState::synthetic(d.to_vec(), None, StrategyParams::default()).unwrap()
    }

    fn vec(s: &[i64]) -> SignVector {
        SignVector::from_signs(s).unwrap()
    }

    #[test]
    fn random_sign_is_fair() {
        let mut rng = RngStream::new(3, 0);
        let draws = 100_000;
        let sum: i64 = (0..draws)
            .map(|_| choose_sign_random(&mut rng).x.value())
            .sum();
        assert!((sum as f64 / draws as f64).abs() <= 0.02);
        let mut a = RngStream::new(5, 9);
        let mut b = RngStream::new(5, 9);
        for _ in 0..50 {
            assert_eq!(choose_sign_random(&mut a).x, choose_sign_random(&mut b).x);
        }
    }

    #[test]
    fn power_greedy_shrinks_both() {
        let mut rng = RngStream::new(0, 0);
        let diag = choose_sign_power_greedy(&state(&[3, 1]), &vec(&[1, 1]), &mut rng);
        assert_eq!(diag.x, Sign::Minus);
        assert!(!diag.tie);
        assert!(diag.delta_phi.unwrap() < diag.delta_phi_other.unwrap());
    }

    #[test]
    fn power_greedy_ties_on_symmetric_states() {
        let mut rng = RngStream::new(0, 0);
        let fresh = GameState::new(6, StrategyParams::default()).unwrap();
        let diag = choose_sign_power_greedy(&fresh, &vec(&[1, -1, 1, 1, -1, 1]), &mut rng);
        assert!(diag.tie);
        let diag = choose_sign_power_greedy(&state(&[2, -2]), &vec(&[1, 1]), &mut rng);
        assert!(diag.tie);
        // the tie is decided by the stream, in both directions over many draws
        let signs: std::collections::HashSet<Sign> = (0..32)
            .map(|_| choose_sign_power_greedy(&fresh, &vec(&[1; 6]), &mut rng).x)
            .collect();
        assert_eq!(signs.len(), 2);
    }

    #[test]
    fn power_greedy_double_breach_prefers_fewer_breaches() {
        let params = StrategyParams {
            c: 4.0,
            ..Default::default()
        };
        // cn = 12: |d| ≥ 4 breaches
        let g = GameState::synthetic(vec![3, -3, 3], None, params).unwrap();
        let mut rng = RngStream::new(0, 0);
        let diag = choose_sign_power_greedy(&g, &vec(&[1, 1, 1]), &mut rng);
        // +: (4, -2, 4) two breaches; −: (2, -4, 2) one breach
        assert_eq!(diag.x, Sign::Minus);
        assert!(diag.breach);
        // cn = 8: the state is already breached, only + stays breached
        let g = GameState::synthetic(vec![3, 0], None, params).unwrap();
        let diag = choose_sign_power_greedy(&g, &vec(&[1, 1]), &mut rng);
        assert_eq!(diag.x, Sign::Minus);
        assert!(!diag.breach);
    }

    #[test]
    fn cosh_greedy_examples() {
        let mut rng = RngStream::new(0, 0);
        let fresh = GameState::new(4, StrategyParams::default()).unwrap();
        assert!(choose_sign_cosh_greedy(&fresh, &vec(&[1, 1, -1, 1]), &mut rng).tie);
        for v1 in [1, -1] {
            let diag = choose_sign_cosh_greedy(&state(&[5]), &vec(&[v1]), &mut rng);
            assert_eq!(diag.x.value() * v1, -1);
        }
        let g = state(&[5, -3, 2, 0, 7]);
        let lambda = g.params().lambda(5);
        let diag = choose_sign_cosh_greedy(&g, &vec(&[1, -1, 1, 1, -1]), &mut rng);
        assert_eq!(
            diag.q.unwrap(),
            lambda * lambda * cosh_potential(&g, lambda)
        );
        let mut after = g.clone();
        after.apply_step(&vec(&[1, -1, 1, 1, -1]), diag.x).unwrap();
        let direct = cosh_potential(&after, lambda) - cosh_potential(&g, lambda);
        assert!((direct - diag.delta_phi.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn majority_examples() {
        let mut rng = RngStream::new(0, 0);
        let g = state(&[2, -1, 0]);
        let diag = choose_sign_majority(&g, &vec(&[1, -1, 1]), &mut rng);
        assert_eq!(diag.x, Sign::Minus);
        assert!(!diag.tie);
        let mut after = g.clone();
        after.apply_step(&vec(&[1, -1, 1]), diag.x).unwrap();
        assert_eq!(after.d(), &[1, 0, -1]);
        assert!(choose_sign_majority(&g, &vec(&[1, 1, -1]), &mut rng).tie);
        let zero = GameState::new(3, StrategyParams::default()).unwrap();
        let diag = choose_sign_majority(&zero, &vec(&[1, 1, -1]), &mut rng);
        assert!(diag.tie);
        let mut moved = zero.clone();
        moved.apply_step(&vec(&[1, 1, -1]), diag.x).unwrap();
        assert_eq!(moved.folded_positions(), vec![1, 1, 1]);
    }

    #[test]
    fn combined_alternates_rules() {
        let mut rng_a = RngStream::new(4, 0);
        let mut rng_b = RngStream::new(4, 0);
        let fresh = GameState::new(5, StrategyParams::default()).unwrap();
        let v = vec(&[1, -1, 1, 1, -1]);
        let a = choose_sign_combined(&fresh, &v, &mut rng_a);
        let b = choose_sign_power_greedy(&fresh, &v, &mut rng_b);
        assert_eq!(a, b);
        let mut g = state(&[2, -1, 0, 3, 1]);
        g.apply_step(&v, Sign::Plus).unwrap(); // t = 1, next round is 2
        let a = choose_sign_combined(&g, &v, &mut rng_a);
        let b = choose_sign_majority(&g, &v, &mut rng_b);
        assert_eq!(a, b);
        assert_eq!(a.rule_used, Rule::Majority);
    }

    #[test]
    fn all_red_at_odd_round_is_a_tie() {
        let g = GameState::synthetic(
            vec![4, -2, 6],
            Some(vec![Color::Red; 3]),
            StrategyParams::default(),
        )
        .unwrap();
        let mut rng = RngStream::new(0, 0);
        let diag = choose_sign_combined(&g, &vec(&[1, 1, 1]), &mut rng);
        assert!(diag.tie);
        assert_eq!(diag.rule_used, Rule::Potential);
    }

    #[test]
    fn recolor_rules() {
        let params = StrategyParams {
            c: 4.0,
            h: 5.0,
            ..Default::default()
        };
        let mut calm = GameState::synthetic(vec![1, 0], None, params).unwrap();
        assert_eq!(recolor(&mut calm), Recolor::default());
        assert_eq!(calm.red_count(), 0);

        // cn = 8, d = 2: Φ = ((8/4)^4 + 1)/2 = 8.5 > 5
        let mut hot = GameState::synthetic(vec![2, 0], None, params).unwrap();
        let r = recolor(&mut hot);
        assert!(r.phase_started);
        assert_eq!(hot.red_count(), 2);
        assert_eq!(hot.phases(), 1);
        // masked potential is now 1; the red chip at 0 is promoted next time
        let r = recolor(&mut hot);
        assert_eq!(r.promoted, 1);
        assert!(!r.phase_started);
        assert_eq!(hot.colors(), &[Color::Red, Color::Green]);
        let mut back = hot.clone();
        back.apply_step(&vec(&[-1, 1]), Sign::Plus).unwrap();
        back.apply_step(&vec(&[-1, -1]), Sign::Plus).unwrap();
        assert_eq!(back.d()[0], 0);
        recolor(&mut back);
        assert_eq!(back.red_count(), 0);
    }

    #[test]
    fn kind_parsing() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("greedy".parse::<StrategyKind>().is_err());
    }
}
