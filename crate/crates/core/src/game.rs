//! Game state and random input for the online balancing game.
//!
//! The position vector `P_t = Σ_{s≤t} x_s v_s` is stored as integer
//! discrepancies `d_j(t)`. Each coordinate also doubles as a chip on `Z`
//! (chip game) or, after taking absolute values, on the non-negative
//! integers (folded chip game).

use std::fmt;
use std::ops::Neg;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sign in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// Sign of a non-zero integer.
    pub fn of(v: i64) -> Option<Sign> {
        match v.signum() {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A vector in `{-1,+1}^n`, bit-packed (a set bit is `+1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector {
    len: usize,
    words: Vec<u64>,
}

impl SignVector {
    pub fn from_signs(signs: &[i64]) -> Result<Self> {
        let mut words = vec![0u64; signs.len().div_ceil(64)];
        for (j, &s) in signs.iter().enumerate() {
            match s {
                1 => words[j / 64] |= 1 << (j % 64),
                -1 => {}
                other => {
                    return Err(Error::InvalidParams(format!(
                        "entry {j} of sign vector is {other}, expected ±1"
                    )))
                }
            }
        }
        Ok(SignVector {
            len: signs.len(),
            words,
        })
    }

    pub fn all_plus(n: usize) -> Self {
        let mut words = vec![u64::MAX; n.div_ceil(64)];
        if !n.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        SignVector { len: n, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entry `j` as `±1`.
    #[inline]
    pub fn get(&self, j: usize) -> i64 {
        debug_assert!(j < self.len);
        (((self.words[j / 64] >> (j % 64)) & 1) as i64) * 2 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    pub fn to_vec(&self) -> Vec<i64> {
        self.iter().collect()
    }

    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        if !self.len.is_multiple_of(64) {
            if let Some(last) = out.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Red,
}

/// Every tunable constant of the strategies.
///
/// `beta`, `gamma` and `lambda` are derived, never stored, so they always
/// agree with `p`, `c_cosh` and the active dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    /// Gap scale: the power potential blows up at `|d_j| = √(cn)`.
    pub c: f64,
    /// Exponent of the power potential.
    pub p: u32,
    /// Potential threshold.
    #[serde(rename = "H")]
    pub h: f64,
    /// Scale constant of the cosh potential, `λ = 1/(c_cosh √n)`.
    pub c_cosh: f64,
    pub seed: u64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            c: 1e5,
            p: 4,
            h: 4.0 * std::f64::consts::E.powi(3),
            c_cosh: 12.0,
            seed: 0,
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParams(format!(
                "p must be ≥ 2, got {}",
                self.p
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "c must be > 0, got {}",
                self.c
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "H must be > 0, got {}",
                self.h
            )));
        }
        if !(self.c_cosh > 0.0 && self.c_cosh.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "c_cosh must be > 0, got {}",
                self.c_cosh
            )));
        }
        Ok(())
    }

    /// Class ratio `1 + 1/p`.
    pub fn beta(&self) -> f64 {
        1.0 + 1.0 / self.p as f64
    }

    /// Tail exponent `1 - 2/p`.
    pub fn gamma(&self) -> f64 {
        1.0 - 2.0 / self.p as f64
    }

    /// Cosh scale for dimension `n`.
    pub fn lambda(&self, n: usize) -> f64 {
        1.0 / (self.c_cosh * (n as f64).sqrt())
    }

    /// `c·n`, the squared breach radius.
    pub fn cn(&self, n: usize) -> f64 {
        self.c * n as f64
    }
}

/// Deterministic per-trial random stream.
///
/// ChaCha8 keyed by the experiment seed, with the trial index selecting one
/// of its 2^64 independent streams. Draw order inside a round is fixed:
/// the arriving vector first, then at most one tie-break coin.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_index);
        RngStream { rng }
    }

    /// A uniform vector in `{-1,+1}^n`; consumes `ceil(n/64)` words.
    pub fn sample_vector(&mut self, n: usize) -> SignVector {
        let mut words: Vec<u64> = (0..n.div_ceil(64)).map(|_| self.rng.next_u64()).collect();
        if !n.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
        SignVector { len: n, words }
    }

    /// A fair coin; consumes one word.
    pub fn coin(&mut self) -> Sign {
        if self.rng.next_u64() >> 63 == 1 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.rng.random_range(0..bound)
    }
}

/// Full state of one online game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    n: usize,
    t: u64,
    d: Vec<i64>,
    colors: Vec<Color>,
    params: StrategyParams,
    phases: u64,
    synthetic: bool,
}

impl GameState {
    pub fn new(n: usize, params: StrategyParams) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        params.validate()?;
        Ok(GameState {
            n,
            t: 0,
            d: vec![0; n],
            colors: vec![Color::Green; n],
            params,
            phases: 0,
            synthetic: false,
        })
    }

    /// A state wrapping arbitrary discrepancies. Synthetic states are exempt
    /// from the parity invariant.
    pub fn synthetic(
        d: Vec<i64>,
        colors: Option<Vec<Color>>,
        params: StrategyParams,
    ) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::ZeroDimension);
        }
        params.validate()?;
        let n = d.len();
        let colors = match colors {
            Some(c) if c.len() != n => {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: c.len(),
                })
            }
            Some(c) => c,
            None => vec![Color::Green; n],
        };
        Ok(GameState {
            n,
            t: 0,
            d,
            colors,
            params,
            phases: 0,
            synthetic: true,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Rounds played so far.
    #[inline]
    pub fn t(&self) -> u64 {
        self.t
    }

    #[inline]
    pub fn d(&self) -> &[i64] {
        &self.d
    }

    #[inline]
    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    #[inline]
    pub fn is_green(&self, j: usize) -> bool {
        self.colors[j] == Color::Green
    }

    pub fn red_count(&self) -> usize {
        self.colors.iter().filter(|&&c| c == Color::Red).count()
    }

    #[inline]
    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    /// Number of times every chip was turned red.
    pub fn phases(&self) -> u64 {
        self.phases
    }

    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }

    /// `d_j ← d_j + x·v_j` for all `j`; `t ← t + 1`. Colors are untouched.
    pub fn apply_step(&mut self, v: &SignVector, x: Sign) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let x = x.value();
        for (j, dj) in self.d.iter_mut().enumerate() {
            *dj += x * v.get(j);
        }
        self.t += 1;
        Ok(())
    }

    /// `max_j |d_j|`, the L∞ norm of the position vector.
    pub fn current_value(&self) -> u64 {
        self.d.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0)
    }

    /// Chip positions in the folded chip game, `(|d_1|, ..., |d_n|)`.
    pub fn folded_positions(&self) -> Vec<u64> {
        self.d.iter().map(|d| d.unsigned_abs()).collect()
    }

    pub(crate) fn set_colors(&mut self, color: Color) {
        self.colors.iter_mut().for_each(|c| *c = color);
    }

    pub(crate) fn colors_mut(&mut self) -> &mut [Color] {
        &mut self.colors
    }

    pub(crate) fn bump_phase(&mut self) {
        self.phases += 1;
    }

    /// Checks `|d_j| ≤ t` and, for non-synthetic states, `d_j ≡ t (mod 2)`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.synthetic {
            return Ok(());
        }
        for (j, &dj) in self.d.iter().enumerate() {
            if dj.unsigned_abs() > self.t {
                return Err(format!("|d_{j}| = {} exceeds t = {}", dj.abs(), self.t));
            }
            if (dj - self.t as i64).rem_euclid(2) != 0 {
                return Err(format!("parity: d_{j} = {dj} at t = {}", self.t));
            }
        }
        Ok(())
    }
}

/// Fold of an already folded position vector (identity on non-negative input).
pub fn fold(positions: &[i64]) -> Vec<u64> {
    positions.iter().map(|d| d.unsigned_abs()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(d: &[i64]) -> GameState {
        GameState::synthetic(d.to_vec(), None, StrategyParams::default()).unwrap()
    }

    #[test]
    fn new_game_is_zero_and_green() {
        let g = GameState::new(4, StrategyParams::default()).unwrap();
        assert_eq!(g.d(), &[0, 0, 0, 0]);
        assert_eq!(g.t(), 0);
        assert!(g.colors().iter().all(|&c| c == Color::Green));
        assert_eq!(
            GameState::new(0, StrategyParams::default()),
            Err(Error::ZeroDimension)
        );
    }

    #[test]
    fn derived_params_are_exact() {
        let p = StrategyParams {
            p: 4,
            c_cosh: 12.0,
            ..Default::default()
        };
        assert_eq!(p.beta(), 1.25);
        assert_eq!(p.gamma(), 0.5);
        assert_eq!(p.lambda(16), 1.0 / 48.0);
        assert!((p.h - 80.342_147_692_750_7).abs() < 1e-9);
        let bad = StrategyParams {
            p: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn apply_step_moves_and_cancels() {
        let mut g = GameState::new(2, StrategyParams::default()).unwrap();
        let v = SignVector::from_signs(&[1, -1]).unwrap();
        g.apply_step(&v, Sign::Plus).unwrap();
        assert_eq!(g.d(), &[1, -1]);
        g.apply_step(&v, Sign::Minus).unwrap();
        assert_eq!(g.d(), &[0, 0]);
        assert_eq!(g.t(), 2);
        let short = SignVector::from_signs(&[1]).unwrap();
        assert_eq!(
            g.apply_step(&short, Sign::Plus),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn value_and_fold() {
        assert_eq!(state(&[0, 0, 0]).current_value(), 0);
        assert_eq!(state(&[3, -5, 1]).current_value(), 5);
        let s = state(&[-2, 0, 1]);
        assert_eq!(s.folded_positions(), vec![2, 0, 1]);
        assert_eq!(
            s.folded_positions().into_iter().max().unwrap(),
            s.current_value()
        );
        let once: Vec<i64> = s.folded_positions().iter().map(|&x| x as i64).collect();
        assert_eq!(fold(&once), s.folded_positions());
    }

    #[test]
    fn sign_vector_packing() {
        let signs: Vec<i64> = (0..130).map(|j| if j % 3 == 0 { 1 } else { -1 }).collect();
        let v = SignVector::from_signs(&signs).unwrap();
        assert_eq!(v.to_vec(), signs);
        let neg: Vec<i64> = signs.iter().map(|s| -s).collect();
        assert_eq!(v.negated().to_vec(), neg);
        assert_eq!(v.negated().negated(), v);
        assert!(SignVector::from_signs(&[1, 0]).is_err());
        assert_eq!(SignVector::all_plus(70).to_vec(), vec![1; 70]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..10 {
            assert_eq!(a.sample_vector(8), b.sample_vector(8));
        }
        let mut c = RngStream::new(7, 4);
        let x: Vec<_> = (0..4).map(|_| a.sample_vector(64)).collect();
        let y: Vec<_> = (0..4).map(|_| c.sample_vector(64)).collect();
        assert_ne!(x, y);
    }

    #[test]
    fn sampled_coordinates_are_balanced_and_uncorrelated() {
        let mut rng = RngStream::new(11, 0);
        let samples = 100_000;
        let mut sums = [0i64; 16];
        let mut cross = 0i64;
        for _ in 0..samples {
            let v = rng.sample_vector(16);
            for (j, s) in sums.iter_mut().enumerate() {
                *s += v.get(j);
            }
            cross += v.get(0) * v.get(1);
        }
        for s in sums {
            let mean = s as f64 / samples as f64;
            assert!(mean.abs() <= 0.02, "coordinate mean {mean}");
        }
        let corr = cross as f64 / samples as f64;
        assert!(corr.abs() <= 0.02, "correlation {corr}");
    }

    #[test]
    fn parity_holds_along_random_play() {
        let mut rng = RngStream::new(1, 1);
        let mut g = GameState::new(5, StrategyParams::default()).unwrap();
        for _ in 0..200 {
            let v = rng.sample_vector(5);
            let x = rng.coin();
            g.apply_step(&v, x).unwrap();
            g.check_invariants().unwrap();
            assert!(g.current_value() <= g.t());
        }
    }
}
