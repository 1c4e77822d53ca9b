//! Online sign selection for uniformly random ±1 vectors.
//!
//! Vectors `v_1, v_2, ...` drawn uniformly from `{-1,+1}^n` arrive one at a
//! time and a sign `x_t` must be committed before the next arrival. The goal
//! is to keep every coordinate of the running signed sum `Σ x_t v_t` small.
//!
//! Modules:
//! - [`game`]: game state, random input, chip-game views.
//! - [`potential`]: gap function, power and cosh potentials, L/Q split,
//!   class decomposition.
//! - [`strategy`]: the five signing rules behind one interface.
//! - [`oracle`]: exhaustive references (offline optimum, anti-concentration).
//! - [`harness`]: seeded trials, sweeps, statistics and drift probes.
//! - [`verify`]: the deterministic invariant suite behind `balance verify`.

pub mod error;
pub mod game;
pub mod harness;
pub mod oracle;
pub mod potential;
pub mod stats;
pub mod strategy;
pub mod verify;

pub use error::{Error, Result};
pub use game::{Color, GameState, RngStream, Sign, SignVector, StrategyParams};
pub use strategy::{Rule, StepDiagnostics, Strategy, StrategyKind};
