//! Seeded Monte-Carlo trials, sweeps and drift probes.
//!
//! Every trial owns the random stream `(seed, trial_index)`, so results do
//! not depend on how trials are scheduled across threads. Aggregation runs
//! after collection, in trial order.

pub mod output;
pub mod probe;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{GameState, RngStream, StrategyParams};
use crate::potential::{breach_count, cosh_potential, power_potential};
use crate::stats::{MeanStderr, Quantiles};
use crate::strategy::{Rule, Strategy, StrategyKind};

pub use probe::{
    cosh_boundary_state, cosh_drift_probe, drift_probe, inject_state, majority_tail_probe,
    random_state_with_potential, state_with_potential, CoshProbeReport, DriftProbeReport,
    MajorityTailReport,
};

/// How many rounds each cell plays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Horizon {
    /// `T = n`.
    EqualsN,
    Fixed(Vec<u64>),
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::EqualsN => s.serialize_str("n"),
            Horizon::Fixed(ts) => ts.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            One(u64),
            Many(Vec<u64>),
        }
        match Raw::deserialize(de)? {
            Raw::Word(w) if w == "n" => Ok(Horizon::EqualsN),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "T must be \"n\", an integer or a list of integers, got \"{w}\""
            ))),
            Raw::One(t) => Ok(Horizon::Fixed(vec![t])),
            Raw::Many(ts) => Ok(Horizon::Fixed(ts)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLevel {
    /// `summary.json` only.
    None,
    /// Plus `trials.csv` and the step trace of trial 0.
    #[default]
    Summary,
    /// Plus a step trace for every trial.
    Full,
}

fn one_or_many<'de, D: Deserializer<'de>>(
    de: D,
) -> std::result::Result<Vec<StrategyKind>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(StrategyKind),
        Many(Vec<StrategyKind>),
    }
    Ok(match Raw::deserialize(de)? {
        Raw::One(k) => vec![k],
        Raw::Many(ks) => ks,
    })
}

fn default_strategies() -> Vec<StrategyKind> {
    vec![StrategyKind::Power]
}

fn default_trials() -> usize {
    1
}

/// Flat experiment description; this is also the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_strategies", deserialize_with = "one_or_many")]
    pub strategy: Vec<StrategyKind>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(rename = "T", default = "horizon_default")]
    pub horizon: Horizon,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(flatten)]
    pub params: StrategyParams,
    #[serde(default)]
    pub trace: TraceLevel,
    /// Where files go; not part of the echoed config so that outputs do not
    /// depend on their location.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<String>,
}

fn horizon_default() -> Horizon {
    Horizon::EqualsN
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            strategy: default_strategies(),
            n: Vec::new(),
            horizon: Horizon::EqualsN,
            trials: 1,
            params: StrategyParams::default(),
            trace: TraceLevel::Summary,
            out_dir: None,
        }
    }
}

/// One `(strategy, n, T)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub strategy: StrategyKind,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strategy.is_empty() {
            return Err(Error::InvalidConfig("no strategy given".into()));
        }
        if self.n.is_empty() {
            return Err(Error::InvalidConfig("n list is empty".into()));
        }
        if self.n.contains(&0) {
            return Err(Error::ZeroDimension);
        }
        if let Horizon::Fixed(ts) = &self.horizon {
            if ts.is_empty() {
                return Err(Error::InvalidConfig("T list is empty".into()));
            }
            if ts.contains(&0) {
                return Err(Error::InvalidConfig("T must be ≥ 1".into()));
            }
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be ≥ 1".into()));
        }
        self.params.validate()
    }

    /// Cells in output order: strategy, then n, then T.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &strategy in &self.strategy {
            for &n in &self.n {
                match &self.horizon {
                    Horizon::EqualsN => out.push(Cell {
                        strategy,
                        n,
                        t: n as u64,
                    }),
                    Horizon::Fixed(ts) => {
                        out.extend(ts.iter().map(|&t| Cell { strategy, n, t }));
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_index: u64,
    #[serde(rename = "final_V")]
    pub final_v: u64,
    #[serde(rename = "running_max_V")]
    pub running_max_v: u64,
    pub phi_max: f64,
    /// Rounds that ended with some counted `|d_j| ≥ √(cn)`.
    pub breach_count: u64,
    pub tie_count: u64,
    pub phase_count: u64,
    /// Fraction of rounds that ended with at least one red chip.
    pub red_time_fraction: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// One row of a step trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u64,
    pub x: i64,
    #[serde(rename = "V_t")]
    pub v_t: u64,
    pub phi: f64,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    pub rule_used: &'static str,
}

/// The potential a strategy is judged by: cosh for `cosh`, the masked
/// power potential otherwise.
pub fn strategy_potential(kind: StrategyKind, state: &GameState) -> f64 {
    match kind {
        StrategyKind::Cosh => cosh_potential(state, state.params().lambda(state.n())),
        _ => power_potential(state),
    }
}

/// Plays `horizon` rounds from `state` on the stream `(seed, trial_index)`.
pub fn run_trial_from(
    mut state: GameState,
    kind: StrategyKind,
    horizon: u64,
    trial_index: u64,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> TrialResult {
    let started = Instant::now();
    let strategy = Strategy::new(kind);
    let mut rng = RngStream::new(state.params().seed, trial_index);
    let mut running_max = state.current_value();
    let mut phi_max = strategy_potential(kind, &state);
    let mut breaches = 0;
    let mut ties = 0;
    let mut red_rounds = 0u64;
    for _ in 0..horizon {
        let diag = strategy.play_round(&mut state, &mut rng);
        let value = state.current_value();
        let phi = strategy_potential(kind, &state);
        running_max = running_max.max(value);
        phi_max = phi_max.max(phi);
        if breach_count(&state) > 0 {
            breaches += 1;
        }
        ties += diag.tie as u64;
        red_rounds += (state.red_count() > 0) as u64;
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow {
                t: state.t(),
                x: diag.x.value(),
                v_t: value,
                phi,
                l: diag.l,
                q: diag.q,
                rule_used: match diag.rule_used {
                    Rule::Potential => "1",
                    Rule::Majority => "2",
                    Rule::Random => "random",
                },
            });
        }
    }
    TrialResult {
        trial_index,
        final_v: state.current_value(),
        running_max_v: running_max,
        phi_max,
        breach_count: breaches,
        tie_count: ties,
        phase_count: state.phases(),
        red_time_fraction: if horizon == 0 {
            0.0
        } else {
            red_rounds as f64 / horizon as f64
        },
        wall_time: started.elapsed(),
    }
}

/// One trial of `cell` from the origin.
pub fn run_trial(
    params: &StrategyParams,
    cell: Cell,
    trial_index: u64,
    trace: Option<&mut Vec<TraceRow>>,
) -> Result<TrialResult> {
    let state = GameState::new(cell.n, *params)?;
    Ok(run_trial_from(
        state,
        cell.strategy,
        cell.t,
        trial_index,
        trace,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub strategy: StrategyKind,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub trials: usize,
    #[serde(rename = "final_V")]
    pub final_v: Quantiles,
    #[serde(rename = "running_max_V")]
    pub running_max_v: Quantiles,
    /// Final `V/√n`.
    #[serde(rename = "V_over_sqrt_n")]
    pub v_over_sqrt_n: MeanStderr,
    /// Final `V/√(n ln n)`; absent for `n = 1`.
    #[serde(rename = "V_over_sqrt_nlogn")]
    pub v_over_sqrt_nlogn: Option<MeanStderr>,
    pub breach_total: u64,
    pub tie_total: u64,
    pub phase_total: u64,
    pub mean_red_time_fraction: f64,
}

impl CellSummary {
    pub fn of(cell: Cell, trials: &[TrialResult]) -> Self {
        let finals: Vec<f64> = trials.iter().map(|r| r.final_v as f64).collect();
        let maxes: Vec<f64> = trials.iter().map(|r| r.running_max_v as f64).collect();
        let nf = cell.n as f64;
        let per_sqrt: Vec<f64> = finals.iter().map(|v| v / nf.sqrt()).collect();
        let per_log = (cell.n > 1).then(|| {
            let s = (nf * nf.ln()).sqrt();
            MeanStderr::of(&finals.iter().map(|v| v / s).collect::<Vec<_>>())
        });
        CellSummary {
            strategy: cell.strategy,
            n: cell.n,
            t: cell.t,
            trials: trials.len(),
            final_v: Quantiles::of(&finals),
            running_max_v: Quantiles::of(&maxes),
            v_over_sqrt_n: MeanStderr::of(&per_sqrt),
            v_over_sqrt_nlogn: per_log,
            breach_total: trials.iter().map(|r| r.breach_count).sum(),
            tie_total: trials.iter().map(|r| r.tie_count).sum(),
            phase_total: trials.iter().map(|r| r.phase_count).sum(),
            mean_red_time_fraction: trials.iter().map(|r| r.red_time_fraction).sum::<f64>()
                / trials.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
}

/// Trials and traces of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub cell: Cell,
    pub trials: Vec<TrialResult>,
    /// `(trial_index, rows)`; trial 0 only unless the trace level is `full`.
    pub traces: Vec<(u64, Vec<TraceRow>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub summary: ExperimentSummary,
    pub cells: Vec<CellRun>,
}

/// Runs `f(0..count)` on `threads` workers (`0` = all cores), keeping order.
pub fn parallel_map<T: Send>(threads: usize, count: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Runs every cell of `config`; pure in `config` for any `threads`.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentRun> {
    config.validate()?;
    let mut cells = Vec::new();
    let mut summaries = Vec::new();
    for cell in config.cells() {
        let traced = |i: u64| match config.trace {
            TraceLevel::None => false,
            TraceLevel::Summary => i == 0,
            TraceLevel::Full => true,
        };
        let results = parallel_map(threads, config.trials as u64, |i| {
            let mut rows = Vec::new();
            let trial = run_trial(&config.params, cell, i, traced(i).then_some(&mut rows));
            trial.map(|r| (r, rows))
        });
        let mut trials = Vec::with_capacity(results.len());
        let mut traces = Vec::new();
        for (i, res) in results.into_iter().enumerate() {
            let (trial, rows) = res?;
            if traced(i as u64) {
                traces.push((i as u64, rows));
            }
            trials.push(trial);
        }
        summaries.push(CellSummary::of(cell, &trials));
        cells.push(CellRun {
            cell,
            trials,
            traces,
        });
    }
    Ok(ExperimentRun {
        summary: ExperimentSummary {
            config: config.clone(),
            cells: summaries,
        },
        cells,
    })
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub strategy: StrategyKind,
    #[serde(rename = "median_V")]
    pub median_v: f64,
    #[serde(rename = "median_V_over_sqrt_n")]
    pub median_v_over_sqrt_n: f64,
    #[serde(rename = "median_V_over_sqrt_nlogn")]
    pub median_v_over_sqrt_nlogn: Option<f64>,
    #[serde(rename = "q95_V")]
    pub q95_v: f64,
    pub trials: usize,
}

impl SweepRow {
    pub fn of(summary: &CellSummary) -> Self {
        let nf = summary.n as f64;
        let median = summary.final_v.median;
        SweepRow {
            n: summary.n,
            t: summary.t,
            strategy: summary.strategy,
            median_v: median,
            median_v_over_sqrt_n: median / nf.sqrt(),
            median_v_over_sqrt_nlogn: (summary.n > 1).then(|| median / (nf * nf.ln()).sqrt()),
            q95_v: summary.final_v.q95,
            trials: summary.trials,
        }
    }
}

/// Per-cell medians and normalized ratios for every strategy and cell.
/// Needs at least two `(n, T)` cells per strategy.
pub fn scaling_sweep(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<(ExperimentRun, Vec<SweepRow>)> {
    config.validate()?;
    if config.cells().len() < 2 * config.strategy.len() {
        return Err(Error::InvalidConfig(
            "a sweep needs at least two values of n or T".into(),
        ));
    }
    let run = run_experiment(config, threads)?;
    let rows = run.summary.cells.iter().map(SweepRow::of).collect();
    Ok((run, rows))
}

/// `(max − min) / min` of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}
