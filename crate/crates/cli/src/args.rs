use std::path::PathBuf;

use balance_core::harness::TraceLevel;
use balance_core::{StrategyKind, StrategyParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "balance",
    version,
    about = "Online vector balancing: strategies, sweeps, probes and oracles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one (strategy, n, T) cell; writes summary.json, trials.csv, trace.csv.
    Run(ExperimentArgs),
    /// Scaling sweep over an n list; writes sweep.csv and summary.json.
    Sweep(ExperimentArgs),
    /// Several strategies on the same grid (all five by default); writes compare.csv.
    Compare(ExperimentArgs),
    /// Drift probes on injected states and the majority-rule tail probe.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Exhaustive reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Run the deterministic invariant suite; exit 1 if anything fails.
    Verify {
        /// Self-test of the checker.
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    ClassBoundary,
}

/// Experiment flags; each overrides the matching config-file field.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Strategy or comma-separated list: random, power, cosh, majority, combined.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Option<Vec<StrategyKind>>,
    /// Dimension list, e.g. 64,256,1024.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Horizon: "n" or a comma-separated list of round counts.
    #[arg(long = "T", value_delimiter = ',')]
    pub t: Option<Vec<String>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long = "H")]
    pub h: Option<f64>,
    #[arg(long)]
    pub c_cosh: Option<f64>,
    #[arg(long, value_enum)]
    pub trace: Option<TraceArg>,
    /// Output directory (default: out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Does not affect results.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TraceArg {
    None,
    Summary,
    Full,
}

impl From<TraceArg> for TraceLevel {
    fn from(t: TraceArg) -> Self {
        match t {
            TraceArg::None => TraceLevel::None,
            TraceArg::Summary => TraceLevel::Summary,
            TraceArg::Full => TraceLevel::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateShape {
    /// Every coordinate at the same position.
    Uniform,
    /// One elevated coordinate.
    Concentrated,
    /// Ragged random state.
    Random,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long = "H")]
    pub h: Option<f64>,
    #[arg(long)]
    pub c_cosh: Option<f64>,
    /// Also write probe_<kind>.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ProbeArgs {
    pub fn params(&self) -> balance_core::Result<StrategyParams> {
        let d = StrategyParams::default();
        let params = StrategyParams {
            c: self.c.unwrap_or(d.c),
            p: self.p.unwrap_or(d.p),
            h: self.h.unwrap_or(d.h),
            c_cosh: self.c_cosh.unwrap_or(d.c_cosh),
            seed: self.seed,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Subcommand)]
pub enum ProbeCommand {
    /// Power-greedy drift at a state with Φ in [H/2, H].
    Drift {
        #[command(flatten)]
        common: ProbeArgs,
        #[arg(long, value_enum, default_value_t = StateShape::Random)]
        state: StateShape,
        /// Target Φ as a fraction of H.
        #[arg(long, default_value_t = 0.75)]
        phi_fraction: f64,
    },
    /// Cosh-greedy probe at the all-equal state with Φ just above 2n.
    Cosh {
        #[command(flatten)]
        common: ProbeArgs,
    },
    /// Folded-position tail of the majority rule.
    Majority {
        #[arg(long)]
        n: usize,
        #[arg(long = "T")]
        t: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Offline optimum of rows like "1,1;1,-1".
    Offline {
        #[arg(long, allow_hyphen_values = true)]
        vectors: String,
    },
    /// Paley-Zygmund enumeration: Pr[|Σ y_i a_i| ≥ √(Σ a_i²/2)].
    Pz {
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        weights: Vec<f64>,
    },
    /// Fraction of signed sums in [center − S, center + S].
    Spread {
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        weights: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        center: f64,
        #[arg(long)]
        halfwidth: f64,
    },
    /// Second-order bound over every admissible position.
    Taylor {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e5)]
        c: f64,
        #[arg(long, default_value_t = 4)]
        p: u32,
    },
}
