//! `balance`: run, sweep and probe online balancing strategies.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or config error.
//! Errors go to stderr as one JSON line `{"error": kind, "message": text}`.

mod args;

use std::path::PathBuf;
use std::process::ExitCode;

use balance_core::harness::{self, output, ExperimentConfig, ExperimentRun, Horizon, SweepRow};
use balance_core::oracle;
use balance_core::verify::{self, Fault};
use balance_core::{Error, GameState, RngStream, SignVector, StrategyKind};
use clap::Parser;
use serde_json::json;

use args::{Cli, Command, ExperimentArgs, OracleCommand, ProbeCommand, StateShape};

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Io { .. } => "io",
            Error::ZeroDimension | Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidParams(_) => "invalid_params",
            Error::Precondition(_) => "precondition",
            _ => "invalid_input",
        };
        Failure {
            code: 2,
            kind,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let message = e.to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            return fail(Failure::usage(first));
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
    ExitCode::from(f.code)
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a, false),
        Command::Compare(a) => sweep(a, true),
        Command::Probe(p) => probe(p),
        Command::Oracle(o) => oracle_cmd(o),
        Command::Verify { inject_fault } => verify_cmd(inject_fault.is_some()),
    }
}

/// File values first, then flags.
fn resolve(a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure {
                code: 2,
                kind: "io",
                message: format!("{}: {e}", path.display()),
            })?;
            serde_json::from_str(&text).map_err(|e| Failure {
                code: 2,
                kind: "invalid_config",
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &a.strategy {
        cfg.strategy = s.clone();
    }
    if let Some(n) = &a.n {
        cfg.n = n.clone();
    }
    if let Some(t) = &a.t {
        cfg.horizon = if t.len() == 1 && t[0] == "n" {
            Horizon::EqualsN
        } else {
            Horizon::Fixed(
                t.iter()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Failure::usage(format!("invalid T value '{s}'")))
                    })
                    .collect::<Result<_, _>>()?,
            )
        };
    }
    if let Some(k) = a.trials {
        cfg.trials = k;
    }
    if let Some(s) = a.seed {
        cfg.params.seed = s;
    }
    if let Some(c) = a.c {
        cfg.params.c = c;
    }
    if let Some(p) = a.p {
        cfg.params.p = p;
    }
    if let Some(h) = a.h {
        cfg.params.h = h;
    }
    if let Some(c) = a.c_cosh {
        cfg.params.c_cosh = c;
    }
    if let Some(t) = a.trace {
        cfg.trace = t.into();
    }
    if let Some(o) = &a.out {
        cfg.out_dir = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from(cfg.out_dir.as_deref().unwrap_or("out"))
}

fn print_cells(run: &ExperimentRun) {
    println!("strategy       n        T  trials  median_V  q95_V  max_running_V  breaches");
    for c in &run.summary.cells {
        println!(
            "{:<10} {:>5} {:>8} {:>7} {:>9} {:>6} {:>14} {:>9}",
            c.strategy.name(),
            c.n,
            c.t,
            c.trials,
            c.final_v.median,
            c.final_v.q95,
            c.running_max_v.max,
            c.breach_total
        );
    }
}

fn run(a: ExperimentArgs) -> CliResult {
    let cfg = resolve(&a)?;
    let cells = cfg.cells();
    if cells.len() != 1 {
        return Err(Failure::usage(format!(
            "run needs exactly one (strategy, n, T) cell, got {}; use sweep for grids",
            cells.len()
        )));
    }
    let run = harness::run_experiment(&cfg, a.threads)?;
    let written = output::write_run(&out_dir(&cfg), &run)?;
    print_cells(&run);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn sweep(a: ExperimentArgs, compare: bool) -> CliResult {
    let mut cfg = resolve(&a)?;
    if compare && a.strategy.is_none() && a.config.is_none() {
        cfg.strategy = StrategyKind::ALL.to_vec();
    }
    let (run, rows): (ExperimentRun, Vec<SweepRow>) = if compare {
        let run = harness::run_experiment(&cfg, a.threads)?;
        let rows = run.summary.cells.iter().map(SweepRow::of).collect();
        (run, rows)
    } else {
        harness::scaling_sweep(&cfg, a.threads)?
    };
    let dir = out_dir(&cfg);
    output::ensure_dir(&dir)?;
    let csv = dir.join(if compare { "compare.csv" } else { "sweep.csv" });
    output::write_csv(&csv, &cfg, &rows, output::SWEEP_HEADER)?;
    let summary = dir.join("summary.json");
    output::write_json(&summary, &run.summary)?;
    print_cells(&run);
    println!("wrote {}", csv.display());
    println!("wrote {}", summary.display());
    Ok(())
}

fn probe(cmd: ProbeCommand) -> CliResult {
    let (name, report, out) = match cmd {
        ProbeCommand::Drift {
            common,
            state,
            phi_fraction,
        } => {
            let params = common.params()?;
            let n = common.n;
            let target = phi_fraction * params.h;
            let s: GameState = match state {
                StateShape::Uniform => harness::state_with_potential(n, n, target, params)?,
                StateShape::Concentrated => harness::state_with_potential(n, 1, target, params)?,
                StateShape::Random => {
                    let mut rng = RngStream::new(params.seed, u64::MAX);
                    harness::random_state_with_potential(n, target, params, &mut rng)?
                }
            };
            let r = harness::drift_probe(&s, common.samples, params.seed)?;
            let cfg = json!({ "n": n, "samples": common.samples, "state": state, "phi_fraction": phi_fraction, "params": params });
            ("drift", json!({ "config": cfg, "report": r }), common.out)
        }
        ProbeCommand::Cosh { common } => {
            let params = common.params()?;
            let s = harness::cosh_boundary_state(common.n, params)?;
            let r = harness::cosh_drift_probe(&s, common.samples, params.seed)?;
            let cfg = json!({ "n": common.n, "samples": common.samples, "params": params });
            ("cosh", json!({ "config": cfg, "report": r }), common.out)
        }
        ProbeCommand::Majority {
            n,
            t,
            trials,
            seed,
            threads,
            out,
        } => {
            let params = balance_core::StrategyParams {
                seed,
                ..Default::default()
            };
            let r = harness::majority_tail_probe(n, t, trials, params, threads)?;
            let cfg = json!({ "n": n, "T": t, "trials": trials, "params": params });
            let value = json!({ "config": cfg, "report": r, "drift_holds": r.drift_holds() });
            ("majority", value, out)
        }
    };
    emit(name, report, out)
}

fn emit(name: &str, value: serde_json::Value, out: Option<PathBuf>) -> CliResult {
    let text = serde_json::to_string_pretty(&value).expect("json value serializes");
    println!("{text}");
    if let Some(dir) = out {
        output::ensure_dir(&dir)?;
        let path = dir.join(format!("probe_{name}.json"));
        output::write_json(&path, &value)?;
    }
    Ok(())
}

fn parse_vectors(text: &str) -> Result<Vec<SignVector>, Failure> {
    text.split(';')
        .filter(|row| !row.trim().is_empty())
        .map(|row| {
            let signs = row
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<i64>()
                        .map_err(|_| Failure::usage(format!("bad sign '{s}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SignVector::from_signs(&signs)?)
        })
        .collect()
}

fn oracle_cmd(cmd: OracleCommand) -> CliResult {
    let value = match cmd {
        OracleCommand::Offline { vectors } => {
            let vs = parse_vectors(&vectors)?;
            let best = oracle::offline_optimum(&vs)?;
            json!({ "T": vs.len(), "offline_optimum": best })
        }
        OracleCommand::Pz { weights } => {
            json!({ "weights": weights, "report": oracle::pz_enumerate(&weights)? })
        }
        OracleCommand::Spread {
            weights,
            center,
            halfwidth,
        } => {
            let r = oracle::spread_enumerate(&weights, center, halfwidth)?;
            let m = weights.len();
            json!({
                "weights": weights,
                "center": center,
                "report": r,
                "all_ones_fraction": oracle::all_ones_fraction(m, center, halfwidth),
                "all_ones_max_fraction": oracle::all_ones_max_fraction(m, halfwidth),
            })
        }
        OracleCommand::Taylor { n, c, p } => {
            let mut cases = 0u64;
            let mut failures = Vec::new();
            for d in oracle::taylor_range(c, n, p) {
                for eta in [-1.0, 1.0] {
                    cases += 1;
                    if !oracle::taylor_bound_check(d, eta, c, n, p)? {
                        failures.push(json!({ "d": d, "eta": eta }));
                    }
                }
            }
            json!({ "n": n, "c": c, "p": p, "cases": cases, "failures": failures })
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("json value serializes")
    );
    Ok(())
}

fn verify_cmd(fault: bool) -> CliResult {
    let fault = if fault {
        Fault::ClassBoundary
    } else {
        Fault::None
    };
    let started = std::time::Instant::now();
    let results = verify::run_all(fault);
    println!(
        "{:<20} {:>8} {:>10}  detail",
        "invariant", "result", "cases"
    );
    for r in &results {
        println!(
            "{:<20} {:>8} {:>10}  {}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.cases,
            r.detail
        );
    }
    println!("elapsed {:.1}s", started.elapsed().as_secs_f64());
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            kind: "verification",
            message: format!("failed: {}", failed.join(", ")),
        })
    }
}
