//! On-disk formats.
//!
//! `summary.json` carries a `"config"` object. Every CSV starts with a
//! `# config: {...}` line, then a header, then LF-terminated ASCII rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentConfig, ExperimentRun, SweepRow, TraceLevel};
use crate::error::{Error, Result};

pub const TRIALS_HEADER: &str =
    "trial_index,final_V,running_max_V,phi_max,breach_count,tie_count,phase_count,red_time_fraction";
pub const TRACE_HEADER: &str = "t,x,V_t,phi,L,Q,rule_used";
pub const SWEEP_HEADER: &str =
    "n,T,strategy,median_V,median_V_over_sqrt_n,median_V_over_sqrt_nlogn,q95_V,trials";

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Serializes `rows` under the config comment; the header comes from the
/// row type's field names.
pub fn csv_string<T: Serialize>(
    config: &ExperimentConfig,
    rows: &[T],
    header: &str,
) -> Result<String> {
    let mut buf = format!("# config: {}\n", config.to_json()).into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        w.write_record(header.split(',')).map_err(|e| Error::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        })?;
        for row in rows {
            w.serialize(row).map_err(|e| Error::Io {
                path: "<csv>".into(),
                message: e.to_string(),
            })?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        })?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_csv<T: Serialize>(
    path: &Path,
    config: &ExperimentConfig,
    rows: &[T],
    header: &str,
) -> Result<()> {
    let text = csv_string(config, rows, header)?;
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

/// Writes `summary.json` and, per the trace level, `trials.csv` and step
/// traces. A single-cell run uses plain names (`trials.csv`, `trace.csv`,
/// `trace_<i>.csv`); several cells get a `<strategy>_n<n>_T<T>_` prefix.
/// Returns the paths written.
pub fn write_run(dir: &Path, run: &ExperimentRun) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let config = &run.summary.config;
    let mut written = Vec::new();
    let summary = dir.join("summary.json");
    write_json(&summary, &run.summary)?;
    written.push(summary);
    if config.trace == TraceLevel::None {
        return Ok(written);
    }
    let several = run.cells.len() > 1;
    for cell_run in &run.cells {
        let c = cell_run.cell;
        let prefix = if several {
            format!("{}_n{}_T{}_", c.strategy, c.n, c.t)
        } else {
            String::new()
        };
        let trials = dir.join(format!("{prefix}trials.csv"));
        write_csv(&trials, config, &cell_run.trials, TRIALS_HEADER)?;
        written.push(trials);
        for (index, rows) in &cell_run.traces {
            let name = if config.trace == TraceLevel::Full {
                format!("{prefix}trace_{index}.csv")
            } else {
                format!("{prefix}trace.csv")
            };
            let path = dir.join(name);
            write_csv(&path, config, rows, TRACE_HEADER)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn write_sweep(dir: &Path, config: &ExperimentConfig, rows: &[SweepRow]) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join("sweep.csv");
    write_csv(&path, config, rows, SWEEP_HEADER)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, Horizon, TraceRow, TrialResult};
    use crate::strategy::StrategyKind;

    fn header_of(text: &str) -> &str {
        text.lines().nth(1).unwrap()
    }

    #[test]
    fn trial_and_trace_headers_match_field_names() {
        let cfg = ExperimentConfig {
            strategy: vec![StrategyKind::Combined],
            n: vec![8],
            horizon: Horizon::Fixed(vec![6]),
            trials: 2,
            ..ExperimentConfig::default()
        };
        let run = run_experiment(&cfg, 1).unwrap();
        let trials: &[TrialResult] = &run.cells[0].trials;
        let text = csv_string(&cfg, trials, TRIALS_HEADER).unwrap();
        assert!(text.starts_with("# config: {"));
        assert_eq!(header_of(&text), TRIALS_HEADER);
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert!(text.is_ascii());

        let rows: &[TraceRow] = &run.cells[0].traces[0].1;
        let text = csv_string(&cfg, rows, TRACE_HEADER).unwrap();
        assert_eq!(header_of(&text), TRACE_HEADER);
        let first = text.lines().nth(2).unwrap();
        assert!(first.starts_with("1,"));
        assert!(first.ends_with(",1"), "{first}");
        let second = text.lines().nth(3).unwrap();
        assert!(second.ends_with(",,,2"), "{second}");
    }

    #[test]
    fn sweep_header() {
        let cfg = ExperimentConfig {
            strategy: vec![StrategyKind::Random],
            n: vec![1, 2],
            ..ExperimentConfig::default()
        };
        let (_, rows) = crate::harness::scaling_sweep(&cfg, 1).unwrap();
        let text = csv_string(&cfg, &rows, SWEEP_HEADER).unwrap();
        assert_eq!(header_of(&text), SWEEP_HEADER);
        let n1 = text.lines().nth(2).unwrap();
        assert!(n1.starts_with("1,1,random,1.0,1.0,,"), "{n1}");
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let cfg = ExperimentConfig {
            n: vec![2],
            ..ExperimentConfig::default()
        };
        let run = run_experiment(&cfg, 1).unwrap();
        let err = write_run(Path::new("/proc/no/such/dir"), &run).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
