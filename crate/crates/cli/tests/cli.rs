use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn balance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balance"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    serde_json::from_str(stderr.trim()).unwrap()
}

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out_dir = dir.path().join(name);
        let out = balance(&[
            "run",
            "--strategy",
            "power",
            "--n",
            "64",
            "--T",
            "64",
            "--trials",
            "10",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
        summaries.push(fs::read(out_dir.join("summary.json")).unwrap());
        assert!(out_dir.join("trials.csv").exists());
        assert!(out_dir.join("trace.csv").exists());
    }
    assert_eq!(summaries[0], summaries[1]);
    assert_eq!(summaries[0], summaries[2]);
    let json: serde_json::Value = serde_json::from_slice(&summaries[0]).unwrap();
    assert_eq!(json["config"]["seed"], 7);
    assert_eq!(json["config"]["strategy"][0], "power");
}

#[test]
fn zero_dimension_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = balance(&[
        "run",
        "--n",
        "0",
        "--T",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["message"], "n must be ≥ 1");
}

#[test]
fn combined_run_writes_phase_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = balance(&[
        "run",
        "--strategy",
        "combined",
        "--n",
        "32",
        "--T",
        "100000",
        "--trials",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let lines = data_lines(&dir.path().join("trials.csv"));
    assert_eq!(
        lines[0],
        "trial_index,final_V,running_max_V,phi_max,breach_count,tie_count,phase_count,red_time_fraction"
    );
    assert_eq!(lines.len(), 6);
    let trace = data_lines(&dir.path().join("trace.csv"));
    assert_eq!(trace[0], "t,x,V_t,phi,L,Q,rule_used");
    assert_eq!(trace.len(), 100_001);
}

#[test]
fn trace_levels_control_files() {
    let dir = tempfile::tempdir().unwrap();
    let none = dir.path().join("none");
    let full = dir.path().join("full");
    for (level, path) in [("none", &none), ("full", &full)] {
        let out = balance(&[
            "run",
            "--n",
            "8",
            "--T",
            "20",
            "--trials",
            "3",
            "--trace",
            level,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert!(none.join("summary.json").exists());
    assert!(!none.join("trials.csv").exists());
    for i in 0..3 {
        assert!(full.join(format!("trace_{i}.csv")).exists());
    }
}

#[test]
fn sweep_writes_cross_product() {
    let dir = tempfile::tempdir().unwrap();
    let out = balance(&[
        "sweep",
        "--strategy",
        "power,random",
        "--n",
        "4,8,16",
        "--T",
        "n",
        "--trials",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.is_ascii());
    assert!(!text.contains('\r'));
    assert!(text.starts_with("# config: {"));
    let lines = data_lines(&dir.path().join("sweep.csv"));
    assert_eq!(
        lines[0],
        "n,T,strategy,median_V,median_V_over_sqrt_n,median_V_over_sqrt_nlogn,q95_V,trials"
    );
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("4,4,power,"));
    assert!(lines[6].starts_with("16,16,random,"));
}

#[test]
fn sweep_without_n_list_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = balance(&[
        "sweep",
        "--strategy",
        "power",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "invalid_config");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = balance(&["run", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "usage");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"strategy":"majority","n":[16],"T":[50],"trials":3,"seed":9,"c":200.0}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = balance(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["trials"], 2);
    assert_eq!(json["config"]["seed"], 9);
    assert_eq!(json["config"]["c"], 200.0);
    assert_eq!(json["cells"][0]["strategy"], "majority");

    fs::write(&cfg, "{not json").unwrap();
    let out = balance(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_reported() {
    let out = balance(&["run", "--n", "4", "--out", "/proc/forbidden/dir"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "io");
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let out = balance(&["verify"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("class-count bound"));
    assert!(!table.contains("FAIL"));

    let out = balance(&["verify", "--inject-fault", "class-boundary"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    let failing: Vec<&str> = stdout.lines().filter(|l| l.contains("FAIL")).collect();
    assert_eq!(failing.len(), 1);
    assert!(failing[0].starts_with("class-count bound"));
    assert!(error_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("class-count bound"));
}

#[test]
fn oracle_subcommands() {
    let out = balance(&["oracle", "pz", "--weights", "1,1,1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["fraction"], 0.25);

    let out = balance(&[
        "oracle",
        "spread",
        "--weights",
        "1,1,1,2",
        "--halfwidth",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["fraction"], 0.5);
    assert_eq!(v["all_ones_fraction"], 0.375);
    assert_eq!(v["all_ones_max_fraction"], 0.625);

    let out = balance(&["oracle", "offline", "--vectors", "1,1;1,-1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["offline_optimum"], 2);

    let out = balance(&["oracle", "taylor", "--n", "16"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);

    let out = balance(&["oracle", "spread", "--weights", "0.5,1", "--halfwidth", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn probe_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = balance(&[
        "probe",
        "cosh",
        "--n",
        "16",
        "--samples",
        "200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["report"];
    assert_eq!(
        r["q"].as_f64().unwrap(),
        r["lambda"].as_f64().unwrap().powi(2) * r["phi"].as_f64().unwrap()
    );
    assert!(dir.path().join("probe_cosh.json").exists());

    let out = balance(&[
        "probe",
        "drift",
        "--n",
        "64",
        "--samples",
        "500",
        "--state",
        "uniform",
    ]);
    assert!(out.status.success(), "{out:?}");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["delta_phi"]["mean"].as_f64().unwrap() < 0.0);

    let out = balance(&["probe", "drift", "--n", "64", "--phi-fraction", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"], "precondition");

    let out = balance(&["probe", "majority", "--n", "8", "--T", "100"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_defaults_to_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let out = balance(&[
        "compare",
        "--n",
        "8",
        "--trials",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(data_lines(&dir.path().join("compare.csv")).len(), 6);
}
