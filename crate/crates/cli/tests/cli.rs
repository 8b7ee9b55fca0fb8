//! End-to-end CLI checks: artifact schemas, byte determinism, exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_approval"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("approval-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Small protocol: two trials of up to 6 samples.
fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{
  "horizon_t": 1,
  "n_max": 6,
  "theta_baseline": 0.5,
  "kappa": 0.3,
  "cost_fixed": 0.4,
  "cost_per_sample": 0.1,
  "rho_agent": 8.0,
  "rho_social": 60.0,
  "prior_alpha0": 1.0,
  "prior_beta0": 1.0,
  "epsilon_max": 0.9,
  "principal_belief_q": [ { "alpha0": 1.0, "beta0": 1.0, "weight": 1.0 } ],
  "test_process_kind": "exponential"
}
"#,
    )
    .unwrap();
    path
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("missing {}: {e}", path.display()))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn solve_writes_summary_policy_and_manifest() {
    let dir = tmp_dir("solve");
    let cfg = write_small_config(&dir);
    let out = dir.join("out");
    let result = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.25",
        "--out",
        out.to_str().unwrap(),
        "--dump-policy",
    ]);
    assert!(result.status.success(), "{result:?}");

    let summary = json(&out.join("solve_summary.json"));
    assert_eq!(summary["epsilon"], 0.25);
    assert!(summary["root_value"].as_f64().unwrap() >= 0.0);
    assert!(summary["first_action"].as_u64().unwrap() <= 6);

    let policy = read(&out.join("policy.csv"));
    assert!(policy.starts_with("layer,total_n,total_x,action,v0,a_cost,p_approve,p_optout\n"));
    // Decision layers only: the root plus layer 1's Σ_{N=1..6}(N+1) states.
    assert_eq!(policy.lines().count() - 1, 1 + 27);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["mdp_solve_count"], 1);
    assert!(manifest["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn optimize_artifacts_are_deterministic() {
    let dir = tmp_dir("optimize");
    let cfg = write_small_config(&dir);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let result = run(&["optimize", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(result.status.success(), "{result:?}");
    }
    let vertices = read(&out_a.join("vertices.csv"));
    assert!(vertices.starts_with(
        "epsilon,social_utility,agent_value,policy_id,first_action,p_approve,p_optout\n"
    ));
    assert_eq!(vertices, read(&out_b.join("vertices.csv")));
    assert_eq!(
        read(&out_a.join("solution.json")),
        read(&out_b.join("solution.json"))
    );

    let solution = json(&out_a.join("solution.json"));
    let eps_star = solution["eps_star"].as_f64().unwrap();
    assert!((0.0..=0.9).contains(&eps_star));
    assert!(solution["interval_count"].as_u64().unwrap() >= 1);
    assert_eq!(solution["theory_status"], "proved");

    // The mixture process carries a conjecture-backed flag instead.
    let out_mix = dir.join("mix");
    let result = run(&[
        "optimize",
        cfg.to_str().unwrap(),
        "--set",
        "test_process_kind=uniform-mixture",
        "--out",
        out_mix.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let mix_solution = json(&out_mix.join("solution.json"));
    assert_eq!(
        mix_solution["theory_status"],
        "conjecture-backed (mixture test process)"
    );
}

#[test]
fn simulate_is_byte_deterministic_and_honors_theta() {
    let dir = tmp_dir("simulate");
    let cfg = write_small_config(&dir);
    let common = [
        "--rollouts",
        "2000",
        "--seed",
        "42",
        "--resamples",
        "200",
    ];
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let mut args = vec![
            "simulate",
            cfg.to_str().unwrap(),
            "--epsilon",
            "0.2",
            "--theta-star",
            "0.65",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(&common);
        let result = run(&args);
        assert!(result.status.success(), "{result:?}");
    }
    let csv_a = read(&out_a.join("simulate_summary.csv"));
    assert_eq!(csv_a, read(&out_b.join("simulate_summary.csv")));
    assert!(csv_a.starts_with("metric,value,ci_lo,ci_hi\n"));

    // θ* = 0: no approvals, zero social utility.
    let out_zero = dir.join("zero");
    let mut args = vec![
        "simulate",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.2",
        "--theta-star",
        "0.0",
        "--out",
        out_zero.to_str().unwrap(),
    ];
    args.extend_from_slice(&common);
    assert!(run(&args).status.success());
    let csv = read(&out_zero.join("simulate_summary.csv"));
    let approvals = csv
        .lines()
        .find(|l| l.starts_with("approvals,"))
        .unwrap();
    assert_eq!(approvals, "approvals,0,,");
    assert!(csv.contains("\nsocial_utility,0,0,0\n"));
}

#[test]
fn use_optimal_matches_separate_optimize() {
    let dir = tmp_dir("useopt");
    let cfg = write_small_config(&dir);
    let opt_out = dir.join("opt");
    assert!(run(&["optimize", cfg.to_str().unwrap(), "--out", opt_out.to_str().unwrap()])
        .status
        .success());
    let eps_star = json(&opt_out.join("solution.json"))["eps_star"]
        .as_f64()
        .unwrap();

    let sim_out = dir.join("sim");
    let result = run(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--use-optimal",
        "--theta-star",
        "0.6",
        "--rollouts",
        "500",
        "--seed",
        "7",
        "--out",
        sim_out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let csv = read(&sim_out.join("simulate_summary.csv"));
    let eps_line = csv.lines().find(|l| l.starts_with("epsilon,")).unwrap();
    let eps_value: f64 = eps_line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((eps_value - eps_star).abs() < 1e-12);
}

#[test]
fn sweep_single_value_agrees_with_optimize() {
    let dir = tmp_dir("sweep");
    let cfg = write_small_config(&dir);
    let opt_out = dir.join("opt");
    assert!(run(&["optimize", cfg.to_str().unwrap(), "--out", opt_out.to_str().unwrap()])
        .status
        .success());
    let solution = json(&opt_out.join("solution.json"));

    let sweep_out = dir.join("sweep");
    let result = run(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "rho_social",
        "--values",
        "60",
        "--rollouts",
        "500",
        "--seed",
        "7",
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let csv = read(&sweep_out.join("sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param,value,eps_star,interval_count,u_star,seq_social_mc,seq_social_lo,seq_social_hi,\
         baseline_nosub_social_mc,baseline_eps_star,baseline_opt_social_mc,\
         gain_vs_unsubsidized_pct,gain_vs_subsidized_pct"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "rho_social");
    let eps_star: f64 = row[2].parse().unwrap();
    assert!((eps_star - solution["eps_star"].as_f64().unwrap()).abs() < 1e-12);
    let intervals: u64 = row[3].parse().unwrap();
    assert_eq!(intervals, solution["interval_count"].as_u64().unwrap());
}

#[test]
fn region_table_has_both_processes() {
    let dir = tmp_dir("region");
    let cfg = write_small_config(&dir);
    let out = dir.join("out");
    let result = run(&[
        "region",
        cfg.to_str().unwrap(),
        "--alpha-max",
        "10",
        "--beta-max",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let csv = read(&out.join("region.csv"));
    assert!(csv.starts_with("alpha,beta,reject_exponential,reject_mixture\n"));
    assert_eq!(csv.lines().count() - 1, 11 * 11);
    assert!(csv.lines().skip(1).all(|l| {
        let cells: Vec<&str> = l.split(',').collect();
        matches!(cells[2], "0" | "1") && matches!(cells[3], "0" | "1")
    }));
}

#[test]
fn overrides_change_results_and_bad_ones_fail() {
    let dir = tmp_dir("override");
    let cfg = write_small_config(&dir);
    let out_base = dir.join("base");
    let out_rich = dir.join("rich");
    assert!(run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out_base.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--set",
        "rho_agent=100",
        "--out",
        out_rich.to_str().unwrap(),
    ])
    .status
    .success());
    let base = json(&out_base.join("solve_summary.json"));
    let rich = json(&out_rich.join("solve_summary.json"));
    assert!(rich["root_value"].as_f64().unwrap() > base["root_value"].as_f64().unwrap());

    let bad = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--set",
        "nonsense=3",
        "--out",
        dir.join("bad").to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes_for_config_and_resource_errors() {
    let dir = tmp_dir("exitcodes");
    let cfg = write_small_config(&dir);

    let missing = run(&[
        "solve",
        dir.join("nope.json").to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        dir.join("o1").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let invalid = dir.join("invalid.json");
    fs::write(&invalid, "{ not json").unwrap();
    let parse = run(&[
        "solve",
        invalid.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        dir.join("o2").to_str().unwrap(),
    ]);
    assert_eq!(parse.status.code(), Some(2));

    let out_of_range = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.95",
        "--out",
        dir.join("o3").to_str().unwrap(),
    ]);
    assert_eq!(out_of_range.status.code(), Some(2));

    let capped = run(&[
        "optimize",
        cfg.to_str().unwrap(),
        "--state-cap",
        "10",
        "--out",
        dir.join("o4").to_str().unwrap(),
    ]);
    assert_eq!(capped.status.code(), Some(3));
}
