//! End-to-end tests of the `ttc` binary: every verb, the artifact layout,
//! and the exit-code contract (0 success, 2 config error, 3 runtime error).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ttc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttc"))
        .args(args)
        .output()
        .expect("run ttc")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// A small, fast synthetic experiment writing into `dir`.
fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let out = dir.join("out");
    let text = format!(
        r#"
[dataset.synthetic]
count = 10
depth = 2
wrong_answer_count = 9
p_step_min = 0.25
p_step_max = 0.9

[sweep]
strategies = ["best_of_n_weighted", "beam_sqrt"]
budgets = [4, 16]
seeds = [0]

[difficulty]
samples = 16

[output]
directory = "{}"
{extra}"#,
        out.display()
    );
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).expect("write config");
    path
}

#[test]
fn validate_config_accepts_a_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["validate-config", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("config OK"), "{text}");
    assert!(text.contains("2 strategies x 2 budgets x 1 seeds"), "{text}");
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("budgets = [4, 16]", "budgets = []");
    std::fs::write(&config, text).unwrap();
    let output = ttc(&["validate-config", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("budget"), "{}", stderr(&output));
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "\n[sweep2]\nx = 1\n");
    let output = ttc(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn missing_config_file_exits_two() {
    let output = ttc(&["run", "--config", "/nonexistent/experiment.toml"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn unknown_verb_exits_two() {
    let output = ttc(&["frobnicate"]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn missing_dataset_file_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config).unwrap().replace(
        "[dataset.synthetic]\ncount = 10\ndepth = 2\nwrong_answer_count = 9\np_step_min = 0.25\np_step_max = 0.9",
        "[dataset]\npath = \"/nonexistent/questions.jsonl\"",
    );
    std::fs::write(&config, text).unwrap();
    let output = ttc(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 3, "{}", stderr(&output));
}

#[test]
fn run_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("run complete"), "{}", stdout(&output));

    let out = dir.path().join("out");
    for artifact in [
        "ledger.jsonl",
        "results.csv",
        "difficulty.csv",
        "policy_oracle.json",
        "policy_predicted.json",
        "summary.json",
        "plots/search_vs_budget.csv",
        "plots/bins_vs_budget.csv",
        "plots/ratio_sweep.csv",
        "plots/compute_optimal.csv",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["question_count"], 10);
    assert_eq!(summary["seeds"], serde_json::json!([0]));
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn sweep_then_run_reuses_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("sweep complete"));
    assert!(stdout(&output).contains("40 cells (40 run, 0 from ledger)"));

    let output = ttc(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(
        stdout(&output).contains("(0 run, 40 from ledger)"),
        "{}",
        stdout(&output)
    );
}

#[test]
fn difficulty_reports_bins_for_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["difficulty", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("oracle: bin 1: 2, bin 2: 2, bin 3: 2, bin 4: 2, bin 5: 2"), "{text}");
    assert!(text.contains("predicted:"), "{text}");
    assert!(dir.path().join("out/difficulty.csv").exists());
}

#[test]
fn policy_prints_selections_per_bin_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["policy", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("oracle bin 1 budget 4:"), "{text}");
    assert!(text.contains("predicted bin 5 budget 16:"), "{text}");
    let policy: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/policy_oracle.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(policy.as_array().unwrap().len(), 5 * 2);
}

#[test]
fn flops_requires_its_config_section() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["flops", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("[flops]"), "{}", stderr(&output));
}

#[test]
fn flops_reports_verdicts_per_bin_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[flops]
n_model = 1e9
d_pretrain = 1e12
reference_accuracies = [0.95, 0.9, 0.8, 0.6, 0.4]
"#,
    );
    let output = ttc(&["flops", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("bin 1 R=0.16"), "{text}");
    assert!(text.contains("bin 5 R=22"), "{text}");
    assert!(text.contains("preferred"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("bin ")).count(), 15);
}

#[test]
fn emit_plots_lists_every_figure_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let output = ttc(&["emit-plots", "--config", config.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    for name in [
        "search_vs_budget.csv",
        "bins_vs_budget.csv",
        "ratio_sweep.csv",
        "compute_optimal.csv",
    ] {
        assert!(text.contains(name), "{text}");
        assert!(dir.path().join("out/plots").join(name).exists());
    }
}
