//! Tidy CSV emission for the figure families. Each file is plain long-format
//! data (one observation per row) so any plotting stack can consume it, and
//! emission is deterministic: the same inputs always produce the same bytes.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ttc_core::flops::ExchangeTable;
use ttc_core::results::ResultTable;
use ttc_core::revisions::allocate;
use ttc_core::search::{SettingFamily, SweepSetting};
use ttc_core::strategy::{CurvePoint, DifficultyAssessment};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Everything the figure data depends on, already computed by the pipeline.
pub struct PlotInputs<'a> {
    pub table: &'a ResultTable,
    pub settings: &'a [SweepSetting],
    pub oracle: &'a [DifficultyAssessment],
    pub predicted: &'a [DifficultyAssessment],
    pub oracle_curve: &'a [CurvePoint],
    pub predicted_curve: &'a [CurvePoint],
    /// Assessments of the configured difficulty mode; bins for the revision
    /// ratio figure.
    pub ratio_bins: &'a [DifficultyAssessment],
    pub exchange: Option<&'a ExchangeTable>,
}

struct CsvFile {
    path: PathBuf,
    buffer: Vec<u8>,
}

impl CsvFile {
    fn new(dir: &Path, name: &str, header: &str) -> Self {
        let mut buffer = Vec::new();
        writeln!(buffer, "{header}").expect("in-memory write");
        CsvFile {
            path: dir.join(name),
            buffer,
        }
    }

    fn row(&mut self, fields: &[String]) {
        writeln!(self.buffer, "{}", fields.join(",")).expect("in-memory write");
    }

    fn finish(self) -> Result<(), PlotError> {
        std::fs::write(&self.path, &self.buffer).map_err(|source| PlotError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

fn fmt(value: f64) -> String {
    format!("{value}")
}

fn bin_members(assessments: &[DifficultyAssessment]) -> BTreeMap<u8, Vec<&str>> {
    let mut bins: BTreeMap<u8, Vec<&str>> = BTreeMap::new();
    for a in assessments {
        bins.entry(a.bin).or_default().push(&a.question_id);
    }
    bins
}

/// Write the five figure data files under `dir` and return
/// `(label, file name)` pairs for the ones actually produced.
pub fn emit_plot_data(dir: &Path, inputs: &PlotInputs) -> Result<Vec<(String, String)>, PlotError> {
    let budgets = inputs.table.budgets();
    let mut written = Vec::new();

    // Accuracy against budget, pooled over all questions and seeds.
    let mut file = CsvFile::new(dir, "search_vs_budget.csv", "strategy,budget,accuracy");
    for setting in inputs.settings {
        for &budget in &budgets {
            if let Some(accuracy) = inputs.table.accuracy_for(&setting.name, budget) {
                file.row(&[setting.name.clone(), budget.to_string(), fmt(accuracy)]);
            }
        }
    }
    file.finish()?;
    written.push(("plot_search_vs_budget".to_string(), "search_vs_budget.csv".to_string()));

    // The same comparison split by difficulty bin, for both assessment modes.
    let mut file = CsvFile::new(
        dir,
        "bins_vs_budget.csv",
        "mode,bin,strategy,budget,accuracy",
    );
    for (mode, assessments) in [("oracle", inputs.oracle), ("predicted", inputs.predicted)] {
        for (bin, ids) in bin_members(assessments) {
            for setting in inputs.settings {
                for &budget in &budgets {
                    let accuracy = inputs.table.accuracy_where(|r| {
                        r.strategy == setting.name
                            && r.budget == budget
                            && ids.iter().any(|id| *id == r.question_id)
                    });
                    if let Some(accuracy) = accuracy {
                        file.row(&[
                            mode.to_string(),
                            bin.to_string(),
                            setting.name.clone(),
                            budget.to_string(),
                            fmt(accuracy),
                        ]);
                    }
                }
            }
        }
    }
    file.finish()?;
    written.push(("plot_bins_vs_budget".to_string(), "bins_vs_budget.csv".to_string()));

    // Sequential:parallel allocation sweep, by difficulty bin. The scalar
    // `ratio` column is chain_length / n_chains for a log-scale x axis.
    let mut file = CsvFile::new(
        dir,
        "ratio_sweep.csv",
        "budget,chain_length,n_chains,ratio,bin,accuracy",
    );
    let ratio_bins = bin_members(inputs.ratio_bins);
    for &budget in &budgets {
        let mut mixes: Vec<(u64, u64, &SweepSetting)> = Vec::new();
        for setting in inputs.settings {
            if let SettingFamily::RevisionMix { ratio } = &setting.family {
                if let Ok(plan) = allocate(budget, ratio) {
                    mixes.push((plan.chain_length, plan.n_chains, setting));
                }
            }
        }
        mixes.sort_by_key(|(chain_length, ..)| *chain_length);
        for (chain_length, n_chains, setting) in mixes {
            for (bin, ids) in &ratio_bins {
                let accuracy = inputs.table.accuracy_where(|r| {
                    r.strategy == setting.name
                        && r.budget == budget
                        && ids.iter().any(|id| *id == r.question_id)
                });
                if let Some(accuracy) = accuracy {
                    file.row(&[
                        budget.to_string(),
                        chain_length.to_string(),
                        n_chains.to_string(),
                        fmt(chain_length as f64 / n_chains as f64),
                        bin.to_string(),
                        fmt(accuracy),
                    ]);
                }
            }
        }
    }
    file.finish()?;
    written.push(("plot_ratio_sweep".to_string(), "ratio_sweep.csv".to_string()));

    // Compute-optimal curves against every fixed strategy, pooled.
    let mut file = CsvFile::new(dir, "compute_optimal.csv", "series,budget,accuracy");
    for (series, curve) in [
        ("compute_optimal_oracle", inputs.oracle_curve),
        ("compute_optimal_predicted", inputs.predicted_curve),
    ] {
        for point in curve {
            file.row(&[
                series.to_string(),
                point.budget.to_string(),
                fmt(point.accuracy),
            ]);
        }
    }
    for setting in inputs.settings {
        for &budget in &budgets {
            if let Some(accuracy) = inputs.table.accuracy_for(&setting.name, budget) {
                file.row(&[setting.name.clone(), budget.to_string(), fmt(accuracy)]);
            }
        }
    }
    file.finish()?;
    written.push(("plot_compute_optimal".to_string(), "compute_optimal.csv".to_string()));

    // Pretraining-vs-inference exchange verdicts, when a flops section exists.
    if let Some(exchange) = inputs.exchange {
        let mut file = CsvFile::new(
            dir,
            "flops_exchange.csv",
            "bin,r,m,matched_budget,small_model_accuracy,reference_accuracy,verdict",
        );
        for row in &exchange.rows {
            file.row(&[
                row.bin.to_string(),
                fmt(row.r),
                fmt(row.m),
                fmt(row.matched_budget),
                fmt(row.small_model_accuracy),
                fmt(row.reference_accuracy),
                row.verdict.to_string(),
            ]);
        }
        file.finish()?;
        written.push(("plot_flops_exchange".to_string(), "flops_exchange.csv".to_string()));
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ttc_core::results::TrialRecord;
    use ttc_core::search::default_search_sweep;
    use ttc_core::strategy::DifficultyMode;

    fn record(question_id: &str, strategy: &str, budget: u64, correct: bool) -> TrialRecord {
        TrialRecord {
            question_id: question_id.to_string(),
            strategy: strategy.to_string(),
            budget,
            nominal_cost: budget,
            actual_cost: budget,
            correct,
            seed: 0,
        }
    }

    fn assessment(question_id: &str, bin: u8) -> DifficultyAssessment {
        DifficultyAssessment {
            question_id: question_id.to_string(),
            estimate: 0.5,
            bin,
            mode: DifficultyMode::Oracle,
        }
    }

    #[test]
    fn emits_deterministic_headers_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let table = ResultTable::from_records(vec![
            record("q1", "best_of_n_weighted", 4, true),
            record("q2", "best_of_n_weighted", 4, false),
            record("q1", "beam_sqrt", 4, true),
            record("q2", "beam_sqrt", 4, true),
        ]);
        let settings: Vec<SweepSetting> = default_search_sweep()
            .into_iter()
            .take(2)
            .collect();
        let assessments = vec![assessment("q1", 1), assessment("q2", 5)];
        let curve = vec![CurvePoint {
            budget: 4,
            accuracy: 1.0,
        }];
        let inputs = PlotInputs {
            table: &table,
            settings: &settings,
            oracle: &assessments,
            predicted: &assessments,
            oracle_curve: &curve,
            predicted_curve: &curve,
            ratio_bins: &assessments,
            exchange: None,
        };
        let written = emit_plot_data(dir.path(), &inputs).unwrap();
        assert_eq!(written.len(), 4, "no flops file without an exchange table");

        let search = std::fs::read_to_string(dir.path().join("search_vs_budget.csv")).unwrap();
        assert_eq!(
            search,
            "strategy,budget,accuracy\nbest_of_n_weighted,4,0.5\nbeam_sqrt,4,1\n"
        );
        let bins = std::fs::read_to_string(dir.path().join("bins_vs_budget.csv")).unwrap();
        assert!(bins.starts_with("mode,bin,strategy,budget,accuracy\n"));
        assert!(bins.contains("oracle,1,best_of_n_weighted,4,1\n"));
        assert!(bins.contains("predicted,5,beam_sqrt,4,1\n"));
        let optimal = std::fs::read_to_string(dir.path().join("compute_optimal.csv")).unwrap();
        assert!(optimal.contains("compute_optimal_oracle,4,1\n"));
        assert!(optimal.contains("compute_optimal_predicted,4,1\n"));
        assert!(optimal.contains("best_of_n_weighted,4,0.5\n"));

        // Re-emission is byte-identical.
        let before: Vec<Vec<u8>> = written
            .iter()
            .map(|(_, name)| std::fs::read(dir.path().join(name)).unwrap())
            .collect();
        emit_plot_data(dir.path(), &inputs).unwrap();
        for ((_, name), bytes) in written.iter().zip(before) {
            assert_eq!(std::fs::read(dir.path().join(name)).unwrap(), bytes);
        }
    }

    #[test]
    fn ratio_rows_cover_each_bin_and_allocation() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = Vec::new();
        for q in ["q1", "q2"] {
            for name in ["rev_l1_c4", "rev_l2_c2", "rev_l4_c1"] {
                records.push(record(q, name, 4, q == "q1"));
            }
        }
        let table = ResultTable::from_records(records);
        let settings: Vec<SweepSetting> = ttc_core::search::revision_ratio_sweep(4);
        let assessments = vec![assessment("q1", 1), assessment("q2", 5)];
        let inputs = PlotInputs {
            table: &table,
            settings: &settings,
            oracle: &assessments,
            predicted: &assessments,
            oracle_curve: &[],
            predicted_curve: &[],
            ratio_bins: &assessments,
            exchange: None,
        };
        emit_plot_data(dir.path(), &inputs).unwrap();
        let text = std::fs::read_to_string(dir.path().join("ratio_sweep.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "budget,chain_length,n_chains,ratio,bin,accuracy");
        // 3 allocations x 2 bins.
        assert_eq!(lines.len(), 1 + 6);
        assert!(text.contains("4,1,4,0.25,1,1\n"), "parallel end present: {text}");
        assert!(text.contains("4,4,1,4,5,0\n"), "sequential end present: {text}");
        // Rows are ordered parallel-to-sequential within a budget.
        let chain_lengths: Vec<&str> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(1).unwrap())
            .collect();
        assert_eq!(chain_lengths, vec!["1", "1", "2", "2", "4", "4"]);
    }
}
