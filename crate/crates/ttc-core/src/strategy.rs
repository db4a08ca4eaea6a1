//! Difficulty estimation, quintile binning, and compute-optimal strategy
//! selection.
//!
//! Difficulty can be assessed from ground truth (oracle pass@1) or purely
//! from verifier scores (model-predicted). Questions are ranked into five
//! bins, and per (bin, budget) the best-performing strategy is chosen from a
//! result table, with two-fold cross-validation supplying an unbiased
//! held-out accuracy for the choice.
//!
//! Assessment sampling costs `n_samples` generations per question; callers
//! account for it separately from strategy budgets (strategy comparisons
//! assume difficulty is already known).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::proposer::{ProposeError, Proposer};
use crate::results::ResultTable;
use crate::rng::StreamScope;
use crate::types::{Aggregation, Question};
use crate::verifier::{aggregate_steps, EmptyScores, ScoreError, Verifier};

/// Number of difficulty bins.
pub const DIFFICULTY_BINS: u8 = 5;

/// Sample count for full-fidelity difficulty estimation.
pub const FULL_FIDELITY_DIFFICULTY_SAMPLES: u64 = 2048;

/// Desk-scale sample count that keeps experiment runs fast.
pub const DESK_DIFFICULTY_SAMPLES: u64 = 64;

/// How a difficulty estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultyMode {
    /// Fraction of samples matching the ground-truth answer (pass@1).
    Oracle,
    /// Mean aggregated verifier score; never consults ground truth.
    Predicted,
}

/// A question's difficulty estimate and its assigned quintile bin.
/// Bin 1 is easiest (highest estimate), bin 5 hardest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DifficultyAssessment {
    pub question_id: String,
    pub estimate: f64,
    pub bin: u8,
    pub mode: DifficultyMode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssessError {
    #[error(transparent)]
    Propose(#[from] ProposeError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    EmptyScores(#[from] EmptyScores),
}

/// Pass@1 estimated by sampling: the fraction of `n_samples` full solutions
/// whose final answer matches ground truth. Sample `i` draws from
/// `scope`'s `sample.i` stream; give each question its own scope.
pub fn estimate_difficulty_oracle(
    question: &Question,
    proposer: &dyn Proposer,
    n_samples: u64,
    scope: &StreamScope,
) -> Result<f64, ProposeError> {
    let mut hits = 0u64;
    for i in 0..n_samples {
        let mut stream = scope.indexed("sample", i).stream();
        let solution = proposer.sample_full(question, &mut stream)?;
        hits += u64::from(solution.is_correct(question.ground_truth));
    }
    Ok(hits as f64 / n_samples as f64)
}

/// Difficulty proxy without ground truth: the mean aggregated verifier score
/// over `n_samples` full solutions. Only sampled text and verifier scores are
/// read — correctness is never checked, so this path works when answers are
/// unknown.
pub fn estimate_difficulty_predicted(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n_samples: u64,
    aggregation: Aggregation,
    scope: &StreamScope,
) -> Result<f64, AssessError> {
    let mut total = 0.0;
    for i in 0..n_samples {
        let mut stream = scope.indexed("sample", i).stream();
        let solution = proposer.sample_full(question, &mut stream)?;
        let scores = verifier.score_solution(question, &solution)?;
        total += aggregate_steps(&scores, aggregation)?;
    }
    Ok(total / n_samples as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("quintile binning needs at least 5 questions, got {found}")]
pub struct TooFewQuestions {
    pub found: usize,
}

/// Rank estimates into five bins: bin 1 takes the highest estimates
/// (easiest), bin 5 the lowest. Bin sizes are `n/5` rounded, differing by at
/// most one, with earlier bins taking the remainder; ties in the estimate
/// break by question id so the partition is deterministic.
pub fn bin_quintiles(
    estimates: &[(String, f64)],
) -> Result<BTreeMap<String, u8>, TooFewQuestions> {
    let n = estimates.len();
    if n < DIFFICULTY_BINS as usize {
        return Err(TooFewQuestions { found: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (id_a, est_a) = &estimates[a];
        let (id_b, est_b) = &estimates[b];
        est_b
            .partial_cmp(est_a)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| id_a.cmp(id_b))
    });
    let base = n / DIFFICULTY_BINS as usize;
    let remainder = n % DIFFICULTY_BINS as usize;
    let mut bins = BTreeMap::new();
    let mut cursor = 0usize;
    for bin in 1..=DIFFICULTY_BINS {
        let size = base + usize::from((bin as usize) <= remainder);
        for &index in &order[cursor..cursor + size] {
            bins.insert(estimates[index].0.clone(), bin);
        }
        cursor += size;
    }
    Ok(bins)
}

/// Estimate difficulty for every question and bin the results. The two modes
/// share this binning path exactly; they differ only in how the per-question
/// estimate is produced.
pub fn assess_questions(
    questions: &[Question],
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    mode: DifficultyMode,
    n_samples: u64,
    aggregation: Aggregation,
    scope: &StreamScope,
) -> Result<Vec<DifficultyAssessment>, AssessmentError> {
    let mut estimates = Vec::with_capacity(questions.len());
    for question in questions {
        let question_scope = scope.child(&question.id);
        let estimate = match mode {
            DifficultyMode::Oracle => {
                estimate_difficulty_oracle(question, proposer, n_samples, &question_scope)
                    .map_err(AssessError::from)?
            }
            DifficultyMode::Predicted => estimate_difficulty_predicted(
                question,
                proposer,
                verifier,
                n_samples,
                aggregation,
                &question_scope,
            )?,
        };
        estimates.push((question.id.clone(), estimate));
    }
    let bins = bin_quintiles(&estimates)?;
    Ok(estimates
        .into_iter()
        .map(|(question_id, estimate)| {
            let bin = bins[&question_id];
            DifficultyAssessment {
                question_id,
                estimate,
                bin,
                mode,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssessmentError {
    #[error(transparent)]
    Assess(#[from] AssessError),
    #[error(transparent)]
    TooFew(#[from] TooFewQuestions),
}

/// The strategy chosen for one (bin, budget) cell, with the accuracy measured
/// on folds that did not drive the choice.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolicyEntry {
    pub bin: u8,
    pub budget: u64,
    pub strategy: String,
    pub holdout_accuracy: f64,
    /// How the entry was derived (cross-validation seed and per-fold picks).
    #[serde(skip)]
    pub provenance: String,
}

/// Per-(bin, budget) strategy choices.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct ComputeOptimalPolicy {
    pub entries: Vec<PolicyEntry>,
}

impl ComputeOptimalPolicy {
    pub fn lookup(&self, bin: u8, budget: u64) -> Option<&PolicyEntry> {
        self.entries
            .iter()
            .find(|e| e.bin == bin && e.budget == budget)
    }

    pub fn budgets(&self) -> Vec<u64> {
        let mut budgets: Vec<u64> = self.entries.iter().map(|e| e.budget).collect();
        budgets.sort_unstable();
        budgets.dedup();
        budgets
    }
}

/// A (question, strategy, budget) cell with no trials in the result table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingCell {
    pub question_id: String,
    pub strategy: String,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectionError {
    #[error("result table is missing {} cells, first: {:?}", missing.len(), missing.first())]
    IncompleteResults { missing: Vec<MissingCell> },
    #[error("no strategies in the result table")]
    NoStrategies,
}

/// Pick the best strategy per (bin, budget) and measure it honestly.
///
/// Within each bin the questions are split into two seeded halves. Each
/// fold's argmax strategy is evaluated on the other fold, and the reported
/// `holdout_accuracy` is the unweighted mean of the two held-out accuracies.
/// The entry's chosen strategy is the argmax over the whole bin, so its
/// in-bin accuracy dominates every fixed strategy by construction; argmax
/// ties break to the lexicographically smallest strategy name.
pub fn select_compute_optimal(
    results: &ResultTable,
    assessments: &[DifficultyAssessment],
    budgets: &[u64],
    two_fold_seed: u64,
) -> Result<ComputeOptimalPolicy, SelectionError> {
    let strategies = results.strategies();
    if strategies.is_empty() {
        return Err(SelectionError::NoStrategies);
    }
    verify_complete(results, assessments, &strategies, budgets)?;

    let mut bins: BTreeMap<u8, Vec<&str>> = BTreeMap::new();
    for assessment in assessments {
        bins.entry(assessment.bin)
            .or_default()
            .push(&assessment.question_id);
    }

    let mut entries = Vec::new();
    for (&bin, ids) in &bins {
        let mut ids: Vec<&str> = ids.clone();
        ids.sort_unstable();
        let mut shuffled = ids.clone();
        StreamScope::root(two_fold_seed)
            .child("cv-fold")
            .indexed("bin", u64::from(bin))
            .stream()
            .shuffle(&mut shuffled);
        let (fold_a, fold_b) = shuffled.split_at(shuffled.len() / 2);
        let fold_a: BTreeSet<&str> = fold_a.iter().copied().collect();
        let fold_b: BTreeSet<&str> = fold_b.iter().copied().collect();
        let whole: BTreeSet<&str> = ids.iter().copied().collect();

        for &budget in budgets {
            let pick_a = argmax_strategy(results, &strategies, &fold_a, budget);
            let pick_b = argmax_strategy(results, &strategies, &fold_b, budget);
            let held_on_b = fold_accuracy(results, &fold_b, &pick_a, budget);
            let held_on_a = fold_accuracy(results, &fold_a, &pick_b, budget);
            let chosen = argmax_strategy(results, &strategies, &whole, budget);
            entries.push(PolicyEntry {
                bin,
                budget,
                strategy: chosen,
                holdout_accuracy: (held_on_a + held_on_b) / 2.0,
                provenance: format!("cv2-seed{two_fold_seed}:a={pick_a},b={pick_b}"),
            });
        }
    }
    Ok(ComputeOptimalPolicy { entries })
}

fn verify_complete(
    results: &ResultTable,
    assessments: &[DifficultyAssessment],
    strategies: &[String],
    budgets: &[u64],
) -> Result<(), SelectionError> {
    let mut present: BTreeSet<(&str, &str, u64)> = BTreeSet::new();
    for record in results.records() {
        present.insert((&record.question_id, &record.strategy, record.budget));
    }
    let mut missing = Vec::new();
    for assessment in assessments {
        for strategy in strategies {
            for &budget in budgets {
                if !present.contains(&(assessment.question_id.as_str(), strategy.as_str(), budget))
                {
                    missing.push(MissingCell {
                        question_id: assessment.question_id.clone(),
                        strategy: strategy.clone(),
                        budget,
                    });
                }
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(SelectionError::IncompleteResults { missing })
    }
}

/// Accuracy of `strategy` at `budget` over the fold's questions; an empty
/// fold reads as zero.
fn fold_accuracy(
    results: &ResultTable,
    fold: &BTreeSet<&str>,
    strategy: &str,
    budget: u64,
) -> f64 {
    results
        .accuracy_where(|r| {
            r.strategy == strategy && r.budget == budget && fold.contains(r.question_id.as_str())
        })
        .unwrap_or(0.0)
}

/// Highest-accuracy strategy on the fold; `strategies` arrives sorted, and
/// strict improvement is required to replace, so ties keep the
/// lexicographically smallest name.
fn argmax_strategy(
    results: &ResultTable,
    strategies: &[String],
    fold: &BTreeSet<&str>,
    budget: u64,
) -> String {
    let mut best_name = strategies[0].clone();
    let mut best_accuracy = f64::NEG_INFINITY;
    for strategy in strategies {
        let accuracy = fold_accuracy(results, fold, strategy, budget);
        if accuracy > best_accuracy {
            best_accuracy = accuracy;
            best_name = strategy.clone();
        }
    }
    best_name
}

/// One point of an accuracy-versus-budget curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurvePoint {
    pub budget: u64,
    pub accuracy: f64,
}

/// Accuracy over all questions when each follows its bin's chosen strategy.
/// Bins with no assessed questions contribute nothing; budgets with no
/// matching trials are omitted.
pub fn compute_optimal_curve(
    policy: &ComputeOptimalPolicy,
    results: &ResultTable,
    assessments: &[DifficultyAssessment],
) -> Vec<CurvePoint> {
    let mut bins: BTreeMap<u8, BTreeSet<&str>> = BTreeMap::new();
    for assessment in assessments {
        bins.entry(assessment.bin)
            .or_default()
            .insert(&assessment.question_id);
    }
    let mut curve = Vec::new();
    for budget in policy.budgets() {
        let mut hits = 0usize;
        let mut total = 0usize;
        for entry in policy.entries.iter().filter(|e| e.budget == budget) {
            let Some(questions) = bins.get(&entry.bin) else {
                continue;
            };
            for record in results.records() {
                if record.budget == budget
                    && record.strategy == entry.strategy
                    && questions.contains(record.question_id.as_str())
                {
                    total += 1;
                    hits += usize::from(record.correct);
                }
            }
        }
        if total > 0 {
            curve.push(CurvePoint {
                budget,
                accuracy: hits as f64 / total as f64,
            });
        }
    }
    curve
}
