//! Verifiers: per-step scoring, aggregation, weighted answer selection,
//! Monte-Carlo value labels, and the cross-entropy loss a trainer would use.
//!
//! The synthetic verifier scores a prefix by the true probability that
//! completing it yields a correct solution, plus configurable Gaussian noise
//! and bias. Noise is keyed by `(question, prefix text)`, so rescoring the
//! same prefix within a run is consistent — search sees a fixed (if
//! imperfect) value function rather than fresh noise per call.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::math;
use crate::proposer::{extend_prefix, ProposeError, Proposer};
use crate::rng::StreamScope;
use crate::types::{Aggregation, AnswerId, PartialSolution, Question, Solution, Step};

/// Whether a verifier scores every step or only the final answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierMode {
    /// One score per step: predicted reward-to-go from each prefix.
    Process,
    /// A single score for the terminal solution.
    Outcome,
}

/// One score in `[0, 1]` per scored step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepScores {
    pub values: Vec<f64>,
}

impl StepScores {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("question has no synthetic environment parameters")]
    MissingEnv,
    #[error("step {0} lacks the correctness latent the synthetic verifier reads")]
    MissingLatent(usize),
    #[error("outcome-mode verifier cannot score a non-terminal prefix")]
    OutcomeOnPrefix,
    #[error("backend failure: {0}")]
    Backend(String),
}

/// A scorer of solutions. Implementations are read-only after construction
/// and safe to share across workers.
pub trait Verifier: Sync {
    fn mode(&self) -> VerifierMode;

    /// Score a terminal solution: one value per step in process mode, a
    /// single value in outcome mode.
    fn score_solution(&self, question: &Question, solution: &Solution)
        -> Result<StepScores, ScoreError>;

    /// Score a (possibly non-terminal) prefix; process mode only.
    fn score_prefix(
        &self,
        question: &Question,
        prefix: &PartialSolution,
    ) -> Result<StepScores, ScoreError>;
}

/// Simulated verifier over the synthetic environment.
///
/// The true value of an on-track prefix with `t` of `T` steps is `p'^(T-t)`
/// (the probability the remaining steps all stay on track); off-track
/// prefixes are worth 0. The emitted score is
/// `clamp(true_value + bias + Normal(0, noise_sigma), 0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticVerifier {
    pub mode: VerifierMode,
    pub noise_sigma: f64,
    pub bias: f64,
    /// Seeds the noise; two verifiers with the same seed score identically.
    pub seed: u64,
}

impl SyntheticVerifier {
    /// A noise-free process verifier: scores are exact prefix values.
    pub fn exact(seed: u64) -> Self {
        SyntheticVerifier {
            mode: VerifierMode::Process,
            noise_sigma: 0.0,
            bias: 0.0,
            seed,
        }
    }

    /// The true value of the prefix `steps[..=index]`.
    fn true_value(&self, success_prob: f64, depth: u32, steps: &[Step], index: usize)
        -> Result<f64, ScoreError> {
        for (i, step) in steps[..=index].iter().enumerate() {
            match step.on_track {
                Some(true) => {}
                Some(false) => return Ok(0.0),
                None => return Err(ScoreError::MissingLatent(i)),
            }
        }
        let scored = (index + 1) as u32;
        let remaining = depth.saturating_sub(scored);
        Ok(math::powi(success_prob, remaining))
    }

    /// Deterministic per-prefix noise: keyed by the verifier seed, the
    /// question id, and a digest of the prefix text.
    fn noise(&self, question: &Question, steps: &[Step], index: usize) -> f64 {
        if self.noise_sigma == 0.0 {
            return 0.0;
        }
        let mut hasher = Sha256::new();
        hasher.update((question.id.len() as u64).to_le_bytes());
        hasher.update(question.id.as_bytes());
        for step in &steps[..=index] {
            hasher.update((step.text.len() as u64).to_le_bytes());
            hasher.update(step.text.as_bytes());
        }
        let digest = hasher.finalize();
        let mut label = String::with_capacity(64);
        for byte in digest {
            label.push_str(&format!("{byte:02x}"));
        }
        let mut stream = StreamScope::root(self.seed)
            .child("verifier-noise")
            .child(&label)
            .stream();
        self.noise_sigma * stream.standard_normal()
    }

    fn score_steps(
        &self,
        question: &Question,
        steps: &[Step],
        success_prob: Option<f64>,
        terminal: bool,
    ) -> Result<StepScores, ScoreError> {
        let env = question.env().ok_or(ScoreError::MissingEnv)?;
        let success_prob = success_prob.unwrap_or(env.p_step);
        if steps.is_empty() {
            return Ok(StepScores { values: Vec::new() });
        }
        let indices: Vec<usize> = match self.mode {
            VerifierMode::Process => (0..steps.len()).collect(),
            VerifierMode::Outcome => {
                if !terminal {
                    return Err(ScoreError::OutcomeOnPrefix);
                }
                alloc::vec![steps.len() - 1]
            }
        };
        let mut values = Vec::with_capacity(indices.len());
        for index in indices {
            let truth = self.true_value(success_prob, env.depth, steps, index)?;
            let noisy = truth + self.bias + self.noise(question, steps, index);
            values.push(math::clamp(noisy, 0.0, 1.0));
        }
        Ok(StepScores { values })
    }
}

impl Verifier for SyntheticVerifier {
    fn mode(&self) -> VerifierMode {
        self.mode
    }

    fn score_solution(
        &self,
        question: &Question,
        solution: &Solution,
    ) -> Result<StepScores, ScoreError> {
        self.score_steps(question, &solution.steps, solution.sample_success_prob, true)
    }

    fn score_prefix(
        &self,
        question: &Question,
        prefix: &PartialSolution,
    ) -> Result<StepScores, ScoreError> {
        self.score_steps(
            question,
            &prefix.steps,
            prefix.sample_success_prob,
            prefix.is_terminal(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot aggregate an empty score list")]
pub struct EmptyScores;

/// Collapse per-step scores into one solution-level score.
pub fn aggregate_steps(scores: &StepScores, rule: Aggregation) -> Result<f64, EmptyScores> {
    if scores.is_empty() {
        return Err(EmptyScores);
    }
    Ok(match rule {
        Aggregation::Last => *scores.values.last().expect("non-empty"),
        Aggregation::Min => scores.values.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Prod => scores.values.iter().product(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no candidate produced a parsable final answer")]
pub struct AllInvalid;

/// Outcome of weighted answer selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub answer: AnswerId,
    /// Index into the candidate list of the representative solution: the
    /// highest-scoring individual with the winning answer (earliest on ties).
    pub representative: usize,
    /// Total score marginalized over all candidates sharing the answer.
    pub total_score: f64,
}

/// Best-of-N weighted selection: sum scores across candidates sharing a final
/// answer and pick the answer with the greatest total.
///
/// Candidates without a parsable answer are skipped. Ties between answer
/// totals break to the lowest answer label.
pub fn best_of_n_weighted(candidates: &[(Solution, f64)]) -> Result<Selection, AllInvalid> {
    // (answer, total, best individual score, index of best individual)
    let mut totals: Vec<(AnswerId, f64, f64, usize)> = Vec::new();
    for (index, (solution, score)) in candidates.iter().enumerate() {
        let Some(answer) = solution.final_answer.answer() else {
            continue;
        };
        match totals.iter_mut().find(|(a, ..)| *a == answer) {
            Some(entry) => {
                entry.1 += *score;
                if *score > entry.2 {
                    entry.2 = *score;
                    entry.3 = index;
                }
            }
            None => totals.push((answer, *score, *score, index)),
        }
    }
    let mut winner: Option<(AnswerId, f64, f64, usize)> = None;
    for entry in totals {
        let better = match &winner {
            None => true,
            Some(best) => entry.1 > best.1 || (entry.1 == best.1 && entry.0 < best.0),
        };
        if better {
            winner = Some(entry);
        }
    }
    let (answer, total_score, _, representative) = winner.ok_or(AllInvalid)?;
    Ok(Selection {
        answer,
        representative,
        total_score,
    })
}

/// A Monte-Carlo soft value estimate for one step prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueLabel {
    pub step_index: usize,
    /// Successful completions divided by `rollout_count`.
    pub soft_value: f64,
    pub rollout_count: u32,
}

/// Estimate the value of every step prefix of `solution` by running
/// `rollouts_per_step` temperature-1 completions from each prefix and
/// recording the fraction that end in the correct answer.
pub fn estimate_step_values(
    question: &Question,
    solution: &Solution,
    rollouts_per_step: u32,
    proposer: &dyn Proposer,
    scope: &StreamScope,
) -> Result<Vec<ValueLabel>, ProposeError> {
    assert!(rollouts_per_step > 0, "rollout count must be positive");
    let mut labels = Vec::with_capacity(solution.steps.len());
    for step_index in 0..solution.steps.len() {
        let terminal = step_index + 1 == solution.steps.len();
        let prefix = PartialSolution {
            steps: solution.steps[..=step_index].to_vec(),
            final_answer: terminal.then_some(solution.final_answer),
            sample_success_prob: solution.sample_success_prob,
        };
        let mut successes = 0u32;
        for rollout in 0..rollouts_per_step {
            let mut stream = scope
                .indexed("value-step", step_index as u64)
                .indexed("rollout", rollout as u64)
                .stream();
            let (completed, _) =
                extend_prefix(proposer, question, prefix.clone(), 1.0, None, &mut stream)?;
            let correct = completed
                .into_solution()
                .map(|s| s.is_correct(question.ground_truth))
                .unwrap_or(false);
            if correct {
                successes += 1;
            }
        }
        labels.push(ValueLabel {
            step_index,
            soft_value: f64::from(successes) / f64::from(rollouts_per_step),
            rollout_count: rollouts_per_step,
        });
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("binary cross-entropy undefined for prediction {0}; must lie strictly inside (0, 1)")]
pub struct BceDomainError(pub f64);

/// Binary cross-entropy `-(y·ln(ŷ) + (1-y)·ln(1-ŷ))` for soft targets.
pub fn bce_loss(predicted: f64, target: f64) -> Result<f64, BceDomainError> {
    if !(predicted > 0.0 && predicted < 1.0) {
        return Err(BceDomainError(predicted));
    }
    debug_assert!((0.0..=1.0).contains(&target), "target {target} outside [0, 1]");
    Ok(-(target * math::ln(predicted) + (1.0 - target) * math::ln(1.0 - predicted)))
}
