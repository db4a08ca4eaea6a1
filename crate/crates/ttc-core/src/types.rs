//! Shared domain types: questions, answers, solutions, and strategy configs.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Opaque integer label for a final answer.
///
/// Synthetic environments reserve `0` for the correct answer, which keeps
/// closed-form oracles simple; wrong answers occupy `1..=W`. External backends
/// map answer text onto labels however they like, as long as the mapping is
/// stable within a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct AnswerId(pub u64);

impl AnswerId {
    /// The reserved correct label in synthetic environments.
    pub const CORRECT: AnswerId = AnswerId(0);
}

/// Outcome of a terminal solution: a parsed answer label, or `Invalid` when
/// the backend failed to produce a parsable answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalAnswer {
    Answer(AnswerId),
    Invalid,
}

impl FinalAnswer {
    pub fn answer(&self) -> Option<AnswerId> {
        match self {
            FinalAnswer::Answer(id) => Some(*id),
            FinalAnswer::Invalid => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, FinalAnswer::Answer(_))
    }
}

/// One reasoning step.
///
/// `on_track` is the synthetic environment's hidden correctness latent: it is
/// populated by synthetic proposers, absent for remote steps, and must never
/// leak through a scoring interface (verifiers see step text and return
/// scores only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub text: String,
    pub on_track: Option<bool>,
}

impl Step {
    pub fn external(text: String) -> Self {
        Step {
            text,
            on_track: None,
        }
    }
}

/// A terminal solution: a non-empty step sequence plus a final answer.
///
/// Non-terminal prefixes live in [`PartialSolution`]; keeping the two apart
/// makes "final answer present iff terminal" true by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub steps: Vec<Step>,
    pub final_answer: FinalAnswer,
    /// Per-step success probability the synthetic environment used when
    /// generating this solution (`None` for external backends). Revision
    /// uplift can push this above the question's base `p_step`.
    pub sample_success_prob: Option<f64>,
}

impl Solution {
    pub fn is_correct(&self, ground_truth: AnswerId) -> bool {
        self.final_answer.answer() == Some(ground_truth)
    }

    /// Step texts joined with newlines — the canonical text form used for
    /// edit distances and exports.
    pub fn joined_text(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&step.text);
        }
        out
    }
}

/// A solution under construction: zero or more steps, terminal once a final
/// answer has been attached.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSolution {
    pub steps: Vec<Step>,
    pub final_answer: Option<FinalAnswer>,
    /// See [`Solution::sample_success_prob`].
    pub sample_success_prob: Option<f64>,
}

impl PartialSolution {
    pub fn empty(sample_success_prob: Option<f64>) -> Self {
        PartialSolution {
            steps: Vec::new(),
            final_answer: None,
            sample_success_prob,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.final_answer.is_some()
    }

    /// Whether every step so far carries a truthy `on_track` latent. Prefixes
    /// with any unlabeled step report `None`.
    pub fn on_track(&self) -> Option<bool> {
        let mut all = true;
        for step in &self.steps {
            match step.on_track {
                Some(true) => {}
                Some(false) => all = false,
                None => return None,
            }
        }
        Some(all)
    }

    /// Convert to a terminal [`Solution`]; `None` if no final answer yet.
    pub fn into_solution(self) -> Option<Solution> {
        let final_answer = self.final_answer?;
        debug_assert!(!self.steps.is_empty(), "terminal solutions carry steps");
        Some(Solution {
            steps: self.steps,
            final_answer,
            sample_success_prob: self.sample_success_prob,
        })
    }
}

impl From<Solution> for PartialSolution {
    fn from(s: Solution) -> Self {
        PartialSolution {
            steps: s.steps,
            final_answer: Some(s.final_answer),
            sample_success_prob: s.sample_success_prob,
        }
    }
}

/// Parameters of one synthetic reasoning task.
///
/// A task is a chain of `depth` steps; each step independently stays on track
/// with probability `p_step`, and one off-track step makes the whole solution
/// incorrect (there is no recovery within a solution). Correct solutions
/// answer `0`; incorrect ones answer uniformly from `1..=wrong_answer_count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvParams {
    /// Per-step success probability.
    pub p_step: f64,
    /// Number of reasoning steps per solution.
    pub depth: u32,
    /// Count of distinct wrong answer labels.
    pub wrong_answer_count: u64,
    /// Per-distinct-incorrect-attempt uplift to `p_step` when revising.
    #[serde(default)]
    pub revision_uplift: f64,
    /// Probability that a revision is forced incorrect when its context
    /// already contains a correct attempt.
    #[serde(default)]
    pub corruption_prob: f64,
}

impl EnvParams {
    pub fn validate(&self) -> Result<(), InvalidEnvParams> {
        if !(0.0..=1.0).contains(&self.p_step) {
            return Err(InvalidEnvParams::PStepOutOfRange(self.p_step));
        }
        if self.depth == 0 {
            return Err(InvalidEnvParams::ZeroDepth);
        }
        if self.wrong_answer_count == 0 {
            return Err(InvalidEnvParams::ZeroWrongAnswers);
        }
        if !(0.0..).contains(&self.revision_uplift) {
            return Err(InvalidEnvParams::NegativeUplift(self.revision_uplift));
        }
        if !(0.0..=1.0).contains(&self.corruption_prob) {
            return Err(InvalidEnvParams::CorruptionOutOfRange(self.corruption_prob));
        }
        Ok(())
    }

    /// Probability that one independent sample is fully correct.
    pub fn pass_at_1(&self) -> f64 {
        crate::math::powi(self.p_step, self.depth)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InvalidEnvParams {
    #[error("p_step {0} outside [0, 1]")]
    PStepOutOfRange(f64),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("wrong_answer_count must be at least 1")]
    ZeroWrongAnswers,
    #[error("revision_uplift {0} must be non-negative")]
    NegativeUplift(f64),
    #[error("corruption_prob {0} outside [0, 1]")]
    CorruptionOutOfRange(f64),
}

/// What a question actually is: a synthetic task or a prompt for an external
/// backend. The enum guarantees exactly one of the two is present.
#[derive(Debug, Clone, PartialEq)]
pub enum QuestionBody {
    Synthetic(EnvParams),
    External { prompt: String },
}

/// A single task instance with a stable id and a ground-truth answer label.
#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub id: String,
    pub ground_truth: AnswerId,
    pub body: QuestionBody,
}

impl Question {
    /// A synthetic question; ground truth is always the reserved label `0`.
    pub fn synthetic(id: impl Into<String>, env: EnvParams) -> Self {
        Question {
            id: id.into(),
            ground_truth: AnswerId::CORRECT,
            body: QuestionBody::Synthetic(env),
        }
    }

    pub fn external(id: impl Into<String>, prompt: impl Into<String>, ground_truth: AnswerId) -> Self {
        Question {
            id: id.into(),
            ground_truth,
            body: QuestionBody::External {
                prompt: prompt.into(),
            },
        }
    }

    pub fn env(&self) -> Option<&EnvParams> {
        match &self.body {
            QuestionBody::Synthetic(env) => Some(env),
            QuestionBody::External { .. } => None,
        }
    }

    pub fn prompt(&self) -> &str {
        match &self.body {
            QuestionBody::Synthetic(_) => &self.id,
            QuestionBody::External { prompt } => prompt,
        }
    }
}

/// How per-step scores collapse into one solution-level score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Score of the final step (reward-to-go at the end).
    Last,
    /// Minimum step score.
    Min,
    /// Product of step scores.
    Prod,
}

/// Requested split of a revision budget between chain length (sequential) and
/// chain count (parallel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequentialRatio {
    /// One chain consuming the whole budget.
    PureSequential,
    /// Budget-many chains of length one.
    PureParallel,
    /// Target `chain_length : n_chains` ratio, matched over divisor pairs.
    Ratio { sequential: u64, parallel: u64 },
}

/// The algorithm family a strategy runs, with its family-specific knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// N independent samples; pick the single highest-scoring candidate.
    BestOfN,
    /// N independent samples; marginalize scores per answer before choosing.
    BestOfNWeighted,
    /// N independent samples; most common answer wins.
    MajorityVote,
    /// Step-level beam search guided by prefix scores.
    BeamSearch { beam_width: u64 },
    /// Beam search whose step scores come from greedy k-step rollouts.
    LookaheadSearch { beam_width: u64, lookahead: u64 },
    /// Revision chains under a sequential/parallel split.
    RevisionMix { ratio: SequentialRatio },
}

/// A fully instantiated strategy: family, generation budget, and aggregation
/// rule, plus the stable name result records are keyed by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub name: String,
    pub kind: StrategyKind,
    /// Generation budget N. One unit is one sampled full solution.
    pub budget: u64,
    pub aggregation: Aggregation,
}

/// Beam count a lookahead strategy can afford under a generation budget:
/// each step costs `k+1` samples (the step plus its rollout), so the beam
/// count is the budget divided by `k+1`, floored to at least one beam.
pub fn lookahead_beam_count(budget: u64, lookahead: u64) -> u64 {
    (budget / (lookahead + 1)).max(1)
}

impl StrategyConfig {
    /// The beam count a search-family strategy actually runs with: the budget
    /// itself for beam search, [`lookahead_beam_count`] for lookahead. `None`
    /// for non-search families.
    pub fn search_beam_count(&self) -> Option<u64> {
        match &self.kind {
            StrategyKind::BeamSearch { .. } => Some(self.budget),
            StrategyKind::LookaheadSearch { lookahead, .. } => {
                Some(lookahead_beam_count(self.budget, *lookahead))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), StrategyConfigError> {
        if self.budget == 0 {
            return Err(StrategyConfigError::ZeroBudget);
        }
        match &self.kind {
            StrategyKind::BeamSearch { beam_width }
            | StrategyKind::LookaheadSearch { beam_width, .. } => {
                let beams = self.search_beam_count().expect("search kind");
                if *beam_width == 0 || !beams.is_multiple_of(*beam_width) {
                    return Err(StrategyConfigError::InvalidWidth {
                        budget: beams,
                        beam_width: *beam_width,
                    });
                }
            }
            StrategyKind::RevisionMix { ratio } => {
                if let SequentialRatio::Ratio { sequential, parallel } = ratio {
                    if *sequential == 0 || *parallel == 0 {
                        return Err(StrategyConfigError::InvalidRatio {
                            sequential: *sequential,
                            parallel: *parallel,
                        });
                    }
                }
            }
            StrategyKind::BestOfN | StrategyKind::BestOfNWeighted | StrategyKind::MajorityVote => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyConfigError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("beam width {beam_width} must divide the beam count {budget}")]
    InvalidWidth { budget: u64, beam_width: u64 },
    #[error("ratio parts must be positive, got {sequential}:{parallel}")]
    InvalidRatio { sequential: u64, parallel: u64 },
}
