//! The proposal-distribution abstraction and its synthetic implementation.
//!
//! A proposer is anything that can generate candidate solutions: fully in one
//! shot, step by step (for search), or conditioned on prior attempts (for
//! revisions). The synthetic proposer simulates a chain-of-steps task where
//! each step independently stays on track with probability `p_step` and one
//! bad step ruins the solution — this makes prefix values closed-form and
//! every oracle in the test suite exact.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::rng::RandomStream;
use crate::types::{
    AnswerId, EnvParams, FinalAnswer, PartialSolution, Question, Solution, Step,
};

/// What a proposer implementation can do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Capability {
    /// Sample a complete solution in one call.
    SampleFull,
    /// Sample one step extending a prefix (temperature-controlled).
    SampleStep,
    /// Deterministic temperature-0 step for a fixed prefix.
    GreedyStep,
    /// Sample a solution conditioned on prior attempts.
    SampleRevision,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProposeError {
    #[error("proposer does not support {0:?}")]
    Unsupported(Capability),
    #[error("question has no synthetic environment parameters")]
    MissingEnv,
    #[error("backend failure: {0}")]
    Backend(String),
}

/// One sampled step, plus the final answer when this step completed the
/// solution. The proposer decides terminality so callers never guess depth.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSample {
    pub step: Step,
    pub final_answer: Option<FinalAnswer>,
}

/// Up to four prior attempts, ordered oldest to newest, that a revision is
/// conditioned on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RevisionContext {
    attempts: Vec<Solution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("revision context holds at most {max} attempts, got {got}")]
pub struct ContextTooLong {
    pub max: usize,
    pub got: usize,
}

impl RevisionContext {
    pub const MAX_ATTEMPTS: usize = 4;

    pub fn empty() -> Self {
        RevisionContext::default()
    }

    pub fn new(attempts: Vec<Solution>) -> Result<Self, ContextTooLong> {
        if attempts.len() > Self::MAX_ATTEMPTS {
            return Err(ContextTooLong {
                max: Self::MAX_ATTEMPTS,
                got: attempts.len(),
            });
        }
        Ok(RevisionContext { attempts })
    }

    /// Build a context from the trailing `MAX_ATTEMPTS` of a longer history.
    pub fn trailing(history: &[Solution]) -> Self {
        let start = history.len().saturating_sub(Self::MAX_ATTEMPTS);
        RevisionContext {
            attempts: history[start..].to_vec(),
        }
    }

    pub fn attempts(&self) -> &[Solution] {
        &self.attempts
    }

    pub fn is_empty(&self) -> bool {
        self.attempts.is_empty()
    }

    /// Count of distinct incorrect answer labels among the attempts. Attempts
    /// without a parsable answer carry no label and are ignored.
    pub fn distinct_incorrect_answers(&self, ground_truth: AnswerId) -> usize {
        let mut seen: Vec<AnswerId> = Vec::new();
        for attempt in &self.attempts {
            if let Some(id) = attempt.final_answer.answer() {
                if id != ground_truth && !seen.contains(&id) {
                    seen.push(id);
                }
            }
        }
        seen.len()
    }

    pub fn contains_correct(&self, ground_truth: AnswerId) -> bool {
        self.attempts.iter().any(|a| a.is_correct(ground_truth))
    }
}

/// A source of candidate solutions. All randomness flows through the caller's
/// stream, so implementations are safe to share across workers.
///
/// `sample_step` and `sample_revision` default to [`ProposeError::Unsupported`];
/// implementations advertise what they actually provide via [`Proposer::supports`].
pub trait Proposer: Sync {
    fn supports(&self, capability: Capability) -> bool;

    /// Sample a complete solution at temperature 1.
    fn sample_full(
        &self,
        question: &Question,
        rng: &mut RandomStream,
    ) -> Result<Solution, ProposeError>;

    /// Sample one step extending `prefix`. Temperature 0 must be a pure
    /// function of `(question, prefix)` and draw nothing from `rng`.
    fn sample_step(
        &self,
        _question: &Question,
        _prefix: &PartialSolution,
        _temperature: f64,
        _rng: &mut RandomStream,
    ) -> Result<StepSample, ProposeError> {
        Err(ProposeError::Unsupported(Capability::SampleStep))
    }

    /// Sample a complete solution conditioned on prior attempts. An empty
    /// context must reduce to `sample_full`.
    fn sample_revision(
        &self,
        _question: &Question,
        _context: &RevisionContext,
        _rng: &mut RandomStream,
    ) -> Result<Solution, ProposeError> {
        Err(ProposeError::Unsupported(Capability::SampleRevision))
    }
}

/// Extend a prefix by sampling steps until it is terminal or `max_extra_steps`
/// have been added. Returns the extended prefix and how many steps were added.
///
/// With `max_extra_steps = None` this completes the solution; with a bound it
/// implements the "roll out up to k steps, stopping early at the end of the
/// solution" primitive used by lookahead scoring.
pub fn extend_prefix(
    proposer: &dyn Proposer,
    question: &Question,
    mut prefix: PartialSolution,
    temperature: f64,
    max_extra_steps: Option<usize>,
    rng: &mut RandomStream,
) -> Result<(PartialSolution, usize), ProposeError> {
    let mut added = 0;
    while !prefix.is_terminal() && max_extra_steps.is_none_or(|cap| added < cap) {
        let sample = proposer.sample_step(question, &prefix, temperature, rng)?;
        prefix.steps.push(sample.step);
        prefix.final_answer = sample.final_answer;
        added += 1;
    }
    Ok((prefix, added))
}

/// Sharpen a Bernoulli success probability by temperature.
///
/// Temperature 1 returns `p` unchanged; temperature 0 collapses to the mode
/// (on-track iff `p >= 0.5`); intermediate values interpolate via the tempered
/// two-outcome softmax `p^(1/t) / (p^(1/t) + (1-p)^(1/t))`.
pub fn tempered_probability(p: f64, temperature: f64) -> f64 {
    if temperature == 1.0 || p <= 0.0 || p >= 1.0 {
        return math::clamp(p, 0.0, 1.0);
    }
    if temperature <= 0.0 {
        return if p >= 0.5 { 1.0 } else { 0.0 };
    }
    let inv = 1.0 / temperature;
    let a = math::powf(p, inv);
    let b = math::powf(1.0 - p, inv);
    a / (a + b)
}

/// The simulated chain-of-steps proposer. Stateless: every question carries
/// its own environment parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticProposer;

impl SyntheticProposer {
    fn env(question: &Question) -> Result<EnvParams, ProposeError> {
        question.env().copied().ok_or(ProposeError::MissingEnv)
    }

    /// Extend `prefix` by one step at `success_prob`, drawing from `rng` at
    /// positive temperature and nothing at temperature 0. When the step
    /// reaches the environment depth the final answer is attached, drawing a
    /// wrong-answer label only when the solution went off track.
    fn step_at(
        env: &EnvParams,
        prefix: &PartialSolution,
        success_prob: f64,
        temperature: f64,
        rng: &mut RandomStream,
    ) -> StepSample {
        let index = prefix.steps.len() as u32;
        let prefix_on_track = prefix.on_track().unwrap_or(false);
        let greedy = temperature <= 0.0;

        let (text, step_success) = if greedy {
            (format!("step {index}: greedy"), success_prob >= 0.5)
        } else {
            // Draw order is fixed (payload nonce, then the success draw) so
            // one-shot and step-by-step construction stay bit-identical.
            let nonce = rng.next_u64();
            let success = rng.bernoulli(tempered_probability(success_prob, temperature));
            (format!("step {index}: {nonce:016x}"), success)
        };
        let on_track = prefix_on_track && step_success;
        let step = Step {
            text,
            on_track: Some(on_track),
        };

        let final_answer = if index + 1 >= env.depth {
            Some(if on_track {
                FinalAnswer::Answer(AnswerId::CORRECT)
            } else if greedy {
                // Wrong answers are equiprobable; the deterministic mode
                // tie-breaks to the lowest label.
                FinalAnswer::Answer(AnswerId(1))
            } else {
                FinalAnswer::Answer(AnswerId(
                    rng.uniform_inclusive(1, env.wrong_answer_count),
                ))
            })
        } else {
            None
        };
        StepSample { step, final_answer }
    }

    /// Sample a full solution at the given per-step success probability.
    fn full_at(
        &self,
        env: &EnvParams,
        success_prob: f64,
        rng: &mut RandomStream,
    ) -> Solution {
        let mut prefix = PartialSolution::empty(Some(success_prob));
        while !prefix.is_terminal() {
            let sample = Self::step_at(env, &prefix, success_prob, 1.0, rng);
            prefix.steps.push(sample.step);
            prefix.final_answer = sample.final_answer;
        }
        prefix.into_solution().expect("terminal by construction")
    }
}

impl Proposer for SyntheticProposer {
    fn supports(&self, _capability: Capability) -> bool {
        true
    }

    fn sample_full(
        &self,
        question: &Question,
        rng: &mut RandomStream,
    ) -> Result<Solution, ProposeError> {
        let env = Self::env(question)?;
        Ok(self.full_at(&env, env.p_step, rng))
    }

    fn sample_step(
        &self,
        question: &Question,
        prefix: &PartialSolution,
        temperature: f64,
        rng: &mut RandomStream,
    ) -> Result<StepSample, ProposeError> {
        let env = Self::env(question)?;
        let success_prob = prefix.sample_success_prob.unwrap_or(env.p_step);
        Ok(Self::step_at(&env, prefix, success_prob, temperature, rng))
    }

    fn sample_revision(
        &self,
        question: &Question,
        context: &RevisionContext,
        rng: &mut RandomStream,
    ) -> Result<Solution, ProposeError> {
        let env = Self::env(question)?;

        // Seeing distinct wrong answers rules them out, lifting the per-step
        // success rate linearly (capped at certainty).
        let distinct = context.distinct_incorrect_answers(question.ground_truth) as f64;
        let success_prob = math::clamp(env.p_step + env.revision_uplift * distinct, 0.0, 1.0);

        // A correct attempt already in context can get "revised away": with
        // probability `corruption_prob` the new attempt is forced incorrect.
        // The draw happens only when a correct attempt is present, so an
        // empty context replays exactly like `sample_full`.
        let corrupted = context.contains_correct(question.ground_truth)
            && rng.bernoulli(env.corruption_prob);

        let mut solution = self.full_at(&env, success_prob, rng);
        if corrupted && solution.is_correct(question.ground_truth) {
            if let Some(last) = solution.steps.last_mut() {
                last.on_track = Some(false);
            }
            solution.final_answer =
                FinalAnswer::Answer(AnswerId(rng.uniform_inclusive(1, env.wrong_answer_count)));
        }
        Ok(solution)
    }
}
