//! Verifier-guided search over solutions: best-of-N variants, step-level beam
//! search, lookahead search, and the sweep machinery that evaluates strategy
//! settings across questions and budgets.
//!
//! Cost accounting counts whole generations: one generation is one sampled
//! full answer, so a single step costs `1/depth` of a generation and lookahead
//! rollout steps are charged the same way. Beam-based searches therefore cost
//! their beam count `N` nominally, and lookahead costs `N×(k+1)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::budget::{BudgetExceeded, BudgetLedger};
use crate::math;
use crate::proposer::{extend_prefix, ProposeError, Proposer};
use crate::results::{ResultTable, TrialRecord};
use crate::revisions::{run_revision_mix, RevisionError};
use crate::rng::StreamScope;
use crate::types::{
    lookahead_beam_count, Aggregation, AnswerId, PartialSolution, Question, SequentialRatio,
    Solution, StrategyConfig, StrategyConfigError, StrategyKind,
};
use crate::verifier::{
    aggregate_steps, best_of_n_weighted, AllInvalid, EmptyScores, ScoreError, Verifier,
};

/// Rounds of beam expansion before a search gives up on non-terminal beams.
pub const DEFAULT_MAX_ROUNDS: u32 = 40;

/// Outcome of one strategy run on one question.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Selected answer and its representative solution.
    pub chosen: (AnswerId, Solution),
    /// Every terminal candidate with its aggregated verifier score, in
    /// generation order.
    pub candidates: Vec<(Solution, f64)>,
    /// Whole-run cost by the strategy's formula (`N`, or `N×(k+1)`).
    pub nominal_cost: u64,
    /// Generations actually consumed (early termination can reduce it).
    pub actual_cost: u64,
    pub rounds_used: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Propose(#[from] ProposeError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error(transparent)]
    AllInvalid(#[from] AllInvalid),
    #[error(transparent)]
    EmptyScores(#[from] EmptyScores),
    #[error(transparent)]
    Config(#[from] StrategyConfigError),
}

impl From<RevisionError> for SearchError {
    fn from(e: RevisionError) -> Self {
        match e {
            RevisionError::Propose(e) => SearchError::Propose(e),
            RevisionError::Score(e) => SearchError::Score(e),
            RevisionError::Budget(e) => SearchError::Budget(e),
            RevisionError::AllInvalid(e) => SearchError::AllInvalid(e),
            RevisionError::EmptyScores(e) => SearchError::EmptyScores(e),
            RevisionError::Infeasible(_) => SearchError::Config(StrategyConfigError::ZeroBudget),
        }
    }
}

/// Sample `n` independent full solutions and score each with the verifier.
/// Candidate `i` draws from the stream labeled `sample.i`, the same labels
/// revision chains use for their global sample indices.
fn sample_scored_candidates(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n: u64,
    aggregation: Aggregation,
    scope: &StreamScope,
    ledger: &mut BudgetLedger,
) -> Result<Vec<(Solution, f64)>, SearchError> {
    let mut candidates = Vec::with_capacity(n as usize);
    for i in 0..n {
        ledger.charge(1)?;
        let mut stream = scope.indexed("sample", i).stream();
        let solution = proposer.sample_full(question, &mut stream)?;
        let scores = verifier.score_solution(question, &solution)?;
        let score = aggregate_steps(&scores, aggregation)?;
        candidates.push((solution, score));
    }
    Ok(candidates)
}

/// Best-of-N with weighted answer selection: sample `n` solutions, sum
/// verifier scores per final answer, and return the answer with the greatest
/// total.
pub fn best_of_n(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n: u64,
    aggregation: Aggregation,
    scope: &StreamScope,
) -> Result<SearchResult, SearchError> {
    let mut ledger = BudgetLedger::new(n);
    let candidates =
        sample_scored_candidates(question, proposer, verifier, n, aggregation, scope, &mut ledger)?;
    let selection = best_of_n_weighted(&candidates)?;
    Ok(SearchResult {
        chosen: (
            selection.answer,
            candidates[selection.representative].0.clone(),
        ),
        candidates,
        nominal_cost: n,
        actual_cost: ledger.consumed(),
        rounds_used: 1,
    })
}

/// Best-of-N picking the single highest-scoring candidate (no
/// marginalization). Unparsable candidates are skipped; ties go to the
/// earliest candidate.
pub fn best_of_n_plain(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n: u64,
    aggregation: Aggregation,
    scope: &StreamScope,
) -> Result<SearchResult, SearchError> {
    let mut ledger = BudgetLedger::new(n);
    let candidates =
        sample_scored_candidates(question, proposer, verifier, n, aggregation, scope, &mut ledger)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, (solution, score)) in candidates.iter().enumerate() {
        if !solution.final_answer.is_valid() {
            continue;
        }
        if best.is_none_or(|(_, b)| *score > b) {
            best = Some((i, *score));
        }
    }
    let (index, _) = best.ok_or(AllInvalid)?;
    let chosen_solution = candidates[index].0.clone();
    let answer = chosen_solution.final_answer.answer().expect("validated");
    Ok(SearchResult {
        chosen: (answer, chosen_solution),
        candidates,
        nominal_cost: n,
        actual_cost: ledger.consumed(),
        rounds_used: 1,
    })
}

/// Majority vote over `n` sampled answers; ties break to the lowest label.
/// The verifier plays no part in selection but candidates are scored anyway
/// so result records stay uniform across strategies.
pub fn majority_vote(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n: u64,
    aggregation: Aggregation,
    scope: &StreamScope,
) -> Result<SearchResult, SearchError> {
    let mut ledger = BudgetLedger::new(n);
    let candidates =
        sample_scored_candidates(question, proposer, verifier, n, aggregation, scope, &mut ledger)?;
    let mut counts: Vec<(AnswerId, usize)> = Vec::new();
    for (solution, _) in &candidates {
        if let Some(answer) = solution.final_answer.answer() {
            match counts.iter_mut().find(|(a, _)| *a == answer) {
                Some(entry) => entry.1 += 1,
                None => counts.push((answer, 1)),
            }
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let answer = counts.first().map(|(a, _)| *a).ok_or(AllInvalid)?;
    let representative = candidates
        .iter()
        .find(|(s, _)| s.final_answer.answer() == Some(answer))
        .expect("winning answer came from a candidate")
        .0
        .clone();
    Ok(SearchResult {
        chosen: (answer, representative),
        candidates,
        nominal_cost: n,
        actual_cost: ledger.consumed(),
        rounds_used: 1,
    })
}

/// Score a candidate prefix for beam filtering by rolling out up to `k`
/// greedy (temperature-0) steps and reading the verifier's value at the end
/// of the rollout. `k = 0` scores the prefix as-is. Returns the score and the
/// number of rollout steps taken.
pub fn lookahead_score(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    prefix: &PartialSolution,
    k: u64,
    scope: &StreamScope,
) -> Result<(f64, u64), SearchError> {
    let (extended, added) = if k == 0 {
        (prefix.clone(), 0)
    } else {
        // Greedy rollouts draw nothing from the stream; it exists only to
        // satisfy proposer plumbing.
        let mut scratch = scope.child("rollout-scratch").stream();
        extend_prefix(
            proposer,
            question,
            prefix.clone(),
            0.0,
            Some(k as usize),
            &mut scratch,
        )?
    };
    let scores = verifier.score_prefix(question, &extended)?;
    let score = scores.last().ok_or(EmptyScores)?;
    Ok((score, added as u64))
}

/// Beam search over steps: keep `n` candidate prefixes, filter to the top
/// `n/m` by verifier prefix score each round, and expand each survivor with
/// `m` sampled next steps. Terminal candidates leave the expansion pool but
/// stay selectable. Final selection is weighted best-of-N over all terminal
/// candidates.
#[allow(clippy::too_many_arguments)]
pub fn beam_search(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n: u64,
    m: u64,
    aggregation: Aggregation,
    max_rounds: u32,
    scope: &StreamScope,
) -> Result<SearchResult, SearchError> {
    lookahead_search(
        question, proposer, verifier, n, m, 0, aggregation, max_rounds, scope,
    )
}

/// Lookahead search: beam search whose filtering scores come from
/// [`lookahead_score`] with `k` greedy rollout steps. `k = 0` is exactly
/// [`beam_search`]. Nominal cost is `n×(k+1)`.
#[allow(clippy::too_many_arguments)]
pub fn lookahead_search(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    n: u64,
    m: u64,
    k: u64,
    aggregation: Aggregation,
    max_rounds: u32,
    scope: &StreamScope,
) -> Result<SearchResult, SearchError> {
    if m == 0 || !n.is_multiple_of(m) {
        return Err(StrategyConfigError::InvalidWidth {
            budget: n,
            beam_width: m,
        }
        .into());
    }
    let env = question.env().ok_or(ProposeError::MissingEnv)?;
    let depth = u64::from(env.depth);
    // Seed prefixes with the same per-step success probability a full sample
    // would carry, so a depth-1 beam search reduces bit-for-bit to best-of-N.
    let success_prob = Some(env.p_step);
    let nominal = n * (k + 1);
    let mut ledger = BudgetLedger::new(nominal);
    let survivors_per_round = n / m;

    let mut finished: Vec<Solution> = Vec::new();
    let mut survivors: Vec<PartialSolution> = Vec::new();
    let mut total_steps: u64 = 0;
    let mut rounds_used: u32 = 0;

    for round in 1..=max_rounds {
        // Expansion: round 1 draws n independent first steps (sharing the
        // `sample.i` labels with independent full sampling, so depth-1 tasks
        // reduce exactly to best-of-N); later rounds draw m steps per
        // survivor.
        let mut expanded: Vec<PartialSolution> = Vec::new();
        if round == 1 {
            for slot in 0..n {
                let mut stream = scope.indexed("sample", slot).stream();
                let mut prefix = PartialSolution::empty(success_prob);
                let sample = proposer.sample_step(question, &prefix, 1.0, &mut stream)?;
                prefix.steps.push(sample.step);
                prefix.final_answer = sample.final_answer;
                expanded.push(prefix);
            }
        } else {
            for (rank, survivor) in survivors.drain(..).enumerate() {
                for j in 0..m {
                    let slot = rank as u64 * m + j;
                    let mut stream = scope
                        .indexed("round", u64::from(round))
                        .indexed("slot", slot)
                        .stream();
                    let mut prefix = survivor.clone();
                    let sample = proposer.sample_step(question, &prefix, 1.0, &mut stream)?;
                    prefix.steps.push(sample.step);
                    prefix.final_answer = sample.final_answer;
                    expanded.push(prefix);
                }
            }
        }
        total_steps += expanded.len() as u64;
        rounds_used = round;

        let mut live: Vec<PartialSolution> = Vec::new();
        for prefix in expanded {
            if prefix.is_terminal() {
                finished.push(prefix.into_solution().expect("terminal"));
            } else {
                live.push(prefix);
            }
        }

        if live.is_empty() || round == max_rounds {
            charge_steps(&mut ledger, total_steps, depth)?;
            break;
        }

        // Filter: score each live prefix (with rollouts when k > 0) and keep
        // the top n/m; ties break by candidate index.
        let mut scored: Vec<(usize, f64, PartialSolution)> = Vec::new();
        for (index, prefix) in live.into_iter().enumerate() {
            let (score, rollout_steps) =
                lookahead_score(question, proposer, verifier, &prefix, k, scope)?;
            total_steps += rollout_steps;
            scored.push((index, score, prefix));
        }
        charge_steps(&mut ledger, total_steps, depth)?;
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0)));
        scored.truncate(survivors_per_round as usize);
        survivors = scored.into_iter().map(|(_, _, p)| p).collect();
    }

    // Reaching the round cap with nothing terminal leaves no selectable
    // candidate, which surfaces as AllInvalid.
    let mut candidates = Vec::with_capacity(finished.len());
    for solution in finished {
        let scores = verifier.score_solution(question, &solution)?;
        let score = aggregate_steps(&scores, aggregation)?;
        candidates.push((solution, score));
    }
    let selection = best_of_n_weighted(&candidates)?;
    Ok(SearchResult {
        chosen: (
            selection.answer,
            candidates[selection.representative].0.clone(),
        ),
        candidates,
        nominal_cost: nominal,
        actual_cost: ledger.consumed(),
        rounds_used,
    })
}

/// Charge the ledger up to `ceil(total_steps / depth)` generations.
fn charge_steps(
    ledger: &mut BudgetLedger,
    total_steps: u64,
    depth: u64,
) -> Result<(), BudgetExceeded> {
    let generations = total_steps.div_ceil(depth);
    let delta = generations.saturating_sub(ledger.consumed());
    ledger.charge(delta)
}

/// Run any strategy config on one question. `scope` should come from
/// [`trial_scope`] so independently scheduled runs replay identically.
pub fn run_strategy(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    config: &StrategyConfig,
    max_rounds: u32,
    scope: &StreamScope,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    match &config.kind {
        StrategyKind::BestOfN => best_of_n_plain(
            question,
            proposer,
            verifier,
            config.budget,
            config.aggregation,
            scope,
        ),
        StrategyKind::BestOfNWeighted => best_of_n(
            question,
            proposer,
            verifier,
            config.budget,
            config.aggregation,
            scope,
        ),
        StrategyKind::MajorityVote => majority_vote(
            question,
            proposer,
            verifier,
            config.budget,
            config.aggregation,
            scope,
        ),
        StrategyKind::BeamSearch { beam_width } => beam_search(
            question,
            proposer,
            verifier,
            config.budget,
            *beam_width,
            config.aggregation,
            max_rounds,
            scope,
        ),
        StrategyKind::LookaheadSearch {
            beam_width,
            lookahead,
        } => lookahead_search(
            question,
            proposer,
            verifier,
            lookahead_beam_count(config.budget, *lookahead),
            *beam_width,
            *lookahead,
            config.aggregation,
            max_rounds,
            scope,
        ),
        StrategyKind::RevisionMix { ratio } => {
            let outcome = run_revision_mix(
                question,
                proposer,
                verifier,
                config.budget,
                ratio,
                config.aggregation,
                scope,
            )?;
            Ok(SearchResult {
                chosen: outcome.chosen,
                candidates: outcome.candidates,
                nominal_cost: config.budget,
                actual_cost: outcome.consumed,
                rounds_used: outcome.plan.chain_length as u32,
            })
        }
    }
}

/// The divisor of `n` closest to `target`; ties prefer the smaller divisor.
pub fn nearest_divisor(n: u64, target: f64) -> u64 {
    let mut best = 1u64;
    let mut best_distance = f64::INFINITY;
    for d in 1..=n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let distance = math::abs(d as f64 - target);
        if distance + 1e-9 < best_distance {
            best = d;
            best_distance = distance;
        }
    }
    best
}

/// How a sweep setting picks its beam width once the beam count is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthRule {
    /// Width `√N`, rounded to the nearest divisor of the beam count.
    Sqrt,
    /// A fixed width, snapped to the nearest divisor of the beam count.
    Fixed(u64),
}

impl WidthRule {
    pub fn resolve(&self, beam_count: u64) -> u64 {
        match self {
            WidthRule::Sqrt => nearest_divisor(beam_count, math::sqrt(beam_count as f64)),
            WidthRule::Fixed(w) => nearest_divisor(beam_count, *w as f64),
        }
    }
}

/// A budget-independent strategy template; `instantiate` binds it to a
/// concrete budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetting {
    pub name: String,
    pub family: SettingFamily,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SettingFamily {
    BestOfN,
    BestOfNWeighted,
    MajorityVote,
    Beam { width: WidthRule },
    Lookahead { width: WidthRule, k: u64 },
    RevisionMix { ratio: SequentialRatio },
}

impl SweepSetting {
    pub fn new(name: impl Into<String>, family: SettingFamily) -> Self {
        SweepSetting {
            name: name.into(),
            family,
            aggregation: Aggregation::Last,
        }
    }

    /// Bind the template to a concrete budget, resolving width rules against
    /// the affordable beam count.
    pub fn instantiate(&self, budget: u64) -> Result<StrategyConfig, StrategyConfigError> {
        let kind = match &self.family {
            SettingFamily::BestOfN => StrategyKind::BestOfN,
            SettingFamily::BestOfNWeighted => StrategyKind::BestOfNWeighted,
            SettingFamily::MajorityVote => StrategyKind::MajorityVote,
            SettingFamily::Beam { width } => StrategyKind::BeamSearch {
                beam_width: width.resolve(budget),
            },
            SettingFamily::Lookahead { width, k } => {
                let beams = lookahead_beam_count(budget, *k);
                StrategyKind::LookaheadSearch {
                    beam_width: width.resolve(beams),
                    lookahead: *k,
                }
            }
            SettingFamily::RevisionMix { ratio } => StrategyKind::RevisionMix { ratio: *ratio },
        };
        let config = StrategyConfig {
            name: self.name.clone(),
            kind,
            budget,
            aggregation: self.aggregation,
        };
        config.validate()?;
        Ok(config)
    }
}

/// The standard search-comparison sweep: weighted best-of-N against beam and
/// lookahead variants (widths `√N` and 4; lookahead `k` of 3 on both widths
/// and 1 on `√N`).
pub fn default_search_sweep() -> Vec<SweepSetting> {
    alloc::vec![
        SweepSetting::new("best_of_n_weighted", SettingFamily::BestOfNWeighted),
        SweepSetting::new(
            "beam_sqrt",
            SettingFamily::Beam {
                width: WidthRule::Sqrt
            }
        ),
        SweepSetting::new(
            "beam_w4",
            SettingFamily::Beam {
                width: WidthRule::Fixed(4)
            }
        ),
        SweepSetting::new(
            "lookahead_sqrt_k3",
            SettingFamily::Lookahead {
                width: WidthRule::Sqrt,
                k: 3
            }
        ),
        SweepSetting::new(
            "lookahead_w4_k3",
            SettingFamily::Lookahead {
                width: WidthRule::Fixed(4),
                k: 3
            }
        ),
        SweepSetting::new(
            "lookahead_sqrt_k1",
            SettingFamily::Lookahead {
                width: WidthRule::Sqrt,
                k: 1
            }
        ),
    ]
}

/// One revision-mix setting per divisor pair of `budget`, sweeping from pure
/// sequential to pure parallel.
pub fn revision_ratio_sweep(budget: u64) -> Vec<SweepSetting> {
    let mut settings = Vec::new();
    for n_chains in 1..=budget {
        if !budget.is_multiple_of(n_chains) {
            continue;
        }
        let chain_length = budget / n_chains;
        settings.push(SweepSetting::new(
            format!("rev_l{chain_length}_c{n_chains}"),
            SettingFamily::RevisionMix {
                ratio: SequentialRatio::Ratio {
                    sequential: chain_length,
                    parallel: n_chains,
                },
            },
        ));
    }
    settings
}

/// The canonical stream scope for one (seed, question, strategy, budget)
/// cell. Every runner derives trial randomness through this so results are
/// independent of scheduling and identical across in-memory and resumed runs.
pub fn trial_scope(seed: u64, question_id: &str, strategy: &str, budget: u64) -> StreamScope {
    StreamScope::root(seed)
        .child("trial")
        .child(question_id)
        .child(strategy)
        .indexed("budget", budget)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] StrategyConfigError),
    #[error("{strategy} at budget {budget} on {question_id}: {source}")]
    Trial {
        question_id: String,
        strategy: String,
        budget: u64,
        source: SearchError,
    },
}

/// Evaluate every (question, setting, budget, seed) cell in memory.
///
/// A trial whose candidates are all unparsable records as incorrect rather
/// than aborting the sweep; other errors propagate with cell context.
pub fn sweep_search_settings(
    questions: &[Question],
    budgets: &[u64],
    settings: &[SweepSetting],
    seeds: &[u64],
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    max_rounds: u32,
) -> Result<ResultTable, SweepError> {
    let mut table = ResultTable::new();
    for question in questions {
        for setting in settings {
            for &budget in budgets {
                let config = setting.instantiate(budget)?;
                for &seed in seeds {
                    let scope = trial_scope(seed, &question.id, &setting.name, budget);
                    let record = run_trial(question, proposer, verifier, &config, max_rounds, &scope, seed)
                        .map_err(|source| SweepError::Trial {
                            question_id: question.id.clone(),
                            strategy: setting.name.clone(),
                            budget,
                            source,
                        })?;
                    table.push(record);
                }
            }
        }
    }
    Ok(table)
}

/// Run one cell and convert the outcome to a trial record. All-invalid
/// candidate pools score as incorrect.
pub fn run_trial(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    config: &StrategyConfig,
    max_rounds: u32,
    scope: &StreamScope,
    seed: u64,
) -> Result<TrialRecord, SearchError> {
    let nominal_fallback = match &config.kind {
        StrategyKind::LookaheadSearch { lookahead, .. } => {
            lookahead_beam_count(config.budget, *lookahead) * (lookahead + 1)
        }
        _ => config.budget,
    };
    let (correct, nominal_cost, actual_cost) =
        match run_strategy(question, proposer, verifier, config, max_rounds, scope) {
            Ok(result) => (
                result.chosen.0 == question.ground_truth,
                result.nominal_cost,
                result.actual_cost,
            ),
            Err(SearchError::AllInvalid(_)) => (false, nominal_fallback, nominal_fallback),
            Err(other) => return Err(other),
        };
    Ok(TrialRecord {
        question_id: question.id.clone(),
        strategy: config.name.to_string(),
        budget: config.budget,
        nominal_cost,
        actual_cost,
        correct,
        seed,
    })
}
