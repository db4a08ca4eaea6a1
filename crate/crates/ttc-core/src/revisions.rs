//! Sequential revision chains: budget allocation between chain length and
//! chain count, chain execution, answer selection across chains, and
//! training-pair generation for a revision model.

use alloc::vec::Vec;

use crate::budget::{BudgetExceeded, BudgetLedger};
use crate::distance::levenshtein;
use crate::math;
use crate::proposer::{ProposeError, Proposer, RevisionContext};
use crate::rng::{RandomStream, StreamScope};
use crate::types::{Aggregation, AnswerId, Question, SequentialRatio, Solution};
use crate::verifier::{
    aggregate_steps, best_of_n_weighted, AllInvalid, EmptyScores, ScoreError, Verifier,
};

/// A sequence of attempts, each conditioned on the trailing
/// [`RevisionContext::MAX_ATTEMPTS`] prior attempts.
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionChain {
    pub attempts: Vec<Solution>,
}

/// A concrete split of a generation budget: `n_chains × chain_length = N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllocationPlan {
    pub n_chains: u64,
    pub chain_length: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no allocation exists for budget {budget}")]
pub struct InfeasibleBudget {
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RevisionError {
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
    Infeasible(#[from] InfeasibleBudget),
}

/// Split `budget` into chains according to the requested sequential:parallel
/// ratio.
///
/// The ratio is `chain_length : n_chains`, matched in log space over the
/// divisor pairs of `budget`; exact ties prefer the more sequential plan
/// (larger chain length). Pure-sequential maps to one chain of length
/// `budget`; pure-parallel to `budget` chains of length one.
pub fn allocate(budget: u64, ratio: &SequentialRatio) -> Result<AllocationPlan, InfeasibleBudget> {
    if budget == 0 {
        return Err(InfeasibleBudget { budget });
    }
    let (sequential, parallel) = match ratio {
        SequentialRatio::PureSequential => {
            return Ok(AllocationPlan {
                n_chains: 1,
                chain_length: budget,
            })
        }
        SequentialRatio::PureParallel => {
            return Ok(AllocationPlan {
                n_chains: budget,
                chain_length: 1,
            })
        }
        SequentialRatio::Ratio { sequential, parallel } => (*sequential, *parallel),
    };
    // Degenerate ratios collapse to the pure plans.
    if sequential == 0 {
        return allocate(budget, &SequentialRatio::PureParallel);
    }
    if parallel == 0 {
        return allocate(budget, &SequentialRatio::PureSequential);
    }

    let target = math::ln(sequential as f64) - math::ln(parallel as f64);
    let mut best: Option<(f64, AllocationPlan)> = None;
    for n_chains in 1..=budget {
        if !budget.is_multiple_of(n_chains) {
            continue;
        }
        let chain_length = budget / n_chains;
        let log_ratio = math::ln(chain_length as f64) - math::ln(n_chains as f64);
        let distance = math::abs(log_ratio - target);
        let replace = match &best {
            None => true,
            Some((best_distance, plan)) => {
                distance < best_distance - 1e-9
                    || (math::abs(distance - best_distance) <= 1e-9
                        && chain_length > plan.chain_length)
            }
        };
        if replace {
            best = Some((
                distance,
                AllocationPlan {
                    n_chains,
                    chain_length,
                },
            ));
        }
    }
    Ok(best.expect("budget >= 1 always has the trivial divisor pair").1)
}

/// Run one revision chain of `length` attempts.
///
/// Attempt `i` is conditioned on the trailing four of attempts `0..i` and
/// drawn from the stream labeled with the global sample index
/// `sample_offset + i` — parallel chains and independent sampling thereby
/// share stream labels, so a pure-parallel plan replays exactly like
/// independent full samples. Each attempt charges one generation.
pub fn run_chain(
    question: &Question,
    proposer: &dyn Proposer,
    length: u64,
    scope: &StreamScope,
    sample_offset: u64,
    ledger: &mut BudgetLedger,
) -> Result<RevisionChain, RevisionError> {
    let mut attempts: Vec<Solution> = Vec::with_capacity(length as usize);
    for attempt in 0..length {
        ledger.charge(1)?;
        let context = RevisionContext::trailing(&attempts);
        let mut stream = scope.indexed("sample", sample_offset + attempt).stream();
        attempts.push(proposer.sample_revision(question, &context, &mut stream)?);
    }
    Ok(RevisionChain { attempts })
}

/// Two-stage answer selection over scored chains: weighted selection within
/// each chain, then weighted selection across the per-chain winners (each
/// carrying its own individual score).
///
/// Chains whose attempts are all unparsable contribute no winner; if every
/// chain drops out the whole selection is [`AllInvalid`].
pub fn select_hierarchical_scored(
    chains: &[Vec<(Solution, f64)>],
) -> Result<(AnswerId, Solution), AllInvalid> {
    let mut winners: Vec<(Solution, f64)> = Vec::new();
    for chain in chains {
        if let Ok(selection) = best_of_n_weighted(chain) {
            let (solution, score) = &chain[selection.representative];
            winners.push((solution.clone(), *score));
        }
    }
    let final_selection = best_of_n_weighted(&winners)?;
    let representative = winners.swap_remove(final_selection.representative).0;
    Ok((final_selection.answer, representative))
}

/// Score every attempt with the verifier, then select hierarchically.
pub fn select_hierarchical_verifier(
    question: &Question,
    chains: &[RevisionChain],
    verifier: &dyn Verifier,
    aggregation: Aggregation,
) -> Result<(AnswerId, Solution), RevisionError> {
    let scored = score_chains(question, chains, verifier, aggregation)?;
    Ok(select_hierarchical_scored(&scored)?)
}

/// Majority vote over the pooled answers of all chains; ties break to the
/// lowest answer label.
pub fn select_flat_majority(chains: &[RevisionChain]) -> Result<AnswerId, AllInvalid> {
    let mut counts: Vec<(AnswerId, usize)> = Vec::new();
    for chain in chains {
        for attempt in &chain.attempts {
            if let Some(answer) = attempt.final_answer.answer() {
                match counts.iter_mut().find(|(a, _)| *a == answer) {
                    Some(entry) => entry.1 += 1,
                    None => counts.push((answer, 1)),
                }
            }
        }
    }
    counts
        .into_iter()
        .fold(None, |best: Option<(AnswerId, usize)>, (answer, count)| {
            match best {
                None => Some((answer, count)),
                Some((best_answer, best_count)) => {
                    if count > best_count || (count == best_count && answer < best_answer) {
                        Some((answer, count))
                    } else {
                        Some((best_answer, best_count))
                    }
                }
            }
        })
        .map(|(answer, _)| answer)
        .ok_or(AllInvalid)
}

fn score_chains(
    question: &Question,
    chains: &[RevisionChain],
    verifier: &dyn Verifier,
    aggregation: Aggregation,
) -> Result<Vec<Vec<(Solution, f64)>>, RevisionError> {
    let mut scored = Vec::with_capacity(chains.len());
    for chain in chains {
        let mut entries = Vec::with_capacity(chain.attempts.len());
        for attempt in &chain.attempts {
            let scores = verifier.score_solution(question, attempt)?;
            let score = aggregate_steps(&scores, aggregation)?;
            entries.push((attempt.clone(), score));
        }
        scored.push(entries);
    }
    Ok(scored)
}

/// Everything a revision-mix strategy run produces.
#[derive(Debug, Clone)]
pub struct RevisionMixOutcome {
    pub plan: AllocationPlan,
    pub chains: Vec<RevisionChain>,
    /// All attempts in global sample order, with aggregated scores.
    pub candidates: Vec<(Solution, f64)>,
    pub chosen: (AnswerId, Solution),
    /// Generations consumed; always equals the budget.
    pub consumed: u64,
}

/// Run a full revision-mix strategy: allocate the budget, run the chains,
/// score every attempt, and select hierarchically.
pub fn run_revision_mix(
    question: &Question,
    proposer: &dyn Proposer,
    verifier: &dyn Verifier,
    budget: u64,
    ratio: &SequentialRatio,
    aggregation: Aggregation,
    scope: &StreamScope,
) -> Result<RevisionMixOutcome, RevisionError> {
    let plan = allocate(budget, ratio)?;
    let mut ledger = BudgetLedger::new(budget);
    let mut chains = Vec::with_capacity(plan.n_chains as usize);
    for chain_index in 0..plan.n_chains {
        chains.push(run_chain(
            question,
            proposer,
            plan.chain_length,
            scope,
            chain_index * plan.chain_length,
            &mut ledger,
        )?);
    }
    let scored = score_chains(question, &chains, verifier, aggregation)?;
    let chosen = select_hierarchical_scored(&scored)?;
    let candidates: Vec<(Solution, f64)> = scored.into_iter().flatten().collect();
    Ok(RevisionMixOutcome {
        plan,
        chains,
        candidates,
        chosen,
        consumed: ledger.consumed(),
    })
}

/// One supervised training example for a revision model: incorrect prior
/// attempts as context, a correct solution as the target.
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionPairExample {
    pub context_attempts: Vec<Solution>,
    pub target: Solution,
}

/// Build revision training pairs from independently sampled solutions.
///
/// Unparsable samples are dropped first. For each correct sample, a context
/// size is drawn uniformly from `0..=min(4, #incorrect)`; a non-empty context
/// places the character-edit-distance-nearest incorrect sample in the final
/// slot (the one the revision model most plausibly "corrects") and fills the
/// rest uniformly without replacement.
pub fn generate_revision_pairs(
    question: &Question,
    samples: &[Solution],
    rng: &mut RandomStream,
) -> Vec<RevisionPairExample> {
    let valid: Vec<&Solution> = samples
        .iter()
        .filter(|s| s.final_answer.is_valid())
        .collect();
    let (correct, incorrect): (Vec<&Solution>, Vec<&Solution>) = valid
        .into_iter()
        .partition(|s| s.is_correct(question.ground_truth));

    let mut examples = Vec::with_capacity(correct.len());
    for target in correct {
        let max_context = incorrect.len().min(RevisionContext::MAX_ATTEMPTS);
        let context_size = rng.uniform_inclusive(0, max_context as u64) as usize;
        let mut context_attempts: Vec<Solution> = Vec::with_capacity(context_size);
        if context_size > 0 {
            let target_text = target.joined_text();
            let nearest = incorrect
                .iter()
                .enumerate()
                .map(|(i, s)| (levenshtein(&target_text, &s.joined_text()), i))
                .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, i)| i)
                .expect("context_size > 0 implies incorrect samples exist");
            let pool: Vec<usize> = (0..incorrect.len()).filter(|&i| i != nearest).collect();
            for &pick in rng.sample_indices(pool.len(), context_size - 1).iter() {
                context_attempts.push(incorrect[pool[pick]].clone());
            }
            context_attempts.push(incorrect[nearest].clone());
        }
        examples.push(RevisionPairExample {
            context_attempts,
            target: target.clone(),
        });
    }
    examples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposer::SyntheticProposer;
    use crate::rng::seeded_rng;
    use crate::types::{EnvParams, FinalAnswer, Step};
    use crate::verifier::SyntheticVerifier;
    use alloc::format;
    use alloc::vec;

    fn env(p_step: f64, depth: u32, wrong: u64) -> EnvParams {
        EnvParams {
            p_step,
            depth,
            wrong_answer_count: wrong,
            revision_uplift: 0.0,
            corruption_prob: 0.0,
        }
    }

    fn solution(answer: u64, text: &str) -> Solution {
        Solution {
            steps: vec![Step {
                text: text.into(),
                on_track: Some(answer == 0),
            }],
            final_answer: FinalAnswer::Answer(AnswerId(answer)),
            sample_success_prob: None,
        }
    }

    #[test]
    fn allocate_balanced_ratio_takes_square_split() {
        let plan = allocate(
            16,
            &SequentialRatio::Ratio {
                sequential: 1,
                parallel: 1,
            },
        )
        .unwrap();
        assert_eq!(
            plan,
            AllocationPlan {
                n_chains: 4,
                chain_length: 4
            }
        );
    }

    #[test]
    fn allocate_pure_plans() {
        assert_eq!(
            allocate(128, &SequentialRatio::PureSequential).unwrap(),
            AllocationPlan {
                n_chains: 1,
                chain_length: 128
            }
        );
        assert_eq!(
            allocate(128, &SequentialRatio::PureParallel).unwrap(),
            AllocationPlan {
                n_chains: 128,
                chain_length: 1
            }
        );
    }

    #[test]
    fn allocate_matches_log_ratio_and_breaks_ties_sequentially() {
        // Requested 8:2 = 4 at budget 128: (4 chains × 32) and (8 × 16) are
        // equidistant in log space; the more sequential plan wins.
        let plan = allocate(
            128,
            &SequentialRatio::Ratio {
                sequential: 8,
                parallel: 2,
            },
        )
        .unwrap();
        assert_eq!(
            plan,
            AllocationPlan {
                n_chains: 4,
                chain_length: 32
            }
        );
    }

    #[test]
    fn allocate_products_always_equal_budget() {
        for budget in [1u64, 2, 6, 16, 60, 128, 256, 255] {
            for ratio in [
                SequentialRatio::PureSequential,
                SequentialRatio::PureParallel,
                SequentialRatio::Ratio {
                    sequential: 3,
                    parallel: 1,
                },
                SequentialRatio::Ratio {
                    sequential: 1,
                    parallel: 7,
                },
            ] {
                let plan = allocate(budget, &ratio).unwrap();
                assert_eq!(plan.n_chains * plan.chain_length, budget, "{budget} {ratio:?}");
            }
        }
        assert!(allocate(0, &SequentialRatio::PureParallel).is_err());
    }

    #[test]
    fn run_chain_charges_one_generation_per_attempt() {
        let q = Question::synthetic("q", env(0.5, 2, 9));
        let scope = StreamScope::root(3).child("chain");
        let mut ledger = BudgetLedger::new(8);
        let chain = run_chain(&q, &SyntheticProposer, 6, &scope, 0, &mut ledger).unwrap();
        assert_eq!(chain.attempts.len(), 6);
        assert_eq!(ledger.consumed(), 6);
        // Exhausting the allotment is an error, not a silent truncation.
        assert!(run_chain(&q, &SyntheticProposer, 3, &scope, 6, &mut ledger).is_err());
    }

    #[test]
    fn chain_of_one_replays_independent_sampling() {
        let q = Question::synthetic("q", env(0.6, 3, 9));
        let scope = StreamScope::root(4).child("mix");
        let mut ledger = BudgetLedger::new(1);
        let chain = run_chain(&q, &SyntheticProposer, 1, &scope, 5, &mut ledger).unwrap();
        let mut stream = scope.indexed("sample", 5).stream();
        let independent = SyntheticProposer.sample_full(&q, &mut stream).unwrap();
        assert_eq!(chain.attempts[0], independent);
    }

    #[test]
    fn context_truncation_lets_corrupted_chains_recover() {
        // p=1 and γ=1: the first attempt is correct, every attempt whose
        // four-attempt window still contains a correct one is forced
        // incorrect, and the window clears after four incorrect attempts —
        // so correctness recurs exactly every five positions.
        let q = Question::synthetic(
            "q",
            EnvParams {
                p_step: 1.0,
                depth: 2,
                wrong_answer_count: 9,
                revision_uplift: 0.0,
                corruption_prob: 1.0,
            },
        );
        let scope = StreamScope::root(5).child("trunc");
        let mut ledger = BudgetLedger::new(11);
        let chain = run_chain(&q, &SyntheticProposer, 11, &scope, 0, &mut ledger).unwrap();
        let pattern: Vec<bool> = chain
            .attempts
            .iter()
            .map(|a| a.is_correct(q.ground_truth))
            .collect();
        assert_eq!(
            pattern,
            vec![true, false, false, false, false, true, false, false, false, false, true]
        );
    }

    #[test]
    fn uplift_makes_later_positions_no_worse() {
        let q = Question::synthetic(
            "q",
            EnvParams {
                p_step: 0.4,
                depth: 2,
                wrong_answer_count: 9,
                revision_uplift: 0.08,
                corruption_prob: 0.0,
            },
        );
        let length = 5usize;
        let trials = 10_000;
        let mut correct_at = vec![0usize; length];
        for trial in 0..trials {
            let scope = StreamScope::root(6).indexed("trial", trial);
            let mut ledger = BudgetLedger::new(length as u64);
            let chain =
                run_chain(&q, &SyntheticProposer, length as u64, &scope, 0, &mut ledger).unwrap();
            for (i, attempt) in chain.attempts.iter().enumerate() {
                correct_at[i] += usize::from(attempt.is_correct(q.ground_truth));
            }
        }
        let rates: Vec<f64> = correct_at
            .iter()
            .map(|&c| c as f64 / trials as f64)
            .collect();
        // Monotone within two standard errors of the difference.
        for w in rates.windows(2) {
            assert!(w[1] >= w[0] - 0.015, "positions regressed: {rates:?}");
        }
        assert!(
            rates[length - 1] > rates[0] + 0.02,
            "uplift had no visible effect: {rates:?}"
        );
    }

    #[test]
    fn chain_success_matches_closed_form_with_one_wrong_answer() {
        // With a single wrong answer label, the distinct-incorrect count in a
        // non-empty all-incorrect window is exactly 1, so P(any correct in L
        // attempts) = 1 - (1-p^T) * (1-p'^T)^(L-1) with p' = p + α.
        let p = 0.3f64;
        let alpha = 0.2f64;
        let depth = 2u32;
        let q = Question::synthetic(
            "q",
            EnvParams {
                p_step: p,
                depth,
                wrong_answer_count: 1,
                revision_uplift: alpha,
                corruption_prob: 0.0,
            },
        );
        let length = 4u64;
        let pi0 = math::powi(p, depth);
        let pi1 = math::powi(p + alpha, depth);
        let analytic = 1.0 - (1.0 - pi0) * math::powi(1.0 - pi1, (length - 1) as u32);

        let trials = 10_000;
        let mut hits = 0usize;
        for trial in 0..trials {
            let scope = StreamScope::root(7).indexed("trial", trial);
            let mut ledger = BudgetLedger::new(length);
            let chain = run_chain(&q, &SyntheticProposer, length, &scope, 0, &mut ledger).unwrap();
            if chain
                .attempts
                .iter()
                .any(|a| a.is_correct(q.ground_truth))
            {
                hits += 1;
            }
        }
        let rate = hits as f64 / trials as f64;
        assert!(
            (rate - analytic).abs() < 0.02,
            "monte-carlo {rate} vs analytic {analytic}"
        );
        // Analytic success is non-decreasing in chain length.
        let mut prev = 0.0;
        for l in 1..=8u32 {
            let p_l = 1.0 - (1.0 - pi0) * math::powi(1.0 - pi1, l - 1);
            assert!(p_l >= prev);
            prev = p_l;
        }
    }

    #[test]
    fn hierarchical_single_attempt_returns_it() {
        let chains = vec![vec![(solution(3, "a"), 0.4)]];
        let (answer, representative) = select_hierarchical_scored(&chains).unwrap();
        assert_eq!(answer, AnswerId(3));
        assert_eq!(representative.joined_text(), "a");
    }

    #[test]
    fn hierarchical_unanimous_answer_wins_regardless_of_structure() {
        let chains = vec![
            vec![(solution(2, "a"), 0.1), (solution(2, "b"), 0.5)],
            vec![(solution(2, "c"), 0.3)],
        ];
        assert_eq!(select_hierarchical_scored(&chains).unwrap().0, AnswerId(2));
    }

    #[test]
    fn hierarchical_three_by_three_grid_matches_hand_reduction() {
        // Chain 1: answer 1 sums to 0.9 > answer 2's 0.6 -> winner 1 (rep 0.5)
        // Chain 2: answer 2 sums to 0.8 > answer 1's 0.7 -> winner 2 (rep 0.6)
        // Chain 3: answer 3 alone -> winner 3 (rep 0.65)
        // Stage 2 over individual rep scores: {1: 0.5, 2: 0.6, 3: 0.65} -> 3.
        let chains = vec![
            vec![
                (solution(1, "c1a"), 0.5),
                (solution(1, "c1b"), 0.4),
                (solution(2, "c1c"), 0.6),
            ],
            vec![
                (solution(1, "c2a"), 0.7),
                (solution(2, "c2b"), 0.6),
                (solution(2, "c2c"), 0.2),
            ],
            vec![
                (solution(3, "c3a"), 0.65),
                (solution(4, "c3b"), 0.1),
                (solution(4, "c3c"), 0.2),
            ],
        ];
        let (answer, representative) = select_hierarchical_scored(&chains).unwrap();
        assert_eq!(answer, AnswerId(3));
        assert_eq!(representative.joined_text(), "c3a");
    }

    #[test]
    fn hierarchical_with_one_chain_equals_flat_weighted() {
        let chain = vec![
            (solution(1, "a"), 0.3),
            (solution(2, "b"), 0.4),
            (solution(1, "c"), 0.2),
        ];
        let flat = best_of_n_weighted(&chain).unwrap();
        let (answer, _) = select_hierarchical_scored(core::slice::from_ref(&chain)).unwrap();
        assert_eq!(answer, flat.answer);
    }

    #[test]
    fn hierarchical_selection_through_verifier() {
        let q = Question::synthetic("q", env(0.5, 2, 9));
        let scope = StreamScope::root(8).child("hier");
        let mut ledger = BudgetLedger::new(8);
        let chains: Vec<RevisionChain> = (0..4)
            .map(|c| run_chain(&q, &SyntheticProposer, 2, &scope, c * 2, &mut ledger).unwrap())
            .collect();
        let verifier = SyntheticVerifier::exact(0);
        let (answer, _) =
            select_hierarchical_verifier(&q, &chains, &verifier, Aggregation::Last).unwrap();
        // With exact scores, a correct attempt anywhere must win; otherwise
        // some wrong answer wins with all-zero scores.
        let any_correct = chains
            .iter()
            .flat_map(|c| &c.attempts)
            .any(|a| a.is_correct(q.ground_truth));
        assert_eq!(answer == AnswerId::CORRECT, any_correct);
    }

    #[test]
    fn flat_majority_takes_the_pooled_mode() {
        let chains = vec![
            RevisionChain {
                attempts: vec![solution(1, "a"), solution(1, "b")],
            },
            RevisionChain {
                attempts: vec![solution(2, "c")],
            },
        ];
        assert_eq!(select_flat_majority(&chains).unwrap(), AnswerId(1));
    }

    #[test]
    fn flat_majority_tie_breaks_to_lowest_answer() {
        let chains = vec![RevisionChain {
            attempts: vec![solution(7, "a"), solution(2, "b")],
        }];
        assert_eq!(select_flat_majority(&chains).unwrap(), AnswerId(2));
    }

    #[test]
    fn flat_majority_matches_recount_oracle() {
        let q = Question::synthetic("q", env(0.6, 2, 3));
        let scope = StreamScope::root(9).child("majority");
        let mut ledger = BudgetLedger::new(64);
        let chains: Vec<RevisionChain> = (0..4)
            .map(|c| run_chain(&q, &SyntheticProposer, 16, &scope, c * 16, &mut ledger).unwrap())
            .collect();
        let selected = select_flat_majority(&chains).unwrap();

        let mut counts: Vec<(AnswerId, usize)> = Vec::new();
        for attempt in chains.iter().flat_map(|c| &c.attempts) {
            let id = attempt.final_answer.answer().unwrap();
            match counts.iter_mut().find(|(a, _)| *a == id) {
                Some(e) => e.1 += 1,
                None => counts.push((id, 1)),
            }
        }
        counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        assert_eq!(selected, counts[0].0);
    }

    #[test]
    fn revision_mix_consumes_exactly_the_budget() {
        let q = Question::synthetic("q", env(0.5, 2, 9));
        let verifier = SyntheticVerifier::exact(0);
        let scope = StreamScope::root(10).child("mix");
        let outcome = run_revision_mix(
            &q,
            &SyntheticProposer,
            &verifier,
            16,
            &SequentialRatio::Ratio {
                sequential: 1,
                parallel: 1,
            },
            Aggregation::Last,
            &scope,
        )
        .unwrap();
        assert_eq!(outcome.consumed, 16);
        assert_eq!(outcome.candidates.len(), 16);
        assert_eq!(
            outcome.plan,
            AllocationPlan {
                n_chains: 4,
                chain_length: 4
            }
        );
    }

    #[test]
    fn revision_pairs_with_no_incorrect_have_empty_contexts() {
        let q = Question::synthetic("q", env(1.0, 1, 9));
        let samples: Vec<Solution> = (0..8).map(|i| solution(0, &format!("s{i}"))).collect();
        let mut rng = seeded_rng(11, &["pairs"]);
        let examples = generate_revision_pairs(&q, &samples, &mut rng);
        assert_eq!(examples.len(), 8);
        assert!(examples.iter().all(|e| e.context_attempts.is_empty()));
    }

    #[test]
    fn revision_pairs_nearest_incorrect_goes_last() {
        let q = Question::synthetic("q", env(0.5, 1, 9));
        let samples = vec![
            solution(0, "answer alpha"),  // target
            solution(3, "answer alphb"),  // distance 1 from target
            solution(4, "totally different text"),
            solution(5, "answer gamma"),
        ];
        let mut rng = seeded_rng(12, &["pairs"]);
        // Run repeatedly: whenever the context is non-empty its final slot
        // must be the distance-1 sample.
        let mut saw_full_context = false;
        for _ in 0..50 {
            for example in generate_revision_pairs(&q, &samples, &mut rng) {
                if let Some(last) = example.context_attempts.last() {
                    assert_eq!(last.joined_text(), "answer alphb");
                }
                if example.context_attempts.len() == 3 {
                    saw_full_context = true;
                    // Without-replacement fill: no duplicates.
                    for (i, a) in example.context_attempts.iter().enumerate() {
                        for b in &example.context_attempts[i + 1..] {
                            assert_ne!(a.joined_text(), b.joined_text());
                        }
                    }
                }
                assert!(example
                    .context_attempts
                    .iter()
                    .all(|a| !a.is_correct(q.ground_truth)));
            }
        }
        assert!(saw_full_context, "never drew the maximum context size");
    }

    #[test]
    fn revision_pairs_single_incorrect_candidate() {
        let q = Question::synthetic("q", env(0.5, 1, 9));
        let samples = vec![solution(0, "good"), solution(2, "bad")];
        let mut rng = seeded_rng(13, &["pairs"]);
        for _ in 0..50 {
            let examples = generate_revision_pairs(&q, &samples, &mut rng);
            assert_eq!(examples.len(), 1);
            let ctx = &examples[0].context_attempts;
            assert!(ctx.len() <= 1);
            if let Some(only) = ctx.first() {
                assert_eq!(only.joined_text(), "bad");
            }
        }
    }

    #[test]
    fn revision_pairs_drop_unparsable_samples() {
        let q = Question::synthetic("q", env(0.5, 1, 9));
        let invalid = Solution {
            steps: vec![Step {
                text: "???".into(),
                on_track: Some(false),
            }],
            final_answer: FinalAnswer::Invalid,
            sample_success_prob: None,
        };
        let samples = vec![solution(0, "good"), invalid];
        let mut rng = seeded_rng(14, &["pairs"]);
        for _ in 0..20 {
            let examples = generate_revision_pairs(&q, &samples, &mut rng);
            assert_eq!(examples.len(), 1);
            assert!(examples[0].context_attempts.is_empty());
        }
    }

    #[test]
    fn revision_pairs_no_correct_samples_yield_nothing() {
        let q = Question::synthetic("q", env(0.0, 1, 9));
        let samples = vec![solution(1, "a"), solution(2, "b")];
        let mut rng = seeded_rng(15, &["pairs"]);
        assert!(generate_revision_pairs(&q, &samples, &mut rng).is_empty());
    }
}
