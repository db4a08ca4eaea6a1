//! Trial records and the in-memory result table experiments accumulate.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// One strategy evaluation on one question under one seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub question_id: String,
    /// Stable sweep-setting name, e.g. `beam_sqrt`.
    pub strategy: String,
    /// Requested generation budget.
    pub budget: u64,
    /// Whole-run cost by the strategy's formula (e.g. `N×(k+1)` for lookahead).
    pub nominal_cost: u64,
    /// Generations actually consumed; at most `nominal_cost`.
    pub actual_cost: u64,
    pub correct: bool,
    pub seed: u64,
}

impl TrialRecord {
    /// The resume/deduplication key: one record per (question, strategy,
    /// budget, seed) cell.
    pub fn key(&self) -> (&str, &str, u64, u64) {
        (&self.question_id, &self.strategy, self.budget, self.seed)
    }
}

/// A flat collection of trial records with the filters and accuracy helpers
/// selection code needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    records: Vec<TrialRecord>,
}

impl ResultTable {
    pub fn new() -> Self {
        ResultTable::default()
    }

    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        ResultTable { records }
    }

    pub fn push(&mut self, record: TrialRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.records.extend(other.records);
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sort into the canonical persistence order:
    /// (question_id, strategy, budget, seed).
    pub fn sort_canonical(&mut self) {
        self.records.sort_by(|a, b| {
            a.question_id
                .cmp(&b.question_id)
                .then_with(|| a.strategy.cmp(&b.strategy))
                .then_with(|| a.budget.cmp(&b.budget))
                .then_with(|| a.seed.cmp(&b.seed))
        });
    }

    /// Distinct strategy names, sorted.
    pub fn strategies(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.strategy) {
                out.push(r.strategy.clone());
            }
        }
        out.sort();
        out
    }

    /// Distinct budgets, ascending.
    pub fn budgets(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.budget) {
                out.push(r.budget);
            }
        }
        out.sort_unstable();
        out
    }

    /// Fraction of matching records that are correct; `None` when nothing
    /// matches.
    pub fn accuracy_where(&self, predicate: impl Fn(&TrialRecord) -> bool) -> Option<f64> {
        let mut total = 0usize;
        let mut correct = 0usize;
        for r in self.records.iter().filter(|r| predicate(r)) {
            total += 1;
            correct += usize::from(r.correct);
        }
        (total > 0).then(|| correct as f64 / total as f64)
    }

    pub fn accuracy_for(&self, strategy: &str, budget: u64) -> Option<f64> {
        self.accuracy_where(|r| r.strategy == strategy && r.budget == budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn record(q: &str, strategy: &str, budget: u64, correct: bool, seed: u64) -> TrialRecord {
        TrialRecord {
            question_id: q.to_string(),
            strategy: strategy.to_string(),
            budget,
            nominal_cost: budget,
            actual_cost: budget,
            correct,
            seed,
        }
    }

    #[test]
    fn accuracy_filters_by_strategy_and_budget() {
        let table = ResultTable::from_records(vec![
            record("q1", "a", 4, true, 0),
            record("q2", "a", 4, false, 0),
            record("q1", "b", 4, true, 0),
            record("q1", "a", 16, false, 0),
        ]);
        assert_eq!(table.accuracy_for("a", 4), Some(0.5));
        assert_eq!(table.accuracy_for("b", 4), Some(1.0));
        assert_eq!(table.accuracy_for("a", 16), Some(0.0));
        assert_eq!(table.accuracy_for("c", 4), None);
    }

    #[test]
    fn canonical_sort_orders_all_key_fields() {
        let mut table = ResultTable::from_records(vec![
            record("q2", "a", 4, true, 0),
            record("q1", "b", 4, true, 1),
            record("q1", "b", 4, true, 0),
            record("q1", "a", 16, true, 0),
            record("q1", "a", 4, true, 0),
        ]);
        table.sort_canonical();
        let keys: Vec<_> = table
            .records()
            .iter()
            .map(|r| {
                (
                    r.question_id.clone(),
                    r.strategy.clone(),
                    r.budget,
                    r.seed,
                )
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn distinct_strategies_and_budgets_are_sorted() {
        let table = ResultTable::from_records(vec![
            record("q1", "b", 16, true, 0),
            record("q1", "a", 4, true, 0),
            record("q2", "b", 4, false, 0),
        ]);
        assert_eq!(table.strategies(), vec!["a".to_string(), "b".to_string()]);
        assert_eq!(table.budgets(), vec![4, 16]);
    }
}
