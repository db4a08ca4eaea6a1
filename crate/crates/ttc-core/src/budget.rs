//! Generation-budget accounting.
//!
//! One unit is one sampled full solution. Search methods that sample
//! individual steps convert step counts into whole-generation units before
//! charging, so every strategy family is compared on the same axis.

/// Tracks generations consumed against an allotment. The invariant
/// `consumed <= allotted` holds at all times; overcharging is an error, not a
/// saturation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetLedger {
    allotted: u64,
    consumed: u64,
}

impl BudgetLedger {
    pub fn new(allotted: u64) -> Self {
        BudgetLedger {
            allotted,
            consumed: 0,
        }
    }

    pub fn allotted(&self) -> u64 {
        self.allotted
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.allotted - self.consumed
    }

    /// Record `cost` generations. Fails without mutating when the allotment
    /// would be exceeded — that always signals a strategy misconfiguration.
    pub fn charge(&mut self, cost: u64) -> Result<(), BudgetExceeded> {
        let next = self.consumed.saturating_add(cost);
        if next > self.allotted {
            return Err(BudgetExceeded {
                allotted: self.allotted,
                consumed: self.consumed,
                requested: cost,
            });
        }
        self.consumed = next;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("budget exceeded: {consumed}/{allotted} consumed, {requested} more requested")]
pub struct BudgetExceeded {
    pub allotted: u64,
    pub consumed: u64,
    pub requested: u64,
}
