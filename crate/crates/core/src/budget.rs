use std::sync::atomic::{AtomicU64, Ordering};

/// A cap on the number of index sequences visited, shared by every
/// enumeration that runs under it (including concurrent ones).
#[derive(Debug)]
pub struct WorkBudget {
    cap: u64,
    used: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("enumeration overflow: work budget of {cap} sequences exhausted")]
pub struct BudgetExceeded {
    pub cap: u64,
}

impl WorkBudget {
    pub fn new(cap: u64) -> Self {
        Self {
            cap,
            used: AtomicU64::new(0),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed).min(self.cap)
    }

    /// Records `amount` units of work, failing once the total passes the cap.
    pub fn charge(&self, amount: u64) -> Result<(), BudgetExceeded> {
        let before = self.used.fetch_add(amount, Ordering::Relaxed);
        if before.saturating_add(amount) > self.cap {
            Err(BudgetExceeded { cap: self.cap })
        } else {
            Ok(())
        }
    }
}
