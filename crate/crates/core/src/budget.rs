use crate::error::{Error, Result};

/// Environment variable overriding [`DepthBudget::DEFAULT`].
pub const DEPTH_BUDGET_ENV: &str = "CANTOR_BAYES_DEPTH_BUDGET";

/// Upper bound on word lengths for operations that enumerate all `2^n`
/// words of a length. Single-cylinder evaluation is polynomial and is not
/// bounded by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthBudget(pub usize);

impl DepthBudget {
    pub const DEFAULT: DepthBudget = DepthBudget(24);

    /// Reads the budget from `CANTOR_BAYES_DEPTH_BUDGET`, falling back to the
    /// default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(DEPTH_BUDGET_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(DepthBudget)
                .map_err(|_| Error::spec(format!("{DEPTH_BUDGET_ENV}={v:?} is not a nonnegative integer"))),
            Err(_) => Ok(Self::DEFAULT),
        }
    }

    pub fn check(&self, depth: usize) -> Result<()> {
        if depth > self.0 {
            Err(Error::DepthOverflow { requested: depth, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for DepthBudget {
    fn default() -> Self {
        Self::DEFAULT
    }
}
