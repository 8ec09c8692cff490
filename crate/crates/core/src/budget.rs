use crate::error::{Error, Result};

/// Environment variable overriding [`Budget::DEFAULT_MAX_COMPLEXES`].
pub const BUDGET_ENV: &str = "SNF_MAX_COMPLEXES";

/// Caps on the size of enumerations. Exceeding a cap is an [`Error::Resource`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_complexes: u128,
}

impl Budget {
    pub const DEFAULT_MAX_COMPLEXES: u128 = 2_000_000;

    /// Reads `SNF_MAX_COMPLEXES`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        let max_complexes = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|s| s.trim().replace('_', "").parse().ok())
            .unwrap_or(Self::DEFAULT_MAX_COMPLEXES);
        Budget { max_complexes }
    }

    pub fn unlimited() -> Self {
        Budget {
            max_complexes: u128::MAX,
        }
    }

    pub fn check(&self, what: &str, requested: u128) -> Result<()> {
        if requested > self.max_complexes {
            return Err(Error::Resource {
                what: what.to_string(),
                requested,
                limit: self.max_complexes,
            });
        }
        Ok(())
    }

    /// Checks `n^m` without overflowing.
    pub fn check_pow(&self, what: &str, n: usize, m: u32) -> Result<()> {
        let requested = (n as u128).checked_pow(m).unwrap_or(u128::MAX);
        self.check(what, requested)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::from_env()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_overflow_is_resource_error() {
        let b = Budget { max_complexes: 10 };
        assert!(b.check_pow("x", 3, 2).is_ok());
        assert!(matches!(
            b.check_pow("x", 7, 200),
            Err(Error::Resource { .. })
        ));
    }
}
