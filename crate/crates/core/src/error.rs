use alloc::vec::Vec;
use core::fmt;

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamViolation {
    /// Name of the offending field, as used in configuration files.
    pub field: &'static str,
    /// What is wrong with it.
    pub reason: &'static str,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// One or more parameter invariants are violated.
    #[error("invalid parameters: {}", Violations(.0))]
    InvalidParams(Vec<ParamViolation>),
    /// Negative moment orders other than -1 are not supported.
    #[error("unsupported moment order b = {0} (allowed: b >= 0 or b = -1)")]
    UnsupportedOrder(f64),
    /// Rejection sampling inside a cell failed to find a covering disk.
    #[error("cell sampling failed for base station {bs}: no covering disk up to radius {radius_cap:.1} m")]
    CellSampling {
        /// Index of the base station whose cell could not be sampled.
        bs: usize,
        /// Largest disk radius tried.
        radius_cap: f64,
    },
    /// A statistical routine was called with too few samples.
    #[error("too few samples: {got} < {min}")]
    TooFewSamples {
        /// Number requested.
        got: usize,
        /// Minimum accepted.
        min: usize,
    },
    /// An argument outside its domain.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument {
        /// Argument name.
        name: &'static str,
        /// What is wrong with it.
        reason: &'static str,
    },
}

struct Violations<'a>(&'a [ParamViolation]);

impl fmt::Display for Violations<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
