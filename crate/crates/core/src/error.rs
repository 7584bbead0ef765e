use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("count exposure requires binary attribute")]
    CountRequiresBinary,

    #[error("coarsening map has no label for exposure {0}")]
    MissingCoarsening(String),

    #[error("no focal units")]
    NoFocalUnits,

    #[error("empty exposure arm")]
    EmptyArm,

    #[error(
        "degenerate stratum cell: attribute {attribute}, exposure arm {arm} has {count} unit(s)"
    )]
    DegenerateCell {
        attribute: u32,
        arm: &'static str,
        count: usize,
    },

    #[error("zero denominator")]
    ZeroDenominator,

    #[error("no c with p(c) >= alpha; widen grid or check model")]
    EmptyConfidenceSet,

    #[error("observed assignment is not in the support of the declared design: {0}")]
    NotInSupport(String),

    #[error("conditioning event is unreachable under the design")]
    UnreachableFocalSet,

    #[error("enumeration guard exceeded: support size {size} > guard {guard}")]
    GuardExceeded { size: String, guard: u64 },

    #[error("rejection sampler exceeded its cap of {cap} attempts")]
    AttemptCapExceeded { cap: u64 },
}

impl Error {
    /// True for errors raised by computational guards (enumeration size,
    /// rejection attempt caps) rather than by invalid input.
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            Error::GuardExceeded { .. } | Error::AttemptCapExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
