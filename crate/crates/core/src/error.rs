use alloc::string::String;

/// Errors reported by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Parameters outside the domain of an operation (bad code parameters,
    /// resource guards, shape mismatches supplied by the caller).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation exceeded a configured size limit.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    /// Index spaces of messages or weights do not match the schedule.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The randomized search ran out of attempts.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    /// Pruning would leave an iteration without check nodes.
    #[error("iteration {iteration} would become empty")]
    EmptyIteration { iteration: usize },

    /// A non-finite gradient reached the optimizer.
    #[error("non-finite gradient in weight slot {slot}")]
    NonFiniteGradient { slot: String },

    /// Training diverged (non-finite validation loss).
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
