use thiserror::Error;

use crate::middleware::{Direction, Task};

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("no registered protocol performs {task:?} in the {direction:?} configuration")]
    UnsupportedTask { task: Task, direction: Direction },

    #[error("invalid parameters: {0}")]
    Invalid(String),

    #[error("postselection left {accepted} elements in a signature half, need at least {required}")]
    InsufficientAccepted { accepted: usize, required: usize },

    #[error("estimated key rate {kappa:.4e} is not positive; protocol aborts")]
    RateNonPositive { kappa: f64 },

    #[error("secret of {secret} bits exceeds the {key} key bits available")]
    SecretTooLong { secret: usize, key: usize },

    #[error(transparent)]
    Core(#[from] qnic_core::Error),

    #[error(transparent)]
    Hardware(#[from] qnic_hwsim::HwError),
}
