//! Task middleware and executable protocol sessions over the emulated
//! transceiver.
//!
//! [`middleware_dispatch`] maps a task request to a protocol. [`run_qds`],
//! [`run_qss_b`] and [`run_qkd_f`] execute a full session, from state
//! distribution through phase recovery to the final decision or key, and
//! return a [`ProtocolReport`].

pub mod elimination;
pub mod error;
pub mod keying;
pub mod legs;
pub mod middleware;
pub mod qds;
pub mod qss;
pub mod report;

pub use elimination::{eliminate_two, postselect_mask};
pub use error::{ProtocolError, Result};
pub use legs::HardwareProfile;
pub use middleware::{
    middleware_dispatch, Capabilities, Detection, Direction, ProtocolInstance, Registry, RegistryEntry, Task,
    TaskRequest,
};
pub use qds::{run_qds, swap_partition, QdsParams, Thresholds, MIN_ACCEPTED_PER_HALF};
pub use qss::{run_qkd_f, run_qss_b, KeyParams};
pub use report::{Adversary, Figures, HalfCheck, KeyOutcome, ProtocolReport, QdsOutcome, RecipientCheck, REPORT_SCHEMA};
