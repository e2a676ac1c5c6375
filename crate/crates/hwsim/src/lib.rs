//! Emulated transmitter and receiver hardware for framed QPSK links.
//!
//! A [`TxRecord`] holds framed symbols (reference block first), [`simulate_rx`]
//! passes them through a lossy, noisy channel with a drifting phase reference,
//! [`recover_phase`] undoes the drift per frame and rejects slipped frames, and
//! [`estimate_channel`] recovers transmittance and excess noise.

pub mod error;
pub mod estimate;
pub mod persist;
pub mod recovery;
pub mod rx;
pub mod tx;

pub use error::{HwError, Result};
pub use estimate::{estimate_channel, EstimatedParams, MIN_ESTIMATION_SYMBOLS};
pub use persist::{load_session, read_csv, save_session, write_csv, RecordHeader, RecordRow, Session};
pub use recovery::{recover_phase, RecoveryParams};
pub use rx::{simulate_rx, PhaseDrift, RxRecord};
pub use tx::{generate_tx, FrameConfig, TxRecord, TxSymbol};
