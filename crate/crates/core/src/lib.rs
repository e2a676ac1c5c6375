//! Numerics, channel models and security analysis for QPSK coherent-state
//! quantum cryptography with heterodyne detection.
//!
//! * [`qcore`]: coherent-state algebra, Fock-space density matrices, entropies,
//!   special functions, quadrature and the heterodyne outcome law.
//! * [`channels`]: Monte Carlo transmission and the eavesdropper's conditional
//!   states for beamsplitter and entangling-cloner attacks.
//! * [`secanalysis`]: error probabilities with postselection, signature lengths,
//!   abort bounds, Devetak-Winter rates and optimizers.

pub mod channels;
pub mod error;
pub mod presets;
pub mod qcore;
pub mod secanalysis;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
