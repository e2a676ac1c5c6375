//! Channel and attack models: Monte Carlo transmission and the eavesdropper's
//! conditional states for beamsplitter and entangling-cloner attacks.

pub mod attack;
pub mod cloner;
pub mod rng;
pub mod transmit;

pub use attack::{
    eve_states_beamsplitter, eve_states_cloner, holevo_information, AttackModel, EveConditionalStates,
    EveState,
};
pub use cloner::{tmsv_variance, ClonerPurification};
pub use rng::{derive_seed, SeededRandomSource};
pub use transmit::{transmit_amplitude, transmit_symbol};
