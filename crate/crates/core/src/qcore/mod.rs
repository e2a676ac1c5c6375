//! Phase-space and Fock-space numerics shared by every other module.

pub mod coherent;
pub mod fock;
pub mod hetero;
pub mod linalg;
pub mod quad;
pub mod special;

pub use coherent::{
    coherent_overlap, gram_spectrum_entropy, i_pow, weighted_gram, Alphabet, CoherentSymbol,
    ComplexSample, StateEnsemble,
};
pub use fock::{ensemble_to_fock, von_neumann_entropy, FockDensityMatrix};
pub use hetero::{db_to_transmittance, heterodyne_pdf, DetectorParams, Link, NoiseModel};
pub use special::{binary_entropy, erfc, inv_binary_entropy, norm_cdf};
