//! Security analysis: honest error rates with postselection, forger bounds
//! for both QDS directions, signature lengths, and QSS / QKD key rates.

pub mod optimize;
pub mod perr;
pub mod qds;
pub mod rates;
pub mod region;

pub use optimize::{
    evaluate_region, optimize_gh, optimize_region, GhGrid, QdsKind, QdsPoint, RegionEvaluation, RegionGrid,
    RegionOptimum,
};
pub use perr::{perr_cubature, perr_honest, perr_honest_alphabet, quadrant_probabilities, sector_probability, HonestError};
pub use qds::{
    abort_bounds, pe_from_chi, pe_qds_b, pe_qds_f, thresholds_and_length, AbortBounds, ForgerModel, PeResult,
    SecurityBudget,
};
pub use rates::{
    qkd_f_rate, qss_holevo, qss_mutual_information, qss_rate, rate_tolerance, single_link_mutual_information, Leg,
    QssRate, RateBreakdown, RateVariant,
};
pub use region::PostselectionRegion;
