//! Command-line front end: security analysis of operating points, end-to-end
//! protocol simulation and loss sweeps, all written as CSV and JSON.
//!
//! Every output embeds the SHA-256 of the resolved configuration and the
//! master seed.

pub mod analyze;
pub mod config;
pub mod error;
pub mod output;
pub mod simulate;
pub mod sweep;

pub use analyze::{cmd_analyze, default_attack, evaluate, OperatingPoint, PointResult};
pub use config::RunConfig;
pub use error::{CliError, Result};
pub use simulate::cmd_simulate;
pub use sweep::{cmd_sweep, FIGURES};

/// Plain-text table of the presets.
pub fn presets_table() -> String {
    let mut s = String::from("name  distance_km  loss_dB  alpha  xi_measured  qds_b_L   qds_f_L   qss_2kappa  qkd_kappa\n");
    for r in qnic_core::presets::RUNS {
        let f = r.reference;
        s.push_str(&format!(
            "{:<5} {:>11} {:>8} {:>6} {:>12}  {:<9} {:<9} {:<11} {}\n",
            r.name,
            r.distance_km,
            r.loss_db,
            r.amplitude,
            r.xi_measured,
            f.qds_b_l.map_or("-".to_string(), |l| format!("{l:.3e}")),
            format!("{:.3e}", f.qds_f_l),
            f.qss_two_kappa,
            f.qkd_kappa
        ));
    }
    s
}
