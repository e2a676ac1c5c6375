//! `simulate`: one full protocol session over the emulated transceiver.
//!
//! Writes `report.json`, the Tx/Rx records of every leg under `records/`
//! (when `save_records` is set) and `manifest.json` with the SHA-256 of each
//! file. All randomness derives from the master seed.

use serde::Serialize;

use qnic_core::channels::SeededRandomSource;
use qnic_core::presets::Protocol;
use qnic_core::qcore::Alphabet;
use qnic_hwsim::{save_session, PhaseDrift};
use qnic_protostack::keying::random_bits;
use qnic_protostack::report::{Player, SinglePlayerOutcome};
use qnic_protostack::{run_qds, run_qkd_f, run_qss_b, Direction, HardwareProfile, KeyParams, ProtocolReport, QdsParams, Thresholds};

use crate::analyze::{preset_of, qds_budget, qds_point, qss_gauge, require_protocol, OperatingPoint};
use crate::config::{Dishonest, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{self, OUTPUT_SCHEMA};

/// Session length for key protocols when `length` is not set.
pub const DEFAULT_KEY_LENGTH: usize = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub protocol: Protocol,
    pub l: usize,
    /// Signing: both recipients accepted. Key runs: the secret was recovered.
    pub success: bool,
    pub share_exclusivity: Option<SinglePlayerOutcome>,
    pub files: Vec<(String, String)>,
}

fn hardware(cfg: &RunConfig) -> HardwareProfile {
    HardwareProfile {
        drift: if cfg.drift_rate > 0.0 {
            PhaseDrift::random_walk(cfg.drift_rate)
        } else {
            PhaseDrift::none()
        },
        jitter_rel: cfg.jitter_rel,
        ..HardwareProfile::default()
    }
}

fn run(cfg: &RunConfig, op: &OperatingPoint, rng: &SeededRandomSource) -> Result<(ProtocolReport, serde_json::Value)> {
    let alphabet = Alphabet::qpsk(op.amplitude);
    match op.protocol {
        Protocol::QdsB | Protocol::QdsF => {
            if cfg.dishonest.is_some() {
                return Err(CliError::Usage("`dishonest` applies to secret sharing; use `adversary` for signing".into()));
            }
            let point = qds_point(cfg, op)?;
            let (region, budget) = qds_budget(cfg, &point)?;
            let l = cfg.length.unwrap_or((budget.l_tilde as usize).next_multiple_of(2));
            let mut params = QdsParams::new(alphabet, op.link, op.link, region);
            params.hardware = hardware(cfg);
            params.keep_records = cfg.save_records;
            let direction = match op.protocol {
                Protocol::QdsB => Direction::Backward,
                _ => Direction::Forward,
            };
            let report = run_qds(direction, l, &params, &Thresholds::from_budget(&budget), cfg.message, rng, cfg.adversary)?;
            Ok((report, serde_json::json!({ "budget": budget, "region": region })))
        }
        Protocol::QssB | Protocol::QkdF => {
            if cfg.adversary.is_some() {
                return Err(CliError::Usage("`adversary` applies to signing runs".into()));
            }
            let mut params = KeyParams::new(alphabet, op.link, op.link);
            params.attack = op.attack;
            params.hardware = hardware(cfg);
            params.bins = cfg.bins;
            params.keep_records = cfg.save_records;
            if let Some(n) = cfg.secret_bits {
                params.secret = random_bits(n, &mut rng.child("secret-input", 0));
            }
            let l = cfg.length.unwrap_or(DEFAULT_KEY_LENGTH);
            if op.protocol == Protocol::QssB {
                let rate = qss_gauge(cfg, op)?;
                params.kappa = Some(rate.kappa_final);
                let report = run_qss_b(l, rate.g, rate.h, &params, rng, cfg.efficiency)?;
                Ok((report, serde_json::json!({ "rate": rate })))
            } else {
                if cfg.dishonest.is_some() {
                    return Err(CliError::Usage("`dishonest` applies to secret sharing".into()));
                }
                let report = run_qkd_f(l, &params, rng, cfg.efficiency)?;
                Ok((report, serde_json::Value::Null))
            }
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateSummary> {
    cfg.validate()?;
    let protocol = require_protocol(cfg)?;
    let preset = preset_of(cfg)?;
    let op = OperatingPoint::resolve(cfg, protocol, preset, None)?;
    let rng = SeededRandomSource::new(cfg.seed);
    let (mut report, analysis) = run(cfg, &op, &rng)?;
    let hash = cfg.hash();

    let success = match (&report.qds, &report.key) {
        (Some(q), _) => q.bob.accept && q.charlie.accept,
        (None, Some(k)) => k.reconstructed_exact,
        _ => false,
    };
    let share_exclusivity = cfg.dishonest.and_then(|d| {
        let player = match d {
            Dishonest::Bob => Player::Bob,
            Dishonest::Charlie => Player::Charlie,
        };
        report.key.as_ref()?.single_player.iter().find(|s| s.player == player).copied()
    });

    std::fs::create_dir_all(&cfg.out)?;
    let records = cfg.out.join("records");
    for (name, session) in &mut report.sessions {
        let p = &mut session.header.params;
        if !p.is_object() {
            *p = serde_json::json!({});
        }
        p["config_sha256"] = hash.clone().into();
        p["seed"] = cfg.seed.into();
        p["protocol"] = protocol.name().into();
        save_session(&records, name, session)?;
    }
    let doc = serde_json::json!({
        "schema": OUTPUT_SCHEMA,
        "command": "simulate",
        "config_sha256": hash,
        "seed": cfg.seed,
        "config": cfg,
        "operating_point": op,
        "analysis": analysis,
        "success": success,
        "share_exclusivity": share_exclusivity,
        "report": report,
    });
    output::write_json(&cfg.out.join("report.json"), &doc)?;

    let manifest_path = cfg.out.join("manifest.json");
    let files: Vec<(String, String)> = output::hash_tree(&cfg.out)?
        .into_iter()
        .filter(|(name, _)| name != "manifest.json")
        .collect();
    let manifest = serde_json::json!({
        "schema": OUTPUT_SCHEMA,
        "config_sha256": hash,
        "seed": cfg.seed,
        "files": files.iter().map(|(n, h)| serde_json::json!({ "path": n, "sha256": h })).collect::<Vec<_>>(),
    });
    output::write_json(&manifest_path, &manifest)?;

    Ok(SimulateSummary {
        protocol,
        l: report.figures.l,
        success,
        share_exclusivity,
        files,
    })
}
