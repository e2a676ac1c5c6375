//! Versioned run report.
//!
//! JSON fields (schema 1): `schema`, `protocol`, `master_seed`, `parameters`,
//! `figures`, `qds` (signing runs), `key` (secret-sharing and key runs).
//! Optional figures are `null` when not computed.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qnic_core::presets::Protocol;
use qnic_hwsim::Session;

use crate::error::{ProtocolError, Result};
use crate::middleware::Direction;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Figures {
    /// States distributed per signature pool or key session.
    pub l: usize,
    /// Signature length from the security analysis.
    pub l_security: Option<f64>,
    pub l_tilde: Option<f64>,
    pub kappa: Option<f64>,
    pub two_kappa: Option<f64>,
    /// Analytic postselection acceptance N.
    pub acceptance: Option<f64>,
    pub p_e: Option<f64>,
    pub p_err: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfCheck {
    pub accepted: usize,
    pub mismatches: usize,
    pub threshold: f64,
    /// mismatches < threshold * accepted
    pub pass: bool,
}

impl HalfCheck {
    pub fn new(accepted: usize, mismatches: usize, threshold: f64) -> Self {
        Self {
            accepted,
            mismatches,
            threshold,
            pass: (mismatches as f64) < threshold * accepted as f64,
        }
    }

    pub fn rate(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.mismatches as f64 / self.accepted as f64
        }
    }
}

/// One recipient's verdict: its own half and the half received in the swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecipientCheck {
    pub own: HalfCheck,
    pub received: HalfCheck,
    pub accept: bool,
}

impl RecipientCheck {
    pub fn new(own: HalfCheck, received: HalfCheck) -> Self {
        Self {
            own,
            received,
            accept: own.pass && received.pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adversary {
    /// Declares uniformly random eliminations for the unknown half.
    RandomGuess,
    /// Taps the victim's line with the lost fraction and declares the
    /// likelihood-optimal guess.
    BeamsplitterForger,
}

impl std::str::FromStr for Adversary {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-guess" => Ok(Self::RandomGuess),
            "beamsplitter-forger" => Ok(Self::BeamsplitterForger),
            other => Err(ProtocolError::Invalid(format!("unknown adversary '{other}'"))),
        }
    }
}

/// Bob forging a message towards Charlie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgeryOutcome {
    pub adversary: Adversary,
    pub check: RecipientCheck,
    /// Mismatch rate on the half the forger could not see.
    pub blind_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdsOutcome {
    pub direction: Direction,
    pub message: bool,
    /// Accepted elements per leg of the declared pool (Bob's line, Charlie's line).
    pub accepted: [usize; 2],
    pub bob: RecipientCheck,
    pub charlie: RecipientCheck,
    /// Honest mismatch frequency over all accepted elements of the declared pool.
    pub p_err_estimate: f64,
    pub forgery: Option<ForgeryOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Player {
    Bob,
    Charlie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePlayerOutcome {
    pub player: Player,
    pub bit_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyOutcome {
    /// Elements kept for key generation.
    pub n_used: usize,
    pub bins: usize,
    pub raw_bits: usize,
    pub key_bits: usize,
    pub kappa: f64,
    pub efficiency: f64,
    /// Reconciliation side information disclosed (bits).
    pub leak_bits: usize,
    pub secret_bits: usize,
    pub reconstructed_exact: bool,
    pub bit_agreement: f64,
    pub single_player: Vec<SinglePlayerOutcome>,
    pub key_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub schema: u32,
    pub protocol: Protocol,
    pub master_seed: u64,
    pub parameters: serde_json::Value,
    pub figures: Figures,
    pub qds: Option<QdsOutcome>,
    pub key: Option<KeyOutcome>,
    /// Transceiver records, persisted separately.
    #[serde(skip)]
    pub sessions: Vec<(String, Session)>,
}

impl ProtocolReport {
    pub fn new(protocol: Protocol, master_seed: u64, parameters: serde_json::Value) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            protocol,
            master_seed,
            parameters,
            figures: Figures::default(),
            qds: None,
            key: None,
            sessions: Vec::new(),
        }
    }

    /// Every probability-valued field, by name.
    pub fn probabilities(&self) -> Vec<(&'static str, f64)> {
        let f = &self.figures;
        let mut out: Vec<(&'static str, f64)> = [("acceptance", f.acceptance), ("p_e", f.p_e), ("p_err", f.p_err)]
            .into_iter()
            .filter_map(|(n, v)| v.map(|v| (n, v)))
            .collect();
        if let Some(q) = &self.qds {
            out.push(("p_err_estimate", q.p_err_estimate));
            for c in [q.bob, q.charlie] {
                out.extend([("rate", c.own.rate()), ("rate", c.received.rate())]);
                out.extend([("threshold", c.own.threshold), ("threshold", c.received.threshold)]);
            }
            if let Some(fo) = &q.forgery {
                out.push(("blind_rate", fo.blind_rate));
            }
        }
        if let Some(k) = &self.key {
            out.push(("bit_agreement", k.bit_agreement));
            out.extend(k.single_player.iter().map(|s| ("single_player", s.bit_agreement)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in self.probabilities() {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProtocolError::Invalid(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ProtocolError::Invalid(e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
