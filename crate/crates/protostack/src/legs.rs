//! Quantum distribution legs run over the emulated transceiver.

use serde::{Deserialize, Serialize};

use qnic_core::channels::SeededRandomSource;
use qnic_core::qcore::{Alphabet, ComplexSample, Link};
use qnic_core::C64;
use qnic_hwsim::{
    generate_tx, recover_phase, simulate_rx, FrameConfig, PhaseDrift, RecoveryParams, RxRecord, Session, TxRecord,
};

use crate::error::Result;

/// Transceiver settings shared by every leg of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    pub frame: FrameConfig,
    pub drift: PhaseDrift,
    pub recovery: RecoveryParams,
    pub jitter_rel: f64,
}

impl Default for HardwareProfile {
    /// Phase-stable link; recovery may still drop frames on noisy references.
    fn default() -> Self {
        Self {
            frame: FrameConfig::default(),
            drift: PhaseDrift::none(),
            recovery: RecoveryParams::default(),
            jitter_rel: 0.0,
        }
    }
}

/// Data slots of one leg after phase recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct LegData {
    /// Sent alphabet index per data slot.
    pub sent: Vec<u8>,
    /// Sent amplitude per data slot, jitter included.
    pub sent_amp: Vec<C64>,
    /// Phase-corrected outcome per data slot.
    pub samples: Vec<ComplexSample>,
    /// Data slot survived frame rejection.
    pub dsp_ok: Vec<bool>,
    pub tx: TxRecord,
    pub rx: RxRecord,
}

impl LegData {
    pub fn len(&self) -> usize {
        self.sent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sent.is_empty()
    }

    pub fn session(&self, params: serde_json::Value) -> Result<Session> {
        Ok(Session::new(self.tx.clone(), self.rx.clone(), params)?)
    }
}

pub fn transmit(
    l: usize,
    alphabet: &Alphabet,
    hw: &HardwareProfile,
    rng: &SeededRandomSource,
) -> Result<TxRecord> {
    Ok(generate_tx(l, alphabet, hw.frame, hw.jitter_rel, &rng.child("tx", 0))?)
}

/// Sends `tx` over `link` and recovers the phase.
pub fn receive(tx: &TxRecord, link: &Link, hw: &HardwareProfile, rng: &SeededRandomSource) -> Result<LegData> {
    let raw = simulate_rx(tx, &link.noise, &link.det, &hw.drift, &rng.child("rx", 0))?;
    let rx = recover_phase(&raw, tx, &hw.recovery)?;
    let idx: Vec<usize> = tx.data_indices().collect();
    Ok(LegData {
        sent: idx.iter().map(|&i| tx.symbols[i].symbol.index).collect(),
        sent_amp: idx.iter().map(|&i| tx.symbols[i].symbol.amplitude).collect(),
        samples: idx.iter().map(|&i| rx.corrected[i]).collect(),
        dsp_ok: idx.iter().map(|&i| rx.accepted[i]).collect(),
        tx: tx.clone(),
        rx,
    })
}

/// One independent leg: fresh transmitter and receiver streams.
pub fn run_leg(l: usize, alphabet: &Alphabet, link: &Link, hw: &HardwareProfile, rng: &SeededRandomSource) -> Result<LegData> {
    let tx = transmit(l, alphabet, hw, rng)?;
    receive(&tx, link, hw, rng)
}

/// Two independent legs, run concurrently.
pub fn run_leg_pair(
    l: usize,
    alphabet: &Alphabet,
    links: (&Link, &Link),
    hw: &HardwareProfile,
    rng: &SeededRandomSource,
) -> Result<(LegData, LegData)> {
    let (b, c) = rayon::join(
        || run_leg(l, alphabet, links.0, hw, &rng.child("leg-b", 0)),
        || run_leg(l, alphabet, links.1, hw, &rng.child("leg-c", 0)),
    );
    Ok((b?, c?))
}

/// One transmission received on two links (same states to both recipients).
pub fn run_broadcast(
    l: usize,
    alphabet: &Alphabet,
    links: (&Link, &Link),
    hw: &HardwareProfile,
    rng: &SeededRandomSource,
) -> Result<(LegData, LegData)> {
    let tx = transmit(l, alphabet, hw, &rng.child("sender", 0))?;
    let (b, c) = rayon::join(
        || receive(&tx, links.0, hw, &rng.child("leg-b", 0)),
        || receive(&tx, links.1, hw, &rng.child("leg-c", 0)),
    );
    Ok((b?, c?))
}
