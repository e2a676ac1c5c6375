//! Per-frame phase recovery from the reference block and frame rejection.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qnic_core::qcore::ComplexSample;
use qnic_core::C64;

use crate::error::{HwError, Result};
use crate::rx::RxRecord;
use crate::tx::TxRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams {
    /// Largest reference-phase change between consecutive frames (rad)
    /// before the earlier frame is rejected.
    pub slip_threshold: f64,
    /// Estimates within this many standard errors of zero are not applied.
    pub dead_band_sigmas: f64,
    /// Frames whose reference SNR (|mean ratio|^2 / variance) is below this are rejected.
    pub min_ref_snr: f64,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            slip_threshold: 0.21,
            dead_band_sigmas: 5.0,
            min_ref_snr: 0.0,
        }
    }
}

/// Reference-block estimate for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameEstimate {
    pub phase: f64,
    /// Uses the reference variance pooled over all frames.
    pub std_error: f64,
    pub snr: f64,
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Rotates by -phi; exact identity at phi = 0.
pub fn derotate(s: ComplexSample, phi: f64) -> ComplexSample {
    if phi == 0.0 {
        return s;
    }
    let z = s.as_c64() * C64::from_polar(1.0, -phi);
    ComplexSample { re: z.re, im: z.im }
}

struct RefStats {
    mean: C64,
    n: usize,
    /// Sum of |r - mean|^2 over the block.
    ss: f64,
}

fn ref_stats(tx: &TxRecord, rx: &RxRecord, f: usize) -> Result<RefStats> {
    let ratios: Vec<C64> = tx
        .frame(f)
        .filter(|&i| tx.symbols[i].is_ref)
        .map(|i| rx.raw[i].as_c64() / tx.symbols[i].symbol.amplitude)
        .collect();
    let n = ratios.len();
    if n == 0 {
        return Err(HwError::DegenerateFrame { frame: f });
    }
    let mean = ratios.iter().sum::<C64>() / n as f64;
    let ss = ratios.iter().map(|r| (r - mean).norm_sqr()).sum();
    Ok(RefStats { mean, n, ss })
}

/// Phase of the mean received/expected reference ratio in every frame.
///
/// Four references give a poor per-frame variance, so the ratio variance is
/// pooled over frames before forming standard errors.
pub fn frame_estimates(tx: &TxRecord, rx: &RxRecord) -> Result<Vec<FrameEstimate>> {
    let stats: Vec<RefStats> = (0..tx.n_frames())
        .into_par_iter()
        .map(|f| ref_stats(tx, rx, f))
        .collect::<Result<_>>()?;
    let dof: usize = stats.iter().map(|s| s.n - 1).sum();
    let pooled = if dof > 0 { stats.iter().map(|s| s.ss).sum::<f64>() / dof as f64 } else { 0.0 };
    Ok(stats
        .iter()
        .map(|s| FrameEstimate {
            phase: s.mean.arg(),
            std_error: (0.5 * pooled / s.n as f64).sqrt() / s.mean.norm(),
            snr: if pooled > 0.0 { s.mean.norm_sqr() / pooled } else { f64::INFINITY },
        })
        .collect())
}

/// Removes the per-frame reference phase and marks rejected frames.
pub fn recover_phase(rx: &RxRecord, tx: &TxRecord, params: &RecoveryParams) -> Result<RxRecord> {
    if rx.len() != tx.symbols.len() {
        return Err(HwError::Mismatch(format!("{} received vs {} sent", rx.len(), tx.symbols.len())));
    }
    let est = frame_estimates(tx, rx)?;
    let nf = est.len();
    let slips: Vec<f64> = est.windows(2).map(|w| wrap(w[1].phase - w[0].phase).abs()).collect();
    let mut out = RxRecord {
        raw: rx.raw.clone(),
        corrected: Vec::with_capacity(rx.len()),
        accepted: Vec::with_capacity(rx.len()),
        survival_fraction: 0.0,
        frame_phases: Vec::with_capacity(nf),
    };
    for (f, e) in est.iter().enumerate() {
        let phi = if e.phase.abs() <= params.dead_band_sigmas * e.std_error { 0.0 } else { e.phase };
        let slip = if f + 1 < nf { slips.get(f) } else { f.checked_sub(1).and_then(|p| slips.get(p)) };
        let ok = slip.map_or(true, |s| *s <= params.slip_threshold) && e.snr >= params.min_ref_snr;
        out.frame_phases.push(phi);
        for i in tx.frame(f) {
            out.corrected.push(derotate(rx.raw[i], phi));
            out.accepted.push(ok);
        }
    }
    let kept = out.accepted.iter().filter(|a| **a).count();
    out.survival_fraction = kept as f64 / out.accepted.len().max(1) as f64;
    Ok(out)
}

/// Recomputes corrected samples and the mask from stored frame phases.
pub(crate) fn apply_frame_phases(tx: &TxRecord, raw: &[ComplexSample], phases: &[f64]) -> Vec<ComplexSample> {
    let mut out = Vec::with_capacity(raw.len());
    for (f, phi) in phases.iter().enumerate() {
        for i in tx.frame(f) {
            out.push(derotate(raw[i], *phi));
        }
    }
    out
}
