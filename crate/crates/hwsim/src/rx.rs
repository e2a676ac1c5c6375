//! Receiver: transmission through the channel with a drifting phase reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qnic_core::channels::{transmit_symbol, SeededRandomSource};
use qnic_core::qcore::{CoherentSymbol, ComplexSample, DetectorParams, NoiseModel};
use qnic_core::C64;

use crate::error::{HwError, Result};
use crate::tx::TxRecord;

/// Phase of the receiver's reference relative to the sender.
///
/// theta_0 = offset, theta_{t+1} = theta_t + rate * N(0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDrift {
    /// Random-walk step standard deviation in rad/symbol.
    pub rate: f64,
    pub offset: f64,
}

impl PhaseDrift {
    pub const DEFAULT_RATE: f64 = 0.02;

    pub fn random_walk(rate: f64) -> Self {
        Self { rate, offset: 0.0 }
    }

    pub fn constant(offset: f64) -> Self {
        Self { rate: 0.0, offset }
    }

    pub fn none() -> Self {
        Self::constant(0.0)
    }
}

impl Default for PhaseDrift {
    fn default() -> Self {
        Self::random_walk(Self::DEFAULT_RATE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxRecord {
    pub raw: Vec<ComplexSample>,
    pub corrected: Vec<ComplexSample>,
    pub accepted: Vec<bool>,
    pub survival_fraction: f64,
    /// Phase removed from each frame (empty before recovery).
    pub frame_phases: Vec<f64>,
}

impl RxRecord {
    pub(crate) fn raw_only(raw: Vec<ComplexSample>) -> Self {
        let n = raw.len();
        Self {
            corrected: raw.clone(),
            raw,
            accepted: vec![true; n],
            survival_fraction: 1.0,
            frame_phases: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn is_recovered(&self) -> bool {
        !self.frame_phases.is_empty()
    }
}

/// Receiver phase at every slot.
pub fn phase_track(n: usize, drift: &PhaseDrift, rng: &SeededRandomSource) -> Vec<f64> {
    let mut src = rng.child("drift", 0);
    let mut theta = drift.offset;
    (0..n)
        .map(|_| {
            let t = theta;
            if drift.rate > 0.0 {
                theta += drift.rate * src.normal();
            }
            t
        })
        .collect()
}

/// Heterodyne outcomes for every slot of `tx`. Returns a raw record.
pub fn simulate_rx(
    tx: &TxRecord,
    noise: &NoiseModel,
    det: &DetectorParams,
    drift: &PhaseDrift,
    rng: &SeededRandomSource,
) -> Result<RxRecord> {
    if !(drift.rate >= 0.0 && drift.rate.is_finite() && drift.offset.is_finite()) {
        return Err(HwError::Config("phase drift must be finite with rate >= 0".into()));
    }
    let theta = phase_track(tx.symbols.len(), drift, rng);
    let frames: Vec<Vec<ComplexSample>> = (0..tx.n_frames())
        .into_par_iter()
        .map(|f| {
            let mut src = rng.child("rx-frame", f as u64);
            tx.frame(f)
                .map(|i| {
                    let s = tx.symbols[i].symbol;
                    let rotated = CoherentSymbol {
                        amplitude: s.amplitude * C64::from_polar(1.0, theta[i]),
                        index: s.index,
                    };
                    transmit_symbol(&rotated, noise, det, &mut src)
                })
                .collect()
        })
        .collect();
    Ok(RxRecord::raw_only(frames.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::{generate_tx, FrameConfig};
    use qnic_core::qcore::Alphabet;

    fn tx(l: usize) -> TxRecord {
        generate_tx(l, &Alphabet::qpsk(0.64), FrameConfig::default(), 0.0, &SeededRandomSource::new(5)).unwrap()
    }

    #[test]
    fn clean_cloud_sits_on_constellation() {
        let t = tx(60_000);
        let rx = simulate_rx(&t, &NoiseModel::new(1.0, 0.0).unwrap(), &DetectorParams::ideal(), &PhaseDrift::none(), &SeededRandomSource::new(9)).unwrap();
        let mut sums = [C64::new(0.0, 0.0); 4];
        let mut counts = [0usize; 4];
        for i in t.data_indices() {
            let k = t.symbols[i].symbol.index as usize;
            sums[k] += rx.raw[i].as_c64();
            counts[k] += 1;
        }
        for k in 0..4 {
            let m = sums[k] / counts[k] as f64;
            assert!((m - Alphabet::qpsk(0.64).point(k)).norm() < 0.02, "k {k}: {m}");
        }
    }

    #[test]
    fn random_walk_spread() {
        let n = 64;
        let ends: Vec<f64> = (0..4000)
            .map(|s| phase_track(n + 1, &PhaseDrift::random_walk(0.01), &SeededRandomSource::new(s))[n])
            .collect();
        let sd = (ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64).sqrt();
        assert!((sd - 0.08).abs() < 0.005, "{sd}");
    }

    #[test]
    fn repeat_seed_is_identical() {
        let t = tx(5000);
        let n = NoiseModel::new(0.5, 0.02).unwrap();
        let a = simulate_rx(&t, &n, &DetectorParams::ideal(), &PhaseDrift::default(), &SeededRandomSource::new(4)).unwrap();
        let b = simulate_rx(&t, &n, &DetectorParams::ideal(), &PhaseDrift::default(), &SeededRandomSource::new(4)).unwrap();
        assert_eq!(a, b);
    }
}
