//! Framed transmitter: reference block followed by random QPSK data.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qnic_core::channels::SeededRandomSource;
use qnic_core::qcore::{Alphabet, CoherentSymbol};
use qnic_core::C64;

use crate::error::{HwError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub frame_len: usize,
    pub n_ref: usize,
    /// Reference amplitude as a multiple of the mean data amplitude.
    pub ref_amplitude_scale: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len: 64,
            n_ref: 4,
            ref_amplitude_scale: 30.0,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ref >= self.frame_len {
            return Err(HwError::Config(format!(
                "n_ref = {} must be below frame_len = {}",
                self.n_ref, self.frame_len
            )));
        }
        if !(self.ref_amplitude_scale > 1.0 && self.ref_amplitude_scale.is_finite()) {
            return Err(HwError::Config("ref_amplitude_scale must be finite and > 1".into()));
        }
        Ok(())
    }

    pub fn data_per_frame(&self) -> usize {
        self.frame_len - self.n_ref
    }

    /// Number of frames needed for `l` data symbols.
    pub fn frames_for(&self, l: usize) -> usize {
        l.div_ceil(self.data_per_frame())
    }
}

/// One transmitted slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxSymbol {
    /// Alphabet point with jitter applied. Reference slots carry index 0.
    pub symbol: CoherentSymbol,
    pub frame: u32,
    pub is_ref: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxRecord {
    pub seed: u64,
    pub config: FrameConfig,
    pub alphabet: Alphabet,
    pub jitter_rel: f64,
    pub symbols: Vec<TxSymbol>,
    /// Start index of every frame, plus a final sentinel.
    pub frame_starts: Vec<usize>,
}

impl TxRecord {
    pub fn n_frames(&self) -> usize {
        self.frame_starts.len() - 1
    }

    pub fn frame(&self, f: usize) -> Range<usize> {
        self.frame_starts[f]..self.frame_starts[f + 1]
    }

    pub fn n_data(&self) -> usize {
        self.symbols.iter().filter(|s| !s.is_ref).count()
    }

    /// Indices of data slots, in order.
    pub fn data_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.symbols.iter().enumerate().filter(|(_, s)| !s.is_ref).map(|(i, _)| i)
    }

    /// Multiplicative amplitude jitter of slot `i` relative to its alphabet point.
    pub fn jitter(&self, i: usize) -> f64 {
        let s = &self.symbols[i];
        if s.is_ref {
            return 1.0;
        }
        s.symbol.amplitude.norm() / self.alphabet.point(s.symbol.index as usize).norm()
    }

    /// Known reference amplitude.
    pub fn reference_amplitude(&self) -> C64 {
        reference_amplitude(&self.alphabet, &self.config)
    }
}

pub(crate) fn reference_amplitude(alphabet: &Alphabet, cfg: &FrameConfig) -> C64 {
    C64::from_polar(cfg.ref_amplitude_scale * alphabet.mean_amplitude(), alphabet.phase0())
}

fn draw_index(weights: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    3
}

/// Generates `l` data symbols in frames, each frame led by `n_ref` references.
///
/// Jitter is lognormal with unit mean and relative spread `jitter_rel`.
/// Frames draw from child streams of `rng`, so the record depends only on its seed.
pub fn generate_tx(
    l: usize,
    alphabet: &Alphabet,
    cfg: FrameConfig,
    jitter_rel: f64,
    rng: &SeededRandomSource,
) -> Result<TxRecord> {
    cfg.validate()?;
    if l == 0 {
        return Err(HwError::Config("need at least one data symbol".into()));
    }
    if !(jitter_rel >= 0.0 && jitter_rel.is_finite()) {
        return Err(HwError::Config("jitter_rel must be finite and >= 0".into()));
    }
    if alphabet.amplitudes().iter().any(|a| *a <= 0.0) {
        return Err(HwError::Config("alphabet amplitudes must be > 0".into()));
    }
    let per = cfg.data_per_frame();
    let n_frames = cfg.frames_for(l);
    let r = reference_amplitude(alphabet, &cfg);
    let weights = alphabet.weights();
    let frames: Vec<Vec<TxSymbol>> = (0..n_frames)
        .into_par_iter()
        .map(|f| {
            let mut src = rng.child("tx-frame", f as u64);
            let n_data = per.min(l - f * per);
            let mut out = Vec::with_capacity(cfg.n_ref + n_data);
            for _ in 0..cfg.n_ref {
                out.push(TxSymbol {
                    symbol: CoherentSymbol { amplitude: r, index: 0 },
                    frame: f as u32,
                    is_ref: true,
                });
            }
            for _ in 0..n_data {
                let k = draw_index(&weights, src.uniform());
                let mut sym = alphabet.symbol(k);
                if jitter_rel > 0.0 {
                    let z = src.normal();
                    sym.amplitude *= (jitter_rel * z - 0.5 * jitter_rel * jitter_rel).exp();
                }
                out.push(TxSymbol {
                    symbol: sym,
                    frame: f as u32,
                    is_ref: false,
                });
            }
            out
        })
        .collect();
    let mut frame_starts = Vec::with_capacity(n_frames + 1);
    let mut symbols = Vec::with_capacity(l + n_frames * cfg.n_ref);
    for fr in frames {
        frame_starts.push(symbols.len());
        symbols.extend(fr);
    }
    frame_starts.push(symbols.len());
    Ok(TxRecord {
        seed: rng.seed(),
        config: cfg,
        alphabet: alphabet.clone(),
        jitter_rel,
        symbols,
        frame_starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_frame_layout() {
        let tx = generate_tx(60, &Alphabet::qpsk(0.64), FrameConfig::default(), 0.0, &SeededRandomSource::new(1)).unwrap();
        assert_eq!(tx.n_frames(), 1);
        assert_eq!(tx.symbols.len(), 64);
        assert!(tx.symbols[..4].iter().all(|s| s.is_ref));
        assert_eq!(tx.n_data(), 60);
        let tx = generate_tx(61, &Alphabet::qpsk(0.64), FrameConfig::default(), 0.0, &SeededRandomSource::new(1)).unwrap();
        assert_eq!(tx.n_frames(), 2);
        assert_eq!(tx.symbols.len(), 64 + 5);
    }

    #[test]
    fn zero_jitter_keeps_amplitudes_equal() {
        let tx = generate_tx(1000, &Alphabet::qpsk(0.64), FrameConfig::default(), 0.0, &SeededRandomSource::new(2)).unwrap();
        for i in tx.data_indices() {
            assert_eq!(tx.symbols[i].symbol.amplitude.norm(), Alphabet::qpsk(0.64).point(0).norm());
        }
    }

    #[test]
    fn jitter_is_positive_with_unit_mean() {
        let tx = generate_tx(200_000, &Alphabet::qpsk(0.64), FrameConfig::default(), 0.05, &SeededRandomSource::new(3)).unwrap();
        let js: Vec<f64> = tx.data_indices().map(|i| tx.jitter(i)).collect();
        assert!(js.iter().all(|j| *j > 0.0));
        let mean = js.iter().sum::<f64>() / js.len() as f64;
        assert!((mean - 1.0).abs() < 1e-3, "{mean}");
    }

    #[test]
    fn config_checks() {
        let bad = FrameConfig { n_ref: 64, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = FrameConfig { ref_amplitude_scale: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(FrameConfig::default().frames_for(1_920_000), 32_000);
    }
}
