//! Coherent-state algebra: samples, QPSK symbols, ensembles, overlaps and the
//! Gram-spectrum entropy of finite coherent-state mixtures.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::qcore::linalg::entropy_of_psd;
use crate::{Error, Result, C64};

/// Heterodyne outcome in the complex plane (units of sqrt(snu)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSample {
    pub re: f64,
    pub im: f64,
}

impl ComplexSample {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::domain(format!("non-finite sample ({re}, {im})")));
        }
        Ok(Self { re, im })
    }

    pub fn from_c64(z: C64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    #[inline]
    pub fn as_c64(self) -> C64 {
        C64::new(self.re, self.im)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl From<ComplexSample> for C64 {
    fn from(s: ComplexSample) -> Self {
        s.as_c64()
    }
}

/// i^k for k in 0..4.
#[inline]
pub fn i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// A point of the QPSK constellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentSymbol {
    pub amplitude: C64,
    pub index: u8,
}

/// QPSK alphabet {a_k i^k e^{i phi0}} with sending weights.
///
/// Per-symbol amplitudes default to a common base amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    amplitudes: [f64; 4],
    weights: [f64; 4],
    phase0: f64,
}

impl Alphabet {
    /// Equiprobable QPSK at amplitude `a`.
    pub fn qpsk(a: f64) -> Self {
        Self {
            amplitudes: [a; 4],
            weights: [0.25; 4],
            phase0: 0.0,
        }
    }

    pub fn new(amplitudes: [f64; 4], weights: [f64; 4], phase0: f64) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::domain("alphabet amplitudes must be finite and >= 0"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("alphabet weights must be finite and >= 0"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("alphabet weights sum to {s}, not 1")));
        }
        if !phase0.is_finite() {
            return Err(Error::domain("alphabet phase must be finite"));
        }
        Ok(Self {
            amplitudes,
            weights,
            phase0,
        })
    }

    #[inline]
    pub fn point(&self, k: usize) -> C64 {
        self.amplitudes[k] * i_pow(k) * C64::from_polar(1.0, self.phase0)
    }

    pub fn points(&self) -> [C64; 4] {
        std::array::from_fn(|k| self.point(k))
    }

    pub fn symbol(&self, k: usize) -> CoherentSymbol {
        CoherentSymbol {
            amplitude: self.point(k),
            index: k as u8,
        }
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn amplitudes(&self) -> [f64; 4] {
        self.amplitudes
    }

    pub fn phase0(&self) -> f64 {
        self.phase0
    }

    /// Weighted mean amplitude.
    pub fn mean_amplitude(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(self.weights.iter())
            .map(|(a, w)| a * w)
            .sum()
    }

    /// Same alphabet with every amplitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|a| a * s),
            ..self.clone()
        }
    }

    /// Mixture of the (scaled) alphabet states with the sending weights.
    pub fn ensemble(&self, scale: f64) -> StateEnsemble {
        StateEnsemble {
            entries: (0..4)
                .map(|k| (scale * self.point(k), self.weights[k]))
                .collect(),
        }
    }
}

/// Finite mixture of coherent states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEnsemble {
    entries: Vec<(C64, f64)>,
}

impl StateEnsemble {
    pub fn new(entries: Vec<(C64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("empty ensemble"));
        }
        for (a, w) in &entries {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::domain("non-finite amplitude in ensemble"));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::domain("ensemble weight must be finite and >= 0"));
            }
        }
        let s: f64 = entries.iter().map(|e| e.1).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("ensemble weights sum to {s}, not 1")));
        }
        Ok(Self { entries })
    }

    pub fn pure(amplitude: C64) -> Self {
        Self {
            entries: vec![(amplitude, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(C64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weighted Gram matrix sqrt(w_j w_k) <a_j|a_k>.
    pub fn gram(&self) -> DMatrix<C64> {
        weighted_gram(&self.entries)
    }
}

/// <a|b> = exp(-(|a|^2 + |b|^2)/2 + conj(a) b).
#[inline]
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-(a.norm_sqr() + b.norm_sqr()) * 0.5 + a.conj() * b).exp()
}

/// Weighted Gram matrix of (amplitude, weight) pairs.
pub fn weighted_gram(entries: &[(C64, f64)]) -> DMatrix<C64> {
    let n = entries.len();
    DMatrix::from_fn(n, n, |j, k| {
        let (aj, wj) = entries[j];
        let (ak, wk) = entries[k];
        coherent_overlap(aj, ak) * (wj * wk).sqrt()
    })
}

/// Entropy (bits) of sum_k w_k |a_k><a_k| from the weighted Gram spectrum.
pub fn gram_spectrum_entropy(e: &StateEnsemble) -> Result<f64> {
    if e.len() > 64 {
        return Err(Error::domain("gram_spectrum_entropy supports at most 64 components"));
    }
    let live: Vec<(C64, f64)> = e.entries.iter().copied().filter(|x| x.1 > 0.0).collect();
    if live.len() == 1 {
        return Ok(0.0);
    }
    entropy_of_psd(&weighted_gram(&live))
}
