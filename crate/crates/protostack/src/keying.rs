//! Key extraction: quantile binning, reconciliation accounting, universal
//! hashing and one-time-pad encryption.
//!
//! Each complex key variable is binned per quadrature at the empirical
//! quantiles of the sender of the key variable, so every bin is equally likely.
//! The bin pair becomes `2 log2(bins)` raw bits. Reconciliation is an oracle
//! that hands the decoder the sender's symbols when the decoder holds the
//! correct side information, and otherwise leaves it with its best guess. The
//! volume it would cost is reported as the empirical conditional entropy.
//! Privacy amplification hashes blocks of raw bits with seeded Hankel matrices
//! over GF(2).

use std::collections::HashMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use qnic_core::channels::SeededRandomSource;
use qnic_core::qcore::ComplexSample;

use crate::error::{ProtocolError, Result};

pub const DEFAULT_BINS: usize = 4;
pub const DEFAULT_BLOCK_BITS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBinning {
    pub bins: usize,
    /// Inner edges for the real part, ascending (bins - 1 values).
    pub edges_re: Vec<f64>,
    pub edges_im: Vec<f64>,
}

fn quantile_edges(mut v: Vec<f64>, bins: usize) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (1..bins).map(|j| v[(j * n / bins).min(n - 1)]).collect()
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|e| *e <= x)
}

impl QuantileBinning {
    pub fn fit(values: &[ComplexSample], bins: usize) -> Result<Self> {
        if bins < 2 || !bins.is_power_of_two() {
            return Err(ProtocolError::Invalid(format!("bins = {bins} must be a power of two >= 2")));
        }
        if values.len() < bins {
            return Err(ProtocolError::Invalid(format!("{} values cannot fill {bins} bins", values.len())));
        }
        Ok(Self {
            bins,
            edges_re: quantile_edges(values.iter().map(|s| s.re).collect(), bins),
            edges_im: quantile_edges(values.iter().map(|s| s.im).collect(), bins),
        })
    }

    pub fn symbol(&self, x: ComplexSample) -> u32 {
        (bin_of(&self.edges_re, x.re) * self.bins + bin_of(&self.edges_im, x.im)) as u32
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bins.trailing_zeros() as usize
    }

    pub fn to_bits(&self, symbols: &[u32]) -> Vec<bool> {
        let w = self.bits_per_symbol();
        symbols
            .iter()
            .flat_map(|s| (0..w).rev().map(move |b| (s >> b) & 1 == 1))
            .collect()
    }
}

/// Empirical H(D | S) in bits, summed over all `n` elements.
pub fn conditional_entropy_bits(symbols: &[u32], side: &[u32]) -> f64 {
    let mut joint: HashMap<(u32, u32), usize> = HashMap::new();
    let mut marg: HashMap<u32, usize> = HashMap::new();
    for (d, s) in symbols.iter().zip(side) {
        *joint.entry((*s, *d)).or_default() += 1;
        *marg.entry(*s).or_default() += 1;
    }
    joint
        .iter()
        .map(|((s, _), &c)| {
            let c = c as f64;
            -c * (c / marg[s] as f64).log2()
        })
        .sum()
}

fn pack(bits: &[bool], words: usize) -> Vec<u64> {
    let mut out = vec![0u64; words];
    for (i, b) in bits.iter().enumerate() {
        if *b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// 64 bits of `r` starting at bit offset `off`.
fn window(r: &[u64], off: usize) -> u64 {
    let (w, s) = (off / 64, off % 64);
    if s == 0 {
        r[w]
    } else {
        (r[w] >> s) | (r[w + 1] << (64 - s))
    }
}

/// Bits `y_i = sum_j r[i + j] x_j` over GF(2), i < m.
fn hankel_hash(x: &[bool], m: usize, rng: &mut SeededRandomSource) -> Vec<bool> {
    let n = x.len();
    let xw = pack(x, n.div_ceil(64));
    let r_words = (n + m).div_ceil(64) + 1;
    let r: Vec<u64> = (0..r_words).map(|_| rng.next_u64()).collect();
    (0..m)
        .map(|i| {
            let parity = xw.iter().enumerate().fold(0u32, |acc, (k, w)| acc ^ (window(&r, i + 64 * k) & w).count_ones());
            parity & 1 == 1
        })
        .collect()
}

/// Compresses `raw` to exactly `key_len` bits, block by block.
///
/// Block b of the raw string yields floor(key_len * end_b / n) - floor(key_len * start_b / n)
/// bits, each block with its own seeded matrix.
pub fn privacy_amplify(raw: &[bool], key_len: usize, block_bits: usize, rng: &SeededRandomSource) -> Result<Vec<bool>> {
    let n = raw.len();
    if key_len > n {
        return Err(ProtocolError::Invalid(format!("key length {key_len} exceeds {n} raw bits")));
    }
    if block_bits == 0 {
        return Err(ProtocolError::Invalid("block size must be > 0".into()));
    }
    let mut key = Vec::with_capacity(key_len);
    for (b, start) in (0..n).step_by(block_bits).enumerate() {
        let end = (start + block_bits).min(n);
        let m = key_len * end / n - key_len * start / n;
        if m > 0 {
            key.extend(hankel_hash(&raw[start..end], m, &mut rng.child("hash-block", b as u64)));
        }
    }
    Ok(key)
}

pub fn xor(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

pub fn agreement(a: &[bool], b: &[bool]) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, b)| acc | ((*b as u8) << (7 - i))))
        .collect()
}

pub fn random_bits(n: usize, rng: &mut SeededRandomSource) -> Vec<bool> {
    (0..n).map(|_| rng.below(2) == 1).collect()
}
