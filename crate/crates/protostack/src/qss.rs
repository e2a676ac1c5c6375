//! Quantum secret sharing (backward) and the forward QKD session.
//!
//! QSS: Bob and Charlie send random QPSK states to Alice, whose key variable is
//! X = g x_B + h x_C built from her two outcomes. Bob and Charlie recover it only
//! together. QKD: Alice sends to Bob, whose outcome is the key variable.

use serde::{Deserialize, Serialize};

use qnic_core::channels::{AttackModel, SeededRandomSource};
use qnic_core::presets::Protocol;
use qnic_core::qcore::{Alphabet, ComplexSample, Link};
use qnic_core::secanalysis::{qkd_f_rate, qss_rate, rate_tolerance, Leg};
use qnic_core::C64;

use crate::error::{ProtocolError, Result};
use crate::keying::{
    agreement, bits_to_bytes, conditional_entropy_bits, privacy_amplify, random_bits, xor, QuantileBinning,
    DEFAULT_BINS, DEFAULT_BLOCK_BITS,
};
use crate::legs::{run_leg, run_leg_pair, HardwareProfile, LegData};
use crate::report::{sha256_hex, KeyOutcome, Player, ProtocolReport, SinglePlayerOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyParams {
    pub alphabet: Alphabet,
    /// Bob's line (QSS: Bob to Alice; QKD: Alice to Bob).
    pub link_b: Link,
    /// Charlie's line (QSS only).
    pub link_c: Link,
    pub hardware: HardwareProfile,
    pub attack: AttackModel,
    pub bins: usize,
    pub block_bits: usize,
    /// Rate to use instead of evaluating the security analysis.
    pub kappa: Option<f64>,
    /// Bits to share or encrypt; empty means a random secret filling the key.
    pub secret: Vec<bool>,
    pub keep_records: bool,
}

impl KeyParams {
    pub fn new(alphabet: Alphabet, link_b: Link, link_c: Link) -> Self {
        Self {
            alphabet,
            link_b,
            link_c,
            hardware: HardwareProfile::default(),
            attack: AttackModel::Beamsplitter,
            bins: DEFAULT_BINS,
            block_bits: DEFAULT_BLOCK_BITS,
            kappa: None,
            secret: Vec::new(),
            keep_records: false,
        }
    }
}

fn check_efficiency(e: f64) -> Result<()> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(ProtocolError::Invalid(format!("reconciliation efficiency {e} outside (0, 1]")));
    }
    Ok(())
}

/// Outcome of key generation shared by both protocols.
struct KeySession {
    binning: QuantileBinning,
    /// Key symbols of the holder of the key variable.
    symbols: Vec<u32>,
    /// Decoder side information per element.
    side: Vec<u32>,
}

struct Extracted {
    cipher: Vec<bool>,
    secret: Vec<bool>,
    outcome: KeyOutcome,
}

fn extract(
    s: &KeySession,
    kappa: f64,
    efficiency: f64,
    p: &KeyParams,
    rng: &SeededRandomSource,
) -> Result<Extracted> {
    let raw = s.binning.to_bits(&s.symbols);
    let n = s.symbols.len();
    let key_len = (efficiency * kappa * n as f64).floor() as usize;
    let key = privacy_amplify(&raw, key_len, p.block_bits, &rng.child("hash", 0))?;
    let secret = if p.secret.is_empty() {
        random_bits(key_len, &mut rng.child("secret", 0))
    } else {
        p.secret.clone()
    };
    if secret.len() > key_len {
        return Err(ProtocolError::SecretTooLong {
            secret: secret.len(),
            key: key_len,
        });
    }
    let cipher = xor(&secret, &key);
    // joint decoder: the oracle returns the symbols exactly
    let joint_key = privacy_amplify(&s.binning.to_bits(&s.symbols), key_len, p.block_bits, &rng.child("hash", 0))?;
    let decrypted = xor(&cipher, &joint_key);
    Ok(Extracted {
        outcome: KeyOutcome {
            n_used: n,
            bins: s.binning.bins,
            raw_bits: raw.len(),
            key_bits: key_len,
            kappa,
            efficiency,
            leak_bits: conditional_entropy_bits(&s.symbols, &s.side).ceil() as usize,
            secret_bits: secret.len(),
            reconstructed_exact: decrypted == secret,
            bit_agreement: agreement(&decrypted, &secret),
            single_player: Vec::new(),
            key_sha256: sha256_hex(&bits_to_bytes(&key)),
        },
        cipher,
        secret,
    })
}

/// Decodes with possibly wrong side information and returns the secret-bit agreement.
///
/// Where the decoder's side information is right the oracle returns the true
/// symbol; elsewhere the decoder keeps the bin of the expected key variable.
#[allow(clippy::too_many_arguments)]
fn partial_decode(
    s: &KeySession,
    guessed_side: &[u32],
    expected: impl Fn(u32) -> ComplexSample,
    cipher: &[bool],
    secret: &[bool],
    key_len: usize,
    p: &KeyParams,
    rng: &SeededRandomSource,
) -> Result<f64> {
    let decoded: Vec<u32> = s
        .symbols
        .iter()
        .zip(&s.side)
        .zip(guessed_side)
        .map(|((d, t), g)| if t == g { *d } else { s.binning.symbol(expected(*g)) })
        .collect();
    let key = privacy_amplify(&s.binning.to_bits(&decoded), key_len, p.block_bits, &rng.child("hash", 0))?;
    Ok(agreement(&xor(cipher, &key), secret))
}

fn keep_sessions(report: &mut ProtocolReport, legs: &[(&str, &LegData)]) -> Result<()> {
    for (name, leg) in legs {
        let s = leg.session(serde_json::json!({ "leg": name }))?;
        report.sessions.push((name.to_string(), s));
    }
    Ok(())
}

fn used_indices(a: &LegData, b: Option<&LegData>) -> Vec<usize> {
    (0..a.len()).filter(|&i| a.dsp_ok[i] && b.map_or(true, |b| b.dsp_ok[i])).collect()
}

/// Runs one QSS-b session with gauge (g, h).
pub fn run_qss_b(
    l: usize,
    g: f64,
    h: f64,
    params: &KeyParams,
    rng: &SeededRandomSource,
    efficiency: f64,
) -> Result<ProtocolReport> {
    check_efficiency(efficiency)?;
    if !(g.is_finite() && h.is_finite()) || (g == 0.0 && h == 0.0) {
        return Err(ProtocolError::Invalid("gauge (g, h) must be finite and not both zero".into()));
    }
    let a = params.alphabet.mean_amplitude();
    let (kappa, two_kappa) = match params.kappa {
        Some(k) => (k, 2.0 * k),
        None => {
            let r = qss_rate(&Leg::new(a, params.link_b)?, &Leg::new(a, params.link_c)?, g, h, params.attack, rate_tolerance())?;
            (r.kappa_final, r.two_kappa)
        }
    };
    if !(kappa > 0.0) {
        return Err(ProtocolError::RateNonPositive { kappa });
    }
    let (lb, lc) = run_leg_pair(l, &params.alphabet, (&params.link_b, &params.link_c), &params.hardware, rng)?;
    let used = used_indices(&lb, Some(&lc));
    let x: Vec<ComplexSample> = used
        .iter()
        .map(|&i| {
            let z = lb.samples[i].as_c64() * g + lc.samples[i].as_c64() * h;
            ComplexSample { re: z.re, im: z.im }
        })
        .collect();
    let binning = QuantileBinning::fit(&x, params.bins)?;
    let session = KeySession {
        symbols: x.iter().map(|s| binning.symbol(*s)).collect(),
        side: used.iter().map(|&i| 4 * lb.sent[i] as u32 + lc.sent[i] as u32).collect(),
        binning,
    };
    let ex = extract(&session, kappa, efficiency, params, rng)?;
    let mut outcome = ex.outcome;

    let (gb, gc) = (params.link_b.gain(), params.link_c.gain());
    let pts = params.alphabet.points();
    let expected = |side: u32| {
        let z: C64 = pts[(side / 4) as usize] * (g * gb) + pts[(side % 4) as usize] * (h * gc);
        ComplexSample { re: z.re, im: z.im }
    };
    for (player, label) in [(Player::Bob, "guess-c"), (Player::Charlie, "guess-b")] {
        let mut guess = rng.child(label, 0);
        let guessed: Vec<u32> = session
            .side
            .iter()
            .map(|s| {
                let r = guess.below(4) as u32;
                match player {
                    Player::Bob => 4 * (s / 4) + r,
                    Player::Charlie => 4 * r + s % 4,
                }
            })
            .collect();
        let agree = partial_decode(&session, &guessed, expected, &ex.cipher, &ex.secret, outcome.key_bits, params, rng)?;
        outcome.single_player.push(SinglePlayerOutcome {
            player,
            bit_agreement: agree,
        });
    }

    let mut report = ProtocolReport::new(
        Protocol::QssB,
        rng.seed(),
        serde_json::json!({ "l": l, "g": g, "h": h, "efficiency": efficiency, "params": params }),
    );
    report.figures.l = l;
    report.figures.kappa = Some(kappa);
    report.figures.two_kappa = Some(two_kappa);
    report.key = Some(outcome);
    if params.keep_records {
        keep_sessions(&mut report, &[("leg-b", &lb), ("leg-c", &lc)])?;
    }
    report.validate()?;
    Ok(report)
}

/// Runs one forward QKD session between Alice and Bob (`link_b`).
pub fn run_qkd_f(l: usize, params: &KeyParams, rng: &SeededRandomSource, efficiency: f64) -> Result<ProtocolReport> {
    check_efficiency(efficiency)?;
    let a = params.alphabet.mean_amplitude();
    let kappa = match params.kappa {
        Some(k) => k,
        None => qkd_f_rate(&Leg::new(a, params.link_b)?, params.attack, rate_tolerance())?.kappa,
    };
    if !(kappa > 0.0) {
        return Err(ProtocolError::RateNonPositive { kappa });
    }
    let leg = run_leg(l, &params.alphabet, &params.link_b, &params.hardware, &rng.child("leg", 0))?;
    let used = used_indices(&leg, None);
    let x: Vec<ComplexSample> = used.iter().map(|&i| leg.samples[i]).collect();
    let binning = QuantileBinning::fit(&x, params.bins)?;
    let session = KeySession {
        symbols: x.iter().map(|s| binning.symbol(*s)).collect(),
        side: used.iter().map(|&i| leg.sent[i] as u32).collect(),
        binning,
    };
    let ex = extract(&session, kappa, efficiency, params, rng)?;
    let mut report = ProtocolReport::new(
        Protocol::QkdF,
        rng.seed(),
        serde_json::json!({ "l": l, "efficiency": efficiency, "params": params }),
    );
    report.figures.l = l;
    report.figures.kappa = Some(kappa);
    report.key = Some(ex.outcome);
    if params.keep_records {
        keep_sessions(&mut report, &[("leg-b", &leg)])?;
    }
    report.validate()?;
    Ok(report)
}
