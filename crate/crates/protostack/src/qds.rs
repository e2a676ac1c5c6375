//! Quantum digital signatures in both directions.
//!
//! Backward: Bob and Charlie each send random QPSK states to Alice, who
//! eliminates two states per postselected outcome. Forward: Alice sends the same
//! states to both recipients, who eliminate. In either case one pool of
//! elements per message bit is prepared, the recipients swap a random half and
//! count mismatches per half once Alice declares.

use serde::{Deserialize, Serialize};

use qnic_core::channels::{transmit_amplitude, SeededRandomSource};
use qnic_core::presets::Protocol;
use qnic_core::qcore::{Alphabet, ComplexSample, DetectorParams, Link, NoiseModel};
use qnic_core::secanalysis::{perr_honest_alphabet, PostselectionRegion, SecurityBudget};
use qnic_hwsim::Session;

use crate::elimination::{eliminate_two, neg_log_likelihood};
use crate::error::{ProtocolError, Result};
use crate::legs::{run_broadcast, run_leg_pair, HardwareProfile, LegData};
use crate::middleware::Direction;
use crate::report::{Adversary, ForgeryOutcome, HalfCheck, ProtocolReport, QdsOutcome, RecipientCheck};

pub const MIN_ACCEPTED_PER_HALF: usize = 100;

/// Per-half mismatch thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub s_b: f64,
    pub s_c: f64,
}

impl Thresholds {
    pub fn new(s_b: f64, s_c: f64) -> Result<Self> {
        if !(0.0 < s_b && s_b <= s_c && s_c < 1.0) {
            return Err(ProtocolError::Invalid(format!("thresholds need 0 < s_B <= s_C < 1, got {s_b}, {s_c}")));
        }
        Ok(Self { s_b, s_c })
    }

    pub fn from_budget(b: &SecurityBudget) -> Self {
        Self { s_b: b.s_b, s_c: b.s_c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdsParams {
    pub alphabet: Alphabet,
    /// Line between Alice and Bob, with the receiving detector.
    pub link_b: Link,
    /// Line between Alice and Charlie, with the receiving detector.
    pub link_c: Link,
    pub region: PostselectionRegion,
    pub hardware: HardwareProfile,
    pub min_accepted_per_half: usize,
    /// Keep transceiver records in the report.
    pub keep_records: bool,
}

impl QdsParams {
    pub fn new(alphabet: Alphabet, link_b: Link, link_c: Link, region: PostselectionRegion) -> Self {
        Self {
            alphabet,
            link_b,
            link_c,
            region,
            hardware: HardwareProfile::default(),
            min_accepted_per_half: MIN_ACCEPTED_PER_HALF,
            keep_records: false,
        }
    }
}

/// Which side holds the outcomes (and so eliminates).
fn eliminating_side(direction: Direction) -> &'static str {
    match direction {
        Direction::Backward => "alice",
        Direction::Forward => "recipients",
    }
}

/// One leg of a signature pool after elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedLeg {
    pub data: LegData,
    /// Outcome passed frame rejection and the postselection region.
    pub accepted: Vec<bool>,
    /// Eliminated pair per element (meaningful where accepted).
    pub eliminated: Vec<[u8; 2]>,
}

impl SignedLeg {
    fn new(data: LegData, alphabet: &Alphabet, link: &Link, region: &PostselectionRegion) -> Self {
        let accepted = data
            .samples
            .iter()
            .zip(&data.dsp_ok)
            .map(|(s, ok)| *ok && region.accepts(s.re, s.im))
            .collect();
        let eliminated = data.samples.iter().map(|s| eliminate_two(*s, alphabet, link)).collect();
        Self {
            data,
            accepted,
            eliminated,
        }
    }

    /// Honest mismatch: the sent state is among the eliminated pair.
    pub fn mismatch(&self, i: usize) -> bool {
        self.eliminated[i].contains(&self.data.sent[i])
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted.iter().filter(|a| **a).count()
    }

    pub fn mismatch_count(&self) -> usize {
        (0..self.data.len()).filter(|&i| self.accepted[i] && self.mismatch(i)).count()
    }
}

/// Both legs of the pool for one message bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SignaturePool {
    pub bob: SignedLeg,
    pub charlie: SignedLeg,
    /// Indices Bob and Charlie keep (I); the rest are swapped.
    pub own_half: Vec<usize>,
    pub received_half: Vec<usize>,
}

/// Seeded partition of 0..l into two halves of l/2, each sorted.
pub fn swap_partition(l: usize, rng: &mut SeededRandomSource) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..l).collect();
    // partial Fisher-Yates: the first l/2 positions become the kept half
    for i in 0..l / 2 {
        let j = i + rng.below(l - i);
        idx.swap(i, j);
    }
    let (a, b) = idx.split_at(l / 2);
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

fn distribute(direction: Direction, l: usize, p: &QdsParams, rng: &SeededRandomSource) -> Result<SignaturePool> {
    let links = (&p.link_b, &p.link_c);
    let (b, c) = match direction {
        Direction::Backward => run_leg_pair(l, &p.alphabet, links, &p.hardware, rng)?,
        Direction::Forward => run_broadcast(l, &p.alphabet, links, &p.hardware, rng)?,
    };
    let (own_half, received_half) = swap_partition(l, &mut rng.child("swap", 0));
    Ok(SignaturePool {
        bob: SignedLeg::new(b, &p.alphabet, &p.link_b, &p.region),
        charlie: SignedLeg::new(c, &p.alphabet, &p.link_c, &p.region),
        own_half,
        received_half,
    })
}

fn half_check(leg: &SignedLeg, half: &[usize], threshold: f64, min: usize, mismatch: impl Fn(usize) -> bool) -> Result<HalfCheck> {
    let acc: Vec<usize> = half.iter().copied().filter(|&i| leg.accepted[i]).collect();
    if acc.len() < min {
        return Err(ProtocolError::InsufficientAccepted {
            accepted: acc.len(),
            required: min,
        });
    }
    let mm = acc.iter().filter(|&&i| mismatch(i)).count();
    Ok(HalfCheck::new(acc.len(), mm, threshold))
}

/// Honest verification by one recipient: own leg on I, other leg on the complement.
fn honest_check(own: &SignedLeg, other: &SignedLeg, pool: &SignaturePool, s: f64, min: usize) -> Result<RecipientCheck> {
    Ok(RecipientCheck::new(
        half_check(own, &pool.own_half, s, min, |i| own.mismatch(i))?,
        half_check(other, &pool.received_half, s, min, |i| other.mismatch(i))?,
    ))
}

/// Mismatch rule for a forged declaration on Charlie's leg.
///
/// Backward: the forger declares a pair, a mismatch if it holds Charlie's sent
/// state. Forward: the forger declares a sent state, a mismatch if Charlie
/// eliminated it.
fn forged_mismatches(
    direction: Direction,
    pool: &SignaturePool,
    p: &QdsParams,
    adversary: Adversary,
    rng: &mut SeededRandomSource,
) -> Vec<bool> {
    let c = &pool.charlie;
    let n = c.data.len();
    let t = p.link_c.noise.transmittance;
    // ideal heterodyne on the lost fraction of Charlie's line
    let tap = Link::new(
        NoiseModel::new(1.0 - t, 0.0).expect("1 - T lies in [0, 1]"),
        DetectorParams::ideal(),
    );
    let mut out = vec![false; n];
    for &i in &pool.own_half {
        let sent = c.data.sent[i];
        out[i] = match (adversary, direction) {
            (Adversary::RandomGuess, Direction::Backward) => {
                let q = rng.below(4) as u8;
                sent == q || sent == (q + 1) % 4
            }
            (Adversary::RandomGuess, Direction::Forward) => c.eliminated[i].contains(&(rng.below(4) as u8)),
            (Adversary::BeamsplitterForger, Direction::Backward) => {
                let x = transmit_amplitude(c.data.sent_amp[i], &tap, rng);
                eliminate_two(x, &p.alphabet, &tap).contains(&sent)
            }
            (Adversary::BeamsplitterForger, Direction::Forward) => {
                let x = transmit_amplitude(c.data.sent_amp[i], &tap, rng);
                let own = pool.bob.data.samples[i];
                let guess = forward_guess(own, x, p, &tap);
                c.eliminated[i].contains(&guess)
            }
        };
    }
    out
}

/// Most likely sent state given the forger's own outcome and the tap outcome.
fn forward_guess(own: ComplexSample, tap_x: ComplexSample, p: &QdsParams, tap: &Link) -> u8 {
    let score = |k: usize| {
        let a = p.alphabet.point(k);
        neg_log_likelihood(own, a, &p.link_b) + neg_log_likelihood(tap_x, a, tap)
    };
    (0..4).min_by(|&a, &b| score(a).total_cmp(&score(b))).unwrap_or(0) as u8
}

/// Bob, who holds his own leg in full, tries to make Charlie accept.
fn forgery(
    direction: Direction,
    pool: &SignaturePool,
    p: &QdsParams,
    th: &Thresholds,
    adversary: Adversary,
    rng: &mut SeededRandomSource,
) -> Result<ForgeryOutcome> {
    let blind = forged_mismatches(direction, pool, p, adversary, rng);
    let own = half_check(&pool.charlie, &pool.own_half, th.s_c, p.min_accepted_per_half, |i| blind[i])?;
    // Bob's own elements are known exactly, so the forwarded half matches
    let received = half_check(&pool.bob, &pool.received_half, th.s_c, p.min_accepted_per_half, |_| false)?;
    Ok(ForgeryOutcome {
        adversary,
        check: RecipientCheck::new(own, received),
        blind_rate: own.rate(),
    })
}

pub fn protocol_for(direction: Direction) -> Protocol {
    match direction {
        Direction::Backward => Protocol::QdsB,
        Direction::Forward => Protocol::QdsF,
    }
}

/// Runs one signing session for a single message bit.
///
/// `l` states are distributed per pool; thresholds apply to the accepted
/// elements of each half. With an adversary, Bob also attempts to forge the
/// declared message towards Charlie.
#[allow(clippy::too_many_arguments)]
pub fn run_qds(
    direction: Direction,
    l: usize,
    params: &QdsParams,
    thresholds: &Thresholds,
    message: bool,
    rng: &SeededRandomSource,
    adversary: Option<Adversary>,
) -> Result<ProtocolReport> {
    if l < 2 || l % 2 != 0 {
        return Err(ProtocolError::Invalid(format!("signature length {l} must be even and >= 2")));
    }
    Thresholds::new(thresholds.s_b, thresholds.s_c)?;
    let (p0, p1) = rayon::join(
        || distribute(direction, l, params, &rng.child("pool", 0)),
        || distribute(direction, l, params, &rng.child("pool", 1)),
    );
    let pools = [p0?, p1?];
    let pool = &pools[message as usize];
    let min = params.min_accepted_per_half;
    let bob = honest_check(&pool.bob, &pool.charlie, pool, thresholds.s_b, min)?;
    let charlie = honest_check(&pool.charlie, &pool.bob, pool, thresholds.s_c, min)?;
    let accepted = [pool.bob.accepted_count(), pool.charlie.accepted_count()];
    let mm = pool.bob.mismatch_count() + pool.charlie.mismatch_count();
    let forgery = adversary
        .map(|a| forgery(direction, pool, params, thresholds, a, &mut rng.child("forger", 0)))
        .transpose()?;

    let mut report = ProtocolReport::new(
        protocol_for(direction),
        rng.seed(),
        serde_json::json!({
            "direction": direction,
            "eliminating_side": eliminating_side(direction),
            "thresholds": thresholds,
            "params": params,
            "adversary": adversary,
        }),
    );
    let hb = perr_honest_alphabet(&params.alphabet, &params.link_b, &params.region)?;
    let hc = perr_honest_alphabet(&params.alphabet, &params.link_c, &params.region)?;
    report.figures.l = l;
    report.figures.p_err = Some(0.5 * (hb.p_err + hc.p_err));
    report.figures.acceptance = Some(0.5 * (hb.acceptance + hc.acceptance));
    report.qds = Some(QdsOutcome {
        direction,
        message,
        accepted,
        bob,
        charlie,
        p_err_estimate: mm as f64 / (accepted[0] + accepted[1]).max(1) as f64,
        forgery,
    });
    if params.keep_records {
        let meta = |m: usize, who: &str| serde_json::json!({ "pool": m, "leg": who, "direction": direction });
        for (m, p) in pools.iter().enumerate() {
            for (who, leg) in [("bob", &p.bob), ("charlie", &p.charlie)] {
                let s: Session = leg.data.session(meta(m, who))?;
                report.sessions.push((format!("pool{m}-{who}"), s));
            }
        }
    }
    report.validate()?;
    Ok(report)
}

/// Honest mismatch frequency on one leg: (accepted, mismatches).
pub fn honest_mismatches(leg: LegData, alphabet: &Alphabet, link: &Link, region: &PostselectionRegion) -> (usize, usize) {
    let s = SignedLeg::new(leg, alphabet, link, region);
    (s.accepted_count(), s.mismatch_count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_halves() {
        let (a, b) = swap_partition(10, &mut SeededRandomSource::new(1));
        assert_eq!(a.len(), 5);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn threshold_validation() {
        assert!(Thresholds::new(0.1, 0.2).is_ok());
        assert!(Thresholds::new(0.2, 0.1).is_err());
        assert!(Thresholds::new(0.0, 0.1).is_err());
    }
}
