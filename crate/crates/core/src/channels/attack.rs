//! Eavesdropper's conditional states and their Holevo information.

use serde::{Deserialize, Serialize};

use crate::channels::cloner::ClonerPurification;
use crate::qcore::coherent::{gram_spectrum_entropy, Alphabet, StateEnsemble};
use crate::qcore::fock::{cutoff_for, ensemble_to_fock, von_neumann_entropy, FockDensityMatrix, TRUNCATION_LIMIT};
use crate::qcore::linalg::real_trace;
use crate::{Error, Result, C64};

/// Collective attack on the quantum channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackModel {
    Beamsplitter,
    EntanglingCloner,
}

impl std::str::FromStr for AttackModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beamsplitter" => Ok(Self::Beamsplitter),
            "cloner" | "entangling-cloner" => Ok(Self::EntanglingCloner),
            other => Err(Error::domain(format!("unknown attack model '{other}'"))),
        }
    }
}

/// One of Eve's conditional states.
#[derive(Debug, Clone, PartialEq)]
pub enum EveState {
    Coherent(StateEnsemble),
    Fock(FockDensityMatrix),
}

/// Eve's state conditioned on each sent symbol, with the sending priors.
#[derive(Debug, Clone, PartialEq)]
pub struct EveConditionalStates {
    priors: Vec<f64>,
    states: Vec<EveState>,
}

impl EveConditionalStates {
    pub fn new(priors: Vec<f64>, states: Vec<EveState>) -> Result<Self> {
        if priors.len() != states.len() || priors.is_empty() {
            return Err(Error::domain("priors and states must be non-empty and aligned"));
        }
        if priors.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::domain("priors must be >= 0"));
        }
        let s: f64 = priors.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("priors sum to {s}, not 1")));
        }
        Ok(Self { priors, states })
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn states(&self) -> &[EveState] {
        &self.states
    }

    /// Every conditional state converted to a single-mode Fock matrix at `n_max`.
    pub fn to_fock(&self, n_max: usize) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|s| match s {
                EveState::Coherent(e) => ensemble_to_fock(e, n_max).map(EveState::Fock),
                EveState::Fock(f) => Ok(EveState::Fock(f.clone())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.priors.clone(), states)
    }
}

/// rho_E^k = |sqrt(1-T) alpha_k><sqrt(1-T) alpha_k|.
pub fn eve_states_beamsplitter(alphabet: &Alphabet, transmittance: f64) -> Result<EveConditionalStates> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::domain(format!("transmittance {transmittance} outside [0, 1]")));
    }
    let s = (1.0 - transmittance).sqrt();
    let states = alphabet
        .points()
        .iter()
        .map(|a| EveState::Coherent(StateEnsemble::pure(a * s)))
        .collect();
    EveConditionalStates::new(alphabet.weights().to_vec(), states)
}

/// Eve's two-mode (E, f) states under the entangling cloner, truncated at
/// `n_max` photons per mode.
pub fn eve_states_cloner(
    alphabet: &Alphabet,
    transmittance: f64,
    xi: f64,
    n_max: usize,
) -> Result<EveConditionalStates> {
    if !(transmittance > 0.0 && transmittance < 1.0) && xi > 0.0 {
        return Err(Error::domain(format!(
            "cloner needs T in (0, 1) when xi > 0 (T = {transmittance})"
        )));
    }
    let p = ClonerPurification::new(&alphabet.points(), transmittance, xi, TRUNCATION_LIMIT * 1e-2)?;
    let (_, ne, nf) = p.dims();
    if ne > n_max + 1 || nf > n_max + 1 {
        return Err(Error::Truncation {
            tail: TRUNCATION_LIMIT,
            limit: TRUNCATION_LIMIT,
            n_max,
        });
    }
    let states = (0..p.len())
        .map(|k| {
            let rho = p.eve_density(k);
            FockDensityMatrix::from_unnormalised(vec![ne, nf], rho, p.deficit()).map(EveState::Fock)
        })
        .collect::<Result<Vec<_>>>()?;
    EveConditionalStates::new(alphabet.weights().to_vec(), states)
}

/// chi = S(sum_k p_k rho_k) - sum_k p_k S(rho_k).
///
/// Gram-spectrum route when every state is a coherent mixture, Fock route otherwise.
pub fn holevo_information(states: &EveConditionalStates) -> Result<f64> {
    let all_coherent = states.states.iter().all(|s| matches!(s, EveState::Coherent(_)));
    let chi = if all_coherent {
        let mut mix = Vec::new();
        let mut cond = 0.0;
        for (p, s) in states.priors.iter().zip(&states.states) {
            if let EveState::Coherent(e) = s {
                if *p > 0.0 {
                    mix.extend(e.entries().iter().map(|(a, w)| (*a, w * p)));
                    cond += p * gram_spectrum_entropy(e)?;
                }
            }
        }
        gram_spectrum_entropy(&merge_duplicates(mix)?)? - cond
    } else {
        let fock = if states.states.iter().any(|s| matches!(s, EveState::Coherent(_))) {
            let amax = states
                .states
                .iter()
                .filter_map(|s| match s {
                    EveState::Coherent(e) => Some(e.entries().iter().map(|x| x.0.norm_sqr()).fold(0.0, f64::max)),
                    _ => None,
                })
                .fold(0.0, f64::max);
            states.to_fock(cutoff_for(amax, 1e-12).max(1))?
        } else {
            states.clone()
        };
        holevo_fock(&fock)?
    };
    Ok(chi.max(0.0))
}

fn holevo_fock(states: &EveConditionalStates) -> Result<f64> {
    let mut mix: Option<nalgebra::DMatrix<C64>> = None;
    let mut dims = None;
    let mut cond = 0.0;
    for (p, s) in states.priors.iter().zip(&states.states) {
        let EveState::Fock(f) = s else {
            return Err(Error::Numerics("expected Fock state".into()));
        };
        match &dims {
            None => dims = Some(f.dims().to_vec()),
            Some(d) if d.as_slice() != f.dims() => {
                return Err(Error::domain("conditional states live on different Fock spaces"));
            }
            _ => {}
        }
        if *p > 0.0 {
            cond += p * von_neumann_entropy(f)?;
        }
        let term = f.matrix() * C64::new(*p, 0.0);
        mix = Some(match mix {
            None => term,
            Some(m) => m + term,
        });
    }
    let mix = mix.expect("at least one state");
    let tr = real_trace(&mix);
    let rho = FockDensityMatrix::from_unnormalised(dims.unwrap_or_default(), mix, 0.0)?;
    debug_assert!((tr - 1.0).abs() < 1e-8);
    Ok(von_neumann_entropy(&rho)? - cond)
}

/// Merges identical amplitudes so the Gram matrix stays well conditioned.
fn merge_duplicates(entries: Vec<(C64, f64)>) -> Result<StateEnsemble> {
    let mut out: Vec<(C64, f64)> = Vec::new();
    for (a, w) in entries {
        if let Some(e) = out.iter_mut().find(|e| (e.0 - a).norm() < 1e-14) {
            e.1 += w;
        } else {
            out.push((a, w));
        }
    }
    let s: f64 = out.iter().map(|e| e.1).sum();
    StateEnsemble::new(out.into_iter().map(|(a, w)| (a, w / s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_beamsplitter_leaks_nothing() {
        let e = eve_states_beamsplitter(&Alphabet::qpsk(0.64), 1.0).unwrap();
        for s in e.states() {
            let EveState::Coherent(en) = s else { panic!() };
            assert_eq!(en.entries()[0].0, C64::new(0.0, 0.0));
        }
        assert!(holevo_information(&e).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_limit_two_bits() {
        let e = eve_states_beamsplitter(&Alphabet::qpsk(12.0), 0.0).unwrap();
        assert!((holevo_information(&e).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn tapped_amplitude() {
        let e = eve_states_beamsplitter(&Alphabet::qpsk(0.64), 0.86).unwrap();
        let EveState::Coherent(en) = &e.states()[0] else { panic!() };
        assert!((en.entries()[0].0.norm() - 0.239_46).abs() < 1e-5);
    }
}
