//! Run configuration: a plain `key = value` file plus command-line overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown and repeated
//! keys are errors. Lists are comma separated. See [`KEYS`] for the accepted
//! keys and their meaning.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use qnic_core::channels::AttackModel;
use qnic_core::presets::{self, Protocol, RunPreset, XiReference};
use qnic_protostack::Adversary;

use crate::error::{CliError, Result};

/// Accepted keys with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("protocol", "qds-b | qds-f | qss-b | qkd-f"),
    ("preset", "run1 .. run4: amplitude, excess noise and loss of an experimental run"),
    ("loss_db", "channel loss in dB (overrides the preset)"),
    ("loss_grid", "comma-separated losses in dB for curve output"),
    ("amplitude", "QPSK amplitude (overrides the preset)"),
    ("xi", "excess noise in shot-noise units (overrides the preset)"),
    ("xi_reference", "detector | channel: where xi is referred to"),
    ("eta", "detector efficiency (default per protocol)"),
    ("v_el", "detector electronic noise (default 0)"),
    ("attack", "beamsplitter | cloner"),
    ("epsilon", "signature failure probability (default 1e-4)"),
    ("delta_r", "fixed postselection radius; omit to optimise"),
    ("delta_theta", "postselection angular margin (default 0)"),
    ("dr_max", "largest radius searched by the optimiser (default 4)"),
    ("dr_step", "coarse radius step (default 0.1)"),
    ("g", "fixed QSS gauge weight for Bob; with h, omit both to optimise"),
    ("h", "fixed QSS gauge weight for Charlie"),
    ("n_max", "Fock cutoff for forger bounds (default 80)"),
    ("rate_abs_tol", "absolute tolerance of rate integrals in bits"),
    ("seed", "master seed (default 0)"),
    ("out", "output directory (default out)"),
    ("length", "states per pool or session in simulations"),
    ("message", "0 | 1: message bit to sign"),
    ("adversary", "none | random-guess | beamsplitter-forger"),
    ("dishonest", "none | bob | charlie: player whose share exclusivity is reported"),
    ("secret_bits", "secret length for QSS/QKD simulations"),
    ("efficiency", "reconciliation efficiency in (0, 1] (default 1)"),
    ("bins", "key quantisation bins per quadrature (default 4)"),
    ("drift_rate", "phase random-walk rate in rad per symbol (default 0)"),
    ("jitter_rel", "relative amplitude jitter (default 0)"),
    ("save_records", "true | false: persist Tx/Rx records (default true)"),
    ("sweep_loss_min", "sweep start in dB (default 0)"),
    ("sweep_loss_max", "sweep end in dB (default 6)"),
    ("sweep_loss_step", "sweep step in dB (default 0.25)"),
    ("sweep_presets", "presets swept (default run1,run2,run3,run4)"),
    ("sweep_figures", "subset of fig6_top_qds_b,fig6_bottom_qss_b,fig7_top_qds_f,fig7_bottom_qkd_f"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dishonest {
    Bob,
    Charlie,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocol: Option<Protocol>,
    pub preset: Option<String>,
    pub loss_db: Option<f64>,
    pub loss_grid: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub xi: Option<f64>,
    pub xi_reference: XiReference,
    pub eta: Option<f64>,
    pub v_el: f64,
    pub attack: Option<AttackModel>,
    pub epsilon: f64,
    pub delta_r: Option<f64>,
    pub delta_theta: f64,
    pub dr_max: f64,
    pub dr_step: f64,
    pub g: Option<f64>,
    pub h: Option<f64>,
    pub n_max: usize,
    pub rate_abs_tol: Option<f64>,
    pub seed: u64,
    /// Not serialised: outputs do not depend on where they are written.
    #[serde(skip)]
    pub out: PathBuf,
    pub length: Option<usize>,
    pub message: bool,
    pub adversary: Option<Adversary>,
    pub dishonest: Option<Dishonest>,
    pub secret_bits: Option<usize>,
    pub efficiency: f64,
    pub bins: usize,
    pub drift_rate: f64,
    pub jitter_rel: f64,
    pub save_records: bool,
    pub sweep_loss_min: f64,
    pub sweep_loss_max: f64,
    pub sweep_loss_step: f64,
    pub sweep_presets: Vec<String>,
    pub sweep_figures: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: None,
            preset: None,
            loss_db: None,
            loss_grid: None,
            amplitude: None,
            xi: None,
            xi_reference: XiReference::Detector,
            eta: None,
            v_el: 0.0,
            attack: None,
            epsilon: 1e-4,
            delta_r: None,
            delta_theta: 0.0,
            dr_max: 4.0,
            dr_step: 0.1,
            g: None,
            h: None,
            n_max: 80,
            rate_abs_tol: None,
            seed: 0,
            out: PathBuf::from("out"),
            length: None,
            message: false,
            adversary: None,
            dishonest: None,
            secret_bits: None,
            efficiency: 1.0,
            bins: 4,
            drift_rate: 0.0,
            jitter_rel: 0.0,
            save_records: true,
            sweep_loss_min: 0.0,
            sweep_loss_max: 6.0,
            sweep_loss_step: 0.25,
            sweep_presets: presets::RUNS.iter().map(|r| r.name.to_string()).collect(),
            sweep_figures: crate::sweep::FIGURES.iter().map(|f| f.name.to_string()).collect(),
        }
    }
}

/// Raw entries of a config file, with their line numbers.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(CliError::config(line, "", "expected `key = value`"));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(CliError::config(line, k, "unknown key"));
        }
        if out.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(CliError::config(line, k, "key given twice"));
        }
    }
    Ok(out)
}

fn parse<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| CliError::config(line, key, &format!("cannot parse '{v}': {e}")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(line, key, s))
        .collect()
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(line, key, &format!("expected true or false, got '{v}'"))),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_kv(&text)
    }

    pub fn from_str_kv(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (k, (line, v)) in parse_kv(text)? {
            c.set(&k, &v, line)?;
        }
        Ok(c)
    }

    /// Sets one key; `line` is 0 for command-line values.
    pub fn set(&mut self, key: &str, v: &str, line: usize) -> Result<()> {
        let some = |x| Some(x);
        match key {
            "protocol" => self.protocol = some(parse::<Protocol>(line, key, v)?),
            "preset" => {
                presets::run(v).map_err(|e| CliError::config(line, key, &e.to_string()))?;
                self.preset = Some(v.to_string());
            }
            "loss_db" => self.loss_db = Some(parse(line, key, v)?),
            "loss_grid" => self.loss_grid = Some(parse_list(line, key, v)?),
            "amplitude" => self.amplitude = Some(parse(line, key, v)?),
            "xi" => self.xi = Some(parse(line, key, v)?),
            "xi_reference" => self.xi_reference = parse(line, key, v)?,
            "eta" => self.eta = Some(parse(line, key, v)?),
            "v_el" => self.v_el = parse(line, key, v)?,
            "attack" => self.attack = Some(parse(line, key, v)?),
            "epsilon" => self.epsilon = parse(line, key, v)?,
            "delta_r" => self.delta_r = Some(parse(line, key, v)?),
            "delta_theta" => self.delta_theta = parse(line, key, v)?,
            "dr_max" => self.dr_max = parse(line, key, v)?,
            "dr_step" => self.dr_step = parse(line, key, v)?,
            "g" => self.g = Some(parse(line, key, v)?),
            "h" => self.h = Some(parse(line, key, v)?),
            "n_max" => self.n_max = parse(line, key, v)?,
            "rate_abs_tol" => self.rate_abs_tol = Some(parse(line, key, v)?),
            "seed" => self.seed = parse(line, key, v)?,
            "out" => self.out = PathBuf::from(v),
            "length" => self.length = Some(parse(line, key, v)?),
            "message" => {
                self.message = match v {
                    "0" => false,
                    "1" => true,
                    _ => return Err(CliError::config(line, key, "message bit must be 0 or 1")),
                }
            }
            "adversary" => self.adversary = if v == "none" { None } else { Some(parse(line, key, v)?) },
            "dishonest" => {
                self.dishonest = match v {
                    "none" => None,
                    "bob" => Some(Dishonest::Bob),
                    "charlie" => Some(Dishonest::Charlie),
                    _ => return Err(CliError::config(line, key, "expected none, bob or charlie")),
                }
            }
            "secret_bits" => self.secret_bits = Some(parse(line, key, v)?),
            "efficiency" => self.efficiency = parse(line, key, v)?,
            "bins" => self.bins = parse(line, key, v)?,
            "drift_rate" => self.drift_rate = parse(line, key, v)?,
            "jitter_rel" => self.jitter_rel = parse(line, key, v)?,
            "save_records" => self.save_records = parse_bool(line, key, v)?,
            "sweep_loss_min" => self.sweep_loss_min = parse(line, key, v)?,
            "sweep_loss_max" => self.sweep_loss_max = parse(line, key, v)?,
            "sweep_loss_step" => self.sweep_loss_step = parse(line, key, v)?,
            "sweep_presets" => self.sweep_presets = parse_list(line, key, v)?,
            "sweep_figures" => self.sweep_figures = parse_list(line, key, v)?,
            _ => return Err(CliError::config(line, key, "unknown key")),
        }
        Ok(())
    }

    /// Range and consistency checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| Err(CliError::config(0, k, m));
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if let Some(l) = self.loss_db {
            if !finite_nonneg(l) {
                return bad("loss_db", "must be finite and >= 0");
            }
        }
        if let Some(g) = &self.loss_grid {
            if g.is_empty() {
                return bad("loss_grid", "grid is empty");
            }
            if !g.iter().all(|x| finite_nonneg(*x)) {
                return bad("loss_grid", "losses must be finite and >= 0");
            }
        }
        if let Some(a) = self.amplitude {
            if !(a > 0.0 && a.is_finite()) {
                return bad("amplitude", "must be > 0");
            }
        }
        if let Some(x) = self.xi {
            if !finite_nonneg(x) {
                return bad("xi", "must be finite and >= 0");
            }
        }
        if let Some(e) = self.eta {
            if !(e > 0.0 && e <= 1.0) {
                return bad("eta", "must lie in (0, 1]");
            }
        }
        if !finite_nonneg(self.v_el) {
            return bad("v_el", "must be finite and >= 0");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", "must lie in (0, 1)");
        }
        if let Some(d) = self.delta_r {
            if !finite_nonneg(d) {
                return bad("delta_r", "must be finite and >= 0");
            }
        }
        if !(0.0..std::f64::consts::FRAC_PI_4).contains(&self.delta_theta) {
            return bad("delta_theta", "must lie in [0, pi/4)");
        }
        if !(self.dr_step > 0.0 && finite_nonneg(self.dr_max)) {
            return bad("dr_step", "need dr_step > 0 and dr_max >= 0");
        }
        if self.g.is_some() != self.h.is_some() {
            return bad("g", "give both g and h, or neither");
        }
        if let (Some(g), Some(h)) = (self.g, self.h) {
            if !(g.is_finite() && h.is_finite()) || (g == 0.0 && h == 0.0) {
                return bad("g", "gauge (g, h) must be finite and not both zero");
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("efficiency", "must lie in (0, 1]");
        }
        if !(self.bins >= 2 && self.bins.is_power_of_two()) {
            return bad("bins", "must be a power of two >= 2");
        }
        if !finite_nonneg(self.drift_rate) || !finite_nonneg(self.jitter_rel) {
            return bad("drift_rate", "drift_rate and jitter_rel must be finite and >= 0");
        }
        if let Some(l) = self.length {
            if l < 2 {
                return bad("length", "must be >= 2");
            }
        }
        if self.n_max < 4 {
            return bad("n_max", "must be >= 4");
        }
        if let Some(t) = self.rate_abs_tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad("rate_abs_tol", "must be > 0");
            }
        }
        Ok(())
    }

    /// Loss values of the sweep grid.
    pub fn sweep_grid(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.loss_grid {
            return Ok(g.clone());
        }
        let (lo, hi, st) = (self.sweep_loss_min, self.sweep_loss_max, self.sweep_loss_step);
        if !(lo.is_finite() && hi.is_finite() && st > 0.0 && lo >= 0.0) {
            return Err(CliError::config(0, "sweep_loss_step", "need finite bounds, min >= 0 and step > 0"));
        }
        if hi < lo {
            return Err(CliError::config(0, "sweep_loss_max", "grid is empty (max < min)"));
        }
        let n = ((hi - lo) / st + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + i as f64 * st).collect())
    }

    pub fn preset(&self) -> Result<Option<&'static RunPreset>> {
        self.preset
            .as_deref()
            .map(|p| presets::run(p).map_err(CliError::from))
            .transpose()
    }

    /// SHA-256 over the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = RunConfig::from_str_kv("# run\nprotocol = qss-b\npreset = run2\n\nloss_grid = 0, 1.5,3\n").unwrap();
        assert_eq!(c.protocol, Some(Protocol::QssB));
        assert_eq!(c.loss_grid, Some(vec![0.0, 1.5, 3.0]));
        let e = RunConfig::from_str_kv("protocol = qss-b\ncolour = red\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(e.to_string().contains("colour"), "{e}");
        assert!(RunConfig::from_str_kv("seed = 1\nseed = 2\n").is_err());
        assert!(RunConfig::from_str_kv("seed = -1\n").is_err());
        assert!(RunConfig::from_str_kv("just text\n").is_err());
        assert!(RunConfig::from_str_kv("preset = run9\n").is_err());
    }

    #[test]
    fn empty_grids_fail_validation() {
        let c = RunConfig::from_str_kv("loss_grid = \n").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_str_kv("sweep_loss_min = 3\nsweep_loss_max = 1\n").unwrap();
        assert!(c.sweep_grid().is_err());
        let c = RunConfig::default();
        assert_eq!(c.sweep_grid().unwrap().len(), 25);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
