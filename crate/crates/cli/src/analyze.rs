//! Security analysis at one operating point, shared by `analyze` and `sweep`.
//!
//! The quoted excess noise is referred to the preset's own loss; changing the
//! loss keeps the channel-input noise fixed.

use serde::Serialize;

use qnic_core::channels::AttackModel;
use qnic_core::presets::{self, channel_xi, Protocol, RunPreset};
use qnic_core::qcore::quad::Tolerance;
use qnic_core::qcore::{db_to_transmittance, DetectorParams, Link, NoiseModel};
use qnic_core::secanalysis::{
    evaluate_region, optimize_gh, optimize_region, qkd_f_rate, qss_rate, rate_tolerance, GhGrid, Leg,
    PostselectionRegion, QdsKind, QdsPoint, RegionGrid, SecurityBudget,
};
use qnic_core::Error as CoreError;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{self, CurveRow};

pub const DEFAULT_PRESET: &str = "run1";

/// Attack assumed when the configuration names none.
pub fn default_attack(p: Protocol) -> AttackModel {
    match p {
        Protocol::QdsB => AttackModel::EntanglingCloner,
        _ => AttackModel::Beamsplitter,
    }
}

/// Channel, detector and alphabet of one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub protocol: Protocol,
    pub preset: String,
    pub loss_db: f64,
    pub transmittance: f64,
    pub amplitude: f64,
    /// Excess noise as quoted (measured or channel-referred, see `xi_reference`).
    pub xi: f64,
    pub xi_channel: f64,
    pub eta: f64,
    pub v_el: f64,
    pub attack: AttackModel,
    #[serde(skip)]
    pub link: Link,
}

impl OperatingPoint {
    /// Resolves the point for `protocol`, at `loss_db` when given.
    pub fn resolve(cfg: &RunConfig, protocol: Protocol, preset: &RunPreset, loss_db: Option<f64>) -> Result<Self> {
        let amplitude = cfg.amplitude.unwrap_or(preset.amplitude);
        let xi = cfg.xi.unwrap_or(preset.xi_measured);
        let eta = cfg.eta.unwrap_or(protocol.default_eta());
        let loss_db = loss_db.or(cfg.loss_db).unwrap_or(preset.loss_db);
        let t = db_to_transmittance(loss_db);
        let xi_channel = channel_xi(xi, cfg.xi_reference, eta, preset.transmittance());
        let link = Link::new(NoiseModel::new(t, xi_channel)?, DetectorParams::new(eta, cfg.v_el)?);
        Ok(Self {
            protocol,
            preset: preset.name.to_string(),
            loss_db,
            transmittance: t,
            amplitude,
            xi,
            xi_channel,
            eta,
            v_el: cfg.v_el,
            attack: cfg.attack.unwrap_or(default_attack(protocol)),
            link,
        })
    }
}

/// Figures of merit at one point. Fields not produced by the protocol are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    #[serde(flatten)]
    pub point: OperatingPoint,
    pub l: Option<f64>,
    pub l_tilde: Option<f64>,
    pub kappa: Option<f64>,
    pub two_kappa: Option<f64>,
    pub p_e: Option<f64>,
    pub p_err: Option<f64>,
    pub acceptance: Option<f64>,
    pub delta_r_opt: Option<f64>,
    pub delta_theta: Option<f64>,
    pub s_b: Option<f64>,
    pub s_c: Option<f64>,
    pub g: Option<f64>,
    pub h: Option<f64>,
    pub mutual_information: Option<f64>,
    pub holevo: Option<f64>,
}

impl PointResult {
    fn empty(point: OperatingPoint) -> Self {
        Self {
            point,
            l: None,
            l_tilde: None,
            kappa: None,
            two_kappa: None,
            p_e: None,
            p_err: None,
            acceptance: None,
            delta_r_opt: None,
            delta_theta: None,
            s_b: None,
            s_c: None,
            g: None,
            h: None,
            mutual_information: None,
            holevo: None,
        }
    }

    fn with_budget(mut self, b: &SecurityBudget, region: &PostselectionRegion) -> Self {
        self.l = Some(b.l);
        self.l_tilde = Some(b.l_tilde);
        self.p_e = Some(b.p_e);
        self.p_err = Some(b.p_err);
        self.acceptance = Some(b.acceptance);
        self.s_b = Some(b.s_b);
        self.s_c = Some(b.s_c);
        self.delta_r_opt = Some(region.delta_r);
        self.delta_theta = Some(region.delta_theta);
        self
    }

    /// The rate quoted for the protocol: 2 kappa for secret sharing, kappa for QKD.
    pub fn headline_rate(&self) -> Option<f64> {
        match self.point.protocol {
            Protocol::QssB => self.two_kappa,
            _ => self.kappa,
        }
    }

    pub fn curve_row(&self) -> CurveRow {
        CurveRow {
            loss_db: self.point.loss_db,
            alpha: self.point.amplitude,
            xi: self.point.xi,
            l: self.l,
            l_tilde: self.l_tilde,
            kappa: self.headline_rate(),
            p_e: self.p_e,
            p_err: self.p_err,
            n: self.acceptance,
            delta_r_opt: self.delta_r_opt,
        }
    }
}

fn rate_tol(cfg: &RunConfig) -> Tolerance {
    let mut t = rate_tolerance();
    if let Some(abs) = cfg.rate_abs_tol {
        t.abs = abs;
    }
    t
}

/// QDS point with the budget settings of `cfg`.
pub fn qds_point(cfg: &RunConfig, op: &OperatingPoint) -> Result<QdsPoint> {
    let kind = match op.protocol {
        Protocol::QdsB => QdsKind::B,
        Protocol::QdsF => QdsKind::F,
        p => return Err(CliError::Usage(format!("{} is not a signature protocol", p.name()))),
    };
    let mut p = QdsPoint::new(kind, op.attack, op.amplitude, op.link);
    p.epsilon = cfg.epsilon;
    p.n_max = cfg.n_max;
    Ok(p)
}

/// Region and budget: the fixed region of `cfg` or the optimum.
pub fn qds_budget(cfg: &RunConfig, point: &QdsPoint) -> Result<(PostselectionRegion, SecurityBudget)> {
    match cfg.delta_r {
        Some(dr) => {
            let region = PostselectionRegion::new(dr, cfg.delta_theta)?;
            let e = evaluate_region(point, &region, None)?;
            match e.budget {
                Some(b) => Ok((region, b)),
                None => Err(CoreError::InsecureChannel { gap: e.pe.p_e - e.p_err }.into()),
            }
        }
        None => {
            let grid = RegionGrid {
                dr_max: cfg.dr_max,
                step: cfg.dr_step,
                delta_theta: cfg.delta_theta,
                ..RegionGrid::default()
            };
            let o = optimize_region(point, &grid)?;
            Ok((o.best.region, o.budget))
        }
    }
}

/// Gauge (g, h): fixed by `cfg` or optimised.
pub fn qss_gauge(cfg: &RunConfig, op: &OperatingPoint) -> Result<qnic_core::secanalysis::QssRate> {
    let leg = Leg::new(op.amplitude, op.link)?;
    let r = match (cfg.g, cfg.h) {
        (Some(g), Some(h)) => qss_rate(&leg, &leg, g, h, op.attack, rate_tol(cfg))?,
        _ => optimize_gh(&leg, &leg, op.attack, &GhGrid::default(), rate_tol(cfg))?,
    };
    Ok(r)
}

pub fn evaluate(cfg: &RunConfig, op: OperatingPoint) -> Result<PointResult> {
    match op.protocol {
        Protocol::QdsB | Protocol::QdsF => {
            let point = qds_point(cfg, &op)?;
            let (region, budget) = qds_budget(cfg, &point)?;
            Ok(PointResult::empty(op).with_budget(&budget, &region))
        }
        Protocol::QssB => {
            let r = qss_gauge(cfg, &op)?;
            let mut out = PointResult::empty(op);
            out.kappa = Some(r.kappa_final);
            out.two_kappa = Some(r.two_kappa);
            out.g = Some(r.g);
            out.h = Some(r.h);
            out.mutual_information = Some(r.eve.mutual_information);
            out.holevo = Some(r.eve.holevo);
            Ok(out)
        }
        Protocol::QkdF => {
            let r = qkd_f_rate(&Leg::new(op.amplitude, op.link)?, op.attack, rate_tol(cfg))?;
            let mut out = PointResult::empty(op);
            out.kappa = Some(r.kappa);
            out.mutual_information = Some(r.mutual_information);
            out.holevo = Some(r.holevo);
            Ok(out)
        }
    }
}

pub fn require_protocol(cfg: &RunConfig) -> Result<Protocol> {
    cfg.protocol
        .ok_or_else(|| CliError::config(0, "protocol", "no protocol given (use --protocol or `protocol = ...`)"))
}

pub fn preset_of(cfg: &RunConfig) -> Result<&'static RunPreset> {
    Ok(presets::run(cfg.preset.as_deref().unwrap_or(DEFAULT_PRESET))?)
}

/// Outcome of one analysed loss value.
#[derive(Debug, Serialize)]
pub struct AnalyzedPoint {
    pub loss_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<PointResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub insecure: bool,
}

pub fn analyze_losses(cfg: &RunConfig, protocol: Protocol, preset: &RunPreset, losses: &[Option<f64>]) -> Vec<AnalyzedPoint> {
    use rayon::prelude::*;
    losses
        .par_iter()
        .map(|loss| {
            let r = OperatingPoint::resolve(cfg, protocol, preset, *loss).and_then(|op| evaluate(cfg, op));
            let loss_db = loss.or(cfg.loss_db).unwrap_or(preset.loss_db);
            match r {
                Ok(p) => AnalyzedPoint {
                    loss_db,
                    result: Some(p),
                    error: None,
                    insecure: false,
                },
                Err(e) => AnalyzedPoint {
                    loss_db,
                    result: None,
                    insecure: e.is_insecure(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// `analyze`: writes `report.json` and `curve.csv` under the output directory.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<Vec<AnalyzedPoint>> {
    cfg.validate()?;
    let protocol = require_protocol(cfg)?;
    let preset = preset_of(cfg)?;
    let losses: Vec<Option<f64>> = match &cfg.loss_grid {
        Some(g) => g.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let points = analyze_losses(cfg, protocol, preset, &losses);

    std::fs::create_dir_all(&cfg.out)?;
    let hash = cfg.hash();
    let report = serde_json::json!({
        "schema": output::OUTPUT_SCHEMA,
        "command": "analyze",
        "config_sha256": hash,
        "seed": cfg.seed,
        "config": cfg,
        "protocol": protocol,
        "preset": preset.name,
        "points": points,
    });
    output::write_json(&cfg.out.join("report.json"), &report)?;
    let rows: Vec<CurveRow> = points
        .iter()
        .map(|p| match &p.result {
            Some(r) => r.curve_row(),
            None => CurveRow::failed(p.loss_db, cfg.amplitude.unwrap_or(preset.amplitude), cfg.xi.unwrap_or(preset.xi_measured)),
        })
        .collect();
    output::write_curve(&cfg.out.join("curve.csv"), &rows, &format!("analyze protocol={}", protocol.name()), &hash, cfg.seed)?;

    let failed: Vec<&AnalyzedPoint> = points.iter().filter(|p| p.error.is_some()).collect();
    if let Some(f) = failed.iter().find(|p| !p.insecure) {
        return Err(CliError::Usage(format!("analysis failed at {} dB: {}", f.loss_db, f.error.as_deref().unwrap_or(""))));
    }
    if !failed.is_empty() {
        let where_: Vec<String> = failed.iter().map(|p| format!("{} dB", p.loss_db)).collect();
        return Err(CliError::Insecure(format!("insecure channel at {}", where_.join(", "))));
    }
    Ok(points)
}
