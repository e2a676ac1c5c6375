//! Grid searches over the postselection radius and the QSS gauge angle.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::AttackModel;
use crate::qcore::quad::Tolerance;
use crate::qcore::{Alphabet, Link};
use crate::secanalysis::perr::perr_honest;
use crate::secanalysis::qds::{pe_qds_b, pe_qds_f, thresholds_and_length, ForgerModel, PeResult, SecurityBudget};
use crate::secanalysis::rates::{qss_rate, Leg, QssRate};
use crate::secanalysis::region::PostselectionRegion;
use crate::{Error, Result};

/// QDS direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QdsKind {
    /// Backward: recipients send states to the signer.
    B,
    /// Forward: the signer sends states to both recipients.
    F,
}

/// Everything that fixes one QDS operating point except the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdsPoint {
    pub kind: QdsKind,
    pub attack: AttackModel,
    pub amplitude: f64,
    /// Attacked line plus the honest receiver's detector.
    pub link: Link,
    pub forger: ForgerModel,
    pub epsilon: f64,
    pub n_max: usize,
}

impl QdsPoint {
    pub fn new(kind: QdsKind, attack: AttackModel, amplitude: f64, link: Link) -> Self {
        Self {
            kind,
            attack,
            amplitude,
            link,
            forger: ForgerModel::default(),
            epsilon: 1e-4,
            n_max: 80,
        }
    }
}

/// Budget at one region, with the forger bound it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEvaluation {
    pub region: PostselectionRegion,
    pub pe: PeResult,
    pub p_err: f64,
    pub acceptance: f64,
    pub budget: Option<SecurityBudget>,
}

/// Forger bound that does not depend on the region (QDS-b), computed once.
pub fn region_free_pe(point: &QdsPoint) -> Result<Option<PeResult>> {
    match point.kind {
        QdsKind::B => Ok(Some(pe_qds_b(
            point.attack,
            &Alphabet::qpsk(point.amplitude),
            point.link.noise.transmittance,
            point.link.noise.xi(),
            point.n_max,
        )?)),
        QdsKind::F => Ok(None),
    }
}

/// Evaluates one region. `fixed_pe` short-circuits the forger bound for QDS-b.
pub fn evaluate_region(
    point: &QdsPoint,
    region: &PostselectionRegion,
    fixed_pe: Option<&PeResult>,
) -> Result<RegionEvaluation> {
    let (pe, p_err, acceptance) = match point.kind {
        QdsKind::B => {
            let pe = match fixed_pe {
                Some(p) => *p,
                None => region_free_pe(point)?.expect("QDS-b bound"),
            };
            let h = perr_honest(point.amplitude, &point.link, region)?;
            (pe, h.p_err, h.acceptance)
        }
        QdsKind::F => {
            let pe = pe_qds_f(
                point.attack,
                &Alphabet::qpsk(point.amplitude),
                &point.link,
                region,
                point.forger,
                point.n_max,
            )?;
            let (p_err, acc) = (pe.p_err.unwrap_or(0.5), pe.acceptance.unwrap_or(1.0));
            (pe, p_err, acc)
        }
    };
    let budget = match thresholds_and_length(pe.p_e, p_err, point.epsilon, acceptance) {
        Ok(b) => Some(b),
        Err(Error::InsecureChannel { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(RegionEvaluation {
        region: *region,
        pe,
        p_err,
        acceptance,
        budget,
    })
}

/// Coarse-to-fine grid over delta_r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub dr_max: f64,
    pub step: f64,
    /// Each level re-grids +-step around the incumbent at step / 10.
    pub refine_levels: usize,
    pub delta_theta: f64,
}

impl Default for RegionGrid {
    fn default() -> Self {
        Self {
            dr_max: 4.0,
            step: 0.1,
            refine_levels: 2,
            delta_theta: 0.0,
        }
    }
}

/// Best region found and its full budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOptimum {
    pub best: RegionEvaluation,
    pub budget: SecurityBudget,
    pub evaluated: usize,
}

fn better(a: &RegionEvaluation, b: &RegionEvaluation) -> bool {
    match (&a.budget, &b.budget) {
        (Some(x), Some(y)) => {
            let (lx, ly) = (x.l_tilde_real(), y.l_tilde_real());
            if (lx - ly).abs() <= 1e-12 * lx.max(ly) {
                a.region.delta_r < b.region.delta_r
            } else {
                lx < ly
            }
        }
        (Some(_), None) => true,
        _ => false,
    }
}

/// Minimises L~ over delta_r. Ties go to the smaller radius.
pub fn optimize_region(point: &QdsPoint, grid: &RegionGrid) -> Result<RegionOptimum> {
    if !(grid.step > 0.0 && grid.dr_max >= 0.0) {
        return Err(Error::domain("region grid needs step > 0 and dr_max >= 0"));
    }
    let fixed = region_free_pe(point)?;
    let eval_all = |rs: Vec<f64>| -> Result<Vec<RegionEvaluation>> {
        rs.into_par_iter()
            .map(|dr| {
                let reg = PostselectionRegion::new(dr, grid.delta_theta)?;
                evaluate_region(point, &reg, fixed.as_ref())
            })
            .collect()
    };
    let n = (grid.dr_max / grid.step).round() as usize;
    let mut evals = eval_all((0..=n).map(|i| i as f64 * grid.step).collect())?;
    let mut count = evals.len();
    let mut best = pick(&evals);
    let mut step = grid.step;
    for _ in 0..grid.refine_levels {
        let Some(b) = best else { break };
        let centre = b.region.delta_r;
        let fine = step / 10.0;
        let pts: Vec<f64> = (-10..=10)
            .map(|i| centre + i as f64 * fine)
            .filter(|r| *r >= 0.0 && (*r - centre).abs() > 1e-15)
            .collect();
        evals = eval_all(pts)?;
        count += evals.len();
        evals.push(b);
        best = pick(&evals);
        step = fine;
    }
    match best {
        Some(b) => Ok(RegionOptimum {
            budget: b.budget.expect("picked evaluations are secure"),
            best: b,
            evaluated: count,
        }),
        None => {
            let gap = evals.iter().map(|e| e.pe.p_e - e.p_err).fold(f64::NEG_INFINITY, f64::max);
            Err(Error::InsecureChannel { gap })
        }
    }
}

fn pick(evals: &[RegionEvaluation]) -> Option<RegionEvaluation> {
    let mut best: Option<RegionEvaluation> = None;
    for e in evals {
        if e.budget.is_none() {
            continue;
        }
        if best.as_ref().map_or(true, |b| better(e, b)) {
            best = Some(*e);
        }
    }
    best
}

/// Angle search for the gauge (g, h) = (cos theta, sin theta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhGrid {
    pub coarse_points: usize,
    pub golden_iterations: usize,
}

impl Default for GhGrid {
    fn default() -> Self {
        Self {
            coarse_points: 9,
            golden_iterations: 18,
        }
    }
}

/// Maximises min(kappa_B, kappa_C) over theta in [0, pi/2].
pub fn optimize_gh(b: &Leg, c: &Leg, attack: AttackModel, grid: &GhGrid, tol: Tolerance) -> Result<QssRate> {
    if grid.coarse_points < 3 {
        return Err(Error::domain("gauge grid needs at least 3 points"));
    }
    let rate = |th: f64| qss_rate(b, c, th.cos(), th.sin(), attack, tol);
    let m = grid.coarse_points - 1;
    let thetas: Vec<f64> = (0..=m).map(|i| FRAC_PI_2 * i as f64 / m as f64).collect();
    let coarse: Vec<QssRate> = thetas.par_iter().map(|&t| rate(t)).collect::<Result<_>>()?;
    let mut ib = 0;
    for (i, r) in coarse.iter().enumerate() {
        if r.kappa_final > coarse[ib].kappa_final {
            ib = i;
        }
    }
    let mut best = coarse[ib];
    if best.kappa_final <= 0.0 {
        return Ok(best);
    }
    let mut lo = thetas[ib.saturating_sub(1)];
    let mut hi = thetas[(ib + 1).min(m)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = rate(x1)?;
    let mut f2 = rate(x2)?;
    for _ in 0..grid.golden_iterations {
        if f1.kappa_final >= f2.kappa_final {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = rate(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = rate(x2)?;
        }
    }
    for f in [f1, f2] {
        if f.kappa_final > best.kappa_final {
            best = f;
        }
    }
    Ok(best)
}
