//! Channel estimation from accepted data slots.

use serde::{Deserialize, Serialize};

use qnic_core::qcore::DetectorParams;

use crate::error::{HwError, Result};
use crate::rx::RxRecord;
use crate::tx::TxRecord;

pub const MIN_ESTIMATION_SYMBOLS: usize = 10_000;

/// Channel-only transmittance (eta divided out) and channel-input excess noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedParams {
    pub t_hat: f64,
    /// max(xi_x, xi_p), clamped at 0.
    pub xi_hat: f64,
    pub xi_x: f64,
    pub xi_p: f64,
    pub alpha_bar: f64,
    pub n_used: usize,
    pub t_std_error: f64,
    /// Standard error of each per-quadrature excess-noise estimate.
    pub xi_std_error: f64,
}

impl EstimatedParams {
    /// Excess noise referred to the detector output, xi * eta * T.
    pub fn xi_detector(&self, det: &DetectorParams) -> f64 {
        self.xi_hat * det.eta * self.t_hat
    }
}

pub fn estimate_channel(tx: &TxRecord, rx: &RxRecord, det: &DetectorParams) -> Result<EstimatedParams> {
    if rx.len() != tx.symbols.len() {
        return Err(HwError::Mismatch(format!("{} received vs {} sent", rx.len(), tx.symbols.len())));
    }
    let used: Vec<usize> = tx.data_indices().filter(|&i| rx.accepted[i]).collect();
    let n = used.len();
    if n < MIN_ESTIMATION_SYMBOLS {
        return Err(HwError::InsufficientData {
            have: n,
            need: MIN_ESTIMATION_SYMBOLS,
        });
    }
    let (mut cross, mut power, mut amp) = (0.0, 0.0, 0.0);
    for &i in &used {
        let s = tx.symbols[i].symbol.amplitude;
        let y = rx.corrected[i].as_c64();
        cross += (y * s.conj()).re;
        power += s.norm_sqr();
        amp += s.norm();
    }
    let gain = cross / power;
    let (mut vx, mut vp) = (0.0, 0.0);
    for &i in &used {
        let r = rx.corrected[i].as_c64() - gain * tx.symbols[i].symbol.amplitude;
        vx += r.re * r.re;
        vp += r.im * r.im;
    }
    let dof = (n - 1) as f64;
    vx /= dof;
    vp /= dof;
    let t_hat = gain * gain / det.eta;
    let shot = 0.5 + 0.5 * det.v_el;
    let scale = 4.0 / (det.eta * t_hat);
    let xi_x = scale * (vx - shot);
    let xi_p = scale * (vp - shot);
    let v = 0.5 * (vx + vp);
    Ok(EstimatedParams {
        t_hat,
        xi_hat: xi_x.max(xi_p).max(0.0),
        xi_x,
        xi_p,
        alpha_bar: amp / n as f64,
        n_used: n,
        t_std_error: 2.0 * gain.abs() * (v / power).sqrt() / det.eta,
        xi_std_error: scale * v * (2.0 / dof).sqrt(),
    })
}
