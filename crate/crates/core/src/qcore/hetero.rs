//! Channel, detector and the heterodyne outcome law.
//!
//! Outcome x for sent amplitude alpha: per quadrature Gaussian with mean
//! sqrt(eta T) alpha and variance 1/2 + eta T xi_q / 4 + v_el / 2, where xi_q is
//! the channel-input excess noise of that quadrature (shot-noise units). With
//! symmetric noise the complex variance is sigma^2 = 1 + eta T xi / 2 + v_el.

use serde::{Deserialize, Serialize};

use crate::qcore::coherent::ComplexSample;
use crate::{Error, Result, C64};

/// Channel transmittance and channel-input excess noise per quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub transmittance: f64,
    pub xi_x: f64,
    pub xi_p: f64,
}

impl NoiseModel {
    pub fn new(transmittance: f64, xi: f64) -> Result<Self> {
        Self::with_quadratures(transmittance, xi, xi)
    }

    pub fn with_quadratures(transmittance: f64, xi_x: f64, xi_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::domain(format!("transmittance {transmittance} outside [0, 1]")));
        }
        if !(xi_x >= 0.0 && xi_p >= 0.0 && xi_x.is_finite() && xi_p.is_finite()) {
            return Err(Error::domain("excess noise must be finite and >= 0"));
        }
        Ok(Self {
            transmittance,
            xi_x,
            xi_p,
        })
    }

    /// Transmittance from a loss in dB.
    pub fn from_loss_db(loss_db: f64, xi: f64) -> Result<Self> {
        if !(loss_db >= 0.0) {
            return Err(Error::domain(format!("loss {loss_db} dB must be >= 0")));
        }
        Self::new(db_to_transmittance(loss_db), xi)
    }

    /// Worst-case excess noise max(xi_x, xi_p).
    pub fn xi(&self) -> f64 {
        self.xi_x.max(self.xi_p)
    }

    pub fn loss_db(&self) -> f64 {
        -10.0 * self.transmittance.log10()
    }
}

pub fn db_to_transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Trusted detector: efficiency and electronic noise (complex-variance units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub eta: f64,
    pub v_el: f64,
}

impl DetectorParams {
    pub fn new(eta: f64, v_el: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::domain(format!("detector efficiency {eta} outside (0, 1]")));
        }
        if !(v_el >= 0.0 && v_el.is_finite()) {
            return Err(Error::domain("electronic noise must be finite and >= 0"));
        }
        Ok(Self { eta, v_el })
    }

    pub fn ideal() -> Self {
        Self { eta: 1.0, v_el: 0.0 }
    }

    /// Complex variance of the detector's own smoothing (1 - eta + v_el).
    pub fn added_variance(&self) -> f64 {
        1.0 - self.eta + self.v_el
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self::ideal()
    }
}

/// Channel plus detector: everything needed for the honest outcome law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub noise: NoiseModel,
    pub det: DetectorParams,
}

impl Link {
    pub fn new(noise: NoiseModel, det: DetectorParams) -> Self {
        Self { noise, det }
    }

    /// Amplitude gain sqrt(eta T) from sent amplitude to outcome mean.
    pub fn gain(&self) -> f64 {
        (self.det.eta * self.noise.transmittance).sqrt()
    }

    /// Per-quadrature variances (x, p).
    pub fn quadrature_variances(&self) -> (f64, f64) {
        let et = self.det.eta * self.noise.transmittance;
        let base = 0.5 + 0.5 * self.det.v_el;
        (base + 0.25 * et * self.noise.xi_x, base + 0.25 * et * self.noise.xi_p)
    }

    /// Complex variance sigma^2 using the worst-case excess noise.
    pub fn sigma2(&self) -> f64 {
        1.0 + 0.5 * self.det.eta * self.noise.transmittance * self.noise.xi() + self.det.v_el
    }
}

/// p(x | alpha) for the given link (density over the complex plane).
pub fn heterodyne_pdf(x: ComplexSample, alpha: C64, link: &Link) -> f64 {
    let mu = alpha * link.gain();
    let (vx, vp) = link.quadrature_variances();
    let dx = x.re - mu.re;
    let dp = x.im - mu.im;
    (-(dx * dx) / (2.0 * vx) - (dp * dp) / (2.0 * vp)).exp()
        / (2.0 * std::f64::consts::PI * (vx * vp).sqrt())
}
