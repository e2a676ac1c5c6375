use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Polar postselection region: outcomes are kept iff |x| >= delta_r and their
/// angle is at least delta_theta away from both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostselectionRegion {
    pub delta_r: f64,
    pub delta_theta: f64,
}

impl PostselectionRegion {
    pub fn new(delta_r: f64, delta_theta: f64) -> Result<Self> {
        if !(delta_r >= 0.0 && delta_r.is_finite()) {
            return Err(Error::domain(format!("delta_r = {delta_r} must be finite and >= 0")));
        }
        if !(0.0..std::f64::consts::FRAC_PI_4).contains(&delta_theta) {
            return Err(Error::domain(format!("delta_theta = {delta_theta} outside [0, pi/4)")));
        }
        Ok(Self {
            delta_r,
            delta_theta,
        })
    }

    pub fn trivial() -> Self {
        Self {
            delta_r: 0.0,
            delta_theta: 0.0,
        }
    }

    pub fn radial(delta_r: f64) -> Result<Self> {
        Self::new(delta_r, 0.0)
    }

    pub fn is_trivial(&self) -> bool {
        self.delta_r == 0.0 && self.delta_theta == 0.0
    }

    /// Accepted angular interval of quadrant q (0 = first quadrant).
    pub fn sector(&self, q: usize) -> (f64, f64) {
        let base = q as f64 * std::f64::consts::FRAC_PI_2;
        (base + self.delta_theta, base + std::f64::consts::FRAC_PI_2 - self.delta_theta)
    }

    /// Membership test for a single outcome.
    pub fn accepts(&self, re: f64, im: f64) -> bool {
        if re.hypot(im) < self.delta_r {
            return false;
        }
        if self.delta_theta == 0.0 {
            return true;
        }
        // angular distance to the nearest axis
        let a = im.abs().atan2(re.abs());
        a.min(std::f64::consts::FRAC_PI_2 - a) >= self.delta_theta
    }
}

impl Default for PostselectionRegion {
    fn default() -> Self {
        Self::trivial()
    }
}

/// Quadrant index of an outcome: 0 for re >= 0, im >= 0, counter-clockwise.
pub fn quadrant(re: f64, im: f64) -> usize {
    match (re >= 0.0, im >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// Indices eliminated by an outcome in quadrant q: the two farthest points.
pub fn eliminated_by_quadrant(q: usize) -> [usize; 2] {
    [(q + 2) % 4, (q + 3) % 4]
}

/// Quadrants whose elimination names symbol k (a mismatch if k was sent).
pub fn mismatch_quadrants(k: usize) -> [usize; 2] {
    [(k + 1) % 4, (k + 2) % 4]
}
