//! Honest mismatch probability and postselection acceptance.
//!
//! Outcomes are isotropic complex Gaussians CN(sqrt(eta T) alpha_k, s^2) with
//! s^2 = 1 + eta T xi / 2 + v_el, xi taken as the worse quadrature.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::qcore::quad::{integrate_1d, integrate_2d, Rect, Tolerance};
use crate::qcore::special::erfc;
use crate::qcore::{Alphabet, Link};
use crate::secanalysis::region::{mismatch_quadrants, PostselectionRegion};
use crate::{Error, Result, C64};

/// Absolute tolerance for postselected probabilities.
pub const PERR_TOL: f64 = 1e-9;

/// Honest error rate together with the acceptance probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HonestError {
    pub p_err: f64,
    pub acceptance: f64,
    /// Largest quadrature error estimate (0 for closed forms).
    pub abs_error: f64,
}

/// Radial integral of the outcome density along direction `theta`,
/// from `delta_r` to infinity, in closed form.
fn radial_density(mu: C64, s2: f64, delta_r: f64, theta: f64) -> f64 {
    let s = s2.sqrt();
    let (rho, phi) = (mu.norm(), mu.arg());
    let u = rho * (theta - phi).cos();
    let v = rho * (theta - phi).sin();
    let d = (delta_r - u) / s;
    (-v * v / s2).exp() * ((-d * d).exp() / (2.0 * PI) + u / (2.0 * s * PI.sqrt()) * erfc(d))
}

/// P(|x| >= delta_r and arg x in [th0, th1]) for x ~ CN(mu, s2).
pub fn sector_probability(mu: C64, s2: f64, delta_r: f64, th0: f64, th1: f64) -> Result<(f64, f64)> {
    if !(s2 > 0.0) {
        return Err(Error::domain("outcome variance must be > 0"));
    }
    if th1 <= th0 {
        return Ok((0.0, 0.0));
    }
    let r = integrate_1d(
        |t| radial_density(mu, s2, delta_r, t),
        th0,
        th1,
        Tolerance::abs(1e-13).with_budget(200_000),
    )?;
    Ok((r.value.max(0.0), r.abs_error))
}

/// Joint P(k, q, accepted) for every symbol k and quadrant q, using the
/// alphabet's weights.
pub fn quadrant_probabilities(
    alphabet: &Alphabet,
    link: &Link,
    region: &PostselectionRegion,
) -> Result<([[f64; 4]; 4], f64)> {
    let s2 = link.sigma2();
    let g = link.gain();
    let mut p = [[0.0; 4]; 4];
    let mut err = 0.0f64;
    for (k, row) in p.iter_mut().enumerate() {
        let mu = alphabet.point(k) * g;
        for (q, cell) in row.iter_mut().enumerate() {
            let (t0, t1) = region.sector(q);
            let (v, e) = sector_probability(mu, s2, region.delta_r, t0, t1)?;
            *cell = alphabet.weights()[k] * v;
            err = err.max(e);
        }
    }
    Ok((p, err))
}

/// Mismatch probability and acceptance from a joint P(k, q) table.
pub fn perr_from_table(p: &[[f64; 4]; 4]) -> Result<(f64, f64)> {
    let n: f64 = p.iter().flatten().sum();
    if !(n > 0.0) {
        return Err(Error::domain("postselection region accepts nothing"));
    }
    let m: f64 = (0..4)
        .map(|k| mismatch_quadrants(k).iter().map(|&q| p[k][q]).sum::<f64>())
        .sum();
    // summation rounding can push a full-plane region just above 1
    Ok((m / n, n.min(1.0)))
}

/// Honest p_err for a symmetric QPSK alphabet of amplitude `a`.
///
/// Trivial region: 1/2 erfc(sqrt(eta T) a / s). Otherwise the sector integrals.
pub fn perr_honest(a: f64, link: &Link, region: &PostselectionRegion) -> Result<HonestError> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("amplitude {a} must be finite and >= 0")));
    }
    if region.is_trivial() {
        return Ok(HonestError {
            p_err: 0.5 * erfc(link.gain() * a / link.sigma2().sqrt()),
            acceptance: 1.0,
            abs_error: 0.0,
        });
    }
    perr_honest_alphabet(&Alphabet::qpsk(a), link, region)
}

/// Honest p_err by numerical integration for any alphabet and region.
pub fn perr_honest_alphabet(
    alphabet: &Alphabet,
    link: &Link,
    region: &PostselectionRegion,
) -> Result<HonestError> {
    let (p, err) = quadrant_probabilities(alphabet, link, region)?;
    let (p_err, acceptance) = perr_from_table(&p)?;
    Ok(HonestError {
        p_err,
        acceptance,
        abs_error: 4.0 * err,
    })
}

/// Independent 2D polar cubature of the same quantity (slow; used as an oracle).
pub fn perr_cubature(a: f64, link: &Link, region: &PostselectionRegion, tol: f64) -> Result<HonestError> {
    let s2 = link.sigma2();
    let mu = C64::new(link.gain() * a, 0.0);
    let r_max = region.delta_r.max(mu.norm()) + 12.0 * s2.sqrt();
    let mut acc = [0.0; 2];
    let mut err = 0.0f64;
    for q in 0..4 {
        let (t0, t1) = region.sector(q);
        let mismatch = mismatch_quadrants(0).contains(&q);
        let r = integrate_2d(
            |r, t, out| {
                let z = C64::from_polar(r, t) - mu;
                out[0] = r * (-z.norm_sqr() / s2).exp() / (PI * s2);
            },
            1,
            Rect::new(region.delta_r, r_max, t0, t1),
            Tolerance::abs(tol),
        )?;
        acc[0] += r.values[0];
        if mismatch {
            acc[1] += r.values[0];
        }
        err = err.max(r.abs_error);
    }
    Ok(HonestError {
        p_err: acc[1] / acc[0],
        acceptance: acc[0],
        abs_error: err,
    })
}

/// Upper incomplete gamma Gamma(s, x) for s a positive multiple of 1/2.
pub fn upper_gamma_half_integer(twice_s: usize, x: f64) -> f64 {
    assert!(twice_s >= 1);
    let (mut s, mut g) = if twice_s % 2 == 0 {
        (1.0, (-x).exp())
    } else {
        (0.5, PI.sqrt() * erfc(x.sqrt()))
    };
    while 2.0 * s < twice_s as f64 - 0.5 {
        g = s * g + x.powf(s) * (-x).exp();
        s += 1.0;
    }
    g
}

/// Angular width of a quadrant sector, for callers that only need the size.
pub fn sector_width(region: &PostselectionRegion) -> f64 {
    FRAC_PI_2 - 2.0 * region.delta_theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{DetectorParams, NoiseModel};

    fn link(t: f64, xi: f64) -> Link {
        Link::new(NoiseModel::new(t, xi).unwrap(), DetectorParams::ideal())
    }

    #[test]
    fn closed_form_example() {
        let r = perr_honest(0.64, &link(1.0, 0.0), &PostselectionRegion::trivial()).unwrap();
        assert!((r.p_err - 0.182_707_085).abs() < 1e-6, "{}", r.p_err);
    }

    #[test]
    fn zero_amplitude_is_half() {
        let reg = PostselectionRegion::radial(0.7).unwrap();
        let r = perr_honest(0.0, &link(0.5, 0.02), &reg).unwrap();
        assert!((r.p_err - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sectors_sum_to_one() {
        let mu = C64::new(0.4, -0.9);
        let tot: f64 = (0..4)
            .map(|q| {
                let (a, b) = PostselectionRegion::trivial().sector(q);
                sector_probability(mu, 1.3, 0.0, a, b).unwrap().0
            })
            .sum();
        assert!((tot - 1.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let l = link(0.7, 0.03);
        let closed = perr_honest(0.8, &l, &PostselectionRegion::trivial()).unwrap();
        let num = perr_honest_alphabet(&Alphabet::qpsk(0.8), &l, &PostselectionRegion::trivial()).unwrap();
        assert!((closed.p_err - num.p_err).abs() < 1e-10);
        assert!((num.acceptance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubature_oracle_agrees() {
        let l = link(0.6, 0.02);
        let reg = PostselectionRegion::new(0.9, 0.1).unwrap();
        let a = perr_honest(0.7, &l, &reg).unwrap();
        let b = perr_cubature(0.7, &l, &reg, 1e-11).unwrap();
        assert!((a.p_err - b.p_err).abs() < 1e-8);
        assert!((a.acceptance - b.acceptance).abs() < 1e-9);
    }

    #[test]
    fn incomplete_gamma() {
        // Gamma(1, x) = e^-x, Gamma(2, x) = (1 + x) e^-x, Gamma(3/2, x) = sqrt(x) e^-x + sqrt(pi)/2 erfc(sqrt x)
        let x = 0.7f64;
        assert!((upper_gamma_half_integer(2, x) - (-x).exp()).abs() < 1e-15);
        assert!((upper_gamma_half_integer(4, x) - (1.0 + x) * (-x).exp()).abs() < 1e-15);
        let want = x.sqrt() * (-x).exp() + 0.5 * PI.sqrt() * erfc(x.sqrt());
        assert!((upper_gamma_half_integer(3, x) - want).abs() < 1e-14);
    }
}
