//! Devetak-Winter rates for QSS-b and QKD-f.
//!
//! In QSS the dealer heterodynes the two incoming modes and keeps
//! X_A = g A_B + h A_C, a 16-component Gaussian mixture over the players'
//! symbol pairs (b, c). In QKD-f the key variable is the receiver's outcome.
//! All integrals run over the first quadrant of the outcome plane and are
//! multiplied by four, using the QPSK rotation symmetry.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::cloner::{inner, ClonerPurification, CLONER_TOL};
use crate::channels::AttackModel;
use crate::qcore::coherent::{coherent_overlap, i_pow};
use crate::qcore::linalg::entropy_of_psd;
use crate::qcore::quad::{integrate_2d, Rect, Tolerance};
use crate::qcore::special::{ln_factorial, shannon_entropy};
use crate::qcore::Link;
use crate::secanalysis::qds::cloner_eve_holevo;
use crate::{Error, Result, C64};

/// Whose information is subtracted from the dealer-player mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateVariant {
    EveOnly,
    DishonestB,
    DishonestC,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub mutual_information: f64,
    pub holevo: f64,
    pub kappa: f64,
    /// MI - holevo was negative and kappa was set to 0.
    pub clamped: bool,
    pub variant: RateVariant,
    /// Largest quadrature error estimate behind MI and holevo (bits).
    pub abs_error: f64,
}

impl RateBreakdown {
    fn new(mi: f64, chi: f64, variant: RateVariant, abs_error: f64) -> Self {
        let raw = mi - chi;
        Self {
            mutual_information: mi,
            holevo: chi,
            kappa: raw.max(0.0),
            clamped: raw < 0.0,
            variant,
            abs_error,
        }
    }
}

/// One player's line: QPSK amplitude and the link into the dealer's detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub amplitude: f64,
    pub link: Link,
}

impl Leg {
    pub fn new(amplitude: f64, link: Link) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!("amplitude {amplitude} must be > 0")));
        }
        Ok(Self { amplitude, link })
    }

    fn means(&self) -> [C64; 4] {
        std::array::from_fn(|k| i_pow(k) * (self.amplitude * self.link.gain()))
    }

    fn eve_points(&self) -> [C64; 4] {
        let s = (1.0 - self.link.noise.transmittance).sqrt();
        std::array::from_fn(|k| i_pow(k) * (self.amplitude * s))
    }
}

/// Full QSS result: the three variants and the final rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QssRate {
    pub g: f64,
    pub h: f64,
    pub eve: RateBreakdown,
    pub dishonest_b: RateBreakdown,
    pub dishonest_c: RateBreakdown,
    /// min(kappa_B, kappa_C).
    pub kappa_final: f64,
    /// 2 kappa_final, per pair of transmitted states.
    pub two_kappa: f64,
    pub evals: usize,
}

/// Default tolerance for rate integrals (bits).
pub fn rate_tolerance() -> Tolerance {
    Tolerance {
        abs: 2e-6,
        rel: 1e-6,
        max_evals: 4_000_000,
    }
}

fn gram4(pts: &[C64; 4]) -> [[C64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| coherent_overlap(pts[i], pts[j])))
}

/// Entropy of sum_i w_i |e_i><e_i| given the overlap table of the states.
fn mix_entropy<const N: usize>(ov: &[[C64; N]; N], w: &[f64; N]) -> Result<f64> {
    let live: Vec<usize> = (0..N).filter(|&i| w[i] > 1e-15).collect();
    if live.len() <= 1 {
        return Ok(0.0);
    }
    let n = live.len();
    let g = DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = (live[a], live[b]);
        ov[i][j] * (w[i] * w[j]).sqrt()
    });
    entropy_of_psd(&g)
}

fn posterior<const N: usize>(x: C64, means: &[C64; N], s2: f64) -> (f64, [f64; N]) {
    let mut lg = [0.0; N];
    let mut top = f64::NEG_INFINITY;
    for (l, m) in lg.iter_mut().zip(means) {
        *l = -(x - m).norm_sqr() / s2;
        top = top.max(*l);
    }
    let mut post = [0.0; N];
    let mut z = 0.0;
    for (p, l) in post.iter_mut().zip(&lg) {
        *p = (l - top).exp();
        z += *p;
    }
    post.iter_mut().for_each(|p| *p /= z);
    let density = z * top.exp() / (N as f64 * PI * s2);
    (density, post)
}

fn integration_box(means: impl Iterator<Item = C64>, s2: f64) -> Rect {
    let r = means.map(|m| m.norm()).fold(0.0, f64::max) + 9.0 * s2.sqrt();
    Rect::new(0.0, r, 0.0, r)
}

struct QssIntegrals {
    values: [f64; 7],
    abs_error: f64,
    evals: usize,
}

fn qss_integrals(b: &Leg, c: &Leg, g: f64, h: f64, tol: Tolerance) -> Result<QssIntegrals> {
    let (mb, mc) = (b.means(), c.means());
    let means: [C64; 16] = std::array::from_fn(|i| mb[i / 4] * g + mc[i % 4] * h);
    let s2 = g * g * b.link.sigma2() + h * h * c.link.sigma2();
    let ob = gram4(&b.eve_points());
    let oc = gram4(&c.eve_points());
    let o16: [[C64; 16]; 16] =
        std::array::from_fn(|i| std::array::from_fn(|j| ob[i / 4][j / 4] * oc[i % 4][j % 4]));
    let mut fail: Option<Error> = None;
    let res = integrate_2d(
        |x, y, out| {
            let (p, post) = posterior(C64::new(x, y), &means, s2);
            if p < 1e-300 || fail.is_some() {
                return;
            }
            let mut pb = [0.0; 4];
            let mut pc = [0.0; 4];
            for i in 0..16 {
                pb[i / 4] += post[i];
                pc[i % 4] += post[i];
            }
            let run = || -> Result<[f64; 7]> {
                let mut sb = 0.0;
                let mut sc = 0.0;
                for k in 0..4 {
                    if pb[k] > 1e-15 {
                        let w: [f64; 4] = std::array::from_fn(|j| post[4 * k + j] / pb[k]);
                        sb += pb[k] * mix_entropy(&oc, &w)?;
                    }
                    if pc[k] > 1e-15 {
                        let w: [f64; 4] = std::array::from_fn(|j| post[4 * j + k] / pc[k]);
                        sc += pc[k] * mix_entropy(&ob, &w)?;
                    }
                }
                Ok([
                    shannon_entropy(&post),
                    mix_entropy(&o16, &post)?,
                    shannon_entropy(&pb),
                    sb,
                    shannon_entropy(&pc),
                    sc,
                    1.0,
                ])
            };
            match run() {
                Ok(v) => {
                    for (o, v) in out.iter_mut().zip(v) {
                        *o = 4.0 * p * v;
                    }
                }
                Err(e) => fail = Some(e),
            }
        },
        7,
        integration_box(means.iter().copied(), s2),
        tol,
    )?;
    if let Some(e) = fail {
        return Err(e);
    }
    Ok(QssIntegrals {
        values: std::array::from_fn(|i| res.values[i]),
        abs_error: res.abs_error,
        evals: res.evals,
    })
}

fn check_gauge(g: f64, h: f64) -> Result<()> {
    if !(g.is_finite() && h.is_finite()) || (g == 0.0 && h == 0.0) {
        return Err(Error::domain("(g, h) must be finite and not both zero"));
    }
    Ok(())
}

/// I(X_B X_C : X_A) in bits per pair of states.
pub fn qss_mutual_information(b: &Leg, c: &Leg, g: f64, h: f64, tol: Tolerance) -> Result<f64> {
    check_gauge(g, h)?;
    let r = qss_integrals(b, c, g, h, tol)?;
    Ok(4.0 - r.values[0])
}

/// Holevo information of the chosen adversary about X_A.
pub fn qss_holevo(
    b: &Leg,
    c: &Leg,
    g: f64,
    h: f64,
    attack: AttackModel,
    variant: RateVariant,
    tol: Tolerance,
) -> Result<f64> {
    let r = qss_rate(b, c, g, h, attack, tol)?;
    Ok(match variant {
        RateVariant::EveOnly => r.eve.holevo,
        RateVariant::DishonestB => r.dishonest_b.holevo,
        RateVariant::DishonestC => r.dishonest_c.holevo,
    })
}

/// QSS-b rates for both dishonest-player cases plus the outside eavesdropper.
pub fn qss_rate(b: &Leg, c: &Leg, g: f64, h: f64, attack: AttackModel, tol: Tolerance) -> Result<QssRate> {
    check_gauge(g, h)?;
    if attack == AttackModel::EntanglingCloner {
        return Err(Error::Unsupported(
            "QSS rates under the entangling cloner (four-mode adversary state)".into(),
        ));
    }
    let r = qss_integrals(b, c, g, h, tol)?;
    let v = r.values;
    let uniform = [0.25; 4];
    let s_b = mix_entropy(&gram4(&b.eve_points()), &uniform)?;
    let s_c = mix_entropy(&gram4(&c.eve_points()), &uniform)?;
    let mi = 4.0 - v[0];
    let chi_e = s_b + s_c - v[1];
    let chi_b = 2.0 - v[2] + s_c - v[3];
    let chi_c = 2.0 - v[4] + s_b - v[5];
    let err = r.abs_error + (v[6] - 1.0).abs();
    let eve = RateBreakdown::new(mi, chi_e.max(0.0), RateVariant::EveOnly, err);
    let dishonest_b = RateBreakdown::new(mi, chi_b.max(0.0), RateVariant::DishonestB, err);
    let dishonest_c = RateBreakdown::new(mi, chi_c.max(0.0), RateVariant::DishonestC, err);
    let kappa_final = dishonest_b.kappa.min(dishonest_c.kappa);
    Ok(QssRate {
        g,
        h,
        eve,
        dishonest_b,
        dishonest_c,
        kappa_final,
        two_kappa: 2.0 * kappa_final,
        evals: r.evals,
    })
}

/// Single-link QPSK mutual information I(k : x) for the receiver's heterodyne.
pub fn single_link_mutual_information(leg: &Leg, tol: Tolerance) -> Result<(f64, f64)> {
    let means = leg.means();
    let s2 = leg.link.sigma2();
    let r = integrate_2d(
        |x, y, out| {
            let (p, post) = posterior(C64::new(x, y), &means, s2);
            out[0] = 4.0 * p * shannon_entropy(&post);
        },
        1,
        integration_box(means.iter().copied(), s2),
        tol,
    )?;
    Ok((2.0 - r.values[0], r.abs_error))
}

/// QKD-f rate with the receiver's outcome as key variable.
///
/// The cloner case needs an ideal detector, since Eve's states are then
/// conditioned directly on the receiver mode's coherent projection.
pub fn qkd_f_rate(leg: &Leg, attack: AttackModel, tol: Tolerance) -> Result<RateBreakdown> {
    match attack {
        AttackModel::Beamsplitter => qkd_beamsplitter(leg, tol),
        AttackModel::EntanglingCloner => qkd_cloner(leg, tol),
    }
}

fn qkd_beamsplitter(leg: &Leg, tol: Tolerance) -> Result<RateBreakdown> {
    let means = leg.means();
    let s2 = leg.link.sigma2();
    let ov = gram4(&leg.eve_points());
    let s_e = mix_entropy(&ov, &[0.25; 4])?;
    let mut fail = None;
    let r = integrate_2d(
        |x, y, out| {
            let (p, post) = posterior(C64::new(x, y), &means, s2);
            if p < 1e-300 || fail.is_some() {
                return;
            }
            match mix_entropy(&ov, &post) {
                Ok(s) => {
                    out[0] = 4.0 * p * shannon_entropy(&post);
                    out[1] = 4.0 * p * s;
                }
                Err(e) => fail = Some(e),
            }
        },
        2,
        integration_box(means.iter().copied(), s2),
        tol,
    )?;
    if let Some(e) = fail {
        return Err(e);
    }
    let mi = 2.0 - r.values[0];
    let chi = (s_e - r.values[1]).max(0.0);
    Ok(RateBreakdown::new(mi, chi, RateVariant::EveOnly, r.abs_error))
}

fn qkd_cloner(leg: &Leg, tol: Tolerance) -> Result<RateBreakdown> {
    let det = leg.link.det;
    if det.eta != 1.0 || det.v_el != 0.0 {
        return Err(Error::Unsupported(
            "QKD-f under the entangling cloner needs an ideal detector".into(),
        ));
    }
    let t = leg.link.noise.transmittance;
    let xi = leg.link.noise.xi();
    let inputs: Vec<C64> = (0..4).map(|k| i_pow(k) * leg.amplitude).collect();
    let p = ClonerPurification::new(&inputs, t, xi, CLONER_TOL)?;
    let nc = p.dims().0;
    let w = [0.25; 4];
    let chi_prior = cloner_eve_entropy(&p, &w)?;
    let lnf: Vec<f64> = (0..nc).map(ln_factorial).collect();
    let s2 = leg.link.sigma2();
    let means = leg.means();
    let mut fail = None;
    let r = integrate_2d(
        |x, y, out| {
            if fail.is_some() {
                return;
            }
            let z = C64::new(x, y);
            let r2 = z.norm_sqr();
            // coherent coefficients <m|x>, scaled by 1/sqrt(pi)
            let u: Vec<C64> = (0..nc)
                .map(|m| {
                    if m == 0 {
                        C64::new((-0.5 * r2).exp() / PI.sqrt(), 0.0)
                    } else if r2 == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        let mag = (-0.5 * r2 + m as f64 * r2.sqrt().ln() - 0.5 * lnf[m]).exp() / PI.sqrt();
                        C64::from_polar(mag, m as f64 * z.arg())
                    }
                })
                .collect();
            let phis: Vec<Vec<C64>> = (0..4).map(|k| p.project_receiver(k, &u)).collect();
            let g = DMatrix::from_fn(4, 4, |i, j| inner(&phis[i], &phis[j]) * (w[i] * w[j]).sqrt());
            let dens: [f64; 4] = std::array::from_fn(|k| g[(k, k)].re);
            let px: f64 = dens.iter().sum();
            if px < 1e-300 {
                return;
            }
            match entropy_of_psd(&g) {
                Ok(s) => {
                    out[0] = 4.0 * px * shannon_entropy(&dens);
                    out[1] = 4.0 * px * s;
                    out[2] = 4.0 * px;
                }
                Err(e) => fail = Some(e),
            }
        },
        3,
        integration_box(means.iter().copied(), s2),
        tol,
    )?;
    if let Some(e) = fail {
        return Err(e);
    }
    let norm = r.values[2];
    let mi = 2.0 - r.values[0] / norm;
    let chi = (chi_prior - r.values[1] / norm).max(0.0);
    let err = r.abs_error + (norm - 1.0).abs() + p.deficit();
    Ok(RateBreakdown::new(mi, chi, RateVariant::EveOnly, err))
}

/// S(rho_E) of Eve's unconditioned cloner state.
fn cloner_eve_entropy(p: &ClonerPurification, w: &[f64; 4]) -> Result<f64> {
    let chi = cloner_eve_holevo(p, w)?;
    // S(rho_E) = chi + sum_k w_k S(rho_E^k); recompute the conditional part
    let nc = p.dims().0;
    let mut cond = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let n = nc;
        let g = DMatrix::from_fn(n, n, |i, j| inner(p.eve_block(k, i), p.eve_block(k, j)));
        cond += wk * entropy_of_psd(&g)?;
    }
    Ok(chi + cond)
}
