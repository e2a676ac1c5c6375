//! Signature lengths, abort bounds and forger mismatch bounds for QDS.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::cloner::{inner, ClonerPurification, CLONER_TOL};
use crate::channels::{eve_states_beamsplitter, holevo_information, AttackModel};
use crate::qcore::coherent::{coherent_overlap, weighted_gram};
use crate::qcore::fock::displacement_matrix;
use crate::qcore::linalg::{entropy_of_psd, hermitian_eigen, real_trace};
use crate::qcore::quad::gauss_legendre;
use crate::qcore::special::{inv_binary_entropy, ln_factorial};
use crate::qcore::{Alphabet, DetectorParams, Link};
use crate::secanalysis::perr::{perr_from_table, quadrant_probabilities, upper_gamma_half_integer};
use crate::secanalysis::region::PostselectionRegion;
use crate::{Error, Result, C64};

/// Thresholds and signature lengths for one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityBudget {
    pub epsilon_fail: f64,
    pub p_err: f64,
    pub p_e: f64,
    pub s_b: f64,
    pub s_c: f64,
    pub g_sec: f64,
    pub acceptance: f64,
    /// ceil(16 ln(2/eps) / g_sec^2); stored as a float since it can exceed u64 near g_sec = 0.
    pub l: f64,
    /// ceil(l / acceptance).
    pub l_tilde: f64,
}

impl SecurityBudget {
    /// l / acceptance before rounding.
    pub fn l_tilde_real(&self) -> f64 {
        self.l / self.acceptance
    }

    pub fn is_secure(&self) -> bool {
        self.g_sec > 0.0
    }
}

/// Builds thresholds and L, L~ from p_e, p_err, eps and the acceptance probability N.
pub fn thresholds_and_length(p_e: f64, p_err: f64, epsilon_fail: f64, acceptance: f64) -> Result<SecurityBudget> {
    if !(epsilon_fail > 0.0 && epsilon_fail < 1.0) {
        return Err(Error::domain(format!("epsilon {epsilon_fail} outside (0, 1)")));
    }
    if !(acceptance > 0.0 && acceptance <= 1.0) {
        return Err(Error::domain(format!("acceptance {acceptance} outside (0, 1]")));
    }
    let gap = p_e - p_err;
    if !(gap > 0.0) {
        return Err(Error::InsecureChannel { gap });
    }
    let l = (16.0 * (2.0 / epsilon_fail).ln() / (gap * gap)).ceil();
    Ok(SecurityBudget {
        epsilon_fail,
        p_err,
        p_e,
        s_b: p_err + gap / 4.0,
        s_c: p_err + 3.0 * gap / 4.0,
        g_sec: gap,
        acceptance,
        l,
        l_tilde: (l / acceptance).ceil(),
    })
}

/// Hoeffding bounds on repudiation, honest rejection and forgery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortBounds {
    pub eps_rep: f64,
    pub eps_reject: f64,
    pub eps_forg: f64,
    pub warnings: Vec<String>,
}

/// eps_rep <= 2 exp(-(s_C - s_B)^2 L / 4), eps_reject <= 2 exp(-(s_B - p_err)^2 L),
/// eps_forg <= 2 exp(-(p_e - s_C)^2 L / 2). Bounds above 1 are clamped with a warning.
pub fn abort_bounds(s_b: f64, s_c: f64, p_err: f64, p_e: f64, l: f64) -> Result<AbortBounds> {
    if !(p_err < s_b && s_b <= s_c && s_c < p_e) {
        return Err(Error::domain(format!(
            "need p_err < s_B <= s_C < p_e (got {p_err}, {s_b}, {s_c}, {p_e})"
        )));
    }
    if !(l > 0.0) {
        return Err(Error::domain("signature length must be > 0"));
    }
    let mut warnings = Vec::new();
    let mut clamp = |name: &str, v: f64| {
        if v > 1.0 {
            warnings.push(format!("{name} bound {v:.3} is vacuous, clamped to 1"));
            1.0
        } else {
            v
        }
    };
    let eps_rep = clamp("repudiation", 2.0 * (-(s_c - s_b).powi(2) * l / 4.0).exp());
    let eps_reject = clamp("rejection", 2.0 * (-(s_b - p_err).powi(2) * l).exp());
    let eps_forg = clamp("forgery", 2.0 * (-(p_e - s_c).powi(2) * l / 2.0).exp());
    Ok(AbortBounds {
        eps_rep,
        eps_reject,
        eps_forg,
        warnings,
    })
}

/// Forger mismatch bound with the information it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeResult {
    pub p_e: f64,
    pub chi: f64,
    pub truncation_deficit: f64,
    /// Honest error and acceptance at the same region (QDS-f only).
    pub p_err: Option<f64>,
    pub acceptance: Option<f64>,
}

/// p_e = h^-1(max(0, 1 - chi)).
pub fn pe_from_chi(chi: f64) -> Result<f64> {
    inv_binary_entropy((1.0 - chi).clamp(0.0, 1.0))
}

fn check_channel(t: f64, xi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("transmittance {t} outside [0, 1]")));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::domain("excess noise must be finite and >= 0"));
    }
    Ok(())
}

fn cloner(alphabet: &Alphabet, t: f64, xi: f64, n_max: usize) -> Result<ClonerPurification> {
    let p = ClonerPurification::new(&alphabet.points(), t, xi, CLONER_TOL)?;
    let (nc, ne, nf) = p.dims();
    if nc.max(ne).max(nf) > n_max + 1 {
        return Err(Error::Truncation {
            tail: CLONER_TOL,
            limit: CLONER_TOL,
            n_max,
        });
    }
    Ok(p)
}

/// QDS-b: bound on a forger who intercepts the sender-to-recipient line.
///
/// Independent of any postselection region.
pub fn pe_qds_b(attack: AttackModel, alphabet: &Alphabet, t: f64, xi: f64, n_max: usize) -> Result<PeResult> {
    check_channel(t, xi)?;
    let (chi, deficit) = match attack {
        AttackModel::Beamsplitter => (holevo_information(&eve_states_beamsplitter(alphabet, t)?)?, 0.0),
        AttackModel::EntanglingCloner => {
            let p = cloner(alphabet, t, xi, n_max)?;
            (cloner_eve_holevo(&p, &alphabet.weights())?, p.deficit())
        }
    };
    Ok(PeResult {
        p_e: pe_from_chi(chi)?,
        chi,
        truncation_deficit: deficit,
        p_err: None,
        acceptance: None,
    })
}

/// chi(k : E f) from the Gram matrices of Eve's blocks.
pub fn cloner_eve_holevo(p: &ClonerPurification, weights: &[f64; 4]) -> Result<f64> {
    let nc = p.dims().0;
    let mut all = Vec::with_capacity(4 * nc);
    let mut cond = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        let blocks: Vec<&[C64]> = (0..nc).map(|m| p.eve_block(k, m)).collect();
        if w > 0.0 {
            cond += w * entropy_of_psd(&gram_of(&blocks, &vec![1.0; nc]))?;
        }
        all.extend(blocks.into_iter().map(|b| (b, w)));
    }
    let (vs, ws): (Vec<&[C64]>, Vec<f64>) = all.into_iter().unzip();
    Ok((entropy_of_psd(&gram_of(&vs, &ws))? - cond).max(0.0))
}

fn gram_of(vs: &[&[C64]], w: &[f64]) -> DMatrix<C64> {
    let n = vs.len();
    let mut g = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = inner(vs[i], vs[j]) * (w[i] * w[j]).sqrt();
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

/// What a forging recipient holds besides the tapped part of the other line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgerModel {
    /// Transmittance of the forger's own copy (0 = tap only).
    pub own_copy_transmittance: f64,
}

impl Default for ForgerModel {
    fn default() -> Self {
        Self {
            own_copy_transmittance: 1.0,
        }
    }
}

/// QDS-f: bound on a forging recipient who attacks the other recipient's line
/// and must guess which elements that recipient eliminated after postselection.
///
/// `link` is the attacked line together with the victim's detector, which is
/// trusted (it shapes the victim's outcomes but not the forger's states).
pub fn pe_qds_f(
    attack: AttackModel,
    alphabet: &Alphabet,
    link: &Link,
    region: &PostselectionRegion,
    forger: ForgerModel,
    n_max: usize,
) -> Result<PeResult> {
    let t = link.noise.transmittance;
    let xi = link.noise.xi();
    check_channel(t, xi)?;
    if !(0.0..=1.0).contains(&forger.own_copy_transmittance) {
        return Err(Error::domain("own-copy transmittance outside [0, 1]"));
    }
    let (table, _) = quadrant_probabilities(alphabet, link, region)?;
    let (p_err, acc) = perr_from_table(&table)?;
    let (chi, deficit) = match attack {
        AttackModel::Beamsplitter => (qds_f_chi_beamsplitter(alphabet, t, &table, forger)?, 0.0),
        AttackModel::EntanglingCloner => {
            let p = cloner(alphabet, t, xi, n_max)?;
            (qds_f_chi_cloner(alphabet, &p, &link.det, region, forger)?, p.deficit())
        }
    };
    Ok(PeResult {
        p_e: pe_from_chi(chi)?,
        chi,
        truncation_deficit: deficit,
        p_err: Some(p_err),
        acceptance: Some(acc),
    })
}

fn qds_f_chi_beamsplitter(alphabet: &Alphabet, t: f64, p: &[[f64; 4]; 4], forger: ForgerModel) -> Result<f64> {
    let scale = (forger.own_copy_transmittance + 1.0 - t).sqrt();
    let pts = alphabet.points().map(|a| a * scale);
    let n: f64 = p.iter().flatten().sum();
    let prior: Vec<(C64, f64)> = (0..4).map(|k| (pts[k], p[k].iter().sum::<f64>() / n)).collect();
    let mut chi = entropy_of_weighted(&prior)?;
    for q in 0..4 {
        let pq: f64 = (0..4).map(|k| p[k][q]).sum();
        if pq <= 0.0 {
            continue;
        }
        let post: Vec<(C64, f64)> = (0..4).map(|k| (pts[k], p[k][q] / pq)).collect();
        chi -= pq / n * entropy_of_weighted(&post)?;
    }
    Ok(chi.max(0.0))
}

fn entropy_of_weighted(e: &[(C64, f64)]) -> Result<f64> {
    let live: Vec<(C64, f64)> = e.iter().copied().filter(|x| x.1 > 0.0).collect();
    if live.len() <= 1 {
        return Ok(0.0);
    }
    entropy_of_psd(&weighted_gram(&live))
}

/// chi(k : forger | victim's accepted quadrant) under the entangling cloner.
fn qds_f_chi_cloner(
    alphabet: &Alphabet,
    p: &ClonerPurification,
    det: &DetectorParams,
    region: &PostselectionRegion,
    forger: ForgerModel,
) -> Result<f64> {
    let nc = p.dims().0;
    let own = alphabet.points().map(|a| a * forger.own_copy_transmittance.sqrt());
    let w = alphabet.weights();
    let m0 = quadrant_povm(det, region, nc)?;
    let povms: Vec<DMatrix<C64>> = (0..4).map(|q| rotate_povm(&m0, q)).collect();
    let accepted = povms.iter().fold(DMatrix::<C64>::zeros(nc, nc), |acc, m| acc + m);

    let conditional = |m: &DMatrix<C64>| -> Result<(f64, f64)> {
        let (mu, u) = hermitian_eigen(m);
        let top = mu.iter().copied().fold(0.0, f64::max);
        let mut vs: Vec<(usize, f64, Vec<C64>)> = Vec::new();
        for (i, &mi) in mu.iter().enumerate() {
            if mi <= 1e-13 * top {
                continue;
            }
            let col: Vec<C64> = u.column(i).iter().copied().collect();
            for k in 0..4 {
                if w[k] > 0.0 {
                    vs.push((k, w[k] * mi, p.project_receiver(k, &col)));
                }
            }
        }
        let n = vs.len();
        let mut g = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let (ki, wi, ref vi) = vs[i];
                let (kj, wj, ref vj) = vs[j];
                let z = (wi * wj).sqrt() * coherent_overlap(own[ki], own[kj]) * inner(vi, vj);
                g[(i, j)] = z;
                g[(j, i)] = z.conj();
            }
        }
        Ok((real_trace(&g), entropy_of_psd(&g)?))
    };

    let (n_acc, s_acc) = conditional(&accepted)?;
    let mut chi = s_acc;
    for m in &povms {
        let (pq, sq) = conditional(m)?;
        chi -= pq / n_acc * sq;
    }
    Ok(chi.max(0.0))
}

/// <m|M_q|n> = e^{i (m - n) q pi/2} <m|M_0|n>.
pub fn rotate_povm(m0: &DMatrix<C64>, q: usize) -> DMatrix<C64> {
    DMatrix::from_fn(m0.nrows(), m0.ncols(), |m, n| {
        let d = (m as i64 - n as i64) * q as i64;
        m0[(m, n)] * C64::from_polar(1.0, d as f64 * FRAC_PI_2)
    })
}

/// First-quadrant POVM element of the (possibly noisy) heterodyne restricted to
/// the accepted sector, on Fock levels 0..dim.
///
/// Noisy heterodyne: Pi(x) = D(y) tau_N D(y)^dag / (pi eta), y = x / sqrt(eta),
/// tau_N thermal with N = (1 + v_el - eta) / eta.
pub fn quadrant_povm(det: &DetectorParams, region: &PostselectionRegion, dim: usize) -> Result<DMatrix<C64>> {
    let n_th = det.added_variance() / det.eta;
    if n_th <= 1e-14 {
        return Ok(quadrant_povm_ideal(region, dim));
    }
    // thermal populations
    let mut tau = Vec::new();
    let mut pj = 1.0 / (n_th + 1.0);
    let ratio = n_th / (n_th + 1.0);
    while pj > 1e-15 || tau.len() < 2 {
        tau.push(pj);
        pj *= ratio;
        if tau.len() > 400 {
            return Err(Error::Truncation {
                tail: pj,
                limit: 1e-15,
                n_max: 400,
            });
        }
    }
    let jdim = tau.len();
    let (t0, t1) = region.sector(0);
    let r0 = region.delta_r / det.eta.sqrt();
    let r1 = r0.max((2.0 * dim as f64).sqrt()) + 10.0 * (n_th + 1.0).sqrt() + 4.0;
    let (xr, wr) = gauss_legendre(160);
    let (xt, wt) = gauss_legendre(64);
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for (a, wa) in xr.iter().zip(&wr) {
        let r = r0 + 0.5 * (a + 1.0) * (r1 - r0);
        let wr_ = 0.5 * (r1 - r0) * wa * r;
        for (b, wb) in xt.iter().zip(&wt) {
            let th = t0 + 0.5 * (b + 1.0) * (t1 - t0);
            let wgt = wr_ * 0.5 * (t1 - t0) * wb / PI;
            let d = displacement_matrix(C64::from_polar(r, th), dim, jdim);
            for m in 0..dim {
                for n in m..dim {
                    let mut z = C64::new(0.0, 0.0);
                    for (j, tj) in tau.iter().enumerate() {
                        z += d[(m, j)] * d[(n, j)].conj() * *tj;
                    }
                    acc[(m, n)] += z * wgt;
                }
            }
        }
    }
    for m in 0..dim {
        for n in 0..m {
            acc[(m, n)] = acc[(n, m)].conj();
        }
    }
    Ok(acc)
}

/// Closed form for the ideal detector: radial part is an incomplete gamma.
pub fn quadrant_povm_ideal(region: &PostselectionRegion, dim: usize) -> DMatrix<C64> {
    let (t0, t1) = region.sector(0);
    let x = region.delta_r * region.delta_r;
    DMatrix::from_fn(dim, dim, |m, n| {
        let d = m as f64 - n as f64;
        let ang = if m == n {
            C64::new(t1 - t0, 0.0)
        } else {
            (C64::from_polar(1.0, d * t1) - C64::from_polar(1.0, d * t0)) / C64::new(0.0, d)
        };
        let ln_norm = -0.5 * (ln_factorial(m) + ln_factorial(n));
        let rad = 0.5 * upper_gamma_half_integer(m + n + 2, x) * ln_norm.exp();
        ang * (rad / PI)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::NoiseModel;

    #[test]
    fn length_example() {
        let b = thresholds_and_length(0.26, 0.25, 1e-4, 1.0).unwrap();
        assert!((b.g_sec - 0.01).abs() < 1e-15);
        let want = (16.0 * 2e4f64.ln() / (b.g_sec * b.g_sec)).ceil();
        assert_eq!(b.l, want);
        assert!(thresholds_and_length(0.25, 0.25, 1e-4, 1.0).is_err());
    }

    #[test]
    fn bounds_degenerate_thresholds_clamp() {
        let r = abort_bounds(0.2, 0.2, 0.1, 0.3, 10.0).unwrap();
        assert_eq!(r.eps_rep, 1.0);
        assert!(!r.warnings.is_empty());
        assert!(abort_bounds(0.25, 0.2, 0.1, 0.3, 10.0).is_err());
    }

    #[test]
    fn perfect_channel_leaks_nothing() {
        let r = pe_qds_b(AttackModel::Beamsplitter, &Alphabet::qpsk(0.64), 1.0, 0.0, 60).unwrap();
        assert!(r.chi.abs() < 1e-12);
        assert!((r.p_e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cloner_without_noise_is_beamsplitter() {
        let a = Alphabet::qpsk(0.7);
        let b = pe_qds_b(AttackModel::Beamsplitter, &a, 0.6, 0.0, 60).unwrap();
        let c = pe_qds_b(AttackModel::EntanglingCloner, &a, 0.6, 0.0, 60).unwrap();
        assert!((b.chi - c.chi).abs() < 1e-9);
    }

    #[test]
    fn ideal_povm_resolves_identity() {
        let dim = 12;
        let m0 = quadrant_povm_ideal(&PostselectionRegion::trivial(), dim);
        let sum = (0..4).fold(DMatrix::<C64>::zeros(dim, dim), |a, q| a + rotate_povm(&m0, q));
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sum[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn numeric_povm_matches_closed_form() {
        // a detector with eta = 1 and tiny v_el exercises the numeric path
        let det = DetectorParams::new(1.0, 1e-9).unwrap();
        let reg = PostselectionRegion::radial(0.8).unwrap();
        let a = quadrant_povm(&det, &reg, 8).unwrap();
        let b = quadrant_povm_ideal(&reg, 8);
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn qds_f_cloner_matches_beamsplitter_at_zero_noise() {
        let alpha = Alphabet::qpsk(0.64);
        let link = Link::new(NoiseModel::new(0.8, 0.0).unwrap(), DetectorParams::ideal());
        let reg = PostselectionRegion::radial(0.5).unwrap();
        let f = ForgerModel::default();
        let b = pe_qds_f(AttackModel::Beamsplitter, &alpha, &link, &reg, f, 60).unwrap();
        let c = pe_qds_f(AttackModel::EntanglingCloner, &alpha, &link, &reg, f, 60).unwrap();
        assert!((b.chi - c.chi).abs() < 1e-7, "{} vs {}", b.chi, c.chi);
    }
}
