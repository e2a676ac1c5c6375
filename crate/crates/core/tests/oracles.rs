//! Cross-checks against independent evaluations and frozen reference values.

use qnic_core::channels::{eve_states_beamsplitter, eve_states_cloner, holevo_information, AttackModel, EveState};
use qnic_core::qcore::fock::{ensemble_to_fock, von_neumann_entropy};
use qnic_core::qcore::quad::{gauss_hermite, Tolerance};
use qnic_core::qcore::special::{binary_entropy, erfc, inv_binary_entropy};
use qnic_core::qcore::{gram_spectrum_entropy, Alphabet, DetectorParams, Link, NoiseModel, StateEnsemble};
use qnic_core::secanalysis::qds::cloner_eve_holevo;
use qnic_core::secanalysis::*;
use qnic_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn link(t: f64, xi: f64, eta: f64, v_el: f64) -> Link {
    Link::new(NoiseModel::new(t, xi).unwrap(), DetectorParams::new(eta, v_el).unwrap())
}

/// erfc at 40 significant digits, rounded to f64.
const ERFC_TABLE: [(f64, f64); 36] = [
    (-5.5, 1.9999999999999927),
    (-5.13, 1.999999999999598),
    (-4.76, 1.9999999999832259),
    (-4.390000000000001, 1.999999999464724),
    (-4.02, 1.9999999869293328),
    (-3.65, 1.9999997555173494),
    (-3.2800000000000002, 1.9999964925755764),
    (-2.91, 1.9999613426877596),
    (-2.54, 1.999671979162343),
    (-2.17, 1.9978511082021002),
    (-1.7999999999999998, 1.9890905016357308),
    (-1.4299999999999997, 1.9568572531449688),
    (-1.0600000000000005, 1.8661435866351084),
    (-0.6900000000000004, 1.670840062235078),
    (-0.3200000000000003, 1.3491259947955831),
    (0.04999999999999982, 0.9436280222029836),
    (0.41999999999999993, 0.5525323815739748),
    (0.79, 0.2638965461793089),
    (1.1600000000000001, 0.10090379712028792),
    (1.5300000000000002, 0.030483790906664292),
    (1.9000000000000004, 0.0072095707647425195),
    (2.2699999999999996, 0.0013261275163545954),
    (2.6400000000000006, 0.0001888193387315267),
    (3.01, 2.0738963637132634e-05),
    (3.379999999999999, 1.7525871668730938e-06),
    (3.75, 1.1372725656979665e-07),
    (4.119999999999999, 5.658157219361359e-09),
    (4.49, 2.1556855762604598e-10),
    (4.859999999999999, 6.283122581925125e-12),
    (5.23, 1.3999253066682726e-13),
    (5.6, 2.382836284583028e-15),
    (-1.720044769376707, 1.9850054490762676),
    (-1.25590065533493, 1.9242854983797222),
    (0.6414551722574746, 0.3643250458468217),
    (4.5, 1.9661604415428876e-10),
    (8.0, 1.1224297172982926e-29),
];

#[test]
fn erfc_high_precision_table() {
    for (x, want) in ERFC_TABLE {
        let got = erfc(x);
        assert!(((got - want) / want).abs() < 1e-14, "erfc({x}) = {got}, want {want}");
    }
}

/// statrs is a coarse cross-check only: it drifts to ~1e-10 relative in places.
#[test]
fn erfc_agrees_with_statrs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let x: f64 = rng.gen_range(-6.0..6.0);
        let want = statrs::function::erf::erfc(x);
        assert!(((erfc(x) - want) / want).abs() < 1e-9, "x = {x}");
    }
}

#[test]
fn binary_entropy_inverse() {
    assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-12);
    assert!((inv_binary_entropy(0.5).unwrap() - 0.110_027_864_438_4).abs() < 1e-11);
    for i in 0..=500 {
        let p = 0.5 * i as f64 / 500.0;
        let back = inv_binary_entropy(binary_entropy(p).unwrap()).unwrap();
        assert!((back - p).abs() < 1e-9, "p = {p}");
    }
}

/// Gram-spectrum and Fock-truncation entropies on 50 random ensembles.
#[test]
fn entropy_dual_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = std::time::Instant::now();
    for _ in 0..50 {
        let n = rng.gen_range(1..=4);
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let entries: Vec<(C64, f64)> = w
            .iter()
            .map(|&wi| (C64::from_polar(rng.gen_range(0.0..1.5), rng.gen_range(0.0..6.3)), wi))
            .collect();
        let e = StateEnsemble::new(entries).unwrap();
        let g = gram_spectrum_entropy(&e).unwrap();
        let f = von_neumann_entropy(&ensemble_to_fock(&e, 40).unwrap()).unwrap();
        assert!((g - f).abs() < 1e-6, "gram {g} vs fock {f}");
        assert!(g >= -1e-12 && g <= (n as f64).log2() + 1e-12);
    }
    assert!(start.elapsed().as_secs() < 30);
}

#[test]
fn frozen_beamsplitter_values() {
    // independent Gram evaluation in a separate language
    let e = eve_states_beamsplitter(&Alphabet::qpsk(0.64), 0.86).unwrap();
    let chi = holevo_information(&e).unwrap();
    assert!((chi - 0.320_850_339_611_604_4).abs() < 1e-9);
    let fock = holevo_information(&e.to_fock(40).unwrap()).unwrap();
    assert!((fock - chi).abs() < 1e-6);
    let pe = pe_qds_b(AttackModel::Beamsplitter, &Alphabet::qpsk(0.64), 0.86, 0.0, 60).unwrap();
    assert!((pe.p_e - 0.179_576_477_990_206).abs() < 1e-9);
    let s = gram_spectrum_entropy(&Alphabet::qpsk(0.64).ensemble(1.0)).unwrap();
    assert!((s - 1.188_143_356_056_586).abs() < 1e-10);
}

#[test]
fn cloner_gram_matches_fock_path() {
    let a = Alphabet::qpsk(0.64);
    let (t, xi) = (0.86, 0.027);
    let p = qnic_core::channels::ClonerPurification::new(&a.points(), t, xi, 1e-10).unwrap();
    let gram = cloner_eve_holevo(&p, &a.weights()).unwrap();
    let states = eve_states_cloner(&a, t, xi, 60).unwrap();
    assert!(matches!(states.states()[0], EveState::Fock(_)));
    let fock = holevo_information(&states).unwrap();
    assert!((gram - fock).abs() < 1e-6, "{gram} vs {fock}");
    let bs = holevo_information(&eve_states_beamsplitter(&a, t).unwrap()).unwrap();
    assert!(fock > bs);
}

#[test]
fn cloner_without_noise_reduces_to_beamsplitter() {
    let a = Alphabet::qpsk(0.9);
    let cl = holevo_information(&eve_states_cloner(&a, 0.4, 0.0, 60).unwrap()).unwrap();
    let bs = holevo_information(&eve_states_beamsplitter(&a, 0.4).unwrap()).unwrap();
    assert!((cl - bs).abs() < 1e-6);
}

/// Closed form against the sector integrals on 10 random parameter sets.
#[test]
fn perr_closed_form_vs_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = std::time::Instant::now();
    for _ in 0..10 {
        let a = rng.gen_range(0.2..1.5);
        let l = link(rng.gen_range(0.2..1.0), rng.gen_range(0.0..0.1), rng.gen_range(0.4..1.0), 0.0);
        let closed = perr_honest(a, &l, &PostselectionRegion::trivial()).unwrap();
        let num = perr_honest_alphabet(&Alphabet::qpsk(a), &l, &PostselectionRegion::trivial()).unwrap();
        assert!((closed.p_err - num.p_err).abs() < 1e-8);
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn perr_sector_integrals_vs_polar_cubature() {
    let l = link(0.5, 0.03, 0.5, 0.01);
    for (dr, dt) in [(0.4, 0.0), (1.3, 0.2), (2.5, 0.05)] {
        let reg = PostselectionRegion::new(dr, dt).unwrap();
        let a = perr_honest(0.8, &l, &reg).unwrap();
        let b = perr_cubature(0.8, &l, &reg, 1e-12).unwrap();
        assert!((a.p_err - b.p_err).abs() < 1e-7, "dr {dr}");
        assert!((a.acceptance - b.acceptance).abs() < 1e-9);
    }
}

/// QPSK rotated by 45 degrees splits into two BPSK quadratures, so the
/// single-link mutual information is a one-dimensional Gauss-Hermite sum.
fn bpsk_pair_mi(a: f64, l: &Link) -> f64 {
    let mu = l.gain() * a / 2f64.sqrt();
    let var = l.sigma2() / 2.0;
    let (x, w) = gauss_hermite(120);
    // E over x ~ N(mu, var) of H(sent | x)
    let mut h = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let y = mu + (2.0 * var).sqrt() * xi;
        let q = 1.0 / (1.0 + (-2.0 * mu * y / var).exp());
        h += wi / std::f64::consts::PI.sqrt() * binary_entropy(q).unwrap();
    }
    2.0 * (1.0 - h)
}

#[test]
fn single_link_mi_oracles() {
    let l = link(0.5, 0.02, 1.0, 0.0);
    let leg = Leg::new(0.64, l).unwrap();
    let (mi, _) = single_link_mutual_information(&leg, Tolerance::abs(1e-9)).unwrap();
    assert!((mi - 0.267_357_285_677_156_66).abs() < 1e-6, "{mi}");
    assert!((mi - bpsk_pair_mi(0.64, &l)).abs() < 1e-6);
    let qss = qss_mutual_information(&leg, &leg, 1.0, 0.0, rate_tolerance()).unwrap();
    assert!((qss - mi).abs() < 1e-4);
}

#[test]
fn qkd_cloner_path_at_zero_noise_and_order() {
    let l = Leg::new(0.64, link(0.6, 0.0, 1.0, 0.0)).unwrap();
    let b = qkd_f_rate(&l, AttackModel::Beamsplitter, rate_tolerance()).unwrap();
    let c = qkd_f_rate(&l, AttackModel::EntanglingCloner, rate_tolerance()).unwrap();
    assert!((b.kappa - c.kappa).abs() < 1e-5);
    let noisy = Leg::new(0.64, link(0.6, 0.05, 1.0, 0.0)).unwrap();
    let bn = qkd_f_rate(&noisy, AttackModel::Beamsplitter, rate_tolerance()).unwrap();
    let cn = qkd_f_rate(&noisy, AttackModel::EntanglingCloner, rate_tolerance()).unwrap();
    assert!(cn.holevo > bn.holevo);
    let det = Leg::new(0.64, link(0.6, 0.05, 0.5, 0.0)).unwrap();
    assert!(matches!(
        qkd_f_rate(&det, AttackModel::EntanglingCloner, rate_tolerance()),
        Err(qnic_core::Error::Unsupported(_))
    ));
}

#[test]
fn signature_length_closed_form() {
    // ceil(16 ln(2e4) / 1e-4) evaluated with extended precision elsewhere: 1 584 558.008...
    let b = thresholds_and_length(0.26, 0.25, 1e-4, 1.0).unwrap();
    assert_eq!(b.l, 1_584_559.0);
    let b10 = thresholds_and_length(0.35, 0.25, 1e-4, 1.0).unwrap();
    let ratio = (16.0 * 2e4f64.ln() / 0.01f64).ceil();
    assert_eq!(b10.l, ratio);
    let ab = abort_bounds(b.s_b, b.s_c, b.p_err, b.p_e, b.l).unwrap();
    let want = 2.0 * (-b.g_sec.powi(2) * b.l / 16.0).exp();
    assert!(((ab.eps_rep - want) / want).abs() < 1e-12);
    assert!(((ab.eps_reject - want) / want).abs() < 1e-12);
    let forg = 2.0 * (-b.g_sec.powi(2) * b.l / 32.0).exp();
    assert!(((ab.eps_forg - forg) / forg).abs() < 1e-12);
}
