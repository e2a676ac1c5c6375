use proptest::prelude::*;

use qnic_core::channels::{eve_states_beamsplitter, eve_states_cloner, holevo_information, AttackModel};
use qnic_core::qcore::special::{binary_entropy, inv_binary_entropy};
use qnic_core::qcore::{coherent_overlap, gram_spectrum_entropy, Alphabet, DetectorParams, Link, NoiseModel, StateEnsemble};
use qnic_core::secanalysis::region::{eliminated_by_quadrant, mismatch_quadrants, quadrant};
use qnic_core::secanalysis::*;
use qnic_core::C64;

fn link(t: f64, xi: f64, eta: f64) -> Link {
    Link::new(NoiseModel::new(t, xi).unwrap(), DetectorParams::new(eta, 0.0).unwrap())
}

fn c64() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn overlap_is_conjugate_symmetric(a in c64(), b in c64()) {
        let ab = coherent_overlap(a, b);
        let ba = coherent_overlap(b, a);
        prop_assert!((ab - ba.conj()).norm() < 1e-14);
        prop_assert!(ab.norm() <= 1.0 + 1e-14);
    }

    #[test]
    fn entropy_round_trip(p in 0.0..=0.5f64) {
        let back = inv_binary_entropy(binary_entropy(p).unwrap()).unwrap();
        prop_assert!((back - p).abs() < 1e-9);
    }

    #[test]
    fn binary_entropy_is_concave(p in 0.0..=1.0f64, q in 0.0..=1.0f64, l in 0.0..=1.0f64) {
        let mid = binary_entropy(l * p + (1.0 - l) * q).unwrap();
        let chord = l * binary_entropy(p).unwrap() + (1.0 - l) * binary_entropy(q).unwrap();
        prop_assert!(mid >= chord - 1e-12);
    }

    #[test]
    fn quadrant_rotates_with_i(z in c64()) {
        prop_assume!(z.re.abs() > 1e-9 && z.im.abs() > 1e-9);
        let w = z * C64::i();
        prop_assert_eq!(quadrant(w.re, w.im), (quadrant(z.re, z.im) + 1) % 4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn entropy_within_bounds(
        amps in prop::collection::vec((0.0..1.5f64, 0.0..6.3f64, 0.05..1.0f64), 1..=4)
    ) {
        let s: f64 = amps.iter().map(|x| x.2).sum();
        let e = StateEnsemble::new(amps.iter().map(|&(r, t, w)| (C64::from_polar(r, t), w / s)).collect()).unwrap();
        let h = gram_spectrum_entropy(&e).unwrap();
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (amps.len() as f64).log2() + 1e-12);
    }

    #[test]
    fn abort_bounds_match_construction(gap in 0.005..0.3f64, p_err in 0.0..0.3f64, eps in 1e-8..1e-2f64) {
        let b = thresholds_and_length(p_err + gap, p_err, eps, 1.0).unwrap();
        let ab = abort_bounds(b.s_b, b.s_c, b.p_err, b.p_e, b.l).unwrap();
        let want = 2.0 * (-gap * gap * b.l / 16.0).exp();
        prop_assert!(((ab.eps_rep - want) / want).abs() < 1e-10);
        prop_assert!(((ab.eps_reject - want) / want).abs() < 1e-10);
        prop_assert!(ab.eps_rep <= eps * (1.0 + 1e-9));
        let twice = abort_bounds(b.s_b, b.s_c, b.p_err, b.p_e, 2.0 * b.l).unwrap();
        for (x, y) in [(ab.eps_rep, twice.eps_rep), (ab.eps_reject, twice.eps_reject), (ab.eps_forg, twice.eps_forg)] {
            prop_assert!(((y / 2.0).ln() / (x / 2.0).ln() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn length_scales_with_inverse_gap_squared(gap in 0.002..0.05f64, eps in 1e-8..1e-2f64) {
        let small = thresholds_and_length(0.1 + gap, 0.1, eps, 1.0).unwrap();
        let big = thresholds_and_length(0.1 + 10.0 * gap, 0.1, eps, 1.0).unwrap();
        // ceil(ceil(x) / 100) = ceil(x / 100)
        let closed = 16.0 * (2.0 / eps).ln() / (gap * gap);
        prop_assert!((big.l - (closed / 100.0).ceil()).abs() <= 1.0);
        prop_assert!((big.l - (small.l / 100.0).ceil()).abs() <= 1.0);
    }
}

#[test]
fn elimination_rule_symmetries() {
    for q in 0..4 {
        let e = eliminated_by_quadrant(q);
        let next = eliminated_by_quadrant((q + 1) % 4);
        assert_eq!(next, [(e[0] + 1) % 4, (e[1] + 1) % 4]);
        // the two eliminated symbols are adjacent and never the quadrant's own symbol
        assert_eq!((e[1] + 4 - e[0]) % 4, 1);
        assert!(!e.contains(&q));
        for k in 0..4 {
            assert_eq!(mismatch_quadrants(k).contains(&q), e.contains(&k));
        }
    }
}

const PARAM_SETS: [(f64, f64, f64, f64); 5] = [
    (0.64, 0.86, 0.027, 0.5),
    (0.67, 0.336, 0.019, 0.5),
    (0.55, 0.336, 0.1, 1.0),
    (1.0, 0.6, 0.05, 0.7),
    (0.3, 0.95, 0.0, 1.0),
];

#[test]
fn perr_and_acceptance_monotone_in_radius() {
    for (a, t, xi, eta) in PARAM_SETS {
        let l = link(t, xi, eta);
        let mut last: Option<HonestError> = None;
        for i in 0..20 {
            let dr = 0.15 * i as f64;
            let h = perr_honest(a, &l, &PostselectionRegion::radial(dr).unwrap()).unwrap();
            if let Some(p) = last {
                assert!(h.p_err <= p.p_err + 1e-10, "a {a} dr {dr}: {} > {}", h.p_err, p.p_err);
                assert!(h.acceptance < p.acceptance, "a {a} dr {dr}");
            }
            last = Some(h);
        }
    }
}

#[test]
fn perr_vanishes_for_large_radius() {
    let h = perr_honest(0.64, &link(0.86, 0.027, 0.5), &PostselectionRegion::radial(8.0).unwrap()).unwrap();
    assert!(h.p_err < 1e-3, "{}", h.p_err);
}

#[test]
fn qds_b_forger_bound_ignores_region() {
    for (a, t, xi, eta) in PARAM_SETS {
        let point = QdsPoint::new(QdsKind::B, AttackModel::Beamsplitter, a, link(t, xi, eta));
        let base = evaluate_region(&point, &PostselectionRegion::trivial(), None).unwrap().pe;
        for (dr, dt) in [(0.5, 0.0), (1.7, 0.3), (3.0, 0.7)] {
            let r = evaluate_region(&point, &PostselectionRegion::new(dr, dt).unwrap(), None).unwrap();
            assert!((r.pe.p_e - base.p_e).abs() <= 1e-12);
        }
    }
}

#[test]
fn beamsplitter_holevo_non_increasing_in_transmittance() {
    for a in [0.3, 0.64, 1.2] {
        let alphabet = Alphabet::qpsk(a);
        let chis: Vec<f64> = (0..=10)
            .map(|i| holevo_information(&eve_states_beamsplitter(&alphabet, i as f64 / 10.0).unwrap()).unwrap())
            .collect();
        for w in chis.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "a {a}: {chis:?}");
        }
        assert!(chis[10].abs() < 1e-12);
    }
}

#[test]
fn cloner_holevo_dominates_beamsplitter() {
    let a = Alphabet::qpsk(0.64);
    for (t, xi) in [(0.86, 0.0), (0.86, 0.027), (0.336, 0.019), (0.5, 0.1)] {
        let bs = holevo_information(&eve_states_beamsplitter(&a, t).unwrap()).unwrap();
        let cl = holevo_information(&eve_states_cloner(&a, t, xi, 50).unwrap()).unwrap();
        if xi == 0.0 {
            assert!((cl - bs).abs() < 1e-6);
        } else {
            assert!(cl >= bs - 1e-9, "t {t} xi {xi}: {cl} < {bs}");
        }
    }
}

fn loss_grid() -> Vec<f64> {
    (0..=12).map(|i| 0.5 * i as f64).collect()
}

#[test]
fn qkd_rate_non_increasing_in_loss_and_noise() {
    for xi in [0.0, 0.02, 0.05] {
        let rates: Vec<f64> = loss_grid()
            .iter()
            .map(|&db| {
                let leg = Leg::new(0.64, Link::new(NoiseModel::from_loss_db(db, xi).unwrap(), DetectorParams::ideal())).unwrap();
                qkd_f_rate(&leg, AttackModel::Beamsplitter, rate_tolerance()).unwrap().kappa
            })
            .collect();
        for w in rates.windows(2) {
            assert!(w[1] <= w[0] + 1e-5, "xi {xi}: {rates:?}");
        }
    }
    let t = 0.336;
    let rates: Vec<f64> = [0.0, 0.01, 0.02, 0.04, 0.08]
        .iter()
        .map(|&xi| {
            let leg = Leg::new(0.67, link(t, xi, 1.0)).unwrap();
            qkd_f_rate(&leg, AttackModel::Beamsplitter, rate_tolerance()).unwrap().kappa
        })
        .collect();
    for w in rates.windows(2) {
        assert!(w[1] <= w[0] + 1e-5, "{rates:?}");
    }
}

#[test]
fn qss_rate_non_increasing_in_loss_and_noise() {
    let g = std::f64::consts::FRAC_1_SQRT_2;
    let rate = |db: f64, xi: f64| {
        let leg = Leg::new(0.64, Link::new(NoiseModel::from_loss_db(db, xi).unwrap(), DetectorParams::ideal())).unwrap();
        qss_rate(&leg, &leg, g, g, AttackModel::Beamsplitter, rate_tolerance()).unwrap()
    };
    let by_loss: Vec<f64> = loss_grid().iter().map(|&db| rate(db, 0.02).kappa_final).collect();
    for w in by_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-5, "{by_loss:?}");
    }
    let by_xi: Vec<f64> = [0.0, 0.02, 0.05].iter().map(|&xi| rate(4.75, xi).kappa_final).collect();
    for w in by_xi.windows(2) {
        assert!(w[1] <= w[0] + 1e-5, "{by_xi:?}");
    }
    let r = rate(2.0, 0.02);
    assert!((r.dishonest_b.kappa - r.dishonest_c.kappa).abs() < 1e-6);
    assert!(r.dishonest_b.holevo >= r.eve.holevo - 1e-6);
}
