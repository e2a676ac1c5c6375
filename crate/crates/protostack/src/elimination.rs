//! Eliminated-signature construction and outcome postselection.

use qnic_core::qcore::{Alphabet, ComplexSample, Link};
use qnic_core::secanalysis::PostselectionRegion;
use qnic_core::C64;

/// Negative log-likelihood of outcome `x` given sent amplitude `alpha`, up to a constant.
pub fn neg_log_likelihood(x: ComplexSample, alpha: C64, link: &Link) -> f64 {
    let mu = alpha * link.gain();
    let (vx, vp) = link.quadrature_variances();
    let (dx, dp) = (x.re - mu.re, x.im - mu.im);
    dx * dx / (2.0 * vx) + dp * dp / (2.0 * vp)
}

/// Alphabet indices ordered from least to most compatible with `x`.
/// Equal likelihoods keep ascending index order.
pub fn compatibility_order(x: ComplexSample, alphabet: &Alphabet, link: &Link) -> [usize; 4] {
    let nll: [f64; 4] = std::array::from_fn(|k| neg_log_likelihood(x, alphabet.point(k), link));
    let mut idx = [0, 1, 2, 3];
    // stable sort: ties stay in index order
    idx.sort_by(|&a, &b| nll[b].total_cmp(&nll[a]));
    idx
}

/// The two alphabet states least compatible with outcome `x`, ascending.
///
/// Ties in likelihood go to the smaller index.
pub fn eliminate_two(x: ComplexSample, alphabet: &Alphabet, link: &Link) -> [u8; 2] {
    let o = compatibility_order(x, alphabet, link);
    let (a, b) = (o[0].min(o[1]), o[0].max(o[1]));
    [a as u8, b as u8]
}

/// Most compatible state.
pub fn most_likely(x: ComplexSample, alphabet: &Alphabet, link: &Link) -> u8 {
    compatibility_order(x, alphabet, link)[3] as u8
}

/// Acceptance mask for `region` and the accepted fraction.
pub fn postselect_mask(samples: &[ComplexSample], region: &PostselectionRegion) -> (Vec<bool>, f64) {
    let mask: Vec<bool> = samples.iter().map(|s| region.accepts(s.re, s.im)).collect();
    let n = mask.iter().filter(|m| **m).count();
    let frac = if samples.is_empty() { 0.0 } else { n as f64 / samples.len() as f64 };
    (mask, frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qnic_core::qcore::{DetectorParams, NoiseModel};

    fn setup() -> (Alphabet, Link) {
        (
            Alphabet::qpsk(0.64),
            Link::new(NoiseModel::new(0.5, 0.02).unwrap(), DetectorParams::new(0.5, 0.0).unwrap()),
        )
    }

    #[test]
    fn quadrant_examples() {
        let (a, l) = setup();
        assert_eq!(eliminate_two(ComplexSample { re: 0.3, im: 0.3 }, &a, &l), [2, 3]);
        assert_eq!(eliminate_two(ComplexSample { re: -0.3, im: -0.4 }, &a, &l), [0, 1]);
    }

    #[test]
    fn axis_tie_goes_to_smaller_index() {
        let (a, l) = setup();
        // +i and -i are equally compatible with a point on the positive real axis
        let x = ComplexSample { re: 0.7, im: 0.0 };
        assert_eq!(eliminate_two(x, &a, &l), [1, 2]);
        assert_eq!(eliminate_two(x, &a, &l), eliminate_two(x, &a, &l));
    }

    #[test]
    fn mask_examples() {
        let s = [ComplexSample { re: 0.25, im: 0.0 }, ComplexSample { re: 1.0, im: 1.0 }];
        let (m, f) = postselect_mask(&s, &PostselectionRegion::trivial());
        assert_eq!(m, vec![true, true]);
        assert_eq!(f, 1.0);
        let (m, f) = postselect_mask(&s, &PostselectionRegion::radial(0.5).unwrap());
        assert_eq!(m, vec![false, true]);
        assert_eq!(f, 0.5);
    }
}
