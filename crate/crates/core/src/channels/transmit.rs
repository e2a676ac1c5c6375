//! Monte Carlo transmission of coherent states to a heterodyne receiver.

use crate::channels::rng::SeededRandomSource;
use crate::qcore::{CoherentSymbol, ComplexSample, DetectorParams, Link, NoiseModel};
use crate::C64;

/// One heterodyne outcome for `sym` sent through `noise` into `det`.
pub fn transmit_symbol(
    sym: &CoherentSymbol,
    noise: &NoiseModel,
    det: &DetectorParams,
    rng: &mut SeededRandomSource,
) -> ComplexSample {
    transmit_amplitude(sym.amplitude, &Link::new(*noise, *det), rng)
}

/// As [`transmit_symbol`] for a bare amplitude.
pub fn transmit_amplitude(amplitude: C64, link: &Link, rng: &mut SeededRandomSource) -> ComplexSample {
    let mu = amplitude * link.gain();
    let (vx, vp) = link.quadrature_variances();
    let re = mu.re + vx.sqrt() * rng.normal();
    let im = mu.im + vp.sqrt() * rng.normal();
    ComplexSample { re, im }
}
