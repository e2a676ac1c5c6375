//! Entangling-cloner purification.
//!
//! Eve mixes the signal with one arm (e) of a two-mode squeezed vacuum on a
//! beamsplitter of transmittance T and keeps the other arm (f) together with
//! the reflected mode (E). For input |alpha> the joint output is the pure state
//!
//!   |psi> = D_C(sqrt(T) alpha) D_E(-sqrt(1-T) alpha) |Phi>,
//!   |Phi> = sum_n c_n sum_j sqrt(C(n,j)) (1-T)^{j/2} T^{(n-j)/2} |j>_C |n-j>_E |n>_f,
//!
//! with c_n = tanh^n(r) / cosh(r) and cosh(2r) = W = 1 + T xi / (1 - T), so the
//! receiver sees channel-input excess noise xi. Index order is (C, E, f),
//! C slowest.

use nalgebra::DMatrix;

use crate::qcore::fock::{cutoff_for, displacement_matrix, TRUNCATION_LIMIT};
use crate::qcore::special::ln_factorial;
use crate::{Error, Result, C64};

/// TMSV variance W for a cloner producing channel-input excess noise `xi`.
pub fn tmsv_variance(transmittance: f64, xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::domain(format!("transmittance {transmittance} outside [0, 1]")));
    }
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::domain("excess noise must be finite and >= 0"));
    }
    if xi == 0.0 {
        return Ok(1.0);
    }
    if transmittance >= 1.0 {
        return Err(Error::domain(
            "entangling cloner cannot inject excess noise into a lossless channel",
        ));
    }
    Ok(1.0 + transmittance * xi / (1.0 - transmittance))
}

/// Pure three-mode output states of the cloner, one per input amplitude.
#[derive(Debug, Clone)]
pub struct ClonerPurification {
    nc: usize,
    ne: usize,
    nf: usize,
    psi: Vec<Vec<C64>>,
    deficit: f64,
}

impl ClonerPurification {
    /// Builds the output states for `inputs`, growing cutoffs until every
    /// state keeps at least 1 - `tol` of its norm.
    pub fn new(inputs: &[C64], transmittance: f64, xi: f64, tol: f64) -> Result<Self> {
        let w = tmsv_variance(transmittance, xi)?;
        let lambda2 = (w - 1.0) / (w + 1.0);
        let mut n_t = 0usize;
        while lambda2 > 0.0 && lambda2.powi(n_t as i32 + 1) > 0.1 * tol {
            n_t += 1;
            if n_t > 400 {
                return Err(Error::Truncation {
                    tail: lambda2.powi(n_t as i32),
                    limit: tol,
                    n_max: n_t,
                });
            }
        }
        let amax2 = inputs.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        let mut extra_c = cutoff_for(transmittance * amax2, 0.1 * tol);
        let mut extra_e = cutoff_for((1.0 - transmittance) * amax2, 0.1 * tol);
        for _ in 0..20 {
            let nc = n_t + extra_c + 2;
            let ne = n_t + extra_e + 2;
            let built = Self::build(inputs, transmittance, lambda2, n_t, nc, ne)?;
            if built.deficit <= tol {
                return Ok(built);
            }
            extra_c += 2;
            extra_e += 2;
        }
        Err(Error::Truncation {
            tail: tol,
            limit: tol,
            n_max: n_t + extra_c,
        })
    }

    fn build(inputs: &[C64], t: f64, lambda2: f64, n_t: usize, nc: usize, ne: usize) -> Result<Self> {
        let nf = n_t + 1;
        let norm0 = (1.0 - lambda2).sqrt();
        // amplitudes of |Phi> on |j>_C |n-j>_E |n>_f
        let mut phi = vec![vec![0.0f64; n_t + 1]; n_t + 1];
        for n in 0..=n_t {
            let c_n = norm0 * lambda2.sqrt().powi(n as i32);
            for j in 0..=n {
                let ln_binom = ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j);
                phi[n][j] = c_n
                    * (0.5 * ln_binom).exp()
                    * (1.0 - t).powf(0.5 * j as f64)
                    * t.powf(0.5 * (n - j) as f64);
            }
        }
        let mut psi = Vec::with_capacity(inputs.len());
        let mut deficit = 0.0f64;
        for &a in inputs {
            let dc = displacement_matrix(a * t.sqrt(), nc, n_t + 1);
            let de = displacement_matrix(-a * (1.0 - t).sqrt(), ne, n_t + 1);
            let mut v = vec![C64::new(0.0, 0.0); nc * ne * nf];
            for m in 0..nc {
                for l in 0..ne {
                    let base = (m * ne + l) * nf;
                    for n in 0..=n_t {
                        let mut acc = C64::new(0.0, 0.0);
                        for j in 0..=n {
                            acc += dc[(m, j)] * de[(l, n - j)] * phi[n][j];
                        }
                        v[base + n] = acc;
                    }
                }
            }
            let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if !norm2.is_finite() {
                return Err(Error::Numerics("non-finite cloner state".into()));
            }
            deficit = deficit.max(1.0 - norm2);
            psi.push(v);
        }
        Ok(Self {
            nc,
            ne,
            nf,
            psi,
            deficit: deficit.max(0.0),
        })
    }

    /// Cutoffs (receiver mode C, Eve's reflected mode E, Eve's idler f).
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nc, self.ne, self.nf)
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Largest norm lost to truncation.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    /// Eve's (E, f) vector for receiver Fock index `m` of state `k` (unnormalised).
    pub fn eve_block(&self, k: usize, m: usize) -> &[C64] {
        let s = self.ne * self.nf;
        &self.psi[k][m * s..(m + 1) * s]
    }

    /// (<u|_C (x) 1) |psi_k> for a receiver vector `u`.
    pub fn project_receiver(&self, k: usize, u: &[C64]) -> Vec<C64> {
        let s = self.ne * self.nf;
        let mut out = vec![C64::new(0.0, 0.0); s];
        for (m, um) in u.iter().enumerate().take(self.nc) {
            if um.norm_sqr() == 0.0 {
                continue;
            }
            let c = um.conj();
            for (o, p) in out.iter_mut().zip(self.eve_block(k, m)) {
                *o += c * p;
            }
        }
        out
    }

    /// Eve's reduced state Tr_C |psi_k><psi_k| (unnormalised, dimension ne*nf).
    pub fn eve_density(&self, k: usize) -> DMatrix<C64> {
        let s = self.ne * self.nf;
        let mut rho = DMatrix::<C64>::zeros(s, s);
        for m in 0..self.nc {
            let b = self.eve_block(k, m);
            for i in 0..s {
                if b[i].norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..s {
                    rho[(i, j)] += b[i] * b[j].conj();
                }
            }
        }
        rho
    }

    /// Receiver's reduced state Tr_{Ef} |psi_k><psi_k| (unnormalised, dimension nc).
    pub fn receiver_density(&self, k: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.nc, self.nc, |m, mp| {
            inner(self.eve_block(k, mp), self.eve_block(k, m))
        })
    }
}

/// <a|b> for flat complex vectors.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Gram matrix <v_i|v_j> of a list of vectors.
pub fn vector_gram(vs: &[Vec<C64>]) -> DMatrix<C64> {
    let n = vs.len();
    let mut g = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = inner(&vs[i], &vs[j]);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

/// Default truncation tolerance for cloner states.
pub const CLONER_TOL: f64 = TRUNCATION_LIMIT * 1e-2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::coherent::coherent_overlap;

    #[test]
    fn beamsplitter_limit() {
        let a = C64::new(0.64, 0.0);
        let p = ClonerPurification::new(&[a], 0.86, 0.0, 1e-10).unwrap();
        assert_eq!(p.dims().2, 1);
        // E block equals the coherent state -sqrt(1-T) a times <m|sqrt(T) a>
        let gamma = -a * 0.14f64.sqrt();
        let g = vector_gram(&(0..p.dims().0).map(|m| p.eve_block(0, m).to_vec()).collect::<Vec<_>>());
        let tr: f64 = (0..g.nrows()).map(|i| g[(i, i)].re).sum();
        assert!((tr - 1.0).abs() < 1e-9);
        let e = p.project_receiver(0, &[C64::new(1.0, 0.0)]);
        let c0 = coherent_overlap(C64::new(0.0, 0.0), a * 0.86f64.sqrt());
        let (v, _) = crate::qcore::fock::coherent_fock_vector(gamma, p.dims().1 - 1);
        for l in 0..p.dims().1 {
            assert!((e[l] - c0 * v[l]).norm() < 1e-12);
        }
    }

    #[test]
    fn receiver_sees_excess_noise() {
        // <n> at C = T|a|^2 + (1-T)(W-1)/2
        let (t, xi) = (0.5, 0.2);
        let a = C64::new(0.3, 0.4);
        let p = ClonerPurification::new(&[a], t, xi, 1e-12).unwrap();
        let rho = p.receiver_density(0);
        let n: f64 = (0..rho.nrows()).map(|m| m as f64 * rho[(m, m)].re).sum();
        let w = tmsv_variance(t, xi).unwrap();
        let want = t * a.norm_sqr() + (1.0 - t) * (w - 1.0) / 2.0;
        assert!((n - want).abs() < 1e-9, "{n} vs {want}");
    }

    #[test]
    fn lossless_noisy_is_unphysical() {
        assert!(tmsv_variance(1.0, 0.01).is_err());
        assert_eq!(tmsv_variance(1.0, 0.0).unwrap(), 1.0);
    }
}
