//! Truncated number-basis density matrices.

use nalgebra::{DMatrix, DVector};

use crate::qcore::coherent::StateEnsemble;
use crate::qcore::linalg::{entropy_of_psd, hermitian_defect, real_trace};
use crate::qcore::special::ln_factorial;
use crate::{Error, Result, C64};

/// Tail mass above which a truncation is refused.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Hermitian, unit-trace matrix on a (possibly multi-mode) truncated Fock space.
///
/// `dims` lists the per-mode cutoffs; the matrix acts on their tensor product
/// in row-major (first mode slowest) order.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
    truncation_deficit: f64,
}

impl FockDensityMatrix {
    /// Validates Hermiticity (1e-10) and unit trace (1e-8).
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>, truncation_deficit: f64) -> Result<Self> {
        let d: usize = dims.iter().product();
        if d == 0 || matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::domain(format!(
                "matrix shape {}x{} does not match dims {:?}",
                matrix.nrows(),
                matrix.ncols(),
                dims
            )));
        }
        let herm = hermitian_defect(&matrix);
        if herm > 1e-10 {
            return Err(Error::domain(format!("matrix not Hermitian (defect {herm:.2e})")));
        }
        let tr = real_trace(&matrix);
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::domain(format!("trace {tr} differs from 1")));
        }
        Ok(Self {
            dims,
            matrix,
            truncation_deficit,
        })
    }

    /// Normalises `matrix` to unit trace and symmetrises away rounding asymmetry.
    pub fn from_unnormalised(
        dims: Vec<usize>,
        matrix: DMatrix<C64>,
        truncation_deficit: f64,
    ) -> Result<Self> {
        let tr = real_trace(&matrix);
        if !(tr > 0.0) {
            return Err(Error::Numerics(format!("density matrix with trace {tr}")));
        }
        let m = (&matrix + matrix.adjoint()) * C64::new(0.5 / tr, 0.0);
        Self::new(dims, m, truncation_deficit)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Norm lost to truncation before renormalisation (largest over components).
    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }
}

/// Mass of a Poisson(mean) distribution above `n_max`.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut ln_term = -mean + (n_max as f64 + 1.0) * mean.ln() - ln_factorial(n_max + 1);
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let t = ln_term.exp();
        tail += t;
        if t < 1e-18 * tail.max(1e-300) || n > n_max + 10_000 {
            break;
        }
        n += 1;
        ln_term += mean.ln() - (n as f64).ln();
    }
    tail.min(1.0)
}

/// Number-basis coefficients of |alpha> up to `n_max`, with the truncated tail mass.
pub fn coherent_fock_vector(alpha: C64, n_max: usize) -> (DVector<C64>, f64) {
    let r2 = alpha.norm_sqr();
    let v = DVector::from_fn(n_max + 1, |n, _| {
        if n == 0 {
            return C64::new((-0.5 * r2).exp(), 0.0);
        }
        if r2 == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let mag = (-0.5 * r2 + n as f64 * alpha.norm().ln() - 0.5 * ln_factorial(n)).exp();
        C64::from_polar(mag, n as f64 * alpha.arg())
    });
    (v, poisson_tail(r2, n_max))
}

/// Smallest cutoff whose Poisson tail for `mean` is below `tol`.
pub fn cutoff_for(mean: f64, tol: f64) -> usize {
    let mut n = 0;
    while poisson_tail(mean, n) > tol {
        n += 1;
    }
    n
}

/// Sum_k w_k |a_k><a_k| in the number basis.
pub fn ensemble_to_fock(e: &StateEnsemble, n_max: usize) -> Result<FockDensityMatrix> {
    if n_max < 1 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    let d = n_max + 1;
    let mut rho = DMatrix::<C64>::zeros(d, d);
    let mut worst_tail = 0.0f64;
    for &(a, w) in e.entries() {
        let (v, tail) = coherent_fock_vector(a, n_max);
        if tail > TRUNCATION_LIMIT {
            return Err(Error::Truncation {
                tail,
                limit: TRUNCATION_LIMIT,
                n_max,
            });
        }
        worst_tail = worst_tail.max(tail);
        rho += &v * v.adjoint() * C64::new(w, 0.0);
    }
    FockDensityMatrix::from_unnormalised(vec![d], rho, worst_tail)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &FockDensityMatrix) -> Result<f64> {
    entropy_of_psd(rho.matrix())
}

/// Generalised Laguerre polynomials L_0^{(a)}(x) ..= L_n^{(a)}(x).
fn laguerre_all(n: usize, a: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(1.0 + a - x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// <m|D(delta)|n>.
pub fn displacement_element(m: usize, n: usize, delta: C64) -> C64 {
    let x = delta.norm_sqr();
    if x == 0.0 {
        return if m == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    let (lo, hi, base) = if m >= n {
        (n, m, delta)
    } else {
        (m, n, -delta.conj())
    };
    let k = hi - lo;
    let lag = laguerre_all(lo, k as f64, x)[lo];
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + k as f64 * base.norm().ln() - 0.5 * x;
    C64::from_polar(ln_mag.exp(), k as f64 * base.arg()) * lag
}

/// Matrix of D(delta) restricted to rows 0..rows and columns 0..cols.
pub fn displacement_matrix(delta: C64, rows: usize, cols: usize) -> DMatrix<C64> {
    let x = delta.norm_sqr();
    if x == 0.0 {
        return DMatrix::from_fn(rows, cols, |m, n| {
            if m == n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
    }
    let mut out = DMatrix::<C64>::zeros(rows, cols);
    let ln_r = delta.norm().ln();
    let arg = delta.arg();
    let neg_conj_arg = (-delta.conj()).arg();
    let lnf: Vec<f64> = (0..rows.max(cols)).map(ln_factorial).collect();
    // one Laguerre sweep per offset k = |m - n|
    for k in 0..rows.max(cols) {
        let len = rows.min(cols).max(1);
        let lag = laguerre_all(len, k as f64, x);
        for lo in 0..len {
            let hi = lo + k;
            let ln_mag = 0.5 * (lnf[lo] - lnf.get(hi).copied().unwrap_or_else(|| ln_factorial(hi)))
                + k as f64 * ln_r
                - 0.5 * x;
            let mag = ln_mag.exp() * lag[lo];
            if hi < rows && lo < cols {
                out[(hi, lo)] = C64::from_polar(1.0, k as f64 * arg) * mag;
            }
            if k > 0 && lo < rows && hi < cols {
                out[(lo, hi)] = C64::from_polar(1.0, k as f64 * neg_conj_arg) * mag;
            }
        }
    }
    out
}
