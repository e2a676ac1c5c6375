//! Quadrature: Gauss-Legendre and Gauss-Hermite rules, globally adaptive
//! Gauss-Kronrod (7/15) in one and two dimensions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::{Error, Result};

// Kronrod 15-point abscissae (positive half, outer to centre) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss 7-point weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod nodes on [-1, 1] with Kronrod and embedded Gauss weights.
fn gk15() -> ([f64; 15], [f64; 15], [f64; 15]) {
    let mut x = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for i in 0..7 {
        x[i] = -XGK[i];
        x[14 - i] = XGK[i];
        wk[i] = WGK[i];
        wk[14 - i] = WGK[i];
        if i % 2 == 1 {
            wg[i] = WG[i / 2];
            wg[14 - i] = WG[i / 2];
        }
    }
    x[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];
    (x, wk, wg)
}

/// Result of a scalar integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
}

/// Result of a vector-valued cubature.
#[derive(Debug, Clone, PartialEq)]
pub struct CubatureResult {
    pub values: Vec<f64>,
    /// Largest per-component error estimate.
    pub abs_error: f64,
    pub evals: usize,
}

/// Tolerances and budget for adaptive rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evals: usize,
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_evals: 2_000_000,
        }
    }

    pub fn with_budget(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

struct Keyed<T> {
    key: f64,
    item: T,
}

impl<T> PartialEq for Keyed<T> {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl<T> Eq for Keyed<T> {}
impl<T> PartialOrd for Keyed<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Keyed<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn gk_interval<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let (x, wk, wg) = gk15();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (mut k, mut g) = (0.0, 0.0);
    for i in 0..15 {
        let v = f(c + h * x[i]);
        k += wk[i] * v;
        g += wg[i] * v;
    }
    (k * h, ((k - g) * h).abs())
}

const INITIAL_PANELS: usize = 8;

/// Globally adaptive G7/K15 integration of `f` over [a, b].
pub fn integrate_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evals: 0,
        });
    }
    // start from several panels so narrow features are less likely to be missed
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    let mut evals = 0;
    for i in 0..INITIAL_PANELS {
        let lo = a + (b - a) * i as f64 / INITIAL_PANELS as f64;
        let hi = a + (b - a) * (i + 1) as f64 / INITIAL_PANELS as f64;
        let (v, e) = gk_interval(&mut f, lo, hi);
        evals += 15;
        total += v;
        err += e;
        heap.push(Keyed {
            key: e,
            item: (lo, hi, v, e),
        });
    }
    while err > tol.target(total) {
        if evals + 30 > tol.max_evals {
            return Err(Error::Quadrature {
                achieved: err,
                requested: tol.target(total),
                evals,
            });
        }
        let Keyed {
            item: (lo, hi, pv, pe),
            ..
        } = heap.pop().expect("heap never empties while refining");
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk_interval(&mut f, lo, mid);
        let (v2, e2) = gk_interval(&mut f, mid, hi);
        evals += 30;
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        heap.push(Keyed {
            key: e1,
            item: (lo, mid, v1, e1),
        });
        heap.push(Keyed {
            key: e2,
            item: (mid, hi, v2, e2),
        });
        if !(mid > lo && hi > mid) {
            break;
        }
    }
    // re-sum to shed accumulated rounding from the running updates
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(s, e), k| (s + k.item.2, e + k.item.3));
    Ok(QuadResult {
        value,
        abs_error,
        evals,
    })
}

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    fn quarters(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }
}

struct Cell {
    rect: Rect,
    values: Vec<f64>,
    errors: Vec<f64>,
}

fn gk_rect<F: FnMut(f64, f64, &mut [f64])>(f: &mut F, r: Rect, n: usize, buf: &mut [f64]) -> Cell {
    let (x, wk, wg) = gk15();
    let cx = 0.5 * (r.x0 + r.x1);
    let hx = 0.5 * (r.x1 - r.x0);
    let cy = 0.5 * (r.y0 + r.y1);
    let hy = 0.5 * (r.y1 - r.y0);
    let mut k = vec![0.0; n];
    let mut g = vec![0.0; n];
    for i in 0..15 {
        let px = cx + hx * x[i];
        for j in 0..15 {
            let py = cy + hy * x[j];
            buf.iter_mut().for_each(|v| *v = 0.0);
            f(px, py, buf);
            let wkk = wk[i] * wk[j];
            let wgg = wg[i] * wg[j];
            for c in 0..n {
                k[c] += wkk * buf[c];
                g[c] += wgg * buf[c];
            }
        }
    }
    let area = hx * hy;
    let errors = k.iter().zip(g.iter()).map(|(a, b)| ((a - b) * area).abs()).collect();
    let values = k.iter().map(|v| v * area).collect();
    Cell {
        rect: r,
        values,
        errors,
    }
}

/// Globally adaptive tensor-product G7/K15 cubature of an `n`-component
/// integrand over a rectangle. Each component must meet the tolerance.
pub fn integrate_2d<F: FnMut(f64, f64, &mut [f64])>(
    mut f: F,
    n: usize,
    rect: Rect,
    tol: Tolerance,
) -> Result<CubatureResult> {
    let mut buf = vec![0.0; n];
    let first = gk_rect(&mut f, rect, n, &mut buf);
    let mut evals = 225;
    let mut total = first.values.clone();
    let mut err = first.errors.clone();
    let scaled = |errs: &[f64], tot: &[f64]| -> f64 {
        errs.iter()
            .zip(tot.iter())
            .map(|(e, t)| e / tol.target(*t).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    };
    let mut heap = BinaryHeap::new();
    heap.push(Keyed {
        key: scaled(&first.errors, &total),
        item: first,
    });
    loop {
        let worst = err
            .iter()
            .zip(total.iter())
            .map(|(e, t)| e / tol.target(*t).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if worst <= 1.0 {
            break;
        }
        if evals + 900 > tol.max_evals {
            let achieved = err.iter().copied().fold(0.0, f64::max);
            return Err(Error::Quadrature {
                achieved,
                requested: tol.abs,
                evals,
            });
        }
        let cell = heap.pop().expect("heap never empties while refining").item;
        for c in 0..n {
            total[c] -= cell.values[c];
            err[c] -= cell.errors[c];
        }
        for q in cell.rect.quarters() {
            let child = gk_rect(&mut f, q, n, &mut buf);
            evals += 225;
            for c in 0..n {
                total[c] += child.values[c];
                err[c] += child.errors[c];
            }
            heap.push(Keyed {
                key: scaled(&child.errors, &total),
                item: child,
            });
        }
    }
    let mut values = vec![0.0; n];
    let mut errors = vec![0.0; n];
    for k in heap.iter() {
        for c in 0..n {
            values[c] += k.item.values[c];
            errors[c] += k.item.errors[c];
        }
    }
    Ok(CubatureResult {
        values,
        abs_error: errors.into_iter().fold(0.0, f64::max),
        evals,
    })
}

/// n-point Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// n-point Gauss-Hermite rule for weight exp(-x^2) (Golub-Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
