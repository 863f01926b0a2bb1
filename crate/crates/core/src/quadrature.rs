//! Gauss–Kronrod and Gauss–Legendre rules.
//!
//! The adaptive integrators bisect the panel with the largest error estimate
//! until the summed estimate drops below the requested absolute tolerance.
//! The estimate is the plain difference between the 15-point Kronrod and the
//! embedded 7-point Gauss result, which is pessimistic for smooth integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default cap on the number of panels of one adaptive integration.
pub const MAX_PANELS: usize = 4000;

/// The 15 Kronrod abscissae mapped onto `[a, b]`, with their weights.
pub fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for k in 0..7 {
        out[2 * k] = (c - h * XGK[k], h * WGK[k]);
        out[2 * k + 1] = (c + h * XGK[k], h * WGK[k]);
    }
    out[14] = (c, h * WGK[7]);
    out
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let s = f(c - h * XGK[k]) + f(c + h * XGK[k]);
        kron += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of a scalar function over `[a, b]`,
/// seeded with the given interior breakpoints.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    while err > tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence { a, b, estimate: err, tol });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureNonConvergence { a, b, estimate: err, tol });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    if !total.is_finite() {
        return Err(Error::QuadratureNonConvergence { a, b, estimate: f64::INFINITY, tol });
    }
    Ok(total)
}

/// Result of a vector-valued adaptive integration.
#[derive(Debug, Clone)]
pub struct VectorIntegral {
    pub values: Vec<f64>,
    /// Final panel partition, sorted.
    pub panels: Vec<(f64, f64)>,
}

struct VecPanel {
    a: f64,
    b: f64,
    values: Vec<f64>,
    error: f64,
}

impl PartialEq for VecPanel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for VecPanel {}
impl PartialOrd for VecPanel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for VecPanel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15_vec<F: FnMut(f64, &mut [f64])>(
    f: &mut F,
    dim: usize,
    a: f64,
    b: f64,
    scratch: &mut [f64],
) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut accumulate = |x: f64, wk: f64, wg: f64, f: &mut F, scratch: &mut [f64]| {
        f(x, scratch);
        for i in 0..dim {
            kron[i] += wk * scratch[i];
            gauss[i] += wg * scratch[i];
        }
    };
    accumulate(c, WGK[7], WG[3], f, scratch);
    for k in 0..7 {
        let wg = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        accumulate(c - h * XGK[k], WGK[k], wg, f, scratch);
        accumulate(c + h * XGK[k], WGK[k], wg, f, scratch);
    }
    let mut err: f64 = 0.0;
    for i in 0..dim {
        kron[i] *= h;
        err = err.max((kron[i] - gauss[i] * h).abs());
    }
    (kron, err)
}

/// Adaptive integration of a vector-valued function; the error measure is
/// the max-norm over components, summed over panels.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<VectorIntegral> {
    let mut scratch = vec![0.0; dim];
    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (values, error) = gk15_vec(&mut f, dim, w[0], w[1], &mut scratch);
        err += error;
        heap.push(VecPanel { a: w[0], b: w[1], values, error });
    }
    while err > tol {
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence { a, b, estimate: err, tol });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureNonConvergence { a, b, estimate: err, tol });
        }
        let (v1, e1) = gk15_vec(&mut f, dim, worst.a, mid, &mut scratch);
        let (v2, e2) = gk15_vec(&mut f, dim, mid, worst.b, &mut scratch);
        err += e1 + e2 - worst.error;
        heap.push(VecPanel { a: worst.a, b: mid, values: v1, error: e1 });
        heap.push(VecPanel { a: mid, b: worst.b, values: v2, error: e2 });
    }
    let mut panels: Vec<VecPanel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut values = vec![0.0; dim];
    for p in &panels {
        for (acc, v) in values.iter_mut().zip(&p.values) {
            *acc += v;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureNonConvergence { a, b, estimate: f64::INFINITY, tol });
    }
    Ok(VectorIntegral {
        values,
        panels: panels.into_iter().map(|p| (p.a, p.b)).collect(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
