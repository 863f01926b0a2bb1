//! Product-integration weights of the Green representation.
//!
//! Everything the solver needs reduces to cell moments of `theta`,
//!
//! ```text
//! m_n(p, s) = int_{p h}^{(p+1) h} theta(eta, s) ((eta - p h) / h)^n d eta,   n = 0, 1, 2,
//! ```
//!
//! for `p = 0 .. 2J`, together with nodal values of `theta_x`. Both are
//! needed pointwise at `s = t_m` and integrated over each time cell against
//! the two linear hat pieces.
//!
//! Two representations are used. For `s` below a short window the image
//! series is summed directly, with the heat part and each node of the memory
//! quadrature contributing a Gaussian whose cell moments are known in closed
//! form. Beyond the window the Poisson-dual series
//! `theta = (1/2L) sum_k k_k(s) exp(i k pi eta / L)` is used, where `k_k` is
//! the single-mode kernel; its time integrals are exact, so no time
//! quadrature error is made there.

use std::f64::consts::PI;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use super::UniformGrid;
use crate::error::{Error, Result};
use crate::kernel::{MemoryRule, OperatorParams, SeriesControl};
use crate::modes::{exp_moments, exp_weighted, ModeKernel};
use crate::quadrature;
use crate::theta::StripDomain;

/// Gaussians are dropped beyond `GAUSS_CUT` widths (`exp(-42)`).
const GAUSS_CUT: f64 = 6.5;
/// Gauss-Legendre order for cells narrower than half a Gaussian width.
const GL_CELL: usize = 8;

/// Quadratic Lagrange basis on a pair of cells, as polynomials in the local
/// coordinate `u` of each cell: `BASIS[half][node] = [c0, c1, c2]`.
const BASIS: [[[f64; 3]; 3]; 2] = [
    [[1.0, -1.5, 0.5], [0.0, 2.0, -1.0], [0.0, -0.5, 0.5]],
    [[0.0, -0.5, 0.5], [1.0, 0.0, -1.0], [0.0, 0.5, 0.5]],
];

#[inline]
fn reflect_poly(c: [f64; 3]) -> [f64; 3] {
    [c[0] + c[1] + c[2], -c[1] - 2.0 * c[2], c[2]]
}

#[inline]
fn reflect_moments(m: [f64; 3]) -> [f64; 3] {
    [m[0], m[0] - m[1], m[0] - 2.0 * m[1] + m[2]]
}

#[inline]
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Add the Green matrix `S[i][j] = int G(x_i, xi) phi_j(xi) d xi` built from
/// the theta moments `mom` (length `2J`) into `out`.
pub(crate) fn assemble(mom: &[[f64; 3]], j: usize, out: &mut Array2<f64>) {
    for cell in 0..j {
        let half = cell % 2;
        let base = cell - half;
        for (ln, poly) in BASIS[half].iter().enumerate() {
            let node = base + ln;
            let refl = reflect_poly(*poly);
            for i in 0..=j {
                let direct = if cell >= i { dot3(*poly, mom[cell - i]) } else { dot3(refl, mom[i - cell - 1]) };
                let image = dot3(*poly, mom[i + cell]);
                out[[i, node]] += direct - image;
            }
        }
    }
}

/// `sum_j S[i][j] f_j`, accumulated into `out`.
pub(crate) fn apply(mom: &[[f64; 3]], j: usize, f: &[f64], out: &mut [f64]) {
    for cell in 0..j {
        let half = cell % 2;
        let base = cell - half;
        for (ln, poly) in BASIS[half].iter().enumerate() {
            let fj = f[base + ln];
            if fj == 0.0 {
                continue;
            }
            let refl = reflect_poly(*poly);
            for (i, o) in out.iter_mut().enumerate().take(j + 1) {
                let direct = if cell >= i { dot3(*poly, mom[cell - i]) } else { dot3(refl, mom[i - cell - 1]) };
                *o += (direct - dot3(*poly, mom[i + cell])) * fj;
            }
        }
    }
}

/// `int_{eta0}^{eta0+h} exp(-eta^2/c^2) v^n d eta` with `v = (eta - eta0)/h`, `eta0 >= 0`.
fn gauss_cell(eta0: f64, h: f64, c: f64, gl: &[(f64, f64)]) -> [f64; 3] {
    if c >= 2.0 * h {
        let mut m = [0.0; 3];
        for &(v, w) in gl {
            let eta = eta0 + h * v;
            let e = (-(eta * eta) / (c * c)).exp() * w * h;
            m[0] += e;
            m[1] += e * v;
            m[2] += e * v * v;
        }
        return m;
    }
    let eta1 = eta0 + h;
    let (z0, z1) = (eta0 / c, eta1 / c);
    let (e0, e1) = ((-z0 * z0).exp(), (-z1 * z1).exp());
    let i0 = 0.5 * c * PI.sqrt() * (libm::erfc(z0) - libm::erfc(z1));
    let i1 = 0.5 * c * c * (e0 - e1);
    let i2 = 0.5 * c * c * (i0 - (eta1 * e1 - eta0 * e0));
    let j1 = i1 - eta0 * i0;
    let j2 = i2 - 2.0 * eta0 * i1 + eta0 * eta0 * i0;
    [i0, j1 / h, j2 / (h * h)]
}

/// `sum_{k > K} sin(k z) / k^3` for `0 <= z <= pi`.
fn sine_cube_tail(z: f64, k: usize) -> f64 {
    let full = PI * PI * z / 6.0 - PI * z * z / 4.0 + z * z * z / 12.0;
    let partial: f64 = (1..=k).map(|n| (n as f64 * z).sin() / (n as f64).powi(3)).sum();
    full - partial
}

/// Theta moments and nodal `theta_x` at one time.
struct Snapshot {
    moments: Vec<[f64; 3]>,
    theta_x: Vec<f64>,
}

/// Precomputed weights for one operator, strip, horizon and grid.
pub struct Propagator {
    pub params: OperatorParams,
    pub domain: StripDomain,
    pub control: SeriesControl,
    pub grid: UniformGrid,
    pub horizon: f64,
    pub(crate) h: f64,
    pub(crate) dt: f64,
    image_window: f64,
    modes: usize,
    /// Moments integrated against the falling / rising time hat, per lag cell.
    pub(crate) mom_lo: Vec<[f64; 3]>,
    pub(crate) mom_hi: Vec<[f64; 3]>,
    /// Moments at `t_1, ..., t_M`.
    pub(crate) mom_at: Vec<[f64; 3]>,
    /// `int theta_x(x_i, s) w(s) ds` per lag cell, rows are lags.
    pub(crate) r_lo: Array2<f64>,
    pub(crate) r_hi: Array2<f64>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .field("horizon", &self.horizon)
            .field("image_window", &self.image_window)
            .field("modes", &self.modes)
            .finish()
    }
}

impl Propagator {
    pub fn build(
        params: OperatorParams,
        domain: StripDomain,
        horizon: f64,
        grid: UniformGrid,
        control: SeriesControl,
    ) -> Result<Self> {
        params.validate()?;
        domain.validate()?;
        control.validate()?;
        grid.validate()?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon = {horizon} must be finite and > 0")));
        }
        let l = domain.length;
        let j = grid.nx;
        let m = grid.nt;
        let h = l / j as f64;
        let dt = horizon / m as f64;
        let scale = l * l / params.eps;
        let image_window = dt.min(0.02 * scale).max(1e-5 * scale).min(horizon);
        let modes = choose_modes(&params, l, h, image_window, control.quad_tol);
        let cells = 2 * j;

        let mut prop = Propagator {
            params,
            domain,
            control,
            grid,
            horizon,
            h,
            dt,
            image_window,
            modes,
            mom_lo: vec![[0.0; 3]; m * cells],
            mom_hi: vec![[0.0; 3]; m * cells],
            mom_at: vec![[0.0; 3]; m * cells],
            r_lo: Array2::zeros((m, j + 1)),
            r_hi: Array2::zeros((m, j + 1)),
        };
        prop.add_image_part()?;
        prop.add_spectral_part();
        log::debug!("propagator built: {prop:?}");
        Ok(prop)
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        self.grid.x_nodes(self.domain.length)
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        self.grid.t_nodes(self.horizon)
    }

    /// Time below which the image series is used.
    pub fn image_window(&self) -> f64 {
        self.image_window
    }

    /// Number of Fourier modes in the long-time representation.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub(crate) fn cells(&self) -> usize {
        2 * self.grid.nx
    }

    pub(crate) fn slice<'a>(&self, arr: &'a [[f64; 3]], index: usize) -> &'a [[f64; 3]] {
        let p = self.cells();
        &arr[index * p..(index + 1) * p]
    }

    fn snapshot(&self, s: f64, gl: &[(f64, f64)]) -> Result<Snapshot> {
        let p = &self.params;
        let (j, h, l) = (self.grid.nx, self.h, self.domain.length);
        let cells = 2 * j;
        // theta = sum of amp * exp(-eta^2 / (4 eps y)) over (amp, y)
        let mut gaussians = vec![(p.prefactor() * (-p.a * s).exp() / s.sqrt(), s)];
        if s > 1e-12 {
            let rule = MemoryRule::build(p, s, self.control.quad_tol)?;
            let amp = -p.b.sqrt() * p.prefactor();
            gaussians.extend(rule.nodes.iter().map(|&(y, w)| (amp * w, y)));
        }
        let cut = GAUSS_CUT * 2.0 * (p.eps * s).sqrt();
        let q = (cut / h).ceil() as usize + 2;
        let mut kmom = vec![[0.0; 3]; q];
        for &(amp, y) in &gaussians {
            if y <= 0.0 || amp == 0.0 {
                continue;
            }
            let c = 2.0 * (p.eps * y).sqrt();
            let qmax = q.min((GAUSS_CUT * c / h).ceil() as usize + 1);
            for (cell, slot) in kmom.iter_mut().enumerate().take(qmax) {
                let g = gauss_cell(cell as f64 * h, h, c, gl);
                for n in 0..3 {
                    slot[n] += amp * g[n];
                }
            }
        }
        // fold the images onto the cells of [0, 2L)
        let period = cells as i64;
        let nmax = q as i64 / period + 1;
        let mut moments = vec![[0.0; 3]; cells];
        for (pc, slot) in moments.iter_mut().enumerate() {
            for n in -nmax..=nmax {
                let idx = pc as i64 + n * period;
                let m = if idx >= 0 {
                    match kmom.get(idx as usize) {
                        Some(m) => *m,
                        None => continue,
                    }
                } else {
                    match kmom.get((-idx - 1) as usize) {
                        Some(m) => reflect_moments(*m),
                        None => continue,
                    }
                };
                for k in 0..3 {
                    slot[k] += m[k];
                }
            }
        }
        let images = (cut / (2.0 * l)).ceil() as i64 + 1;
        let theta_x = (0..=j)
            .map(|i| {
                let x = i as f64 * h;
                let mut acc = 0.0;
                for n in -images..=images {
                    let z = x + 2.0 * n as f64 * l;
                    if z.abs() > cut {
                        continue;
                    }
                    for &(amp, y) in &gaussians {
                        if y > 0.0 {
                            acc += amp * (-z / (2.0 * p.eps * y)) * (-z * z / (4.0 * p.eps * y)).exp();
                        }
                    }
                }
                acc
            })
            .collect();
        Ok(Snapshot { moments, theta_x })
    }

    fn add_image_part(&mut self) -> Result<()> {
        let (xg, wg) = quadrature::gauss_legendre(GL_CELL);
        let gl: Vec<(f64, f64)> = xg.iter().zip(&wg).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        let (j, m, dt) = (self.grid.nx, self.grid.nt, self.dt);
        let cells = 2 * j;
        let window = self.image_window;
        let h = self.h;
        let eps = self.params.eps;

        // instantaneous moments for t_m inside the window
        let early: Vec<usize> = (1..=m).filter(|&k| k as f64 * dt < window).collect();
        let snaps: Vec<Result<Snapshot>> = early.par_iter().map(|&k| self.snapshot(k as f64 * dt, &gl)).collect();
        for (&k, snap) in early.iter().zip(snaps) {
            let snap = snap?;
            self.mom_at[(k - 1) * cells..k * cells].copy_from_slice(&snap.moments);
        }

        // time-integrated moments on the lag cells overlapping the window
        let lags: Vec<usize> = (0..m).filter(|&d| (d as f64) * dt < window).collect();
        let dim = 6 * cells + 2 * (j + 1);
        let this = &*self;
        let integrals: Vec<Result<Vec<f64>>> = lags
            .par_iter()
            .map(|&d| {
                let s0 = d as f64 * dt;
                let sa = s0;
                let sb = ((d + 1) as f64 * dt).min(window);
                let mut failure = None;
                let mut integrand = |u: f64, out: &mut [f64]| {
                    // s = sb u^2 on the first cell tames the sqrt(s) behaviour
                    let (s, jac) = if sa == 0.0 { (sb * u * u, 2.0 * sb * u) } else { (u, 1.0) };
                    out.fill(0.0);
                    if s <= 0.0 {
                        return;
                    }
                    let snap = match this.snapshot(s, &gl) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            return;
                        }
                    };
                    let w_hi = (s - s0) / dt;
                    let w_lo = 1.0 - w_hi;
                    for (p, mo) in snap.moments.iter().enumerate() {
                        for n in 0..3 {
                            out[3 * p + n] = jac * w_lo * mo[n];
                            out[3 * cells + 3 * p + n] = jac * w_hi * mo[n];
                        }
                    }
                    let off = 6 * cells;
                    for (i, &tx) in snap.theta_x.iter().enumerate() {
                        out[off + i] = jac * w_lo * tx;
                        out[off + j + 1 + i] = jac * w_hi * tx;
                    }
                };
                // theta_x at the first interior nodes peaks near s = (k h)^2 / (6 eps)
                let mut breaks: Vec<f64> = (1..=4)
                    .map(|k| (k as f64 * h).powi(2) / (6.0 * eps))
                    .filter(|&s| s > sa && s < sb)
                    .collect();
                let (lo, hi) = if sa == 0.0 {
                    breaks.iter_mut().for_each(|s| *s = (*s / sb).sqrt());
                    (0.0, 1.0)
                } else {
                    (sa, sb)
                };
                let r = quadrature::integrate_vec(&mut integrand, dim, lo, hi, &breaks, this.control.quad_tol)?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(r.values),
                }
            })
            .collect();
        for (&d, values) in lags.iter().zip(integrals) {
            let values = values?;
            for p in 0..cells {
                for n in 0..3 {
                    self.mom_lo[d * cells + p][n] += values[3 * p + n];
                    self.mom_hi[d * cells + p][n] += values[3 * cells + 3 * p + n];
                }
            }
            let off = 6 * cells;
            for i in 0..=j {
                self.r_lo[[d, i]] += values[off + i];
                self.r_hi[[d, i]] += values[off + j + 1 + i];
            }
        }
        Ok(())
    }

    fn add_spectral_part(&mut self) {
        let p = self.params;
        let (j, m, dt, h) = (self.grid.nx, self.grid.nt, self.dt, self.h);
        let l = self.domain.length;
        let cells = 2 * j;
        let kk = self.modes;
        let window = self.image_window;
        let kernels: Vec<ModeKernel> = (0..=kk)
            .map(|k| {
                let w = k as f64 * PI / l;
                ModeKernel::new(w * w, &p)
            })
            .collect();

        // cell moments of cos(w eta), with the 1/2L and the doubling of k >= 1 folded in
        let mut ctab = Array2::<f64>::zeros((kk + 1, 3 * cells));
        for k in 0..=kk {
            let w = k as f64 * PI / l;
            let fac = if k == 0 { 1.0 } else { 2.0 } / (2.0 * l);
            let pm = exp_moments(Complex64::new(0.0, w * h));
            for pc in 0..cells {
                let phase = Complex64::new(0.0, w * pc as f64 * h).exp();
                for n in 0..3 {
                    ctab[[k, 3 * pc + n]] = fac * h * (phase * pm[n]).re;
                }
            }
        }
        // theta_x = -(1/L) sum_k k_k w_k sin(w_k x)
        let mut stab = Array2::<f64>::zeros((kk + 1, j + 1));
        for k in 1..=kk {
            let w = k as f64 * PI / l;
            for i in 0..=j {
                stab[[k, i]] = -w * (w * i as f64 * h).sin() / l;
            }
        }
        // modes above K: k_k ~ -b exp(-beta s) / (eps w_k^2)^2
        let corr: Vec<f64> = (0..=j)
            .map(|i| {
                let z = PI * i as f64 / j as f64;
                p.b / (l * p.eps * p.eps) * (l / PI).powi(3) * sine_cube_tail(z, kk)
            })
            .collect();

        let rows: Vec<(usize, f64, f64)> = (0..m)
            .filter_map(|d| {
                let sb = (d + 1) as f64 * dt;
                let sa = (d as f64 * dt).max(window);
                (sb > sa).then_some((d, sa, sb))
            })
            .collect();
        let nr = rows.len();
        let mut wlo = Array2::<f64>::zeros((nr, kk + 1));
        let mut whi = Array2::<f64>::zeros((nr, kk + 1));
        let mut elo = vec![0.0; nr];
        let mut ehi = vec![0.0; nr];
        let weights: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = rows
            .par_iter()
            .map(|&(d, sa, sb)| {
                let span = sb - sa;
                let (alo, glo) = (span / dt, -1.0 / dt);
                let (ahi, ghi) = ((sa - d as f64 * dt) / dt, 1.0 / dt);
                let lo: Vec<f64> = kernels.iter().map(|k| k.weighted_integral(sa, span, alo, glo)).collect();
                let hi: Vec<f64> = kernels.iter().map(|k| k.weighted_integral(sa, span, ahi, ghi)).collect();
                (
                    lo,
                    hi,
                    exp_weighted(-p.beta, sa, span, alo, glo),
                    exp_weighted(-p.beta, sa, span, ahi, ghi),
                )
            })
            .collect();
        for (r, (lo, hi, el, eh)) in weights.into_iter().enumerate() {
            wlo.row_mut(r).assign(&ndarray::ArrayView1::from(&lo));
            whi.row_mut(r).assign(&ndarray::ArrayView1::from(&hi));
            elo[r] = el;
            ehi[r] = eh;
        }
        let mlo = wlo.dot(&ctab);
        let mhi = whi.dot(&ctab);
        let rlo = wlo.dot(&stab);
        let rhi = whi.dot(&stab);
        for (r, &(d, _, _)) in rows.iter().enumerate() {
            for pc in 0..cells {
                for n in 0..3 {
                    self.mom_lo[d * cells + pc][n] += mlo[[r, 3 * pc + n]];
                    self.mom_hi[d * cells + pc][n] += mhi[[r, 3 * pc + n]];
                }
            }
            for i in 0..=j {
                self.r_lo[[d, i]] += rlo[[r, i]] + elo[r] * corr[i];
                self.r_hi[[d, i]] += rhi[[r, i]] + ehi[r] * corr[i];
            }
        }

        // instantaneous moments past the window
        let late: Vec<usize> = (1..=m).filter(|&k| k as f64 * dt >= window).collect();
        if late.is_empty() {
            return;
        }
        let mut kval = Array2::<f64>::zeros((late.len(), kk + 1));
        for (r, &k) in late.iter().enumerate() {
            let t = k as f64 * dt;
            for (c, kern) in kernels.iter().enumerate() {
                kval[[r, c]] = kern.value(t);
            }
        }
        let mat = kval.dot(&ctab);
        for (r, &k) in late.iter().enumerate() {
            for pc in 0..cells {
                for n in 0..3 {
                    self.mom_at[(k - 1) * cells + pc][n] = mat[[r, 3 * pc + n]];
                }
            }
        }
    }

    /// `int_0^L G(x_i, xi, t_m) u0(xi) d xi` for every node; rows `t_1..t_M`.
    pub(crate) fn initial_term(&self, u0: &[f64]) -> Array2<f64> {
        let (j, m) = (self.grid.nx, self.grid.nt);
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|k| {
                let mut out = vec![0.0; j + 1];
                apply(self.slice(&self.mom_at, k), j, u0, &mut out);
                out
            })
            .collect();
        to_array(rows, j + 1)
    }

    /// Boundary contributions for nodal samples `g1[m] = g1(t_m)`, `m = 0..=M`.
    pub(crate) fn boundary_term(&self, g1: &[f64], g2: &[f64]) -> Array2<f64> {
        let (j, m) = (self.grid.nx, self.grid.nt);
        let two_eps = 2.0 * self.params.eps;
        // combined weight of g(t_{m-d}) is r_lo[d] + r_hi[d-1]
        let mut vr = self.r_lo.clone();
        for d in 1..m {
            let prev = self.r_hi.row(d - 1).to_owned();
            let mut row = vr.row_mut(d);
            row += &prev;
        }
        let rows: Vec<Vec<f64>> = (1..=m)
            .into_par_iter()
            .map(|mm| {
                let mut out = vec![0.0; j + 1];
                for (i, o) in out.iter_mut().enumerate().take(j).skip(1) {
                    let mut acc = 0.0;
                    for d in 0..mm {
                        acc += vr[[d, i]] * g1[mm - d] + vr[[d, j - i]] * g2[mm - d];
                    }
                    acc += self.r_hi[[mm - 1, i]] * g1[0] + self.r_hi[[mm - 1, j - i]] * g2[0];
                    *o = -two_eps * acc;
                }
                out
            })
            .collect();
        to_array(rows, j + 1)
    }

    /// Contribution of the source sample at `t = 0`.
    pub(crate) fn source_start_term(&self, f0: &[f64]) -> Array2<f64> {
        let (j, m) = (self.grid.nx, self.grid.nt);
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|k| {
                let mut out = vec![0.0; j + 1];
                apply(self.slice(&self.mom_hi, k), j, f0, &mut out);
                out
            })
            .collect();
        to_array(rows, j + 1)
    }

    /// `D[m] = sum_{d} V_d f[m - d]` for source rows `f[1..=M]` (row 0 of
    /// `f` is ignored), returned with rows `t_1..t_M`.
    pub(crate) fn duhamel(&self, f: &Array2<f64>) -> Array2<f64> {
        let (j, m) = (self.grid.nx, self.grid.nt);
        let cells = self.cells();
        let mut out = Array2::<f64>::zeros((m, j + 1));
        const BATCH: usize = 32;
        let threads = rayon::current_num_threads().max(1);
        let chunk = m.div_ceil(threads).max(8);
        let mut d0 = 0;
        while d0 < m {
            let d1 = (d0 + BATCH).min(m);
            let mats: Vec<Array2<f64>> = (d0..d1)
                .into_par_iter()
                .map(|d| {
                    let mut mom = self.slice(&self.mom_lo, d).to_vec();
                    if d > 0 {
                        for (a, b) in mom.iter_mut().zip(self.slice(&self.mom_hi, d - 1)) {
                            for n in 0..3 {
                                a[n] += b[n];
                            }
                        }
                    }
                    debug_assert_eq!(mom.len(), cells);
                    let mut v = Array2::zeros((j + 1, j + 1));
                    assemble(&mom, j, &mut v);
                    v
                })
                .collect();
            out.axis_chunks_iter_mut(ndarray::Axis(0), chunk)
                .into_par_iter()
                .enumerate()
                .for_each(|(ci, mut block)| {
                    // block row r holds t_{r0 + r + 1}
                    let r0 = ci * chunk;
                    let r1 = r0 + block.nrows();
                    for (off, v) in mats.iter().enumerate() {
                        let d = d0 + off;
                        // output row index k (0-based, time t_{k+1}) uses f[k + 1 - d]
                        let k_start = r0.max(d);
                        if k_start >= r1 {
                            continue;
                        }
                        let src = f.slice(s![k_start + 1 - d..r1 + 1 - d, ..]);
                        let mut dst = block.slice_mut(s![k_start - r0..r1 - r0, ..]);
                        ndarray::linalg::general_mat_mul(1.0, &src, &v.t(), 1.0, &mut dst);
                    }
                });
            d0 = d1;
        }
        out
    }
}

fn to_array(rows: Vec<Vec<f64>>, width: usize) -> Array2<f64> {
    let n = rows.len();
    Array2::from_shape_vec((n, width), rows.into_iter().flatten().collect()).expect("row widths agree")
}

/// Mode count of the long-time representation: enough to resolve the
/// fastest decay at the window edge and to push the algebraic tail of the
/// slow modes below the tolerance.
fn choose_modes(p: &OperatorParams, l: f64, h: f64, window: f64, tol: f64) -> usize {
    let fast = l / PI * (41.4 / (p.eps * window)).sqrt();
    let slow = (2.0 * p.b * h * l.powi(3) / (3.0 * p.eps * p.eps * PI.powi(4) * 0.1 * tol)).cbrt();
    let asym = l / PI * (100.0 * (p.a + p.beta + p.b.sqrt()) / p.eps).sqrt();
    fast.max(slow).max(asym).max(64.0).ceil() as usize
}
