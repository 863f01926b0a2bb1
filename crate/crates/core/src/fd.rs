//! Finite-difference solvers kept independent of the kernel machinery, for
//! cross-checking.
//!
//! Both time-dependent solvers use centred second differences on a uniform
//! grid. The semi-implicit schemes are Crank-Nicolson in every linear term,
//! with the nonlinear or history-dependent part treated explicitly
//! (midpoint extrapolation for the junction, predictor-corrector for the
//! memory equation), so they are second order in both `h` and `dt`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::esjj::{EsjjParams, EsjjProblem};
use crate::kernel::{OperatorParams, SeriesControl};
use crate::solver::{DirichletProblem, GridSolution, SolveMeta};
use crate::theta::StripDomain;

/// Solutions whose sup norm exceeds this are reported as blown up.
pub const BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    /// Forward Euler in every term.
    Explicit,
    /// Crank-Nicolson in the linear terms.
    SemiImplicit,
}

impl FdScheme {
    fn name(self) -> &'static str {
        match self {
            FdScheme::Explicit => "explicit",
            FdScheme::SemiImplicit => "semi-implicit",
        }
    }
}

/// `nx` space intervals and a time step `dt`; the step actually taken is
/// `T / ceil(T / dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub nx: usize,
    pub dt: f64,
    pub scheme: FdScheme,
}

impl FdGrid {
    pub fn new(nx: usize, dt: f64, scheme: FdScheme) -> Result<Self> {
        let g = FdGrid { nx, dt, scheme };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 {
            return Err(Error::InvalidParameter(format!("nx = {} must be >= 3", self.nx)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be finite and > 0", self.dt)));
        }
        Ok(())
    }

    fn steps(&self, horizon: f64) -> (usize, f64) {
        let n = (horizon / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, horizon / n as f64)
    }

    /// Largest stable step for the junction equation on a strip of length `l`.
    pub fn esjj_bound(&self, e: &EsjjParams) -> f64 {
        let h = e.length / self.nx as f64;
        match self.scheme {
            FdScheme::Explicit => {
                (2.0 / (4.0 * e.eps / (h * h) + e.eps * e.lam / h + e.alpha)).min(2.0 * e.eps)
            }
            FdScheme::SemiImplicit => h,
        }
    }

    /// Largest stable step for the memory equation.
    pub fn memory_bound(&self, p: &OperatorParams, l: f64) -> f64 {
        let h = l / self.nx as f64;
        match self.scheme {
            FdScheme::Explicit => {
                let dmax = 4.0 * p.eps / (h * h) + p.a;
                let complex = |d: f64| (d + p.beta) / (d * p.beta + p.b);
                (2.0 / (dmax + p.beta)).min(complex(p.a)).min(complex(dmax))
            }
            FdScheme::SemiImplicit => h,
        }
    }

    fn check(&self, dt: f64, bound: f64) -> Result<()> {
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::StabilityBreach { dt, bound, scheme: self.scheme.name() });
        }
        Ok(())
    }
}

/// Solve `A x = d` for tridiagonal `A` with sub-, main and super-diagonals
/// `lo`, `di`, `up` (the first entry of `lo` and last of `up` are unused).
pub(crate) fn thomas(lo: &[f64], di: &[f64], up: &[f64], d: &mut [f64]) -> Result<()> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut piv = di[0];
    for i in 0..n {
        if i > 0 {
            piv = di[i] - lo[i] * c[i - 1];
        }
        if piv.abs() < 1e-300 || !piv.is_finite() {
            return Err(Error::SingularSystem(i));
        }
        c[i] = up[i] / piv;
        d[i] = if i == 0 { d[0] / piv } else { (d[i] - lo[i] * d[i - 1]) / piv };
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(())
}

/// `g'(t)` by second-order differences that stay inside `t >= 0`.
fn time_derivative(g: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let d = 1e-5 * t.abs().max(1.0);
    if t < d {
        (-3.0 * g(t) + 4.0 * g(t + d) - g(t + 2.0 * d)) / (2.0 * d)
    } else {
        (g(t + d) - g(t - d)) / (2.0 * d)
    }
}

fn guard(t: f64, row: &[f64]) -> Result<()> {
    let norm = row.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
    if norm > BLOW_UP {
        return Err(Error::BlowUp { t, norm });
    }
    Ok(())
}

fn fd_solution(x: Vec<f64>, t: Vec<f64>, rows: Vec<f64>) -> GridSolution {
    let width = x.len();
    let values = Array2::from_shape_vec((t.len(), width), rows).expect("row widths agree");
    GridSolution { x_nodes: x, t_nodes: t, values, meta: SolveMeta::direct(SeriesControl::default()) }
}

/// Junction equation as the first-order system `U_t = V`,
/// `V_t = eps V_xx - eps lam V_x - alpha V + U_xx - lam U_x - sin U + gamma`.
pub fn solve_pde_esjj(prob: &EsjjProblem, grid: FdGrid) -> Result<GridSolution> {
    grid.validate()?;
    let e = prob.params;
    e.validate()?;
    if !(prob.horizon.is_finite() && prob.horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon = {} must be finite and > 0", prob.horizon)));
    }
    let (nt, dt) = grid.steps(prob.horizon);
    grid.check(dt, grid.esjj_bound(&e))?;
    let n = grid.nx;
    let h = e.length / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut u: Vec<f64> = x.iter().map(|&x| (prob.u0)(x)).collect();
    let mut v: Vec<f64> = x.iter().map(|&x| (prob.v0)(x)).collect();
    // on the edges the velocity is fixed by the boundary data
    v[0] = time_derivative(prob.g1.as_ref(), 0.0);
    v[n] = time_derivative(prob.g2.as_ref(), 0.0);

    // tridiagonal stencils of Lv = eps D2 - eps lam D1 - alpha and Lu = D2 - lam D1
    let h2 = h * h;
    let lv = [e.eps / h2 + e.eps * e.lam / (2.0 * h), -2.0 * e.eps / h2 - e.alpha, e.eps / h2 - e.eps * e.lam / (2.0 * h)];
    let lu = [1.0 / h2 + e.lam / (2.0 * h), -2.0 / h2, 1.0 / h2 - e.lam / (2.0 * h)];
    let apply = |s: &[f64; 3], w: &[f64], i: usize| s[0] * w[i - 1] + s[1] * w[i] + s[2] * w[i + 1];
    let m: [f64; 3] = std::array::from_fn(|k| 0.5 * dt * lv[k] + 0.25 * dt * dt * lu[k]);
    let lo = vec![-m[0]; n - 1];
    let di = vec![1.0 - m[1]; n - 1];
    let up = vec![-m[2]; n - 1];

    let mut rows = Vec::with_capacity(nt * (n + 1));
    let mut t_nodes = Vec::with_capacity(nt);
    let mut rhs = vec![0.0; n - 1];
    for step in 1..=nt {
        let t0 = (step - 1) as f64 * dt;
        let t1 = step as f64 * dt;
        let (vb0, vb1) = (time_derivative(prob.g1.as_ref(), t1), time_derivative(prob.g2.as_ref(), t1));
        match grid.scheme {
            FdScheme::Explicit => {
                let mut vn = v.clone();
                for i in 1..n {
                    let force = -u[i].sin() + e.gamma;
                    vn[i] = v[i] + dt * (apply(&lv, &v, i) + apply(&lu, &u, i) + force);
                }
                for i in 1..n {
                    u[i] += dt * v[i];
                }
                v = vn;
            }
            FdScheme::SemiImplicit => {
                for i in 1..n {
                    let mid = u[i] + 0.5 * dt * v[i];
                    rhs[i - 1] = v[i] + apply(&m, &v, i) + dt * apply(&lu, &u, i) + dt * (e.gamma - mid.sin());
                }
                rhs[0] += m[0] * vb0;
                rhs[n - 2] += m[2] * vb1;
                thomas(&lo, &di, &up, &mut rhs)?;
                for i in 1..n {
                    u[i] += 0.5 * dt * (rhs[i - 1] + v[i]);
                    v[i] = rhs[i - 1];
                }
            }
        }
        v[0] = vb0;
        v[n] = vb1;
        u[0] = (prob.g1)(t1);
        u[n] = (prob.g2)(t1);
        guard(t1, &u).map_err(|err| {
            log::error!("junction solve aborted after t = {t0}");
            err
        })?;
        rows.extend_from_slice(&u);
        t_nodes.push(t1);
    }
    Ok(fd_solution(x, t_nodes, rows))
}

/// Memory equation through the local system `u_t = eps u_xx - a u - b w + F`,
/// `w_t = -beta w + u`, `w(., 0) = 0`.
pub fn solve_integrodiff_fd(prob: &DirichletProblem, grid: FdGrid) -> Result<GridSolution> {
    solve_integrodiff_fd_with_memory(prob, grid).map(|(u, _)| u)
}

/// As [`solve_integrodiff_fd`], also returning the memory state
/// `w = int_0^t exp(-beta (t - tau)) u d tau` at the same nodes.
pub fn solve_integrodiff_fd_with_memory(prob: &DirichletProblem, grid: FdGrid) -> Result<(GridSolution, Array2<f64>)> {
    grid.validate()?;
    prob.validate()?;
    let p = prob.params;
    let l = prob.domain.length;
    let (nt, dt) = grid.steps(prob.horizon);
    grid.check(dt, grid.memory_bound(&p, l))?;
    let n = grid.nx;
    let h = l / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut u: Vec<f64> = x.iter().map(|&x| (prob.u0)(x)).collect();
    let mut w = vec![0.0; n + 1];
    let mut state = prob.source.start(&x, dt);
    let mut f = vec![0.0; n + 1];
    state.advance(0.0, &u, &mut f);

    let r = p.eps * dt / (2.0 * h * h);
    let rho = 1.0 / (1.0 + 0.5 * p.beta * dt);
    let c = 0.5 * p.a * dt + 0.25 * p.b * rho * dt * dt;
    let lo = vec![-r; n - 1];
    let di = vec![1.0 + 2.0 * r + c; n - 1];
    let up = vec![-r; n - 1];

    let mut rows = Vec::with_capacity(nt * (n + 1));
    let mut mem = Vec::with_capacity(nt * (n + 1));
    let mut t_nodes = Vec::with_capacity(nt);
    let mut base = vec![0.0; n - 1];
    let mut trial = vec![0.0; n + 1];
    let mut f_next = vec![0.0; n + 1];
    for step in 1..=nt {
        let t1 = step as f64 * dt;
        let (b0, b1) = ((prob.g1)(t1), (prob.g2)(t1));
        let mut un = vec![0.0; n + 1];
        match grid.scheme {
            FdScheme::Explicit => {
                for i in 1..n {
                    let lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h);
                    un[i] = u[i] + dt * (p.eps * lap - p.a * u[i] - p.b * w[i] + f[i]);
                }
            }
            FdScheme::SemiImplicit => {
                for i in 1..n {
                    base[i - 1] = (1.0 - 2.0 * r - c) * u[i] + r * (u[i - 1] + u[i + 1]) - p.b * dt * rho * w[i]
                        + 0.5 * dt * f[i];
                }
                base[0] += r * b0;
                base[n - 2] += r * b1;
                // predict with F frozen over the step, then correct once
                let mut sol: Vec<f64> = (0..n - 1).map(|k| base[k] + 0.5 * dt * f[k + 1]).collect();
                thomas(&lo, &di, &up, &mut sol)?;
                trial[0] = b0;
                trial[n] = b1;
                trial[1..n].copy_from_slice(&sol);
                state.preview(t1, &trial, &mut f_next);
                let mut sol: Vec<f64> = (0..n - 1).map(|k| base[k] + 0.5 * dt * f_next[k + 1]).collect();
                thomas(&lo, &di, &up, &mut sol)?;
                un[1..n].copy_from_slice(&sol);
            }
        }
        un[0] = b0;
        un[n] = b1;
        for i in 0..=n {
            w[i] = match grid.scheme {
                FdScheme::Explicit => w[i] + dt * (-p.beta * w[i] + u[i]),
                FdScheme::SemiImplicit => rho * ((1.0 - 0.5 * p.beta * dt) * w[i] + 0.5 * dt * (un[i] + u[i])),
            };
        }
        u = un;
        state.advance(t1, &u, &mut f);
        if let Some(i) = (1..n).find(|&i| !f[i].is_finite()) {
            return Err(Error::SourceEvaluation { x: x[i], t: t1 });
        }
        guard(t1, &u)?;
        rows.extend_from_slice(&u);
        mem.extend_from_slice(&w);
        t_nodes.push(t1);
    }
    let memory = Array2::from_shape_vec((nt, n + 1), mem).expect("row widths agree");
    Ok((fd_solution(x, t_nodes, rows), memory))
}

/// Nodal solution of `-eps u'' + (a + b/beta) u = 0`, `u(0) = g1_inf`,
/// `u(L) = g2_inf`, on `nx` intervals.
pub fn steady_bvp(g1_inf: f64, g2_inf: f64, p: &OperatorParams, d: &StripDomain, nx: usize) -> Result<Vec<f64>> {
    p.validate()?;
    d.validate()?;
    if nx < 3 {
        return Err(Error::InvalidParameter(format!("nx = {nx} must be >= 3")));
    }
    let h = d.length / nx as f64;
    let k = p.a + p.b / p.beta;
    let off = -p.eps / (h * h);
    let lo = vec![off; nx - 1];
    let di = vec![2.0 * p.eps / (h * h) + k; nx - 1];
    let up = vec![off; nx - 1];
    let mut rhs = vec![0.0; nx - 1];
    rhs[0] -= off * g1_inf;
    rhs[nx - 2] -= off * g2_inf;
    thomas(&lo, &di, &up, &mut rhs)?;
    let mut out = Vec::with_capacity(nx + 1);
    out.push(g1_inf);
    out.extend(rhs);
    out.push(g2_inf);
    Ok(out)
}
