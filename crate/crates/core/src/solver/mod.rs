//! Dirichlet initial-boundary value problem on `[0, L] x (0, T]`.
//!
//! The solution is represented as
//!
//! ```text
//! u(x,t) = int_0^L G(x,xi,t) u0(xi) dxi
//!        + int_0^t int_0^L G(x,xi,t-tau) F(xi,tau) dxi dtau
//!        - 2 eps int_0^t theta_x(x, t-tau) g1(tau) dtau
//!        + 2 eps int_0^t theta_x(x-L, t-tau) g2(tau) dtau
//! ```
//!
//! and evaluated by product integration on a uniform grid: data are
//! interpolated piecewise quadratically in space (on pairs of cells) and
//! piecewise linearly in time, and the kernels are integrated exactly against
//! the interpolants. Boundary nodes carry the one-sided limits
//! `u(0,t) = g1(t)` and `u(L,t) = g2(t)`.

mod linear;
mod weights;

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{require_finite, Error, Result};
use crate::kernel::{OperatorParams, SeriesControl};
use crate::quadrature;
use crate::theta::{theta_x_auto, StripDomain};

pub use linear::{solve_linear, solve_linear_with, solve_nonlinear_picard, solve_nonlinear_picard_from, PicardStart};
pub use weights::Propagator;

/// Function of one variable shared across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Source term of the problem.
#[derive(Clone)]
pub enum SourceKind {
    /// `f(x, t)`.
    Linear(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    /// `F(x, t, u(x, t))`.
    Nonlinear(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
    /// A source that depends on the history of `u` at each node.
    Causal(Arc<dyn CausalSource>),
}

/// Source together with the Lipschitz constant and sup bound the contraction
/// argument needs.
#[derive(Clone)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub lipschitz_const: f64,
    pub bound: f64,
}

impl SourceSpec {
    pub fn zero() -> Self {
        SourceSpec::linear(Arc::new(|_, _| 0.0))
    }

    pub fn linear(f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>) -> Self {
        SourceSpec { kind: SourceKind::Linear(f), lipschitz_const: 0.0, bound: f64::INFINITY }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, SourceKind::Linear(_))
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_linear() {
            return Ok(());
        }
        for (name, v) in [("lipschitz_const", self.lipschitz_const), ("bound", self.bound)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("source {name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Start a time sweep over the given spatial nodes.
    pub fn start(&self, x_nodes: &[f64], dt: f64) -> Box<dyn SourceState + '_> {
        match &self.kind {
            SourceKind::Linear(f) => Box::new(PointwiseState { x: x_nodes.to_vec(), f: Pointwise::Linear(f.as_ref()) }),
            SourceKind::Nonlinear(f) => {
                Box::new(PointwiseState { x: x_nodes.to_vec(), f: Pointwise::Nonlinear(f.as_ref()) })
            }
            SourceKind::Causal(c) => c.start(x_nodes, dt),
        }
    }
}

/// A source whose value at `t` depends on `u` at the same node for all
/// times up to `t`.
pub trait CausalSource: Send + Sync {
    fn start(&self, x_nodes: &[f64], dt: f64) -> Box<dyn SourceState + '_>;
}

/// Running state of a source during one forward sweep. Times are visited in
/// increasing order `0, dt, 2 dt, ...`.
pub trait SourceState {
    /// Value at time `t` given the current row `u(., t)`; commits `u_row` to
    /// the history.
    fn advance(&mut self, t: f64, u_row: &[f64], out: &mut [f64]);

    /// Value at time `t` for a trial row, without committing it.
    fn preview(&self, t: f64, u_row: &[f64], out: &mut [f64]);
}

enum Pointwise<'a> {
    Linear(&'a (dyn Fn(f64, f64) -> f64 + Send + Sync)),
    Nonlinear(&'a (dyn Fn(f64, f64, f64) -> f64 + Send + Sync)),
}

struct PointwiseState<'a> {
    x: Vec<f64>,
    f: Pointwise<'a>,
}

impl SourceState for PointwiseState<'_> {
    fn advance(&mut self, t: f64, u_row: &[f64], out: &mut [f64]) {
        self.preview(t, u_row, out);
    }

    fn preview(&self, t: f64, u_row: &[f64], out: &mut [f64]) {
        match self.f {
            Pointwise::Linear(f) => {
                for (o, &x) in out.iter_mut().zip(&self.x) {
                    *o = f(x, t);
                }
            }
            Pointwise::Nonlinear(f) => {
                for ((o, &x), &u) in out.iter_mut().zip(&self.x).zip(u_row) {
                    *o = f(x, t, u);
                }
            }
        }
    }
}

/// Problem data for the operator on the strip.
#[derive(Clone)]
pub struct DirichletProblem {
    pub params: OperatorParams,
    pub domain: StripDomain,
    pub horizon: f64,
    pub u0: ScalarFn,
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub source: SourceSpec,
}

impl DirichletProblem {
    /// Zero data and zero source.
    pub fn homogeneous(params: OperatorParams, domain: StripDomain, horizon: f64) -> Self {
        let zero: ScalarFn = Arc::new(|_| 0.0);
        DirichletProblem {
            params,
            domain,
            horizon,
            u0: zero.clone(),
            g1: zero.clone(),
            g2: zero,
            source: SourceSpec::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.domain.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon = {} must be finite and > 0", self.horizon)));
        }
        self.source.validate()
    }

    /// `max(|u0(0) - g1(0)|, |u0(L) - g2(0)|)`.
    pub fn compatibility_gap(&self) -> f64 {
        let l = self.domain.length;
        ((self.u0)(0.0) - (self.g1)(0.0)).abs().max(((self.u0)(l) - (self.g2)(0.0)).abs())
    }
}

/// Uniform grid with `nx` space intervals (even) and `nt` time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformGrid {
    pub nx: usize,
    pub nt: usize,
}

impl UniformGrid {
    pub fn new(nx: usize, nt: usize) -> Result<Self> {
        let g = UniformGrid { nx, nt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.nx % 2 != 0 {
            return Err(Error::InvalidParameter(format!("nx = {} must be even and >= 2", self.nx)));
        }
        if self.nt == 0 {
            return Err(Error::InvalidParameter("nt must be >= 1".into()));
        }
        Ok(())
    }

    pub fn x_nodes(&self, length: f64) -> Vec<f64> {
        (0..=self.nx).map(|j| length * j as f64 / self.nx as f64).collect()
    }

    /// `t_1, ..., t_nt`; the initial time is not included.
    pub fn t_nodes(&self, horizon: f64) -> Vec<f64> {
        (1..=self.nt).map(|m| horizon * m as f64 / self.nt as f64).collect()
    }
}

/// Diagnostics attached to a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveMeta {
    pub control: SeriesControl,
    /// Picard sweeps performed (0 for a direct linear solve).
    pub iterations: usize,
    /// Successive-difference ratios of the Picard iteration.
    pub ratios: Vec<f64>,
    /// Sup norm of the last Picard increment.
    pub last_increment: f64,
    /// `max(|u0(0) - g1(0)|, |u0(L) - g2(0)|)`.
    pub compatibility_gap: f64,
}

impl SolveMeta {
    pub(crate) fn direct(control: SeriesControl) -> Self {
        SolveMeta { control, iterations: 0, ratios: vec![], last_increment: 0.0, compatibility_gap: 0.0 }
    }

    /// Largest observed contraction ratio.
    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios.iter().copied().filter(|r| r.is_finite()).reduce(f64::max)
    }
}

/// Nodal values `values[[m, j]] = u(x_j, t_{m+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub x_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub values: Array2<f64>,
    pub meta: SolveMeta,
}

impl GridSolution {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup |self - other|` on a shared grid.
    pub fn sup_diff(&self, other: &GridSolution) -> Result<f64> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::InvalidParameter(format!(
                "grid shapes differ: {:?} vs {:?}",
                self.values.dim(),
                other.values.dim()
            )));
        }
        Ok(self.values.iter().zip(other.values.iter()).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Row of values at the time node closest to `t`.
    pub fn row_at(&self, t: f64) -> Vec<f64> {
        let m = self
            .t_nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(m, _)| m)
            .unwrap_or(0);
        self.values.row(m).to_vec()
    }
}

/// Side of the strip a boundary datum lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySide {
    Left,
    Right,
}

/// Contribution of one boundary datum to `u(x, t)`:
/// `-2 eps int_0^t theta_x(x, t - tau) g(tau) d tau` on the left and
/// `+2 eps int_0^t theta_x(x - L, t - tau) g(tau) d tau` on the right, with
/// one-sided limits at the endpoints.
pub fn boundary_convolution(
    g: &dyn Fn(f64) -> f64,
    x: f64,
    t: f64,
    which: BoundarySide,
    p: &OperatorParams,
    d: &StripDomain,
    c: &SeriesControl,
) -> Result<f64> {
    p.validate()?;
    d.validate()?;
    c.validate()?;
    require_finite("x", x)?;
    require_finite("t", t)?;
    let l = d.length;
    if !(0.0..=l).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {l}]")));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    // distance to the side the datum sits on
    let z = match which {
        BoundarySide::Left => x,
        BoundarySide::Right => l - x,
    };
    if z == 0.0 {
        return Ok(g(t));
    }
    if z == l {
        return Ok(0.0);
    }
    let mut breaks = vec![];
    for w in [z, l - z] {
        let peak = w * w / (6.0 * p.eps);
        breaks.extend([0.25 * peak, peak, 4.0 * peak, 16.0 * peak]);
    }
    let mut s = 1.0;
    while s < t {
        breaks.push(s);
        s *= 2.0;
    }
    breaks.sort_by(f64::total_cmp);
    let inner = 0.01 * c.quad_tol / t.max(1.0);
    let mut failure = None;
    let v = quadrature::integrate(
        |s| match theta_x_auto(z, s, p, d, c.n_images, inner) {
            Ok(k) => k * g(t - s),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        t,
        &breaks,
        c.quad_tol / (2.0 * p.eps),
    )
    .map_err(|e| Error::NumericalFailure { x, t, reason: e.to_string() })?;
    if let Some(e) = failure {
        return Err(e);
    }
    // theta_x(x - L) = -theta_x(L - x): both sides carry -2 eps
    Ok(-2.0 * p.eps * v)
}
