//! Exponentially shaped Josephson junction
//!
//! ```text
//! eps U_xxt + U_xx - U_tt - eps lam U_xt - lam U_x - alpha U_t = sin U - gamma
//! ```
//!
//! and its reduction to the memory operator. With `U = exp(lam x / 2) u`,
//! `beta = 1/eps`, `b = beta^2 (1 - alpha eps)` and `a = (lam^2/4 - b)/beta`,
//! the weighted phase `u` satisfies
//!
//! ```text
//! u_t - eps u_xx + a u + b int_0^t exp(-beta (t - tau)) u d tau = F
//! F(x, t) = c0(x) exp(-t/eps) - int_0^t exp(-(t - tau)/eps) f1(x, u(x, tau)) d tau
//! ```
//!
//! where `f1 = exp(-lam x/2) [sin(exp(lam x/2) u) - gamma]` and
//! `c0 = v0~ + a u0~ - eps u0~''` collects the initial data in the weighted
//! variable (`u0~ = exp(-lam x/2) U0`, `v0~ = exp(-lam x/2) V0`).

use std::sync::Arc;

use crate::error::{require_finite, Error, Result};
use crate::kernel::{e_of_t, OperatorParams, SeriesControl};
use crate::solver::{
    solve_nonlinear_picard, CausalSource, DirichletProblem, GridSolution, ScalarFn, SourceKind, SourceSpec,
    SourceState, UniformGrid,
};
use crate::theta::{sinh_ratio, StripDomain};

/// Picard tolerance used by [`solve_esjj`].
pub const PICARD_TOL: f64 = 1e-10;
/// Sweep limit used by [`solve_esjj`].
pub const PICARD_MAX_ITER: usize = 200;

/// Physical constants of the junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsjjParams {
    /// Surface dissipation.
    pub eps: f64,
    /// Shunt dissipation.
    pub alpha: f64,
    /// Exponential shaping rate.
    pub lam: f64,
    /// Normalised bias current.
    pub gamma: f64,
    pub length: f64,
}

impl EsjjParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("alpha", self.alpha), ("lam", self.lam), ("length", self.length)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and > 0")));
            }
        }
        require_finite("gamma", self.gamma)
    }

    pub fn domain(&self) -> Result<StripDomain> {
        StripDomain::new(self.length)
    }
}

/// Junction problem with phase `U`, velocity `V` and Dirichlet phases.
#[derive(Clone)]
pub struct EsjjProblem {
    pub params: EsjjParams,
    pub u0: ScalarFn,
    pub v0: ScalarFn,
    pub g1: ScalarFn,
    pub g2: ScalarFn,
    pub horizon: f64,
}

impl EsjjProblem {
    /// Zero initial and boundary data.
    pub fn at_rest(params: EsjjParams, horizon: f64) -> Self {
        let zero: ScalarFn = Arc::new(|_| 0.0);
        EsjjProblem { params, u0: zero.clone(), v0: zero.clone(), g1: zero.clone(), g2: zero, horizon }
    }
}

/// Operator constants of the weighted phase.
pub fn map_params(e: &EsjjParams) -> Result<OperatorParams> {
    e.validate()?;
    let beta = 1.0 / e.eps;
    if e.alpha * e.eps >= 1.0 {
        return Err(Error::MappingInfeasible(format!(
            "alpha eps = {} must be < 1 for b = beta^2 (1 - alpha eps) > 0",
            e.alpha * e.eps
        )));
    }
    let b = beta * beta * (1.0 - e.alpha * e.eps);
    let quarter = e.lam * e.lam / 4.0;
    if quarter <= b {
        return Err(Error::MappingInfeasible(format!("lam^2/4 = {quarter} must exceed b = {b} for a > 0")));
    }
    OperatorParams::new(e.eps, (quarter - b) / beta, b, beta)
}

/// `U = exp(lam x / 2) u`, column by column.
pub fn gauge_forward(u: &GridSolution, lam: f64) -> GridSolution {
    gauge(u, lam / 2.0)
}

/// `u = exp(-lam x / 2) U`.
pub fn gauge_inverse(u: &GridSolution, lam: f64) -> GridSolution {
    gauge(u, -lam / 2.0)
}

fn gauge(u: &GridSolution, rate: f64) -> GridSolution {
    let mut out = u.clone();
    for (mut col, &x) in out.values.columns_mut().into_iter().zip(&u.x_nodes) {
        let w = (rate * x).exp();
        col.mapv_inplace(|v| v * w);
    }
    out
}

/// `exp(-lam x/2) [sin(exp(lam x/2) u) - gamma]`.
pub fn f1_source(x: f64, u: f64, e: &EsjjParams) -> f64 {
    let w = (0.5 * e.lam * x).exp();
    (((w * u).sin()) - e.gamma) / w
}

/// Second derivative by five-point differences, one-sided within `2 delta`
/// of either end of `[0, l]`.
fn second_derivative(f: &dyn Fn(f64) -> f64, x: f64, l: f64) -> f64 {
    let d = 1e-3 * l;
    if x < 2.0 * d {
        let v: Vec<f64> = (0..5).map(|k| f(x + k as f64 * d)).collect();
        (35.0 * v[0] - 104.0 * v[1] + 114.0 * v[2] - 56.0 * v[3] + 11.0 * v[4]) / (12.0 * d * d)
    } else if x > l - 2.0 * d {
        let v: Vec<f64> = (0..5).map(|k| f(x - k as f64 * d)).collect();
        (35.0 * v[0] - 104.0 * v[1] + 114.0 * v[2] - 56.0 * v[3] + 11.0 * v[4]) / (12.0 * d * d)
    } else {
        (-f(x + 2.0 * d) + 16.0 * f(x + d) - 30.0 * f(x) + 16.0 * f(x - d) - f(x - 2.0 * d)) / (12.0 * d * d)
    }
}

/// Coefficient `c0(x)` of `exp(-t/eps)` in the assembled source.
pub fn initial_coefficient(prob: &EsjjProblem, x: f64) -> Result<f64> {
    let e = &prob.params;
    let p = map_params(e)?;
    let half = 0.5 * e.lam;
    let u0 = prob.u0.clone();
    let weighted = move |y: f64| (-half * y).exp() * u0(y);
    let curv = second_derivative(&weighted, x, e.length);
    Ok((-half * x).exp() * (prob.v0)(x) + p.a * weighted(x) - p.eps * curv)
}

/// Source history: `mem(t) = int_0^t exp(-(t - tau)/eps) f1(u(tau)) d tau`
/// with `f1` linear between samples, advanced by an exact exponential
/// recurrence.
struct JunctionSource {
    params: EsjjParams,
    c0: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CausalSource for JunctionSource {
    fn start(&self, x_nodes: &[f64], _dt: f64) -> Box<dyn SourceState + '_> {
        Box::new(JunctionState {
            params: self.params,
            x: x_nodes.to_vec(),
            c0: x_nodes.iter().map(|&x| (self.c0)(x)).collect(),
            mem: vec![0.0; x_nodes.len()],
            f1: vec![0.0; x_nodes.len()],
            last: None,
        })
    }
}

struct JunctionState {
    params: EsjjParams,
    x: Vec<f64>,
    c0: Vec<f64>,
    mem: Vec<f64>,
    f1: Vec<f64>,
    last: Option<f64>,
}

impl JunctionState {
    fn step(&self, t: f64, u_row: &[f64], mem: &mut [f64], f1: &mut [f64]) {
        let eps = self.params.eps;
        for ((f, &x), &u) in f1.iter_mut().zip(&self.x).zip(u_row) {
            *f = f1_source(x, u, &self.params);
        }
        match self.last {
            None => mem.fill(0.0),
            Some(t0) => {
                let q = (t - t0) / eps;
                let e = (-q).exp();
                let w_new = if q < 1e-4 {
                    eps * q * (0.5 - q / 6.0 + q * q / 24.0)
                } else {
                    eps * (1.0 - (1.0 - e) / q)
                };
                let w_old = -eps * (-q).exp_m1() - w_new;
                for (i, m) in mem.iter_mut().enumerate() {
                    *m = e * self.mem[i] + w_old * self.f1[i] + w_new * f1[i];
                }
            }
        }
    }

    fn emit(&self, t: f64, mem: &[f64], out: &mut [f64]) {
        let decay = (-t / self.params.eps).exp();
        for ((o, &c), &m) in out.iter_mut().zip(&self.c0).zip(mem) {
            *o = c * decay - m;
        }
    }
}

impl SourceState for JunctionState {
    fn advance(&mut self, t: f64, u_row: &[f64], out: &mut [f64]) {
        let mut mem = vec![0.0; self.x.len()];
        let mut f1 = vec![0.0; self.x.len()];
        self.step(t, u_row, &mut mem, &mut f1);
        self.emit(t, &mem, out);
        self.mem = mem;
        self.f1 = f1;
        self.last = Some(t);
    }

    fn preview(&self, t: f64, u_row: &[f64], out: &mut [f64]) {
        let mut mem = vec![0.0; self.x.len()];
        let mut f1 = vec![0.0; self.x.len()];
        self.step(t, u_row, &mut mem, &mut f1);
        self.emit(t, &mem, out);
    }
}

/// Source of the weighted problem, with Lipschitz constant `eps` and the
/// bound `eps (1 + |gamma|) + sup |c0|`.
pub fn assemble_f(prob: &EsjjProblem) -> Result<SourceSpec> {
    let e = prob.params;
    map_params(&e)?;
    let samples = 512;
    let mut c0_sup: f64 = 0.0;
    for k in 0..=samples {
        let x = e.length * k as f64 / samples as f64;
        let c = initial_coefficient(prob, x)?;
        require_finite("c0", c)?;
        c0_sup = c0_sup.max(c.abs());
    }
    let p = prob.clone();
    let c0 = Arc::new(move |x: f64| initial_coefficient(&p, x).unwrap_or(f64::NAN));
    Ok(SourceSpec {
        kind: SourceKind::Causal(Arc::new(JunctionSource { params: e, c0 })),
        lipschitz_const: e.eps,
        bound: e.eps * (1.0 + e.gamma.abs()) + c0_sup,
    })
}

/// The weighted Dirichlet problem equivalent to `prob`.
pub fn to_dirichlet(prob: &EsjjProblem) -> Result<DirichletProblem> {
    let e = prob.params;
    let params = map_params(&e)?;
    let half = 0.5 * e.lam;
    let right = (-half * e.length).exp();
    let (u0, g1, g2) = (prob.u0.clone(), prob.g1.clone(), prob.g2.clone());
    Ok(DirichletProblem {
        params,
        domain: e.domain()?,
        horizon: prob.horizon,
        u0: Arc::new(move |x| (-half * x).exp() * u0(x)),
        g1,
        g2: Arc::new(move |t| right * g2(t)),
        source: assemble_f(prob)?,
    })
}

/// Picard solution of the weighted problem, returned as the physical phase.
pub fn solve_esjj(prob: &EsjjProblem, grid: UniformGrid, c: SeriesControl) -> Result<GridSolution> {
    let mapped = to_dirichlet(prob)?;
    let u = solve_nonlinear_picard(&mapped, grid, c, PICARD_TOL, PICARD_MAX_ITER)?;
    Ok(gauge_forward(&u, prob.params.lam))
}

/// `2 [|u0| (1 + pi sqrt(b) t) exp(-omega t) + |v0| E(t) + beta_1 |f|]`.
pub fn apriori_bound(t: f64, norm_u0: f64, norm_v0: f64, norm_f: f64, p: &OperatorParams) -> Result<f64> {
    p.validate()?;
    for (name, v) in [("norm_u0", norm_u0), ("norm_v0", norm_v0), ("norm_f", norm_f)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
        }
    }
    let e = e_of_t(t, p)?;
    let initial = norm_u0 * (1.0 + std::f64::consts::PI * p.b.sqrt() * t) * (-p.omega() * t).exp();
    Ok(2.0 * (initial + norm_v0 * e + p.beta1() * norm_f))
}

/// Long-time profile driven by boundary limits, in the weighted variable:
/// the solution of `-eps u'' + (a + b/beta) u = 0` with `u(0) = g1_inf`,
/// `u(L) = g2_inf`.
pub fn boundary_asymptote(x: f64, g1_inf: f64, g2_inf: f64, e: &EsjjParams) -> Result<f64> {
    let p = map_params(e)?;
    require_finite("x", x)?;
    let l = e.length;
    if !(0.0..=l).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {l}]")));
    }
    let s = p.sigma0();
    Ok(g1_inf * sinh_ratio(s, l - x, l) + g2_inf * sinh_ratio(s, x, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> EsjjParams {
        EsjjParams { eps: 1.0, alpha: 0.5, lam: 2.0, gamma: 0.3, length: 1.0 }
    }

    #[test]
    fn reference_mapping() {
        let p = map_params(&reference()).unwrap();
        assert_eq!((p.a, p.b, p.beta, p.eps), (0.5, 0.5, 1.0, 1.0));
        assert!((p.sigma0() - 1.0).abs() < 1e-15);
        let bad = EsjjParams { eps: 0.5, alpha: 3.0, ..reference() };
        match map_params(&bad) {
            Err(Error::MappingInfeasible(m)) => assert!(m.contains("alpha eps")),
            other => panic!("{other:?}"),
        }
        let flat = EsjjParams { lam: 1.0, ..reference() };
        assert!(matches!(map_params(&flat), Err(Error::MappingInfeasible(m)) if m.contains("lam^2/4")));
    }

    proptest! {
        #[test]
        fn sigma0_is_half_lambda(eps in 0.05f64..5.0, ae in 0.01f64..0.99, extra in 0.01f64..10.0, gamma in -1.0f64..1.0) {
            let alpha = ae / eps;
            let b = (1.0 - ae) / (eps * eps);
            let lam = 2.0 * (b + extra).sqrt();
            let e = EsjjParams { eps, alpha, lam, gamma, length: 1.0 };
            let p = map_params(&e).unwrap();
            prop_assert!((p.sigma0() - lam / 2.0).abs() <= 1e-14 * lam.max(1.0));
        }

        #[test]
        fn f1_is_bounded(x in 0.0f64..3.0, u in -50.0f64..50.0, gamma in -2.0f64..2.0) {
            let e = EsjjParams { gamma, ..reference() };
            prop_assert!(f1_source(x, u, &e).abs() <= (-x).exp() * (1.0 + gamma.abs()) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn gauge_round_trip() {
        let sol = GridSolution {
            x_nodes: vec![0.0, 0.5, 1.0],
            t_nodes: vec![1.0],
            values: ndarray::arr2(&[[1.0, 1.0, 1.0]]),
            meta: crate::solver::SolveMeta {
                control: SeriesControl::default(),
                iterations: 0,
                ratios: vec![],
                last_increment: 0.0,
                compatibility_gap: 0.0,
            },
        };
        let back = gauge_forward(&gauge_inverse(&sol, 2.0), 2.0);
        assert!(back.sup_diff(&sol).unwrap() < 1e-14);
        let w = gauge_inverse(&sol, 2.0);
        assert!((w.values[[0, 1]] - (-0.5f64).exp()).abs() < 1e-16);
        assert_eq!(gauge_forward(&sol, 0.0), sol);
    }

    #[test]
    fn unshaped_limit_of_f1() {
        let e = EsjjParams { lam: 0.0, ..reference() };
        assert_eq!(f1_source(0.7, 1.2, &e), 1.2f64.sin() - 0.3);
        assert_eq!(f1_source(0.7, 0.0, &EsjjParams { gamma: 0.0, ..reference() }), 0.0);
    }

    #[test]
    fn frozen_source_closed_form() {
        // u frozen at u*, lam = 0, u0 = 0 and v0 = 1 + x
        let e = EsjjParams { lam: 0.0, ..reference() };
        let src = JunctionSource { params: e, c0: Arc::new(|x| 1.0 + x) };
        let x = vec![0.25, 0.5];
        let mut st = src.start(&x, 0.01);
        let ustar = 0.8;
        let mut out = vec![0.0; 2];
        for k in 0..=200 {
            st.advance(k as f64 * 0.01, &[ustar, ustar], &mut out);
        }
        let t: f64 = 2.0;
        for (i, &xi) in x.iter().enumerate() {
            let mem = (1.0 - (-t).exp()) * (ustar.sin() - 0.3);
            let expected = (1.0 + xi) * (-t).exp() - mem;
            assert!((out[i] - expected).abs() < 1e-14, "{} vs {expected}", out[i]);
        }
    }

    #[test]
    fn initial_coefficient_matches_closed_form() {
        let mut prob = EsjjProblem::at_rest(reference(), 1.0);
        prob.u0 = Arc::new(|x| (3.0 * x).sin());
        let p = map_params(&prob.params).unwrap();
        for &x in &[0.0f64, 0.001, 0.3, 0.999, 1.0] {
            // u~ = exp(-x) sin 3x, u~'' = exp(-x)(-8 sin 3x - 6 cos 3x)
            let w = (-x).exp();
            let exact = p.a * w * (3.0 * x).sin() - p.eps * w * (-8.0 * (3.0 * x).sin() - 6.0 * (3.0 * x).cos());
            assert!((initial_coefficient(&prob, x).unwrap() - exact).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn lipschitz_metadata_holds() {
        let e = reference();
        let prob = EsjjProblem::at_rest(e, 3.0);
        let spec = assemble_f(&prob).unwrap();
        let SourceKind::Causal(src) = &spec.kind else { panic!() };
        let x = vec![0.0, 0.4, 1.0];
        let (mut a, mut b) = (src.start(&x, 0.01), src.start(&x, 0.01));
        let (mut fa, mut fb) = (vec![0.0; 3], vec![0.0; 3]);
        let mut worst: f64 = 0.0;
        for k in 0..=300 {
            let t = k as f64 * 0.01;
            let ua = [(t).sin(), 0.3 * t, -t];
            let ub = [ua[0] + 0.01, ua[1] - 0.01, ua[2] + 0.01];
            a.advance(t, &ua, &mut fa);
            b.advance(t, &ub, &mut fb);
            for i in 0..3 {
                worst = worst.max((fa[i] - fb[i]).abs() / 0.01);
            }
        }
        assert!(worst <= spec.lipschitz_const);
        assert!(worst > 0.5 * spec.lipschitz_const);
    }

    #[test]
    fn apriori_values() {
        let p = map_params(&reference()).unwrap();
        assert!((apriori_bound(1.0, 1.0, 1.0, 1.0, &p).unwrap() - 8.862410913097229).abs() < 1e-12);
        assert!((apriori_bound(0.0, 1.5, 7.0, 0.5, &p).unwrap() - 2.0 * (1.5 + 2.0 * 0.5)).abs() < 1e-15);
        assert!((apriori_bound(200.0, 1.0, 1.0, 1.0, &p).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn asymptote_values() {
        let e = reference();
        assert_eq!(boundary_asymptote(0.0, 1.3, -0.2, &e).unwrap(), 1.3);
        assert_eq!(boundary_asymptote(1.0, 1.3, -0.2, &e).unwrap(), -0.2);
        assert!((boundary_asymptote(0.5, 1.0, 0.0, &e).unwrap() - 0.443409441985037).abs() < 1e-15);
    }

    #[test]
    fn at_rest_without_bias_stays_at_rest() {
        let e = EsjjParams { gamma: 0.0, ..reference() };
        let sol = solve_esjj(&EsjjProblem::at_rest(e, 1.0), UniformGrid::new(8, 10).unwrap(), SeriesControl::default())
            .unwrap();
        assert_eq!(sol.sup_norm(), 0.0);
    }
}
