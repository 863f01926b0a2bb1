//! Fundamental solution of the memory operator
//! `u_t - eps u_xx + a u + b int_0^t exp(-beta (t - tau)) u(x, tau) d tau`.
//!
//! With `r = |x| / sqrt(eps)` the kernel is
//!
//! ```text
//! K(r,t) = 1/(2 sqrt(pi eps)) [ exp(-r^2/4t - a t)/sqrt(t)
//!          - sqrt(b) int_0^t exp(-r^2/4y - a y - beta (t-y)) J1(2 sqrt(b y (t-y))) / sqrt(t-y) dy ]
//! ```
//!
//! The memory integral is evaluated after the substitution `y = t sin^2(phi)`,
//! which removes both the `1/sqrt(t-y)` singularity at `y = t` and the
//! `sqrt(y)` behaviour of the Bessel factor at `y = 0`:
//!
//! ```text
//! int_0^t (...) dy = int_0^{pi/2} 2 sqrt(t) sin(phi) exp(-x^2/(4 eps y) - a y - beta (t-y)) J1(sqrt(b) t sin(2 phi)) d phi
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{require_finite, Error, Result};
use crate::quadrature;
use crate::special::j1;

/// Upper bound of `|J1|` on the real line.
pub(crate) const J1_MAX: f64 = 0.581_865_2;

/// Constants of the operator: diffusion `eps`, damping `a`, memory strength
/// `b` and memory decay rate `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

impl OperatorParams {
    pub fn new(eps: f64, a: f64, b: f64, beta: f64) -> Result<Self> {
        let p = OperatorParams { eps, a, b, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("a", self.a), ("b", self.b), ("beta", self.beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and > 0")));
            }
        }
        Ok(())
    }

    /// `omega = min(a, beta)`, the decay rate of the kernel estimates.
    pub fn omega(&self) -> f64 {
        self.a.min(self.beta)
    }

    /// `sigma_0 = sqrt((a + b/beta) / eps)`, the steady-state decay rate.
    pub fn sigma0(&self) -> f64 {
        ((self.a + self.b / self.beta) / self.eps).sqrt()
    }

    /// `beta_1 = 1 / (a beta)`.
    pub fn beta1(&self) -> f64 {
        1.0 / (self.a * self.beta)
    }

    /// Abscissa of absolute convergence of the Laplace transform.
    pub fn laplace_abscissa(&self) -> f64 {
        (-self.a).max(-self.beta)
    }

    /// Positive root of `sigma^2 = s + a + b/(s + beta)`.
    pub fn laplace_sigma(&self, s: f64) -> f64 {
        (s + self.a + self.b / (s + self.beta)).sqrt()
    }

    pub(crate) fn prefactor(&self) -> f64 {
        0.5 / (PI * self.eps).sqrt()
    }
}

/// Truncation orders and tolerances shared by every series and quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Target absolute error of each quadrature.
    pub quad_tol: f64,
    /// Image-series truncation: terms with `|n| <= n_images` are summed.
    pub n_images: usize,
    /// Smallest time at which pointwise kernels are evaluated.
    pub t_floor: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl { quad_tol: 1e-10, n_images: 16, t_floor: 1e-6 }
    }
}

impl SeriesControl {
    pub fn new(quad_tol: f64, n_images: usize, t_floor: f64) -> Result<Self> {
        let c = SeriesControl { quad_tol, n_images, t_floor };
        c.validate()?;
        Ok(c)
    }

    /// `n_images = 0` is accepted and means the bare kernel without images.
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_tol > 0.0 && self.quad_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quad_tol = {} must lie in (0, 1)",
                self.quad_tol
            )));
        }
        if !(self.t_floor.is_finite() && self.t_floor > 0.0) {
            return Err(Error::InvalidParameter(format!("t_floor = {} must be > 0", self.t_floor)));
        }
        Ok(())
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        require_finite("t", t)?;
        if t < self.t_floor {
            return Err(Error::EvaluationWindow { t, t_floor: self.t_floor });
        }
        Ok(())
    }
}

/// Integrand of the memory term in the `phi` variable, without the Gaussian
/// factor. Returns `(y, weight)`.
#[inline]
pub(crate) fn memory_factor(p: &OperatorParams, t: f64, phi: f64) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    let y = t * s * s;
    let w = 2.0 * t.sqrt() * s * (-p.a * y - p.beta * t * c * c).exp() * j1(p.b.sqrt() * t * 2.0 * s * c);
    (y, w)
}

#[inline]
pub(crate) fn gaussian(z: f64, eps: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    (-z * z / (4.0 * eps * y)).exp()
}

#[inline]
pub(crate) fn gaussian_dx(z: f64, eps: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    z / (2.0 * eps * y) * (-z * z / (4.0 * eps * y)).exp()
}

/// Breakpoint in `phi` near which `exp(-z^2/(4 eps t sin^2 phi))` switches on.
pub(crate) fn phi_breaks(centres: &[(f64, f64)], eps: f64, t: f64) -> Vec<f64> {
    let mut out: Vec<f64> = centres
        .iter()
        .filter_map(|&(z, _)| {
            let s = z.abs() / (2.0 * (eps * t).sqrt());
            (s > 0.0 && s < 1.0).then(|| s.asin())
        })
        .collect();
    out.push(FRAC_PI_2 / 2.0);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Heat part `exp(-z^2/(4 eps t) - a t) / sqrt(t)` (without prefactor).
#[inline]
pub(crate) fn heat(p: &OperatorParams, z: f64, t: f64) -> f64 {
    (-z * z / (4.0 * p.eps * t) - p.a * t).exp() / t.sqrt()
}

/// `d/dz` of [`heat`].
#[inline]
pub(crate) fn heat_dx(p: &OperatorParams, z: f64, t: f64) -> f64 {
    -z / (2.0 * p.eps * t) * heat(p, z, t)
}

/// Memory integral `int_0^{pi/2} w(phi) sum_i c_i G(z_i, y(phi)) d phi` over
/// weighted centres `(z_i, c_i)`, where `G` is the Gaussian or its
/// x-derivative.
pub(crate) fn memory_integral(
    p: &OperatorParams,
    t: f64,
    centres: &[(f64, f64)],
    derivative: bool,
    tol: f64,
) -> Result<f64> {
    let breaks = phi_breaks(centres, p.eps, t);
    quadrature::integrate(
        |phi| {
            let (y, w) = memory_factor(p, t, phi);
            if w == 0.0 {
                return 0.0;
            }
            let g: f64 = if derivative {
                centres.iter().map(|&(z, c)| c * gaussian_dx(z, p.eps, y)).sum()
            } else {
                centres.iter().map(|&(z, c)| c * gaussian(z, p.eps, y)).sum()
            };
            w * g
        },
        0.0,
        FRAC_PI_2,
        &breaks,
        tol,
    )
}

/// Tolerance on the raw memory integral that yields `tol` on the kernel.
pub(crate) fn memory_tol(p: &OperatorParams, tol: f64) -> f64 {
    tol / (p.prefactor() * p.b.sqrt())
}

/// Kernel value without the time-floor check (internal use by nested
/// quadratures whose integration variable reaches down to zero).
pub(crate) fn k_unchecked(x: f64, t: f64, p: &OperatorParams, tol: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let h = heat(p, x, t);
    let m = memory_integral(p, t, &[(x, 1.0)], false, memory_tol(p, tol))?;
    Ok(p.prefactor() * (h - p.b.sqrt() * m))
}

pub(crate) fn kx_unchecked(x: f64, t: f64, p: &OperatorParams, tol: f64) -> Result<f64> {
    if t <= 0.0 || x == 0.0 {
        return Ok(0.0);
    }
    let h = heat_dx(p, x, t);
    let m = memory_integral(p, t, &[(x, 1.0)], true, memory_tol(p, tol))?;
    // d/dx of -sqrt(b) int G = +sqrt(b) int (x / 2 eps y) G
    Ok(p.prefactor() * (h + p.b.sqrt() * m))
}

fn check_inputs(x: f64, t: f64, p: &OperatorParams, c: &SeriesControl) -> Result<()> {
    p.validate()?;
    c.validate()?;
    require_finite("x", x)?;
    c.check_time(t)
}

/// Fundamental solution `K(x, t)`.
pub fn eval_k(x: f64, t: f64, p: &OperatorParams, c: &SeriesControl) -> Result<f64> {
    check_inputs(x, t, p, c)?;
    k_unchecked(x, t, p, c.quad_tol)
}

/// `dK/dx`, by differentiation under the integral sign.
pub fn eval_kx(x: f64, t: f64, p: &OperatorParams, c: &SeriesControl) -> Result<f64> {
    check_inputs(x, t, p, c)?;
    kx_unchecked(x, t, p, c.quad_tol)
}

/// `K_1(x, t) = int_0^t exp(-beta (t - tau)) K(x, tau) d tau`.
pub fn eval_k1(x: f64, t: f64, p: &OperatorParams, c: &SeriesControl) -> Result<f64> {
    check_inputs(x, t, p, c)?;
    let inner_tol = 0.1 * c.quad_tol / t.max(1.0);
    let mut failure = None;
    // tau = t v^2 tames the 1/sqrt(tau) of K at x = 0
    let v = quadrature::integrate(
        |v| {
            let tau = t * v * v;
            match k_unchecked(x, tau, p, inner_tol) {
                Ok(k) => 2.0 * t * v * (-p.beta * (t - tau)).exp() * k,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        &[],
        0.5 * c.quad_tol,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Pointwise envelope `A(t)` with `|K(z,t)| <= exp(-z^2/(4 eps t)) A(t)`.
pub(crate) fn kernel_envelope(p: &OperatorParams, t: f64) -> f64 {
    p.prefactor() * (-p.omega() * t).exp() * (1.0 / t.sqrt() + 2.0 * p.b.sqrt() * J1_MAX * t.sqrt())
}

/// Numerically evaluated Laplace transform next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCheck {
    pub numeric: f64,
    pub closed_form: f64,
    /// Truncation point of the time integral.
    pub horizon: f64,
}

/// Compare `int_0^inf exp(-s t) K(r, t) dt` with `exp(-r sigma) / (2 sqrt(eps) sigma)`.
/// `r` is the scaled distance `|x| / sqrt(eps)`.
pub fn laplace_check(r: f64, s: f64, p: &OperatorParams, c: &SeriesControl) -> Result<LaplaceCheck> {
    p.validate()?;
    c.validate()?;
    require_finite("r", r)?;
    require_finite("s", s)?;
    if r < 0.0 {
        return Err(Error::Domain(format!("r = {r} must be >= 0")));
    }
    let abscissa = p.laplace_abscissa();
    if s <= abscissa {
        return Err(Error::ConvergenceDomain { s, abscissa });
    }
    let sigma = p.laplace_sigma(s);
    let closed_form = (-r * sigma).exp() / (2.0 * p.eps.sqrt() * sigma);

    // tail: int_T^inf exp(-kappa t) A(t) dt with A <= C (1/sqrt(T) + sqrt(t))
    let kappa = s + p.omega();
    let c1 = p.prefactor();
    let c2 = p.prefactor() * 2.0 * p.b.sqrt() * J1_MAX;
    let tail = |big_t: f64| {
        (-kappa * big_t).exp()
            * (c1 / (big_t.sqrt() * kappa) + c2 * (big_t.sqrt() / kappa + 0.5 / (kappa * kappa * big_t.sqrt())))
    };
    let mut horizon: f64 = 1.0;
    while tail(horizon) > 0.1 * c.quad_tol {
        horizon *= 1.25;
        if horizon > 1e6 {
            return Err(Error::ConvergenceDomain { s, abscissa });
        }
    }
    let x = r * p.eps.sqrt();
    let vmax = horizon.sqrt();
    let inner_tol = 0.05 * c.quad_tol / horizon;
    let mut failure = None;
    let breaks: Vec<f64> = (1..8).map(|k| vmax * k as f64 / 8.0).collect();
    let numeric = quadrature::integrate(
        |v| {
            let t = v * v;
            match k_unchecked(x, t, p, inner_tol) {
                Ok(k) => 2.0 * v * (-s * t).exp() * k,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        vmax,
        &breaks,
        0.5 * c.quad_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(LaplaceCheck { numeric, closed_form, horizon })
}

/// `E(t) = (exp(-beta t) - exp(-a t)) / (a - beta)`, with the limit
/// `t exp(-a t)` when `a` and `beta` coincide.
pub fn e_of_t(t: f64, p: &OperatorParams) -> Result<f64> {
    require_finite("t", t)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("t = {t} must be >= 0")));
    }
    let d = p.beta - p.a;
    if d.abs() < 1e-12 {
        return Ok(t * (-p.a * t).exp());
    }
    Ok((-p.a * t).exp() * (-(-d * t).exp_m1()) / d)
}

/// Reusable quadrature for the memory integral at a fixed time `t`.
///
/// The panels are discovered once by an adaptive vector integration over a
/// ladder of probe centres spanning `0 .. 4 sqrt(eps t)`, so the frozen rule
/// resolves every Gaussian width the image sums produce. Each panel carries
/// the 15 Kronrod nodes.
#[derive(Debug, Clone)]
pub(crate) struct MemoryRule {
    /// `(y, w)` pairs: `int f(y(phi)) w(phi) d phi ~ sum w_q f(y_q)`.
    pub nodes: Vec<(f64, f64)>,
}

impl MemoryRule {
    pub fn build(p: &OperatorParams, t: f64, tol: f64) -> Result<Self> {
        let scale = (p.eps * t).sqrt();
        let mut probes: Vec<f64> = vec![0.0];
        for k in 0..=14 {
            probes.push(scale * 2f64.powi(-k));
        }
        probes.push(2.0 * scale);
        probes.push(4.0 * scale);
        let n = probes.len();
        let weighted: Vec<(f64, f64)> = probes.iter().map(|&z| (z, 1.0)).collect();
        let breaks = phi_breaks(&weighted, p.eps, t);
        let mtol = memory_tol(p, tol);
        let result = quadrature::integrate_vec(
            |phi, out: &mut [f64]| {
                let (y, w) = memory_factor(p, t, phi);
                for (i, &z) in probes.iter().enumerate() {
                    out[i] = w * gaussian(z, p.eps, y);
                    // derivative probes are scaled by sqrt(eps t) so both families
                    // share one absolute tolerance
                    out[n + i] = w * gaussian_dx(z, p.eps, y) * scale;
                }
            },
            2 * n,
            0.0,
            FRAC_PI_2,
            &breaks,
            mtol,
        )?;
        let mut nodes = Vec::with_capacity(result.panels.len() * 15);
        for (a, b) in result.panels {
            for (phi, wq) in quadrature::kronrod_nodes(a, b) {
                let (y, w) = memory_factor(p, t, phi);
                if w != 0.0 {
                    nodes.push((y, w * wq));
                }
            }
        }
        Ok(MemoryRule { nodes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> OperatorParams {
        OperatorParams::new(1.0, 0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn derived_constants() {
        let p = reference();
        assert_eq!(p.omega(), 0.5);
        assert_eq!(p.beta1(), 2.0);
        assert!((p.sigma0() - 1.0).abs() < 1e-15);
        // sigma^2 at s = 0 equals eps sigma0^2
        assert!((p.laplace_sigma(0.0).powi(2) - p.eps * p.sigma0().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_params() {
        assert!(OperatorParams::new(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(OperatorParams::new(1.0, 0.5, -1.0, 1.0).is_err());
        assert!(OperatorParams::new(f64::NAN, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn vanishing_memory_gives_damped_heat_kernel() {
        let p = OperatorParams::new(1.0, 0.5, 1e-14, 1.0).unwrap();
        let c = SeriesControl::default();
        let k = eval_k(0.0, 1.0, &p, &c).unwrap();
        let expected = (-0.5f64).exp() / (2.0 * PI.sqrt());
        assert!((k - expected).abs() < 1e-12, "{k} vs {expected}");
    }

    #[test]
    fn kernel_against_independent_quadrature() {
        // scipy QAGS on the original y-variable integral
        let p = reference();
        let c = SeriesControl::default();
        assert!((eval_k(1.0, 1.0, &p, &c).unwrap() - 0.10506304063452215).abs() < 1e-10);
        assert!((eval_k(0.3, 0.5, &p, &c).unwrap() - 0.276104711906493).abs() < 1e-10);
        assert!((eval_kx(1.0, 1.0, &p, &c).unwrap() + 0.04314072741366462).abs() < 1e-10);
        assert!((eval_kx(0.4, 2.0, &p, &c).unwrap() - 0.003893580528965505).abs() < 1e-10);
        assert!((eval_k1(0.5, 1.0, &p, &c).unwrap() - 0.14984530749200503).abs() < 1e-10);
    }

    #[test]
    fn kernel_is_even_and_derivative_odd() {
        let p = reference();
        let c = SeriesControl::default();
        for &(x, t) in &[(0.2, 0.1), (1.3, 2.0), (3.0, 7.5)] {
            assert_eq!(eval_k(x, t, &p, &c).unwrap(), eval_k(-x, t, &p, &c).unwrap());
            assert_eq!(eval_kx(x, t, &p, &c).unwrap(), -eval_kx(-x, t, &p, &c).unwrap());
        }
        assert_eq!(eval_kx(0.0, 1.0, &p, &c).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let p = reference();
        let c = SeriesControl { quad_tol: 1e-13, ..SeriesControl::default() };
        let (x, t) = (0.7, 0.8);
        let exact = eval_kx(x, t, &p, &c).unwrap();
        let mut errs = Vec::new();
        for h in [4e-3, 2e-3, 1e-3] {
            let fd = (eval_k(x + h, t, &p, &c).unwrap() - eval_k(x - h, t, &p, &c).unwrap()) / (2.0 * h);
            errs.push((fd - exact).abs());
        }
        assert!(errs[2] < 1e-7);
        // second order: halving h divides the error by about four
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn derivative_bound() {
        let p = reference();
        let c = SeriesControl::default();
        for &t in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let r = 1.0 / p.eps.sqrt();
            let bound = r * (-r * r / (4.0 * t)).exp() / (4.0 * (PI * p.eps * t.powi(3)).sqrt())
                * (1.0 + 4.0 * p.b * t * t)
                * (-p.omega() * t).exp();
            assert!(eval_kx(1.0, t, &p, &c).unwrap().abs() <= bound, "t = {t}");
        }
    }

    #[test]
    fn k1_vanishes_near_floor() {
        let p = reference();
        let c = SeriesControl::default();
        assert!(eval_k1(0.5, c.t_floor, &p, &c).unwrap().abs() < 1e-12);
        // on the diagonal K ~ 1/(2 sqrt(pi eps tau)), so K_1 ~ sqrt(t / (pi eps))
        let k1 = eval_k1(0.0, c.t_floor, &p, &c).unwrap();
        assert!((k1 - (c.t_floor / PI).sqrt()).abs() < 1e-8, "{k1}");
    }

    #[test]
    fn window_and_domain_errors() {
        let p = reference();
        let c = SeriesControl::default();
        assert!(matches!(eval_k(0.1, 1e-9, &p, &c), Err(Error::EvaluationWindow { .. })));
        assert!(matches!(eval_k(f64::NAN, 1.0, &p, &c), Err(Error::Domain(_))));
        assert!(matches!(
            laplace_check(1.0, -0.6, &p, &c),
            Err(Error::ConvergenceDomain { .. })
        ));
    }

    #[test]
    fn laplace_closed_form_values() {
        let p = reference();
        let c = SeriesControl::default();
        let l = laplace_check(1.0, 1.0, &p, &c).unwrap();
        let sigma = 1.75f64.sqrt();
        assert!((l.closed_form - (-sigma).exp() / (2.0 * sigma)).abs() < 1e-15);
        assert!((l.numeric - l.closed_form).abs() < 1e-6);
        let l0 = laplace_check(0.0, 2.0, &p, &c).unwrap();
        assert!((l0.closed_form - 1.0 / (2.0 * p.laplace_sigma(2.0))).abs() < 1e-15);
    }

    #[test]
    fn e_of_t_values() {
        let p = reference();
        assert_eq!(e_of_t(0.0, &p).unwrap(), 0.0);
        assert!((e_of_t(1.0, &p).unwrap() - 0.4773024370823822).abs() < 1e-15);
        let q = OperatorParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!((e_of_t(2.0, &q).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        // continuity across the degenerate branch
        let near = OperatorParams::new(1.0, 1.0 + 1e-9, 0.5, 1.0).unwrap();
        assert!((e_of_t(2.0, &near).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn memory_rule_matches_adaptive_evaluation() {
        let p = reference();
        for &t in &[1e-3, 0.05, 1.0, 4.0, 20.0] {
            let rule = MemoryRule::build(&p, t, 1e-12).unwrap();
            for &x in &[0.0, 1e-3, 0.03, 0.3, 1.0, 2.5] {
                let direct = memory_integral(&p, t, &[(x, 1.0)], false, memory_tol(&p, 1e-13)).unwrap();
                let frozen: f64 = rule.nodes.iter().map(|&(y, w)| w * gaussian(x, p.eps, y)).sum();
                assert!((direct - frozen).abs() < 1e-11, "t={t} x={x}: {direct} vs {frozen}");
            }
        }
    }
}
