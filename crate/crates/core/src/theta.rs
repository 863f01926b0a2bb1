//! Image series on the strip `0 <= x <= L`.
//!
//! `theta(x, t) = sum_n K(x + 2nL, t)` is the periodised kernel, `theta_x`
//! its x-derivative (odd in `x`), and
//! `G(x, xi, t) = theta(|x - xi|, t) - theta(x + xi, t)` the Dirichlet Green
//! function of the strip. The series is truncated at `|n| <= N` and the tail
//! is bounded through the Gaussian factor of the kernel envelope.

use std::f64::consts::{E, PI};

use crate::error::{require_finite, Error, Result};
use crate::kernel::{self, OperatorParams, SeriesControl, J1_MAX};
use crate::modes::ModeKernel;
use crate::quadrature;

/// Largest image index any automatic truncation will try.
const MAX_IMAGES: usize = 100_000;

/// The strip `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripDomain {
    pub length: f64,
}

impl StripDomain {
    pub fn new(length: f64) -> Result<Self> {
        let d = StripDomain { length };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidParameter(format!("length = {} must be finite and > 0", self.length)));
        }
        Ok(())
    }
}

/// One term `K(center, t)` of the image series, `center = x + 2nL`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSeriesTerm {
    pub image_index: i64,
    pub center: f64,
}

/// Terms with `|n| <= n_images`, ordered by `|center|` (ties by `center`) so
/// that sums are bit-identical under `x -> -x`.
pub fn image_terms(x: f64, d: &StripDomain, n_images: usize) -> Vec<ThetaSeriesTerm> {
    let n = n_images as i64;
    let mut terms: Vec<ThetaSeriesTerm> = (-n..=n)
        .map(|k| ThetaSeriesTerm { image_index: k, center: x + 2.0 * k as f64 * d.length })
        .collect();
    terms.sort_by(|a, b| a.center.abs().total_cmp(&b.center.abs()).then(a.center.total_cmp(&b.center)));
    terms
}

/// Bound on `|K(z, t)|` (or `|K_x(z, t)|` when `derivative`).
fn term_bound(z: f64, t: f64, p: &OperatorParams, derivative: bool) -> f64 {
    let g = (-z * z / (4.0 * p.eps * t)).exp();
    if !derivative {
        return g * kernel::kernel_envelope(p, t);
    }
    let pre = p.prefactor();
    let heat = z.abs() / (2.0 * p.eps * t) * g * (-p.a * t).exp() / t.sqrt();
    // sup over 0 < y <= t of (|z| / 2 eps y) exp(-z^2 / 4 eps y)
    let gmax = if z * z >= 4.0 * p.eps * t {
        z.abs() / (2.0 * p.eps * t) * g
    } else {
        2.0 / (E * z.abs())
    };
    let memory = p.b.sqrt() * J1_MAX * 2.0 * t.sqrt() * (-p.omega() * t).exp() * gmax;
    pre * (heat + memory)
}

/// Bound on the sum of the dropped terms `|n| > n_images`.
pub fn truncation_tail(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, n_images: usize, derivative: bool) -> f64 {
    let mut total = 0.0;
    for sign in [-1.0, 1.0] {
        let mut n = n_images as f64 + 1.0;
        loop {
            let z = x + sign * 2.0 * n * d.length;
            let b = term_bound(z, t, p, derivative);
            total += b;
            // terms decay faster than geometrically once z^2 > 4 eps t
            if z.abs() > 2.0 * (p.eps * t).sqrt() && b <= 1e-20 * total.max(1e-300) {
                break;
            }
            if b == 0.0 && z.abs() > 2.0 * (p.eps * t).sqrt() {
                break;
            }
            n += 1.0;
            if n > (n_images + MAX_IMAGES) as f64 {
                return f64::INFINITY;
            }
        }
    }
    total
}

/// Smallest truncation order whose tail bound at `(x, t)` is below `tol`.
pub fn required_images(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, tol: f64, derivative: bool) -> Result<usize> {
    let mut n = 0usize;
    while truncation_tail(x, t, p, d, n, derivative) > tol {
        n = if n == 0 { 1 } else { 2 * n };
        if n > MAX_IMAGES {
            return Err(Error::InsufficientTruncation {
                n_images: n,
                tail: truncation_tail(x, t, p, d, n, derivative),
                tol,
            });
        }
    }
    // bisect down to the smallest sufficient order
    let (mut lo, mut hi) = (n / 2, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if truncation_tail(x, t, p, d, mid, derivative) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if truncation_tail(x, t, p, d, lo, derivative) <= tol { lo } else { hi })
}

fn check_theta_inputs(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, c: &SeriesControl) -> Result<()> {
    p.validate()?;
    d.validate()?;
    c.validate()?;
    require_finite("x", x)?;
    c.check_time(t)?;
    if x.abs() > 2.0 * d.length * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("|x| = {} exceeds 2L = {}", x.abs(), 2.0 * d.length)));
    }
    Ok(())
}

fn check_tail(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, c: &SeriesControl, derivative: bool) -> Result<()> {
    let tail = truncation_tail(x, t, p, d, c.n_images, derivative);
    if tail > c.quad_tol {
        return Err(Error::InsufficientTruncation { n_images: c.n_images, tail, tol: c.quad_tol });
    }
    Ok(())
}

/// Weighted image sum `sum_i w_i K(z_i, t)` (or of `K_x`) without checks.
pub(crate) fn image_sum(centres: &[(f64, f64)], t: f64, p: &OperatorParams, derivative: bool, tol: f64) -> Result<f64> {
    let heat: f64 = if derivative {
        centres.iter().map(|&(z, w)| w * kernel::heat_dx(p, z, t)).sum()
    } else {
        centres.iter().map(|&(z, w)| w * kernel::heat(p, z, t)).sum()
    };
    let mem = kernel::memory_integral(p, t, centres, derivative, kernel::memory_tol(p, tol))?;
    let sign = if derivative { 1.0 } else { -1.0 };
    Ok(p.prefactor() * (heat + sign * p.b.sqrt() * mem))
}

fn theta_centres(x: f64, d: &StripDomain, n: usize, weight: f64) -> impl Iterator<Item = (f64, f64)> {
    image_terms(x, d, n).into_iter().map(move |term| (term.center, weight))
}

/// Theta with an explicit truncation order and no checks.
pub(crate) fn theta_with(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, n: usize, tol: f64) -> Result<f64> {
    let centres: Vec<_> = theta_centres(x, d, n, 1.0).collect();
    image_sum(&centres, t, p, false, tol)
}

pub(crate) fn theta_x_with(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, n: usize, tol: f64) -> Result<f64> {
    let centres: Vec<_> = theta_centres(x, d, n, 1.0).collect();
    image_sum(&centres, t, p, true, tol)
}

/// `theta_x` with the truncation order raised until the tail meets `tol`.
pub(crate) fn theta_x_auto(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, n_min: usize, tol: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let n = required_images(x, t, p, d, 0.1 * tol, true)?.max(n_min);
    theta_x_with(x, t, p, d, n, 0.9 * tol)
}

/// Periodised kernel `sum_{|n| <= N} K(x + 2nL, t)`; even in `x`.
pub fn theta(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, c: &SeriesControl) -> Result<f64> {
    check_theta_inputs(x, t, p, d, c)?;
    check_tail(x, t, p, d, c, false)?;
    theta_with(x, t, p, d, c.n_images, c.quad_tol)
}

/// Term-wise x-derivative of [`theta`]; odd in `x`.
pub fn theta_x(x: f64, t: f64, p: &OperatorParams, d: &StripDomain, c: &SeriesControl) -> Result<f64> {
    check_theta_inputs(x, t, p, d, c)?;
    check_tail(x, t, p, d, c, true)?;
    theta_x_with(x, t, p, d, c.n_images, c.quad_tol)
}

/// Dirichlet Green function `theta(|x - xi|, t) - theta(x + xi, t)`.
///
/// Both image families enter a single memory integral, so the cancellation at
/// `x = 0` and `x = L` happens in the integrand.
pub fn green(x: f64, xi: f64, t: f64, p: &OperatorParams, d: &StripDomain, c: &SeriesControl) -> Result<f64> {
    for (name, v) in [("x", x), ("xi", xi)] {
        require_finite(name, v)?;
        if !(0.0..=d.length).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} outside [0, {}]", d.length)));
        }
    }
    check_theta_inputs(x + xi, t, p, d, c)?;
    check_tail((x - xi).abs(), t, p, d, c, false)?;
    check_tail(x + xi, t, p, d, c, false)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let centres: Vec<(f64, f64)> = theta_centres((x - xi).abs(), d, c.n_images, 1.0)
        .chain(theta_centres(x + xi, d, c.n_images, -1.0))
        .collect();
    image_sum(&centres, t, p, false, c.quad_tol)
}

/// Eigenfunction expansion `(2/L) sum_n sin(n pi x/L) sin(n pi xi/L) k_n(t)`,
/// an independent representation of [`green`]. Fails when the bound on the
/// dropped modes exceeds `tol`.
pub fn eigen_green(
    x: f64,
    xi: f64,
    t: f64,
    p: &OperatorParams,
    d: &StripDomain,
    modes: usize,
    tol: f64,
) -> Result<f64> {
    p.validate()?;
    d.validate()?;
    for (name, v) in [("x", x), ("xi", xi), ("t", t)] {
        require_finite(name, v)?;
    }
    if t <= 0.0 {
        return Err(Error::Domain(format!("t = {t} must be > 0")));
    }
    if modes == 0 {
        return Err(Error::InvalidParameter("modes must be >= 1".into()));
    }
    let tail = mode_tail(t, p, d, modes);
    if tail > tol {
        return Err(Error::InsufficientModes { modes, tail, tol });
    }
    let l = d.length;
    let mut sum = 0.0;
    for n in 1..=modes {
        let w = n as f64 * PI / l;
        let k = ModeKernel::new(w * w, p).value(t);
        sum += (w * x).sin() * (w * xi).sin() * k;
    }
    Ok(2.0 / l * sum)
}

/// Bound on `(2/L) sum_{n > modes} |k_n(t)|`.
fn mode_tail(t: f64, p: &OperatorParams, d: &StripDomain, modes: usize) -> f64 {
    let l = d.length;
    let mu = |n: usize| (n as f64 * PI / l).powi(2);
    // explicit moduli up to n2, then the asymptotic form
    // |k_n| <= 2 exp(-eps mu t) + 2 b / (eps mu)^2, valid once eps mu >> a + beta + sqrt(b)
    let mut n2 = 8 * modes;
    while p.eps * mu(n2) < 4.0 * (p.a + p.beta + p.b.sqrt()) {
        n2 *= 2;
    }
    let mut total: f64 = (modes + 1..=n2).map(|n| ModeKernel::new(mu(n), p).magnitude_bound(t)).sum();
    let kappa = p.eps * PI * PI * t / (l * l);
    let nf = n2 as f64;
    total += 2.0 * (-kappa * nf * nf).exp() / (2.0 * kappa * nf);
    total += 2.0 * p.b * l.powi(4) / (p.eps * p.eps * PI.powi(4)) / (3.0 * nf.powi(3));
    2.0 / l * total
}

/// `lim_{t -> inf} int_0^t theta_x(x, tau) d tau = sinh(sigma0 (x - L)) / (2 eps sinh(sigma0 L))`.
pub fn steady_boundary_kernel(x: f64, p: &OperatorParams, d: &StripDomain) -> Result<f64> {
    p.validate()?;
    d.validate()?;
    require_finite("x", x)?;
    if !(0.0..=d.length).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", d.length)));
    }
    Ok(-sinh_ratio(p.sigma0(), d.length - x, d.length) / (2.0 * p.eps))
}

/// `sinh(s y) / sinh(s l)` for `0 <= y <= l`, without overflow.
pub(crate) fn sinh_ratio(s: f64, y: f64, l: f64) -> f64 {
    if s * l < 1e-8 {
        return y / l;
    }
    ((-s * (l - y)).exp() - (-s * (l + y)).exp()) / (1.0 - (-2.0 * s * l).exp())
}

/// `int_0^T theta_x(x, tau) d tau` and `int_0^T |theta_x(x, tau)| d tau` for
/// `0 < x < L`, with the image truncation raised as `tau` grows.
pub fn theta_x_time_integrals(
    x: f64,
    horizon: f64,
    p: &OperatorParams,
    d: &StripDomain,
    c: &SeriesControl,
) -> Result<(f64, f64)> {
    p.validate()?;
    d.validate()?;
    c.validate()?;
    require_finite("horizon", horizon)?;
    if !(x > 0.0 && x < d.length) {
        return Err(Error::Domain(format!("x = {x} must lie strictly inside (0, {})", d.length)));
    }
    // the integrand peaks near tau = x^2/(6 eps) and (L-x)^2/(6 eps)
    let mut breaks = vec![];
    for z in [x, d.length - x] {
        let peak = z * z / (6.0 * p.eps);
        for f in [0.25, 1.0, 4.0, 16.0] {
            breaks.push(f * peak);
        }
    }
    let mut tk = 1.0;
    while tk < horizon {
        breaks.push(tk);
        tk *= 2.0;
    }
    breaks.sort_by(f64::total_cmp);
    let inner = 0.01 * c.quad_tol / horizon.max(1.0);
    let mut failure = None;
    let mut eval = |tau: f64| match theta_x_auto(x, tau, p, d, c.n_images, inner) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let signed = quadrature::integrate(&mut eval, 0.0, horizon, &breaks, c.quad_tol)?;
    let absolute = quadrature::integrate(|tau| eval(tau).abs(), 0.0, horizon, &breaks, c.quad_tol)?;
    match failure {
        Some(e) => Err(e),
        None => Ok((signed, absolute)),
    }
}

/// A function of time with a finite limit at infinity.
pub struct LimitedFunction<'a> {
    pub eval: &'a dyn Fn(f64) -> f64,
    pub limit: f64,
}

/// Numerical and predicted values of a convolution limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionLimit {
    /// `int_0^T chi(T - tau) h'(tau) d tau` at `T = horizon`.
    pub numeric: f64,
    /// `chi(inf) (h(inf) - h(0))`.
    pub predicted: f64,
}

/// Evaluate `int_0^T chi(T - tau) h'(tau) d tau` and the limit
/// `chi(inf) [h(inf) - h(0)]` it tends to. Both functions must have settled
/// within `1e-6` of their limits at the horizon.
pub fn convolution_limit(
    chi: &LimitedFunction,
    h: &LimitedFunction,
    h_dot: &dyn Fn(f64) -> f64,
    horizon: f64,
    tol: f64,
) -> Result<ConvolutionLimit> {
    require_finite("horizon", horizon)?;
    if horizon <= 0.0 {
        return Err(Error::Domain(format!("horizon = {horizon} must be > 0")));
    }
    for (name, f) in [("chi", chi), ("h", h)] {
        let v = (f.eval)(horizon);
        if !v.is_finite() || (v - f.limit).abs() > 1e-6 {
            return Err(Error::NonConvergence(format!(
                "{name}({horizon}) = {v} is not within 1e-6 of its limit {}",
                f.limit
            )));
        }
    }
    let mut breaks = vec![];
    let mut tk = 0.125;
    while tk < horizon {
        breaks.push(tk);
        breaks.push(horizon - tk);
        tk *= 2.0;
    }
    breaks.sort_by(f64::total_cmp);
    let numeric = quadrature::integrate(|tau| (chi.eval)(horizon - tau) * h_dot(tau), 0.0, horizon, &breaks, tol)?;
    if !numeric.is_finite() {
        return Err(Error::NumericalFailure { x: f64::NAN, t: horizon, reason: "non-finite convolution".into() });
    }
    Ok(ConvolutionLimit { numeric, predicted: chi.limit * (h.limit - (h.eval)(0.0)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{eval_k, eval_kx};
    use proptest::prelude::*;

    fn reference() -> (OperatorParams, StripDomain, SeriesControl) {
        (
            OperatorParams::new(1.0, 0.5, 0.5, 1.0).unwrap(),
            StripDomain::new(1.0).unwrap(),
            SeriesControl::default(),
        )
    }

    #[test]
    fn image_terms_are_symmetric() {
        let d = StripDomain::new(1.0).unwrap();
        let t = image_terms(0.3, &d, 2);
        assert_eq!(t.len(), 5);
        assert_eq!(t[0].image_index, 0);
        assert!(t.windows(2).all(|w| w[0].center.abs() <= w[1].center.abs()));
    }

    #[test]
    fn parity() {
        let (p, d, c) = reference();
        for &x in &[0.1, 0.7, 1.3, 1.9] {
            for &t in &[0.01, 0.5, 3.0] {
                assert_eq!(theta(x, t, &p, &d, &c).unwrap(), theta(-x, t, &p, &d, &c).unwrap());
                assert_eq!(theta_x(x, t, &p, &d, &c).unwrap(), -theta_x(-x, t, &p, &d, &c).unwrap());
            }
        }
    }

    #[test]
    fn zero_images_is_the_bare_kernel() {
        let (p, d, _) = reference();
        let c = SeriesControl { n_images: 0, ..SeriesControl::default() };
        let t = 0.01;
        let th = theta(0.4, t, &p, &d, &c).unwrap();
        assert!((th - eval_k(0.4, t, &p, &c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn truncation_self_convergence() {
        let (p, d, _) = reference();
        let c8 = SeriesControl { n_images: 8, ..SeriesControl::default() };
        let c16 = SeriesControl::default();
        let diff = theta(0.3, 0.5, &p, &d, &c8).unwrap() - theta(0.3, 0.5, &p, &d, &c16).unwrap();
        assert!(diff.abs() < 1e-10);
    }

    #[test]
    fn insufficient_truncation_is_reported() {
        let (p, d, _) = reference();
        let c = SeriesControl { n_images: 1, ..SeriesControl::default() };
        assert!(matches!(theta(0.3, 5.0, &p, &d, &c), Err(Error::InsufficientTruncation { .. })));
        let n = required_images(0.3, 5.0, &p, &d, 1e-10, false).unwrap();
        let c = SeriesControl { n_images: n, ..c };
        assert!(theta(0.3, 5.0, &p, &d, &c).is_ok());
    }

    #[test]
    fn theta_x_near_origin_is_the_kernel_derivative() {
        let (p, d, c) = reference();
        let t = 0.3;
        let mut last = f64::INFINITY;
        for &x in &[1e-1, 1e-2, 1e-3] {
            let j = (theta_x(x, t, &p, &d, &c).unwrap() - eval_kx(x, t, &p, &c).unwrap()).abs();
            assert!(j < last);
            last = j;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn theta_x_decays() {
        let (p, d, _) = reference();
        let n = required_images(0.5, 50.0, &p, &d, 1e-12, true).unwrap();
        let c = SeriesControl { n_images: n, ..SeriesControl::default() };
        assert!(theta_x(0.5, 50.0, &p, &d, &c).unwrap().abs() < 1e-8);
    }

    #[test]
    fn green_dirichlet_and_symmetry() {
        let (p, d, c) = reference();
        for &t in &[0.05, 0.5, 2.0] {
            for k in 1..8 {
                let xi = k as f64 / 8.0;
                assert!(green(0.0, xi, t, &p, &d, &c).unwrap().abs() < 1e-12);
                assert!(green(1.0, xi, t, &p, &d, &c).unwrap().abs() < 1e-12);
                let x = 0.3;
                let g1 = green(x, xi, t, &p, &d, &c).unwrap();
                let g2 = green(xi, x, t, &p, &d, &c).unwrap();
                assert!((g1 - g2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn green_matches_eigen_expansion() {
        let (p, d, c) = reference();
        for &t in &[0.05, 0.4, 2.0] {
            for &(x, xi) in &[(0.25, 0.5), (0.1, 0.9), (0.6, 0.6)] {
                let g = green(x, xi, t, &p, &d, &c).unwrap();
                let e = eigen_green(x, xi, t, &p, &d, 200, 1e-9).unwrap();
                assert!((g - e).abs() < 1e-8, "t={t} x={x} xi={xi}: {g} vs {e}");
            }
        }
    }

    #[test]
    fn eigen_green_without_memory_and_mode_check() {
        let p = OperatorParams::new(1.0, 0.5, 1e-300, 1.0).unwrap();
        let d = StripDomain::new(1.0).unwrap();
        let t = 0.2;
        let (x, xi) = (0.3, 0.55);
        let manual: f64 = (1..=60)
            .map(|n| {
                let w = n as f64 * PI;
                2.0 * (w * x).sin() * (w * xi).sin() * (-(w * w + 0.5) * t).exp()
            })
            .sum();
        assert!((eigen_green(x, xi, t, &p, &d, 60, 1e-12).unwrap() - manual).abs() < 1e-14);
        let (q, _, _) = reference();
        assert!(matches!(
            eigen_green(x, xi, 1e-4, &q, &d, 5, 1e-8),
            Err(Error::InsufficientModes { .. })
        ));
    }

    #[test]
    fn eigen_green_orthogonality() {
        // int_0^L G(x, xi) sin(pi xi) d xi = k_1(t) sin(pi x)
        let (p, d, _) = reference();
        let t = 0.3;
        let x = 0.35;
        let (nodes, weights) = quadrature::gauss_legendre(64);
        let integral: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&u, &w)| {
                let xi = 0.5 * (u + 1.0);
                0.5 * w * eigen_green(x, xi, t, &p, &d, 40, 1e-6).unwrap() * (PI * xi).sin()
            })
            .sum();
        let k1 = ModeKernel::new(PI * PI, &p).value(t);
        assert!((integral - k1 * (PI * x).sin()).abs() < 1e-12);
    }

    #[test]
    fn steady_kernel_values() {
        let (p, d, _) = reference();
        assert_eq!(steady_boundary_kernel(1.0, &p, &d).unwrap(), 0.0);
        assert!((steady_boundary_kernel(0.0, &p, &d).unwrap() + 0.5).abs() < 1e-15);
        assert!((steady_boundary_kernel(0.5, &p, &d).unwrap() + 0.2217047209925185).abs() < 1e-15);
    }

    #[test]
    fn time_integral_approaches_steady_kernel() {
        let (p, d, c) = reference();
        let (signed, absolute) = theta_x_time_integrals(0.5, 50.0, &p, &d, &c).unwrap();
        let steady = steady_boundary_kernel(0.5, &p, &d).unwrap();
        assert!((signed - steady).abs() < 1e-5, "{signed} vs {steady}");
        assert!(absolute >= signed.abs());
    }

    #[test]
    fn convolution_limit_examples() {
        let one = |_t: f64| 1.0;
        let h = |t: f64| 1.0 - (-t).exp();
        let hd = |t: f64| (-t).exp();
        let chi = LimitedFunction { eval: &one, limit: 1.0 };
        let hf = LimitedFunction { eval: &h, limit: 1.0 };
        let r = convolution_limit(&chi, &hf, &hd, 40.0, 1e-12).unwrap();
        assert!((r.numeric - 1.0).abs() < 1e-12 && r.predicted == 1.0);

        let chi2 = |t: f64| 1.0 + (-2.0 * t).exp();
        let r = convolution_limit(&LimitedFunction { eval: &chi2, limit: 1.0 }, &hf, &hd, 40.0, 1e-12).unwrap();
        assert!((r.numeric - r.predicted).abs() < 1e-6);

        let decay = |t: f64| (-t).exp();
        let r = convolution_limit(&LimitedFunction { eval: &decay, limit: 0.0 }, &hf, &hd, 40.0, 1e-12).unwrap();
        assert!(r.numeric.abs() < 1e-6 && r.predicted == 0.0);

        let slow = |t: f64| 1.0 - (-0.01 * t).exp();
        assert!(matches!(
            convolution_limit(&LimitedFunction { eval: &slow, limit: 1.0 }, &hf, &hd, 40.0, 1e-12),
            Err(Error::NonConvergence(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn theta_even(x in 0.0f64..2.0, t in 0.01f64..2.0) {
            let (p, d, c) = reference();
            prop_assert_eq!(theta(x, t, &p, &d, &c).unwrap(), theta(-x, t, &p, &d, &c).unwrap());
        }
    }
}
