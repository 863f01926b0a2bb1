//! Single Fourier mode of the operator.
//!
//! For a spatial frequency `omega` with `mu = omega^2`, the transform of the
//! kernel is the `(1,1)` entry of `exp(A t)` with
//! `A = [[-(eps mu + a), -b], [1, -beta]]`, i.e. the solution of
//! `k' = -(eps mu + a) k - b w`, `w' = -beta w + k`, `k(0) = 1`, `w(0) = 0`.
//! With `m = tr A / 2`, `c = (beta - eps mu - a) / 2` and `q^2 = c^2 - b`,
//!
//! ```text
//! k(t) = exp(m t) [cosh(q t) + c sinh(q t) / q]
//! ```
//!
//! which is stored as a sum of exponentials with coefficients written in
//! cancellation-free form.

use num_complex::Complex64;

use crate::kernel::OperatorParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ModeKernel {
    /// `cp exp(lp t) + cm exp(lm t)`.
    Real { lp: f64, lm: f64, cp: f64, cm: f64 },
    /// `Re[coef exp(lambda t)]`.
    Oscillating { lambda: Complex64, coef: Complex64 },
    /// `exp(m t) (1 + c t)`, the coalescent case `q = 0`.
    Degenerate { m: f64, c: f64 },
}

impl ModeKernel {
    pub fn new(mu: f64, p: &OperatorParams) -> Self {
        let d = p.eps * mu + p.a;
        let m = -0.5 * (d + p.beta);
        let c = 0.5 * (p.beta - d);
        let det = d * p.beta + p.b;
        let q2 = c * c - p.b;
        if q2.abs() <= 1e-13 * (c * c + p.b) {
            return ModeKernel::Degenerate { m, c };
        }
        if q2 > 0.0 {
            let q = q2.sqrt();
            let (cp, cm) = if c <= 0.0 {
                (-p.b / (2.0 * q * (q - c)), (q - c) / (2.0 * q))
            } else {
                ((q + c) / (2.0 * q), -p.b / (2.0 * q * (q + c)))
            };
            ModeKernel::Real { lp: -det / (q - m), lm: m - q, cp, cm }
        } else {
            let nu = (-q2).sqrt();
            ModeKernel::Oscillating {
                lambda: Complex64::new(m, nu),
                coef: Complex64::new(1.0, -c / nu),
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            ModeKernel::Real { lp, lm, cp, cm } => cp * (lp * t).exp() + cm * (lm * t).exp(),
            ModeKernel::Oscillating { lambda, coef } => (coef * (lambda * t).exp()).re,
            ModeKernel::Degenerate { m, c } => (m * t).exp() * (1.0 + c * t),
        }
    }

    /// Upper bound of `|k(t)|` from the moduli of the exponential terms.
    pub fn magnitude_bound(&self, t: f64) -> f64 {
        match *self {
            ModeKernel::Real { lp, lm, cp, cm } => cp.abs() * (lp * t).exp() + cm.abs() * (lm * t).exp(),
            ModeKernel::Oscillating { lambda, coef } => coef.norm() * (lambda.re * t).exp(),
            ModeKernel::Degenerate { m, c } => (m * t).exp() * (1.0 + c.abs() * t),
        }
    }

    /// `int_0^h k(s0 + sigma) (alpha + gamma sigma) d sigma`, in closed form.
    pub fn weighted_integral(&self, s0: f64, h: f64, alpha: f64, gamma: f64) -> f64 {
        let real_term = |lambda: f64, coef: f64| coef * exp_weighted(lambda, s0, h, alpha, gamma);
        match *self {
            ModeKernel::Real { lp, lm, cp, cm } => real_term(lp, cp) + real_term(lm, cm),
            ModeKernel::Oscillating { lambda, coef } => {
                let p = exp_moments(lambda * h);
                (coef * (lambda * s0).exp() * h * (p[0] * alpha + p[1] * (gamma * h))).re
            }
            ModeKernel::Degenerate { m, c } => {
                let p = exp_moments(Complex64::new(m * h, 0.0));
                let a0 = 1.0 + c * s0;
                (m * s0).exp()
                    * h
                    * (a0 * alpha * p[0].re + (a0 * gamma + c * alpha) * h * p[1].re + c * gamma * h * h * p[2].re)
            }
        }
    }
}

/// `int_0^h exp(lambda (s0 + sigma)) (alpha + gamma sigma) d sigma`.
pub(crate) fn exp_weighted(lambda: f64, s0: f64, h: f64, alpha: f64, gamma: f64) -> f64 {
    let p = exp_moments(Complex64::new(lambda * h, 0.0));
    (lambda * s0).exp() * h * (alpha * p[0].re + gamma * h * p[1].re)
}

/// `P_n(z) = int_0^1 v^n exp(z v) dv` for `n = 0, 1, 2`.
pub(crate) fn exp_moments(z: Complex64) -> [Complex64; 3] {
    if z.norm() < 1.0 {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (n, slot) in out.iter_mut().enumerate() {
            // sum_j z^j / (j! (n + j + 1))
            let mut term = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..30 {
                acc += term / (n + j + 1) as f64;
                term = term * z / (j + 1) as f64;
                if term.norm() < 1e-18 {
                    break;
                }
            }
            *slot = acc;
        }
        return out;
    }
    let ez = z.exp();
    let p0 = (ez - 1.0) / z;
    let p1 = (ez - p0) / z;
    let p2 = (ez - p1 * 2.0) / z;
    [p0, p1, p2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(b: f64) -> OperatorParams {
        OperatorParams::new(1.0, 0.5, b, 1.0).unwrap()
    }

    /// Classical RK4 on the 2x2 system as an independent oracle.
    fn rk4(mu: f64, p: &OperatorParams, t: f64) -> f64 {
        let n = 20000;
        let h = t / n as f64;
        let f = |k: f64, w: f64| (-(p.eps * mu + p.a) * k - p.b * w, -p.beta * w + k);
        let (mut k, mut w) = (1.0, 0.0);
        for _ in 0..n {
            let (a1, b1) = f(k, w);
            let (a2, b2) = f(k + 0.5 * h * a1, w + 0.5 * h * b1);
            let (a3, b3) = f(k + 0.5 * h * a2, w + 0.5 * h * b2);
            let (a4, b4) = f(k + h * a3, w + h * b3);
            k += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            w += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        k
    }

    #[test]
    fn all_branches_match_time_stepping() {
        // mu = 0 oscillates (c^2 < b), mu = 40 is real, mu tuned is coalescent
        let p = params(0.5);
        for &mu in &[0.0, 0.3, 40.0, 1e4] {
            let m = ModeKernel::new(mu, &p);
            for &t in &[0.1, 1.0, 3.0] {
                assert!((m.value(t) - rk4(mu, &p, t)).abs() < 1e-10, "mu={mu} t={t}");
            }
        }
        // c = -sqrt(b): eps mu + a - beta = 2 sqrt(b)
        let q = params(0.25);
        let mu = 2.0 * 0.5 + 0.5;
        assert!(matches!(ModeKernel::new(mu, &q), ModeKernel::Degenerate { .. }));
        assert!((ModeKernel::new(mu, &q).value(2.0) - rk4(mu, &q, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn no_memory_is_pure_decay() {
        let p = params(1e-300);
        let m = ModeKernel::new(9.0, &p);
        assert!((m.value(0.7) - (-(9.0 + 0.5) * 0.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn weighted_integral_matches_quadrature() {
        let p = params(0.5);
        for &mu in &[0.0, 2.0, 500.0] {
            let m = ModeKernel::new(mu, &p);
            let (s0, h, al, ga) = (0.3, 0.2, 0.7, -2.0);
            let (x, w) = crate::quadrature::gauss_legendre(20);
            let direct: f64 = x
                .iter()
                .zip(&w)
                .map(|(&xi, &wi)| {
                    let sig = 0.5 * h * (xi + 1.0);
                    0.5 * h * wi * m.value(s0 + sig) * (al + ga * sig)
                })
                .sum();
            assert!((m.weighted_integral(s0, h, al, ga) - direct).abs() < 1e-14, "mu={mu}");
        }
    }

    #[test]
    fn exp_moments_continuous_across_switch() {
        for &z in &[0.999, 1.001] {
            let zc = Complex64::new(-z, 0.0);
            let p = exp_moments(zc);
            let exact0 = (1.0 - (-z).exp()) / z;
            assert!((p[0].re - exact0).abs() < 1e-15);
            assert!((p[2].re - (2.0 - (-z).exp() * (z * z + 2.0 * z + 2.0)) / (z * z * z)).abs() < 1e-14);
        }
    }
}
