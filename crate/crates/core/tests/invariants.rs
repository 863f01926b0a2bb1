use std::f64::consts::PI;
use std::sync::Arc;

use memkernel::esjj::{apriori_bound, initial_coefficient, map_params, to_dirichlet, EsjjParams, EsjjProblem};
use memkernel::fd::{solve_integrodiff_fd, FdGrid, FdScheme};
use memkernel::kernel::{e_of_t, eval_k, OperatorParams, SeriesControl};
use memkernel::solver::{
    solve_linear, solve_linear_with, solve_nonlinear_picard, DirichletProblem, Propagator, SourceSpec, UniformGrid,
};
use memkernel::theta::{green, theta_x_time_integrals, StripDomain};
use proptest::prelude::*;

fn reference() -> OperatorParams {
    OperatorParams { eps: 1.0, a: 0.5, b: 0.5, beta: 1.0 }
}

fn sup(row: ndarray::ArrayView1<f64>) -> f64 {
    row.iter().fold(0.0, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn history_kernel_is_positive(a in 0.05..3.0f64, beta in 0.05..3.0f64, t in 1e-3..40.0f64, same in any::<bool>()) {
        let beta = if same { a } else { beta };
        let p = OperatorParams::new(1.0, a, 0.5, beta).unwrap();
        prop_assert!(e_of_t(t, &p).unwrap() > 0.0);
    }

    #[test]
    fn green_vanishes_on_the_edges(xi in 0.0..1.0f64, t in 0.01..3.0f64, length in 0.5..2.0f64) {
        let d = StripDomain::new(length).unwrap();
        let c = SeriesControl::default();
        let xi = xi * length;
        prop_assert!(green(0.0, xi, t, &reference(), &d, &c).unwrap().abs() < 1e-12);
        prop_assert!(green(length, xi, t, &reference(), &d, &c).unwrap().abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_solve_is_linear(k in -2.0..2.0f64, amp in -1.0..1.0f64, g in -1.0..1.0f64, f in -1.0..1.0f64) {
        let grid = UniformGrid::new(8, 10).unwrap();
        let d = StripDomain::new(1.0).unwrap();
        let prop = Propagator::build(reference(), d, 0.5, grid, SeriesControl::default()).unwrap();
        let mut one = DirichletProblem::homogeneous(reference(), d, 0.5);
        one.u0 = Arc::new(move |x| amp * (PI * x).sin());
        one.g1 = Arc::new(move |t| g * t);
        let mut two = DirichletProblem::homogeneous(reference(), d, 0.5);
        two.g2 = Arc::new(|t| (2.0 * t).sin());
        two.source = SourceSpec::linear(Arc::new(move |x, t| f * x * (1.0 - t)));
        let mut both = DirichletProblem::homogeneous(reference(), d, 0.5);
        let (o, w) = (one.clone(), two.clone());
        both.u0 = Arc::new(move |x| k * (o.u0)(x) + (w.u0)(x));
        let (o, w) = (one.clone(), two.clone());
        both.g1 = Arc::new(move |t| k * (o.g1)(t) + (w.g1)(t));
        let (o, w) = (one.clone(), two.clone());
        both.g2 = Arc::new(move |t| k * (o.g2)(t) + (w.g2)(t));
        both.source = SourceSpec::linear(Arc::new(move |x, t| f * x * (1.0 - t)));
        let u1 = solve_linear_with(&one, &prop).unwrap();
        let u2 = solve_linear_with(&two, &prop).unwrap();
        let u = solve_linear_with(&both, &prop).unwrap();
        let combined = &u1.values * k + &u2.values;
        let gap = u.values.iter().zip(combined.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(gap < 1e-10, "gap {gap:e}");
    }

    #[test]
    fn random_junctions_respect_the_apriori_bound(
        eps in 0.5..2.0f64,
        shunt in 0.1..0.9f64,
        excess in 0.1..2.0f64,
        gamma in -0.5..0.5f64,
        c in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let alpha = shunt / eps;
        let b = (1.0 - alpha * eps) / (eps * eps);
        let e = EsjjParams { eps, alpha, lam: 2.0 * (b + excess).sqrt(), gamma, length: 1.0 };
        let p = map_params(&e).unwrap();
        let prob = EsjjProblem {
            u0: Arc::new(move |x| c[0] * (PI * x).sin()),
            v0: Arc::new(move |x| c[1] * (2.0 * PI * x).sin()),
            ..EsjjProblem::at_rest(e, 1.0)
        };
        let mapped = to_dirichlet(&prob).unwrap();
        let u = solve_nonlinear_picard(&mapped, UniformGrid::new(8, 20).unwrap(), SeriesControl::default(), 1e-10, 200)
            .unwrap();
        let n = 400;
        let on_grid = |f: &dyn Fn(f64) -> f64| (0..=n).map(|i| f(i as f64 / n as f64).abs()).fold(0.0, f64::max);
        let nu0 = on_grid(mapped.u0.as_ref());
        let nv0 = on_grid(&|x| initial_coefficient(&prob, x).unwrap());
        let nf = eps * (1.0 + gamma.abs());
        for (m, &t) in u.t_nodes.iter().enumerate() {
            let bound = apriori_bound(t, nu0, nv0, nf, &p).unwrap();
            prop_assert!(sup(u.values.row(m)) <= bound, "t = {t}");
        }
    }
}

#[test]
fn kernel_decays_at_least_at_half_omega() {
    let p = reference();
    let c = SeriesControl::default();
    for r in [0.0, 0.5, 1.0] {
        let (k1, k2) = (eval_k(r, 10.0, &p, &c).unwrap(), eval_k(r, 20.0, &p, &c).unwrap());
        let rate = (k1.abs() / k2.abs()).ln() / 10.0;
        assert!(rate >= p.omega() / 2.0, "r = {r}: rate {rate}");
    }
}

#[test]
fn boundary_kernel_mass_is_monotone_and_saturates() {
    let p = reference();
    let d = StripDomain::new(1.0).unwrap();
    let c = SeriesControl::default();
    let mass: Vec<f64> =
        [2.0, 5.0, 10.0, 20.0].iter().map(|&t| theta_x_time_integrals(0.3, t, &p, &d, &c).unwrap().1).collect();
    assert!(mass.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{mass:?}");
    assert!(mass[3] - mass[2] < 1e-3 * mass[3], "{mass:?}");
}

#[test]
fn initial_data_are_recovered_at_small_times() {
    let d = StripDomain::new(1.0).unwrap();
    // at t = 1e-5 the third mode has moved by about 5e-4
    let mut prob = DirichletProblem::homogeneous(reference(), d, 2e-5);
    prob.u0 = Arc::new(|x| (PI * x).sin() + 0.5 * (3.0 * PI * x).sin());
    let u = solve_linear(&prob, UniformGrid::new(32, 2).unwrap(), SeriesControl::default()).unwrap();
    for (j, &x) in u.x_nodes.iter().enumerate() {
        assert!((u.values[[0, j]] - (prob.u0)(x)).abs() < 1e-3, "x = {x}");
    }
}

#[test]
fn initial_data_effect_vanishes_at_rate_omega() {
    let p = reference();
    let mut prob = DirichletProblem::homogeneous(p, StripDomain::new(1.0).unwrap(), 4.0);
    prob.u0 = Arc::new(|x| (PI * x).sin());
    let u = solve_linear(&prob, UniformGrid::new(16, 40).unwrap(), SeriesControl::default()).unwrap();
    let (s2, s4) = (sup(u.values.row(19)), sup(u.values.row(39)));
    let rate = (s2 / s4).ln() / 2.0;
    assert!(rate >= 0.9 * p.omega(), "rate {rate}");
}

#[test]
fn unforced_finite_difference_solution_does_not_grow() {
    let mut prob = DirichletProblem::homogeneous(reference(), StripDomain::new(1.0).unwrap(), 2.0);
    prob.u0 = Arc::new(|x| (PI * x).sin() + 0.3 * (2.0 * PI * x).sin());
    let u = solve_integrodiff_fd(&prob, FdGrid::new(32, 0.01, FdScheme::SemiImplicit).unwrap()).unwrap();
    let norms: Vec<f64> = (0..u.t_nodes.len()).map(|m| sup(u.values.row(m))).collect();
    // the memory drives the solution through zero near t = 0.55, after which
    // the sup norm grows again until about t = 0.8
    let after = u.t_nodes.iter().position(|&t| t > 1.0).unwrap();
    assert!(norms[after..].windows(2).all(|w| w[1] <= w[0]));
}
