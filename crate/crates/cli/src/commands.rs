//! The computations behind each subcommand. Configs reach this point already
//! validated, so any error here is numerical.

use std::sync::Arc;

use memkernel::checks::{run_check, SuiteSettings};
use memkernel::esjj::{
    apriori_bound, boundary_asymptote, initial_coefficient, map_params, solve_esjj, to_dirichlet, EsjjProblem,
    PICARD_MAX_ITER, PICARD_TOL,
};
use memkernel::fd::{solve_integrodiff_fd, solve_pde_esjj, steady_bvp};
use memkernel::kernel::{eval_k, eval_k1, eval_kx, laplace_check};
use memkernel::solver::{
    solve_linear, solve_nonlinear_picard, DirichletProblem, GridSolution, ScalarFn, SourceSpec, UniformGrid,
};
use memkernel::theta::{eigen_green, green, steady_boundary_kernel, theta, theta_x, theta_x_time_integrals};
use memkernel::Result;

use crate::config::{ExperimentConfig, GridSection};
use crate::output::{CheckRecord, Table};
use crate::preset::Preset;
use crate::Command;

/// Tables and verdicts of one run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<CheckRecord>,
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    match cmd {
        Command::KernelEval => kernel_eval(cfg),
        Command::GreenEval => green_eval(cfg),
        Command::SolveLinear => linear(cfg),
        Command::SolveEsjj => junction(cfg),
        Command::Asymptotics => asymptotics(cfg),
        Command::Validate => Ok(validate(cfg)),
    }
}

fn max_abs(a: f64, b: f64) -> f64 {
    a.max(b.abs())
}

fn kernel_eval(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.operator.expect("validated").params();
    let c = cfg.series.control();
    let k = cfg.kernel_eval.as_ref().expect("validated");
    let mut out = Outcome::default();
    type Eval = fn(f64, f64, &memkernel::kernel::OperatorParams, &memkernel::kernel::SeriesControl) -> Result<f64>;
    for (file, f) in [("k.csv", eval_k as Eval), ("k1.csv", eval_k1), ("kx.csv", eval_kx)] {
        let mut t_ = Table::new(file, &["x", "t", "value"]);
        for &t in &k.t {
            for &x in &k.x {
                t_.push(&[x, t, f(x, t, &p, &c)?]);
            }
        }
        out.tables.push(t_);
    }
    let mut lap = Table::new("laplace.csv", &["r", "s", "value", "oracle", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for &s in &k.laplace_s {
        for &r in &k.laplace_r {
            let l = laplace_check(r, s, &p, &c)?;
            let diff = (l.numeric - l.closed_form).abs();
            worst = max_abs(worst, diff);
            lap.push(&[r, s, l.numeric, l.closed_form, diff]);
        }
    }
    out.tables.push(lap);
    out.checks.push(CheckRecord::at_most("laplace identity", worst, cfg.tolerances.laplace));
    Ok(out)
}

fn green_eval(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.operator.expect("validated").params();
    let d = cfg.strip(Command::GreenEval).expect("validated");
    let c = cfg.series.control();
    let g = cfg.green_eval.as_ref().expect("validated");
    let mut out = Outcome::default();
    let mut th = Table::new("theta.csv", &["x", "t", "value"]);
    let mut thx = Table::new("theta_x.csv", &["x", "t", "value"]);
    for &t in &g.t {
        for &x in &g.x {
            th.push(&[x, t, theta(x, t, &p, &d, &c)?]);
            thx.push(&[x, t, theta_x(x, t, &p, &d, &c)?]);
        }
    }
    let mut gr = Table::new("green.csv", &["x", "xi", "t", "value", "oracle", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for &t in &g.t {
        for &xi in &g.xi {
            for &x in &g.x {
                let v = green(x, xi, t, &p, &d, &c)?;
                let o = eigen_green(x, xi, t, &p, &d, g.modes, g.mode_tol)?;
                worst = max_abs(worst, v - o);
                gr.push(&[x, xi, t, v, o, (v - o).abs()]);
            }
        }
    }
    out.tables.extend([th, thx, gr]);
    out.checks.push(CheckRecord::at_most("green representations agree", worst, cfg.tolerances.green));
    Ok(out)
}

/// Solution table with the initial row prepended, the boundary check and,
/// when an oracle is given, the oracle columns and its check.
fn grid_outcome(
    cfg: &ExperimentConfig,
    sol: &GridSolution,
    u0: &ScalarFn,
    g: (&ScalarFn, &ScalarFn),
    oracle: Option<(GridSolution, usize)>,
) -> Outcome {
    let mut out = Outcome::default();
    let header: &[&str] =
        if oracle.is_some() { &["x", "t", "value", "oracle", "abs_diff"] } else { &["x", "t", "value"] };
    let mut table = Table::new("solution.csv", header);
    for &x in &sol.x_nodes {
        let v = u0(x);
        if oracle.is_some() {
            table.push(&[x, 0.0, v, v, 0.0]);
        } else {
            table.push(&[x, 0.0, v]);
        }
    }
    let last = sol.x_nodes.len() - 1;
    let (mut edge, mut gap): (f64, f64) = (0.0, 0.0);
    for (m, &t) in sol.t_nodes.iter().enumerate() {
        let row = sol.values.row(m);
        edge = max_abs(edge, row[0] - (g.0)(t));
        edge = max_abs(edge, row[last] - (g.1)(t));
        let orow = oracle.as_ref().map(|(o, stride)| o.values.row((m + 1) * stride - 1));
        for (j, &x) in sol.x_nodes.iter().enumerate() {
            match &orow {
                Some(o) => {
                    let diff = (row[j] - o[j]).abs();
                    gap = max_abs(gap, diff);
                    table.push(&[x, t, row[j], o[j], diff]);
                }
                None => table.push(&[x, t, row[j]]),
            }
        }
    }
    out.tables.push(table);
    let mut b = CheckRecord::at_most("dirichlet recovery", edge, cfg.tolerances.boundary);
    b.metrics.insert("compatibility_gap".into(), sol.meta.compatibility_gap);
    out.checks.push(b);
    if oracle.is_some() {
        out.checks.push(CheckRecord::at_most("finite-difference agreement", gap, cfg.tolerances.fd_oracle));
    }
    out
}

fn data(cfg: &ExperimentConfig, name: &str, length: f64) -> ScalarFn {
    cfg.data.get(name).function(length)
}

fn time_grid(cfg: &ExperimentConfig) -> &GridSection {
    cfg.grid.as_ref().expect("validated")
}

fn linear(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.operator.expect("validated").params();
    let d = cfg.strip(Command::SolveLinear).expect("validated");
    let g = time_grid(cfg);
    let l = d.length;
    let mut prob = DirichletProblem::homogeneous(p, d, g.horizon);
    prob.u0 = data(cfg, "u0", l);
    prob.g1 = data(cfg, "g1", l);
    prob.g2 = data(cfg, "g2", l);
    if cfg.data.get("source") != Preset::Zero {
        let f = data(cfg, "source", l);
        prob.source = SourceSpec::linear(Arc::new(move |x, _| f(x)));
    }
    let sol = solve_linear(&prob, g.grid(), cfg.series.control())?;
    let oracle = match &cfg.fd_oracle {
        Some(o) => Some((solve_integrodiff_fd(&prob, o.grid(g))?, o.stride(g))),
        None => None,
    };
    Ok(grid_outcome(cfg, &sol, &prob.u0, (&prob.g1, &prob.g2), oracle))
}

fn junction(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = cfg.junction.expect("validated").params();
    let g = time_grid(cfg);
    let l = e.length;
    let prob = EsjjProblem {
        params: e,
        u0: data(cfg, "u0", l),
        v0: data(cfg, "v0", l),
        g1: data(cfg, "g1", l),
        g2: data(cfg, "g2", l),
        horizon: g.horizon,
    };
    let sol = solve_esjj(&prob, g.grid(), cfg.series.control())?;
    let oracle = match &cfg.fd_oracle {
        Some(o) => Some((solve_pde_esjj(&prob, o.grid(g))?, o.stride(g))),
        None => None,
    };
    let mut out = grid_outcome(cfg, &sol, &prob.u0, (&prob.g1, &prob.g2), oracle);
    let ratio = sol.meta.max_ratio().unwrap_or(0.0);
    let mut pc = CheckRecord::at_most("picard contraction", ratio, 1.0);
    pc.metrics.insert("sweeps".into(), sol.meta.iterations as f64);
    pc.metrics.insert("last_increment".into(), sol.meta.last_increment);
    out.checks.push(pc);
    Ok(out)
}

fn sup_on(f: &dyn Fn(f64) -> f64, l: f64) -> f64 {
    (0..=1000).map(|i| f(l * i as f64 / 1000.0).abs()).fold(0.0, f64::max)
}

fn asymptotics(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = cfg.junction.expect("validated").params();
    let a = cfg.asymptotics;
    let c = cfg.series.control();
    let tol = cfg.tolerances.asymptotic;
    let p = map_params(&e)?;
    let d = e.domain()?;
    let l = e.length;
    let g1_inf = cfg.data.get("g1").limit().expect("validated");
    let g2_inf = cfg.data.get("g2").limit().expect("validated");
    let mut out = Outcome::default();

    // long-time profile of the boundary-driven weighted problem
    let mut prob = DirichletProblem::homogeneous(p, d, a.horizon);
    prob.u0 = data(cfg, "u0", l);
    prob.g1 = data(cfg, "g1", l);
    prob.g2 = data(cfg, "g2", l);
    let sol = solve_linear(&prob, UniformGrid::new(a.nx, a.nt)?, c)?;
    let last = sol.values.row(sol.t_nodes.len() - 1);
    let bvp = steady_bvp(g1_inf, g2_inf, &p, &d, a.nx)?;
    let mut steady = Table::new("steady.csv", &["x", "t", "value", "oracle", "abs_diff"]);
    let (mut vs_profile, mut vs_bvp): (f64, f64) = (0.0, 0.0);
    for (j, &x) in sol.x_nodes.iter().enumerate() {
        let o = boundary_asymptote(x, g1_inf, g2_inf, &e)?;
        vs_profile = max_abs(vs_profile, last[j] - o);
        vs_bvp = max_abs(vs_bvp, last[j] - bvp[j]);
        steady.push(&[x, a.horizon, last[j], o, (last[j] - o).abs()]);
    }
    out.tables.push(steady);
    out.checks.push(CheckRecord::at_most("long-time profile", vs_profile, tol));
    out.checks.push(CheckRecord::at_most("steady boundary-value problem", vs_bvp, tol));

    // time integral of theta_x against its limit
    let mut kernel = Table::new("boundary_kernel.csv", &["x", "t", "value", "oracle", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for k in 1..=a.kernel_points {
        let x = l * k as f64 / (a.kernel_points + 1) as f64;
        let (v, _) = theta_x_time_integrals(x, a.horizon, &p, &d, &c)?;
        let o = steady_boundary_kernel(x, &p, &d)?;
        worst = max_abs(worst, v - o);
        kernel.push(&[x, a.horizon, v, o, (v - o).abs()]);
    }
    out.tables.push(kernel);
    out.checks.push(CheckRecord::at_most("boundary kernel limit", worst, tol));

    // decay of the junction with grounded ends against the a-priori bound
    let dprob = EsjjProblem { u0: data(cfg, "u0", l), v0: data(cfg, "v0", l), ..EsjjProblem::at_rest(e, a.decay_horizon) };
    let mapped = to_dirichlet(&dprob)?;
    let u = solve_nonlinear_picard(&mapped, UniformGrid::new(a.decay_nx, a.decay_nt)?, c, PICARD_TOL, PICARD_MAX_ITER)?;
    let norm_u0 = sup_on(mapped.u0.as_ref(), l);
    let norm_v0 = sup_on(&|x| initial_coefficient(&dprob, x).unwrap_or(f64::INFINITY), l);
    let norm_f = e.eps * (1.0 + e.gamma.abs());
    let mut decay = Table::new("decay.csv", &["t", "value", "bound", "ratio"]);
    let mut tightness: f64 = 0.0;
    for (m, &t) in u.t_nodes.iter().enumerate() {
        let sup = u.values.row(m).iter().fold(0.0, |s: f64, v| s.max(v.abs()));
        let bound = apriori_bound(t, norm_u0, norm_v0, norm_f, &p)?;
        tightness = tightness.max(sup / bound);
        decay.push(&[t, sup, bound, sup / bound]);
    }
    out.tables.push(decay);
    let mut ap = CheckRecord::at_most("a-priori bound", tightness, 1.0);
    ap.metrics.insert("norm_u0".into(), norm_u0);
    ap.metrics.insert("norm_v0".into(), norm_v0);
    ap.metrics.insert("norm_f".into(), norm_f);
    out.checks.push(ap);
    Ok(out)
}

fn validate(cfg: &ExperimentConfig) -> Outcome {
    let s = SuiteSettings { seed: cfg.seed, control: cfg.series.control() };
    let mut out = Outcome::default();
    let mut table = Table::new("checks.csv", &["id", "name", "passed", "detail"]);
    for &id in &cfg.validate.checks {
        let o = run_check(id, &s);
        log::info!("check {id} {}: {}", o.name, o.detail);
        table.rows.push(vec![id.to_string(), o.name.into(), o.passed.to_string(), o.detail.clone()]);
        out.checks.push(CheckRecord {
            name: format!("{id}. {}", o.name),
            passed: o.passed,
            value: None,
            limit: None,
            detail: o.detail,
            metrics: o.metrics.into_iter().collect(),
            seconds: Some(o.seconds),
        });
    }
    out.tables.push(table);
    out
}
