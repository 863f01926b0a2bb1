//! Direct evaluation of the linear representation and Picard iteration of
//! the nonlinear integral equation.

use ndarray::{s, Array2};

use super::weights::Propagator;
use super::{DirichletProblem, GridSolution, SolveMeta, UniformGrid};
use crate::error::{Error, Result};
use crate::kernel::SeriesControl;

/// Initial iterate of the Picard iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum PicardStart {
    /// The linear solve with the source evaluated at `u = 0`.
    FrozenSource,
    /// Explicit values on the grid, shape `(nt, nx + 1)`.
    Given(Array2<f64>),
}

/// Linear solve; the source must be [`SourceKind::Linear`](super::SourceKind::Linear).
pub fn solve_linear(prob: &DirichletProblem, grid: UniformGrid, c: SeriesControl) -> Result<GridSolution> {
    prob.validate()?;
    let prop = Propagator::build(prob.params, prob.domain, prob.horizon, grid, c)?;
    solve_linear_with(prob, &prop)
}

/// Linear solve reusing precomputed weights.
pub fn solve_linear_with(prob: &DirichletProblem, prop: &Propagator) -> Result<GridSolution> {
    prob.validate()?;
    if !prob.source.is_linear() {
        return Err(Error::InvalidParameter("solve_linear needs a linear source".into()));
    }
    check_match(prob, prop)?;
    let data = Data::new(prob, prop);
    let values = data.map(prob, prop, None)?;
    Ok(data.finish(values, SolveMeta::direct(prop.control)))
}

/// Picard iteration `u <- Phi(u)` started from the frozen-source solve.
pub fn solve_nonlinear_picard(
    prob: &DirichletProblem,
    grid: UniformGrid,
    c: SeriesControl,
    tol: f64,
    max_iter: usize,
) -> Result<GridSolution> {
    prob.validate()?;
    let prop = Propagator::build(prob.params, prob.domain, prob.horizon, grid, c)?;
    solve_nonlinear_picard_from(prob, &prop, tol, max_iter, PicardStart::FrozenSource)
}

/// Picard iteration with precomputed weights and a chosen initial iterate.
pub fn solve_nonlinear_picard_from(
    prob: &DirichletProblem,
    prop: &Propagator,
    tol: f64,
    max_iter: usize,
    start: PicardStart,
) -> Result<GridSolution> {
    prob.validate()?;
    check_match(prob, prop)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be finite and > 0")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    let data = Data::new(prob, prop);
    let mut u = match start {
        PicardStart::FrozenSource => data.map(prob, prop, None)?,
        PicardStart::Given(u) => {
            if u.dim() != data.shape() {
                return Err(Error::InvalidParameter(format!(
                    "initial iterate has shape {:?}, expected {:?}",
                    u.dim(),
                    data.shape()
                )));
            }
            u
        }
    };
    let mut ratios = vec![];
    let mut prev = f64::NAN;
    for it in 1..=max_iter {
        let next = data.map(prob, prop, Some(&u))?;
        let diff = next.iter().zip(u.iter()).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        if prev.is_finite() && prev > 0.0 {
            ratios.push(diff / prev);
        }
        log::debug!("picard sweep {it}: increment {diff:e}");
        u = next;
        prev = diff;
        if diff <= tol {
            let meta = SolveMeta {
                control: prop.control,
                iterations: it,
                ratios,
                last_increment: diff,
                compatibility_gap: 0.0,
            };
            return Ok(data.finish(u, meta));
        }
    }
    Err(Error::NonContraction { iterations: max_iter, ratios })
}

fn check_match(prob: &DirichletProblem, prop: &Propagator) -> Result<()> {
    if prob.params != prop.params || prob.domain != prop.domain || prob.horizon != prop.horizon {
        return Err(Error::InvalidParameter("weights were built for a different operator, strip or horizon".into()));
    }
    Ok(())
}

/// Grid samples of the data and the source-independent part of the solution.
struct Data {
    x: Vec<f64>,
    t: Vec<f64>,
    u0: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    base: Array2<f64>,
    gap: f64,
}

impl Data {
    fn new(prob: &DirichletProblem, prop: &Propagator) -> Self {
        let x = prop.x_nodes();
        let t = prop.t_nodes();
        let u0: Vec<f64> = x.iter().map(|&x| (prob.u0)(x)).collect();
        let times: Vec<f64> = std::iter::once(0.0).chain(t.iter().copied()).collect();
        let g1: Vec<f64> = times.iter().map(|&t| (prob.g1)(t)).collect();
        let g2: Vec<f64> = times.iter().map(|&t| (prob.g2)(t)).collect();
        let mut base = prop.initial_term(&u0);
        base += &prop.boundary_term(&g1, &g2);
        let gap = prob.compatibility_gap();
        if gap > 1e-12 {
            log::warn!("initial and boundary data disagree at the corners by {gap:e}");
        }
        Data { x, t, u0, g1, g2, base, gap }
    }

    fn shape(&self) -> (usize, usize) {
        self.base.dim()
    }

    /// `Phi(u)`: the representation with the source evaluated along `u`
    /// (zero when `u` is `None`).
    fn map(&self, prob: &DirichletProblem, prop: &Propagator, u: Option<&Array2<f64>>) -> Result<Array2<f64>> {
        let (m, w) = self.shape();
        let mut f = Array2::<f64>::zeros((m + 1, w));
        let mut state = prob.source.start(&self.x, prop.dt);
        let zero = vec![0.0; w];
        let mut row = vec![0.0; w];
        for k in 0..=m {
            let (tk, ur) = if k == 0 {
                (0.0, self.u0.clone())
            } else {
                (self.t[k - 1], u.map_or_else(|| zero.clone(), |u| u.row(k - 1).to_vec()))
            };
            state.advance(tk, &ur, &mut row);
            // the Green function vanishes on the boundary, so boundary samples never enter
            for (i, v) in row.iter_mut().enumerate() {
                if i == 0 || i == w - 1 {
                    *v = 0.0;
                } else if !v.is_finite() {
                    return Err(Error::SourceEvaluation { x: self.x[i], t: tk });
                }
            }
            f.row_mut(k).assign(&ndarray::ArrayView1::from(&row));
        }
        let mut out = self.base.clone();
        out += &prop.source_start_term(f.row(0).as_slice().expect("contiguous row"));
        out += &prop.duhamel(&f);
        out.slice_mut(s![.., 0]).assign(&ndarray::ArrayView1::from(&self.g1[1..]));
        out.slice_mut(s![.., w - 1]).assign(&ndarray::ArrayView1::from(&self.g2[1..]));
        if let Some((idx, _)) = out.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                x: self.x[idx.1],
                t: self.t[idx.0],
                reason: "non-finite nodal value".into(),
            });
        }
        Ok(out)
    }

    fn finish(&self, values: Array2<f64>, mut meta: SolveMeta) -> GridSolution {
        meta.compatibility_gap = self.gap;
        GridSolution { x_nodes: self.x.clone(), t_nodes: self.t.clone(), values, meta }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::kernel::OperatorParams;
    use crate::solver::{SourceKind, SourceSpec};
    use crate::theta::StripDomain;

    fn reference(horizon: f64) -> DirichletProblem {
        DirichletProblem::homogeneous(
            OperatorParams::new(1.0, 0.5, 0.5, 1.0).unwrap(),
            StripDomain::new(1.0).unwrap(),
            horizon,
        )
    }

    fn manufactured(p: OperatorParams) -> SourceSpec {
        // u* = exp(-t) sin(pi x)
        SourceSpec::linear(Arc::new(move |x, t| {
            let mem = if (p.beta - 1.0).abs() < 1e-12 {
                t * (-t).exp()
            } else {
                ((-t).exp() - (-p.beta * t).exp()) / (p.beta - 1.0)
            };
            let s = (PI * x).sin();
            (-1.0 + p.eps * PI * PI + p.a) * (-t).exp() * s + p.b * s * mem
        }))
    }

    fn manufactured_error(nx: usize, nt: usize) -> f64 {
        let mut prob = reference(1.0);
        prob.u0 = Arc::new(|x| (PI * x).sin());
        prob.source = manufactured(prob.params);
        let sol = solve_linear(&prob, UniformGrid::new(nx, nt).unwrap(), SeriesControl::default()).unwrap();
        let mut err: f64 = 0.0;
        for (m, &t) in sol.t_nodes.iter().enumerate() {
            for (j, &x) in sol.x_nodes.iter().enumerate() {
                err = err.max((sol.values[[m, j]] - (-t).exp() * (PI * x).sin()).abs());
            }
        }
        err
    }

    #[test]
    fn zero_data_gives_zero() {
        let prob = reference(1.0);
        let sol = solve_linear(&prob, UniformGrid::new(8, 10).unwrap(), SeriesControl::default()).unwrap();
        assert_eq!(sol.sup_norm(), 0.0);
        assert_eq!(sol.values.dim(), (10, 9));
    }

    #[test]
    fn manufactured_solution_converges() {
        let coarse = manufactured_error(16, 25);
        let fine = manufactured_error(32, 50);
        assert!(coarse / fine >= 3.0, "{coarse:e} -> {fine:e}");
        assert!(manufactured_error(64, 100) < 1e-4);
    }

    #[test]
    fn steady_state_matches_sinh_profile() {
        let mut prob = reference(50.0);
        prob.g1 = Arc::new(|_| 1.0);
        let sol = solve_linear(&prob, UniformGrid::new(16, 100).unwrap(), SeriesControl::default()).unwrap();
        let s0 = prob.params.sigma0();
        let last = sol.values.row(sol.t_nodes.len() - 1);
        for (j, &x) in sol.x_nodes.iter().enumerate() {
            let exact = (s0 * (1.0 - x)).sinh() / s0.sinh();
            assert!((last[j] - exact).abs() < 1e-6, "x={x}: {} vs {exact}", last[j]);
        }
    }

    #[test]
    fn solve_is_additive() {
        let grid = UniformGrid::new(8, 20).unwrap();
        let c = SeriesControl::default();
        let mut a = reference(1.0);
        a.u0 = Arc::new(|x| x * (1.0 - x));
        a.g1 = Arc::new(|t| t.sin());
        let mut b = reference(1.0);
        b.g2 = Arc::new(|t| 1.0 - (-t).exp());
        b.source = SourceSpec::linear(Arc::new(|x, t| x * t));
        let mut ab = a.clone();
        ab.g2 = b.g2.clone();
        ab.source = b.source.clone();
        let prop = Propagator::build(a.params, a.domain, 1.0, grid, c).unwrap();
        let ua = solve_linear_with(&a, &prop).unwrap();
        let ub = solve_linear_with(&b, &prop).unwrap();
        let uab = solve_linear_with(&ab, &prop).unwrap();
        for ((x, y), z) in ua.values.iter().zip(ub.values.iter()).zip(uab.values.iter()) {
            assert!((x + y - z).abs() < 1e-12);
        }
    }

    #[test]
    fn picard_trivial_and_mismatch() {
        let mut prob = reference(1.0);
        prob.source = SourceSpec { kind: SourceKind::Nonlinear(Arc::new(|_, _, _| 0.0)), lipschitz_const: 0.0, bound: 0.0 };
        let grid = UniformGrid::new(8, 10).unwrap();
        let sol = solve_nonlinear_picard(&prob, grid, SeriesControl::default(), 1e-10, 5).unwrap();
        assert_eq!(sol.meta.iterations, 1);
        assert_eq!(sol.sup_norm(), 0.0);
        assert!(matches!(
            solve_linear(&prob, grid, SeriesControl::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn picard_contracts_and_is_start_independent() {
        let mut prob = reference(1.0);
        prob.u0 = Arc::new(|x| (PI * x).sin());
        prob.source = SourceSpec {
            kind: SourceKind::Nonlinear(Arc::new(|_, _, u: f64| 0.5 * u.sin() + 0.1)),
            lipschitz_const: 0.5,
            bound: 0.6,
        };
        let grid = UniformGrid::new(16, 40).unwrap();
        let c = SeriesControl::default();
        let prop = Propagator::build(prob.params, prob.domain, 1.0, grid, c).unwrap();
        let tol = 1e-10;
        let a = solve_nonlinear_picard_from(&prob, &prop, tol, 50, PicardStart::FrozenSource).unwrap();
        assert!(a.meta.max_ratio().unwrap() < 1.0);
        let other = Array2::from_elem((40, 17), 3.0);
        let b = solve_nonlinear_picard_from(&prob, &prop, tol, 50, PicardStart::Given(other)).unwrap();
        assert!(a.sup_diff(&b).unwrap() <= 2.0 * tol);
    }

    #[test]
    fn nan_source_is_reported() {
        let mut prob = reference(1.0);
        prob.source = SourceSpec { kind: SourceKind::Nonlinear(Arc::new(|_, _, _| f64::NAN)), lipschitz_const: 0.0, bound: 0.0 };
        let r = solve_nonlinear_picard(&prob, UniformGrid::new(4, 4).unwrap(), SeriesControl::default(), 1e-8, 3);
        assert!(matches!(r, Err(Error::SourceEvaluation { .. })));
    }
}
