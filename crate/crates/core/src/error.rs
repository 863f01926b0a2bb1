use thiserror::Error;

/// Errors raised by the evaluators and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain of definition: {0}")]
    Domain(String),

    #[error("unsupported Bessel order {0} (only J0 and J1 are implemented)")]
    UnsupportedOrder(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("t = {t:e} is below the evaluation floor t_floor = {t_floor:e}")]
    EvaluationWindow { t: f64, t_floor: f64 },

    #[error("Laplace variable s = {s} lies outside the half-plane of convergence s > {abscissa}")]
    ConvergenceDomain { s: f64, abscissa: f64 },

    #[error("image series truncated at N = {n_images} leaves a tail bound of {tail:e} > {tol:e}")]
    InsufficientTruncation { n_images: usize, tail: f64, tol: f64 },

    #[error("eigenfunction series truncated at {modes} modes leaves a tail bound of {tail:e} > {tol:e}")]
    InsufficientModes { modes: usize, tail: f64, tol: f64 },

    #[error("quadrature did not reach {tol:e} (estimate {estimate:e}) on [{a}, {b}]")]
    QuadratureNonConvergence { a: f64, b: f64, estimate: f64, tol: f64 },

    #[error("numerical failure at x = {x}, t = {t}: {reason}")]
    NumericalFailure { x: f64, t: f64, reason: String },

    #[error("limit not approached at the horizon: {0}")]
    NonConvergence(String),

    #[error("Picard iteration stalled after {iterations} sweeps (last ratios {ratios:?})")]
    NonContraction { iterations: usize, ratios: Vec<f64> },

    #[error("source evaluation produced a non-finite value at x = {x}, t = {t}")]
    SourceEvaluation { x: f64, t: f64 },

    #[error("parameter mapping infeasible: {0}")]
    MappingInfeasible(String),

    #[error("time step {dt:e} breaks the stability bound {bound:e} of the {scheme} scheme")]
    StabilityBreach { dt: f64, bound: f64, scheme: &'static str },

    #[error("finite-difference solution blew up (sup norm {norm:e}) at t = {t}")]
    BlowUp { t: f64, norm: f64 },

    #[error("singular tridiagonal system at row {0}")]
    SingularSystem(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} is not finite")))
    }
}
