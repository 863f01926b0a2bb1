//! Experiment configuration, read from TOML and checked in full before any
//! computation starts.

use std::path::Path;

use memkernel::esjj::{map_params, EsjjParams};
use memkernel::fd::{FdGrid, FdScheme};
use memkernel::kernel::{OperatorParams, SeriesControl};
use memkernel::solver::UniformGrid;
use memkernel::theta::StripDomain;
use serde::{Deserialize, Serialize};

use crate::preset::Preset;
use crate::Command;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed of every randomized step.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub operator: Option<OperatorSection>,
    pub junction: Option<JunctionSection>,
    pub domain: Option<DomainSection>,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub data: DataSection,
    pub fd_oracle: Option<FdOracleSection>,
    pub kernel_eval: Option<KernelEvalSection>,
    pub green_eval: Option<GreenEvalSection>,
    #[serde(default)]
    pub asymptotics: AsymptoticsSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesSection {
    pub quad_tol: f64,
    pub n_images: usize,
    pub t_floor: f64,
}

impl Default for SeriesSection {
    fn default() -> Self {
        let c = SeriesControl::default();
        SeriesSection { quad_tol: c.quad_tol, n_images: c.n_images, t_floor: c.t_floor }
    }
}

impl SeriesSection {
    pub fn control(&self) -> SeriesControl {
        SeriesControl { quad_tol: self.quad_tol, n_images: self.n_images, t_floor: self.t_floor }
    }
}

/// Pass thresholds of the checks each command reports.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Boundary columns against the Dirichlet data.
    pub boundary: f64,
    /// Integral solution against the finite-difference oracle.
    pub fd_oracle: f64,
    /// Numerical Laplace transform against its closed form.
    pub laplace: f64,
    /// Image series against the eigenfunction series.
    pub green: f64,
    /// Long-time profiles and kernel limits.
    pub asymptotic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { boundary: 1e-12, fd_oracle: 5e-3, laplace: 1e-6, green: 1e-8, asymptotic: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

impl OperatorSection {
    pub fn params(&self) -> OperatorParams {
        OperatorParams { eps: self.eps, a: self.a, b: self.b, beta: self.beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSection {
    pub eps: f64,
    pub alpha: f64,
    pub lam: f64,
    pub gamma: f64,
    pub length: f64,
}

impl JunctionSection {
    pub fn params(&self) -> EsjjParams {
        EsjjParams { eps: self.eps, alpha: self.alpha, lam: self.lam, gamma: self.gamma, length: self.length }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Space intervals (even).
    pub nx: usize,
    /// Time steps.
    pub nt: usize,
    pub horizon: f64,
}

impl GridSection {
    pub fn grid(&self) -> UniformGrid {
        UniformGrid { nx: self.nx, nt: self.nt }
    }
}

/// Initial data, boundary data and source; absent entries are zero.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub u0: Option<Preset>,
    pub v0: Option<Preset>,
    pub g1: Option<Preset>,
    pub g2: Option<Preset>,
    /// Time-independent source `f(x)` of the linear problem.
    pub source: Option<Preset>,
}

impl DataSection {
    pub fn get(&self, name: &str) -> Preset {
        let p = match name {
            "u0" => &self.u0,
            "v0" => &self.v0,
            "g1" => &self.g1,
            "g2" => &self.g2,
            _ => &self.source,
        };
        p.clone().unwrap_or(Preset::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FdOracleSection {
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
}

fn default_scheme() -> SchemeName {
    SchemeName::SemiImplicit
}

impl FdOracleSection {
    fn scheme(&self) -> FdScheme {
        match self.scheme {
            SchemeName::Explicit => FdScheme::Explicit,
            SchemeName::SemiImplicit => FdScheme::SemiImplicit,
        }
    }

    /// Oracle grid whose step divides the solver step exactly.
    pub fn grid(&self, g: &GridSection) -> FdGrid {
        FdGrid { nx: g.nx, dt: g.horizon / g.nt as f64 / self.stride(g) as f64, scheme: self.scheme() }
    }

    /// Oracle steps per solver step.
    pub fn stride(&self, g: &GridSection) -> usize {
        (g.horizon / g.nt as f64 / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEvalSection {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(default = "default_laplace_r")]
    pub laplace_r: Vec<f64>,
    #[serde(default = "default_laplace_s")]
    pub laplace_s: Vec<f64>,
}

fn default_laplace_r() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0]
}

fn default_laplace_s() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GreenEvalSection {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Allowed tail of the eigenfunction series.
    #[serde(default = "default_mode_tol")]
    pub mode_tol: f64,
}

fn default_modes() -> usize {
    200
}

fn default_mode_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticsSection {
    /// Horizon of the long-time solve.
    pub horizon: f64,
    pub nx: usize,
    pub nt: usize,
    /// Interior points at which the boundary kernel limit is tabulated.
    pub kernel_points: usize,
    /// Grid of the decay run compared with the a-priori bound.
    pub decay_horizon: f64,
    pub decay_nx: usize,
    pub decay_nt: usize,
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        AsymptoticsSection {
            horizon: 50.0,
            nx: 64,
            nt: 200,
            kernel_points: 7,
            decay_horizon: 2.0,
            decay_nx: 32,
            decay_nt: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    /// Check numbers to run.
    pub checks: Vec<usize>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection { checks: (1..=10).collect() }
    }
}

/// Read and parse a config file.
pub fn load(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn need<'a, T>(v: &'a Option<T>, section: &str, cmd: Command) -> Result<&'a T, String> {
    v.as_ref().ok_or_else(|| format!("[{section}] is required by {}", cmd.name()))
}

fn all_finite(name: &str, v: &[f64]) -> Result<(), String> {
    if v.is_empty() {
        return Err(format!("{name} must not be empty"));
    }
    match v.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(format!("{name} contains {x}")),
        None => Ok(()),
    }
}

fn within(name: &str, v: &[f64], lo: f64, hi: f64) -> Result<(), String> {
    all_finite(name, v)?;
    match v.iter().find(|x| !(lo..=hi).contains(*x)) {
        Some(x) => Err(format!("{name} value {x} lies outside [{lo}, {hi}]")),
        None => Ok(()),
    }
}

fn positive_times(name: &str, v: &[f64], floor: f64) -> Result<(), String> {
    all_finite(name, v)?;
    match v.iter().find(|t| **t < floor) {
        Some(t) => Err(format!("{name} value {t} lies below t_floor = {floor}")),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    /// Every check that can be made without computing anything.
    pub fn validate_for(&self, cmd: Command) -> Result<(), String> {
        if self.threads == Some(0) {
            return Err("threads must be >= 1".into());
        }
        let control = self.series.control();
        control.validate().map_err(|e| format!("[series] {e}"))?;
        let t = &self.tolerances;
        for (name, v) in [
            ("boundary", t.boundary),
            ("fd_oracle", t.fd_oracle),
            ("laplace", t.laplace),
            ("green", t.green),
            ("asymptotic", t.asymptotic),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("[tolerances] {name} = {v} must be finite and > 0"));
            }
        }
        for name in ["u0", "v0", "g1", "g2", "source"] {
            self.data.get(name).validate(&format!("data.{name}"))?;
        }
        for name in ["g1", "g2"] {
            if matches!(self.data.get(name), Preset::SineBump { .. }) {
                return Err(format!("data.{name}: sine_bump describes spatial data, not boundary data"));
            }
        }
        match cmd {
            Command::KernelEval => {
                let p = need(&self.operator, "operator", cmd)?.params();
                p.validate().map_err(|e| format!("[operator] {e}"))?;
                let k = need(&self.kernel_eval, "kernel_eval", cmd)?;
                all_finite("kernel_eval.x", &k.x)?;
                positive_times("kernel_eval.t", &k.t, control.t_floor)?;
                within("kernel_eval.laplace_r", &k.laplace_r, 0.0, f64::MAX)?;
                all_finite("kernel_eval.laplace_s", &k.laplace_s)?;
                let abscissa = p.laplace_abscissa();
                if let Some(s) = k.laplace_s.iter().find(|s| **s <= abscissa) {
                    return Err(format!("kernel_eval.laplace_s value {s} must exceed {abscissa}"));
                }
            }
            Command::GreenEval => {
                need(&self.operator, "operator", cmd)?.params().validate().map_err(|e| format!("[operator] {e}"))?;
                let l = self.strip(cmd)?.length;
                let g = need(&self.green_eval, "green_eval", cmd)?;
                within("green_eval.x", &g.x, 0.0, l)?;
                within("green_eval.xi", &g.xi, 0.0, l)?;
                positive_times("green_eval.t", &g.t, control.t_floor)?;
                if g.modes == 0 {
                    return Err("green_eval.modes must be >= 1".into());
                }
                if !(g.mode_tol.is_finite() && g.mode_tol > 0.0) {
                    return Err(format!("green_eval.mode_tol = {} must be > 0", g.mode_tol));
                }
            }
            Command::SolveLinear => {
                let p = need(&self.operator, "operator", cmd)?.params();
                p.validate().map_err(|e| format!("[operator] {e}"))?;
                let l = self.strip(cmd)?.length;
                let g = self.time_grid(cmd)?;
                if let Some(o) = &self.fd_oracle {
                    self.check_oracle(o, g, o.grid(g).memory_bound(&p, l))?;
                }
            }
            Command::SolveEsjj => {
                let e = self.junction(cmd)?;
                let g = self.time_grid(cmd)?;
                if let Some(o) = &self.fd_oracle {
                    self.check_oracle(o, g, o.grid(g).esjj_bound(&e))?;
                }
            }
            Command::Asymptotics => {
                self.junction(cmd)?;
                let a = &self.asymptotics;
                for (name, h) in [("horizon", a.horizon), ("decay_horizon", a.decay_horizon)] {
                    if !(h.is_finite() && h > 0.0) {
                        return Err(format!("asymptotics.{name} = {h} must be finite and > 0"));
                    }
                }
                for (nx, nt) in [(a.nx, a.nt), (a.decay_nx, a.decay_nt)] {
                    UniformGrid::new(nx, nt).map_err(|e| format!("[asymptotics] {e}"))?;
                }
                if a.kernel_points == 0 {
                    return Err("asymptotics.kernel_points must be >= 1".into());
                }
                for name in ["g1", "g2"] {
                    if self.data.get(name).limit().is_none() {
                        return Err(format!("data.{name} needs a limit at large times"));
                    }
                }
            }
            Command::Validate => {
                if self.validate.checks.is_empty() {
                    return Err("validate.checks must not be empty".into());
                }
                if let Some(id) = self.validate.checks.iter().find(|id| !(1..=10).contains(*id)) {
                    return Err(format!("validate.checks: no check numbered {id}"));
                }
            }
        }
        Ok(())
    }

    pub fn strip(&self, cmd: Command) -> Result<StripDomain, String> {
        let d = need(&self.domain, "domain", cmd)?;
        StripDomain::new(d.length).map_err(|e| format!("[domain] {e}"))
    }

    fn junction(&self, cmd: Command) -> Result<EsjjParams, String> {
        let e = need(&self.junction, "junction", cmd)?.params();
        e.validate().map_err(|err| format!("[junction] {err}"))?;
        map_params(&e).map_err(|err| format!("[junction] {err}"))?;
        Ok(e)
    }

    fn time_grid(&self, cmd: Command) -> Result<&GridSection, String> {
        let g = need(&self.grid, "grid", cmd)?;
        g.grid().validate().map_err(|e| format!("[grid] {e}"))?;
        if !(g.horizon.is_finite() && g.horizon > 0.0) {
            return Err(format!("grid.horizon = {} must be finite and > 0", g.horizon));
        }
        Ok(g)
    }

    fn check_oracle(&self, o: &FdOracleSection, g: &GridSection, bound: f64) -> Result<(), String> {
        FdGrid { nx: g.nx, dt: o.dt, scheme: o.scheme() }.validate().map_err(|e| format!("[fd_oracle] {e}"))?;
        let step = g.horizon / g.nt as f64;
        let ratio = step / o.dt;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
            return Err(format!("fd_oracle.dt = {} must divide the solver step {step}", o.dt));
        }
        let dt = step / k;
        if dt > bound * (1.0 + 1e-12) {
            return Err(format!("fd_oracle.dt = {dt} exceeds the stability bound {bound:e} of the scheme"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
        [operator]
        eps = 1.0
        a = 0.5
        b = 0.5
        beta = 1.0
        [domain]
        length = 1.0
        [grid]
        nx = 8
        nt = 10
        horizon = 1.0
    ";

    fn parse(s: &str) -> Result<ExperimentConfig, toml::de::Error> {
        toml::from_str(s)
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.series.control(), SeriesControl::default());
        assert_eq!(c.validate.checks.len(), 10);
        assert!(c.validate_for(Command::SolveLinear).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(&format!("{MINIMAL}\n[series]\nn_image = 3\n")).is_err());
        assert!(parse(&format!("seeed = 3\n{MINIMAL}")).is_err());
        assert!(parse(&format!("{MINIMAL}\n[data]\nu1 = {{ preset = \"zero\" }}\n")).is_err());
    }

    #[test]
    fn missing_sections_name_the_command() {
        let c = parse(MINIMAL).unwrap();
        let err = c.validate_for(Command::SolveEsjj).unwrap_err();
        assert!(err.contains("[junction]") && err.contains("solve-esjj"), "{err}");
    }

    #[test]
    fn odd_grids_and_bad_oracle_steps_are_refused() {
        let mut c = parse(MINIMAL).unwrap();
        c.grid.as_mut().unwrap().nx = 7;
        assert!(c.validate_for(Command::SolveLinear).is_err());
        let mut c = parse(MINIMAL).unwrap();
        c.fd_oracle = Some(FdOracleSection { dt: 0.03, scheme: SchemeName::SemiImplicit });
        assert!(c.validate_for(Command::SolveLinear).unwrap_err().contains("divide"));
        c.fd_oracle = Some(FdOracleSection { dt: 0.1, scheme: SchemeName::Explicit });
        assert!(c.validate_for(Command::SolveLinear).unwrap_err().contains("stability"));
        c.fd_oracle = Some(FdOracleSection { dt: 0.05, scheme: SchemeName::SemiImplicit });
        assert!(c.validate_for(Command::SolveLinear).is_ok());
    }

    #[test]
    fn infeasible_junction_is_a_config_error() {
        let mut c = parse(MINIMAL).unwrap();
        c.junction = Some(JunctionSection { eps: 1.0, alpha: 0.5, lam: 0.1, gamma: 0.0, length: 1.0 });
        assert!(c.validate_for(Command::SolveEsjj).unwrap_err().contains("lam^2/4"));
    }

    #[test]
    fn spatial_shapes_are_not_boundary_data() {
        let mut c = parse(MINIMAL).unwrap();
        c.data.g1 = Some(Preset::SineBump { amplitude: 1.0, mode: 1 });
        assert!(c.validate_for(Command::SolveLinear).is_err());
    }
}
