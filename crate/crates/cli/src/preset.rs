//! Named data shapes usable for initial data, boundary data and sources.

use std::f64::consts::PI;
use std::sync::Arc;

use memkernel::solver::ScalarFn;
use serde::{Deserialize, Serialize};

/// A scalar function given by name in the config, e.g.
/// `g1 = { preset = "step", limit = 1.0, rate = 2.0 }`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Zero,
    Constant {
        value: f64,
    },
    /// `limit (1 - exp(-rate s))`.
    Step {
        limit: f64,
        rate: f64,
    },
    /// `amplitude sin(mode pi s / L)`, vanishing at both ends of the strip.
    SineBump {
        amplitude: f64,
        #[serde(default = "first_mode")]
        mode: u32,
    },
    /// Piecewise linear through `[s, value]` pairs, constant outside.
    Table {
        points: Vec<[f64; 2]>,
    },
}

fn first_mode() -> u32 {
    1
}

impl Preset {
    pub fn validate(&self, name: &str) -> Result<(), String> {
        let finite = |what: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name}: {what} = {v} is not finite"))
            }
        };
        match self {
            Preset::Zero => Ok(()),
            Preset::Constant { value } => finite("value", *value),
            Preset::Step { limit, rate } => {
                finite("limit", *limit)?;
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(format!("{name}: rate = {rate} must be finite and > 0"));
                }
                Ok(())
            }
            Preset::SineBump { amplitude, mode } => {
                finite("amplitude", *amplitude)?;
                if *mode == 0 {
                    return Err(format!("{name}: mode must be >= 1"));
                }
                Ok(())
            }
            Preset::Table { points } => {
                if points.len() < 2 {
                    return Err(format!("{name}: a table needs at least two points"));
                }
                for [s, v] in points {
                    finite("abscissa", *s)?;
                    finite("value", *v)?;
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(format!("{name}: table abscissae must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    /// The function itself; `length` is the strip length used by `sine_bump`.
    pub fn function(&self, length: f64) -> ScalarFn {
        match self.clone() {
            Preset::Zero => Arc::new(|_| 0.0),
            Preset::Constant { value } => Arc::new(move |_| value),
            Preset::Step { limit, rate } => Arc::new(move |s| limit * -(-rate * s).exp_m1()),
            Preset::SineBump { amplitude, mode } => {
                let w = mode as f64 * PI / length;
                Arc::new(move |s| amplitude * (w * s).sin())
            }
            Preset::Table { points } => Arc::new(move |s| interpolate(&points, s)),
        }
    }

    /// Limit as the argument grows without bound, if there is one.
    pub fn limit(&self) -> Option<f64> {
        match self {
            Preset::Zero => Some(0.0),
            Preset::Constant { value } => Some(*value),
            Preset::Step { limit, .. } => Some(*limit),
            Preset::SineBump { .. } => None,
            Preset::Table { points } => points.last().map(|p| p[1]),
        }
    }
}

fn interpolate(points: &[[f64; 2]], s: f64) -> f64 {
    let k = points.partition_point(|p| p[0] <= s);
    if k == 0 {
        return points[0][1];
    }
    if k == points.len() {
        return points[k - 1][1];
    }
    let ([s0, v0], [s1, v1]) = (points[k - 1], points[k]);
    v0 + (v1 - v0) * (s - s0) / (s1 - s0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Deserialize)]
    struct Holder {
        f: Preset,
    }

    fn parse(s: &str) -> Result<Preset, toml::de::Error> {
        toml::from_str::<Holder>(s).map(|h| h.f)
    }

    #[test]
    fn parses_every_shape() {
        assert_eq!(parse("f = { preset = \"zero\" }").unwrap(), Preset::Zero);
        assert_eq!(parse("f = { preset = \"constant\", value = 2.0 }").unwrap(), Preset::Constant { value: 2.0 });
        assert_eq!(
            parse("f = { preset = \"sine_bump\", amplitude = 1.0 }").unwrap(),
            Preset::SineBump { amplitude: 1.0, mode: 1 }
        );
        assert!(parse("f = { preset = \"table\", points = [[0.0, 1.0], [1.0, 2.0]] }").is_ok());
    }

    #[test]
    fn rejects_unknown_fields_and_names() {
        assert!(parse("f = { preset = \"constant\", value = 2.0, vlaue = 1.0 }").is_err());
        assert!(parse("f = { preset = \"ramp\" }").is_err());
    }

    #[test]
    fn step_approaches_its_limit() {
        let p = Preset::Step { limit: 2.0, rate: 3.0 };
        let f = p.function(1.0);
        assert_eq!(f(0.0), 0.0);
        assert!((f(20.0) - 2.0).abs() < 1e-20);
        assert_eq!(p.limit(), Some(2.0));
    }

    #[test]
    fn sine_bump_vanishes_at_the_ends() {
        let f = Preset::SineBump { amplitude: 1.5, mode: 2 }.function(2.0);
        assert!(f(0.0).abs() < 1e-15 && f(2.0).abs() < 1e-14);
        assert!((f(0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let f = Preset::Table { points: vec![[0.0, 1.0], [1.0, 3.0]] }.function(1.0);
        assert_eq!(f(-1.0), 1.0);
        assert_eq!(f(0.25), 1.5);
        assert_eq!(f(5.0), 3.0);
    }

    #[test]
    fn validation_catches_bad_shapes() {
        assert!(Preset::Step { limit: 1.0, rate: 0.0 }.validate("g1").is_err());
        assert!(Preset::SineBump { amplitude: 1.0, mode: 0 }.validate("u0").is_err());
        assert!(Preset::Table { points: vec![[1.0, 0.0], [0.0, 1.0]] }.validate("g2").is_err());
        assert!(Preset::Constant { value: f64::NAN }.validate("g2").is_err());
    }
}
