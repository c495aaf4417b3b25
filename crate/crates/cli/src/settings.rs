//! Run settings assembled from defaults, an optional config file, and
//! command line flags, in that order of precedence.
//!
//! The config file is a flat key-value format with `[section]` headers,
//! `#` comments, and `key = value` lines:
//!
//! ```text
//! [problem]
//! operator = plus
//! lambda = 1.0
//! Lambda = 1.5
//! N = 4
//! p = 4.0
//! a = 0.0
//!
//! [geometry]
//! inner = 1.0
//! outer = 2.0
//! ```
//!
//! Every parse failure names the file, line, and field.

use std::path::{Path, PathBuf};

use henon_core::{OperatorVariant, ProblemParams, SolverConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExteriorMode {
    Fast,
    Delta,
    Sweep,
}

impl ExteriorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExteriorMode::Fast => "fast",
            ExteriorMode::Delta => "delta",
            ExteriorMode::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(ExteriorMode::Fast),
            "delta" => Ok(ExteriorMode::Delta),
            "sweep" => Ok(ExteriorMode::Sweep),
            other => Err(format!("expected fast, delta, or sweep, got `{other}`")),
        }
    }
}

/// Fully resolved run settings. Field defaults are the documented baseline;
/// the summary echoes every value that influenced a run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub operator: OperatorVariant,
    pub lambda: f64,
    pub big_lambda: f64,
    pub dim: u32,
    pub p: f64,
    pub a: f64,

    pub inner: Option<f64>,
    pub outer: Option<f64>,
    pub exterior_r: Option<f64>,

    pub rel_tol: f64,
    pub abs_tol: f64,
    pub boundary_tol: f64,
    pub budget: usize,
    pub seed: u64,

    pub mode: ExteriorMode,
    pub delta: Option<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub grid: usize,

    pub fan: usize,
    pub negative: bool,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            operator: OperatorVariant::Plus,
            lambda: 1.0,
            big_lambda: 1.5,
            dim: 4,
            p: 4.0,
            a: 0.0,
            inner: None,
            outer: None,
            exterior_r: None,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            boundary_tol: 1e-8,
            budget: 10_000,
            seed: 42,
            mode: ExteriorMode::Fast,
            delta: None,
            delta_min: 1e-2,
            delta_max: 1e2,
            grid: 50,
            fan: 8,
            negative: false,
            out: None,
        }
    }
}

impl Settings {
    pub fn apply_config_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let path_str = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path_str.clone(),
            source,
        })?;
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some(rest) = t.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(ConfigError::Parse {
                        path: path_str,
                        line,
                        msg: "unterminated section header".into(),
                    });
                };
                let name = name.trim();
                const SECTIONS: [&str; 6] = [
                    "problem", "geometry", "solver", "exterior", "portrait", "output",
                ];
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::Parse {
                        path: path_str,
                        line,
                        msg: format!("unknown section [{name}]"),
                    });
                }
                section = name.to_string();
                continue;
            }
            let Some((k, v)) = t.split_once('=') else {
                return Err(ConfigError::Parse {
                    path: path_str,
                    line,
                    msg: format!("expected `key = value`, got `{t}`"),
                });
            };
            self.set_key(&section, k.trim(), v.trim())
                .map_err(|msg| ConfigError::Parse {
                    path: path_str.clone(),
                    line,
                    msg,
                })?;
        }
        Ok(())
    }

    fn set_key(&mut self, section: &str, key: &str, val: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(field: &str, val: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            val.parse::<T>()
                .map_err(|e| format!("invalid value for {field}: {e}"))
        }

        match (section, key) {
            ("problem", "operator") => {
                self.operator = match val {
                    "plus" => OperatorVariant::Plus,
                    "minus" => OperatorVariant::Minus,
                    other => return Err(format!(
                        "invalid value for problem.operator: expected plus or minus, got `{other}`"
                    )),
                }
            }
            ("problem", "lambda") => self.lambda = num("problem.lambda", val)?,
            ("problem", "Lambda") => self.big_lambda = num("problem.Lambda", val)?,
            ("problem", "N") => self.dim = num("problem.N", val)?,
            ("problem", "p") => self.p = num("problem.p", val)?,
            ("problem", "a") => self.a = num("problem.a", val)?,
            ("geometry", "inner") => self.inner = Some(num("geometry.inner", val)?),
            ("geometry", "outer") => self.outer = Some(num("geometry.outer", val)?),
            ("geometry", "R") => self.exterior_r = Some(num("geometry.R", val)?),
            ("solver", "rel_tol") => self.rel_tol = num("solver.rel_tol", val)?,
            ("solver", "abs_tol") => self.abs_tol = num("solver.abs_tol", val)?,
            ("solver", "boundary_tol") => self.boundary_tol = num("solver.boundary_tol", val)?,
            ("solver", "budget") => self.budget = num("solver.budget", val)?,
            ("solver", "seed") => self.seed = num("solver.seed", val)?,
            ("exterior", "mode") => {
                self.mode = ExteriorMode::parse(val)
                    .map_err(|e| format!("invalid value for exterior.mode: {e}"))?
            }
            ("exterior", "delta") => self.delta = Some(num("exterior.delta", val)?),
            ("exterior", "delta_min") => self.delta_min = num("exterior.delta_min", val)?,
            ("exterior", "delta_max") => self.delta_max = num("exterior.delta_max", val)?,
            ("exterior", "grid") => self.grid = num("exterior.grid", val)?,
            ("portrait", "fan") => self.fan = num("portrait.fan", val)?,
            ("output", "out") => self.out = Some(PathBuf::from(val)),
            ("", k) => return Err(format!("key `{k}` appears before any [section] header")),
            (s, k) => return Err(format!("unknown key `{k}` in section [{s}]")),
        }
        Ok(())
    }

    /// Validated operator parameters for the configured problem.
    pub fn params(&self) -> Result<ProblemParams, ConfigError> {
        ProblemParams::new(
            self.operator,
            self.lambda,
            self.big_lambda,
            self.dim,
            self.p,
            self.a,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    /// Solver configuration with the configured tolerances substituted in.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..SolverConfig::default()
        }
    }

    /// Annulus geometry; rejects missing radii, inverted order, and a
    /// simultaneous exterior radius.
    pub fn require_annulus(&self) -> Result<(f64, f64), ConfigError> {
        if self.exterior_r.is_some() {
            return Err(invalid(
                "geometry is mutually exclusive: give --inner/--outer for an annulus or --R for an exterior domain, not both",
            ));
        }
        let (Some(inner), Some(outer)) = (self.inner, self.outer) else {
            return Err(invalid("an annulus run requires both --inner and --outer"));
        };
        if !(inner > 0.0) {
            return Err(invalid(format!(
                "inner radius must be positive, got inner={inner}"
            )));
        }
        if inner >= outer {
            return Err(invalid(format!(
                "inner radius must be strictly smaller than outer radius, got inner={inner}, outer={outer}"
            )));
        }
        Ok((inner, outer))
    }

    /// Exterior geometry; rejects a missing radius and annulus flags.
    pub fn require_exterior(&self) -> Result<f64, ConfigError> {
        if self.inner.is_some() || self.outer.is_some() {
            return Err(invalid(
                "geometry is mutually exclusive: give --R for an exterior domain or --inner/--outer for an annulus, not both",
            ));
        }
        let Some(r) = self.exterior_r else {
            return Err(invalid("an exterior run requires --R"));
        };
        if !(r > 0.0) {
            return Err(invalid(format!(
                "exterior radius must be positive, got R={r}"
            )));
        }
        Ok(r)
    }

    /// Output directory: `--out` flag or config, else `HENON_OUT`, else
    /// `./henon-out`.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(out) = &self.out {
            return out.clone();
        }
        if let Ok(env) = std::env::var("HENON_OUT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from("henon-out")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_round_trip() {
        let dir = std::env::temp_dir().join("henon-settings-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("good.conf");
        std::fs::write(
            &path,
            "# sample\n[problem]\noperator = minus\np = 6.5\n[geometry]\ninner = 2\nouter = 3\n[solver]\nseed = 7\n",
        )
        .unwrap();
        let mut s = Settings::default();
        s.apply_config_file(&path).unwrap();
        assert_eq!(s.operator, OperatorVariant::Minus);
        assert_eq!(s.p, 6.5);
        assert_eq!(s.require_annulus().unwrap(), (2.0, 3.0));
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn parse_errors_carry_line_and_field() {
        let dir = std::env::temp_dir().join("henon-settings-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.conf");
        std::fs::write(&path, "[problem]\nlambda = abc\n").unwrap();
        let mut s = Settings::default();
        let err = s.apply_config_file(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "line missing from {err}");
        assert!(err.contains("problem.lambda"), "field missing from {err}");

        let path = dir.join("unknown.conf");
        std::fs::write(&path, "[problem]\nlamda = 1.0\n").unwrap();
        let err = s.apply_config_file(&path).unwrap_err().to_string();
        assert!(
            err.contains("lamda") && err.contains(":2:"),
            "bad message {err}"
        );
    }

    #[test]
    fn geometry_exclusivity_is_enforced() {
        let mut s = Settings::default();
        s.inner = Some(1.0);
        s.outer = Some(2.0);
        s.exterior_r = Some(1.0);
        assert!(s.require_annulus().is_err());
        assert!(s.require_exterior().is_err());
        s.exterior_r = None;
        assert!(s.require_annulus().is_ok());
        let mut s = Settings::default();
        s.inner = Some(3.0);
        s.outer = Some(2.0);
        let msg = s.require_annulus().unwrap_err().to_string();
        assert!(
            msg.contains("strictly smaller"),
            "constraint not named: {msg}"
        );
    }
}
