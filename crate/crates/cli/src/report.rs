//! Deterministic artifact writers.
//!
//! Summaries are sectioned `key=value` text, tables are CSV with a fixed
//! header row, and every float is printed with `{}` (shortest representation
//! that round-trips). Identical settings therefore produce byte-identical
//! files, which the regression tests rely on.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use henon_core::{
    energy_samples, to_phase, PhaseTrajectory, ProblemParams, Rho, SolutionProfile, SolverConfig,
};

use crate::settings::Settings;

/// Shortest round-trip float formatting with lowercase specials.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// Ordered sectioned key-value document.
pub struct Summary {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl Summary {
    pub fn new() -> Self {
        Summary {
            sections: Vec::new(),
        }
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        self.sections.push((name.to_string(), Vec::new()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        let (_, entries) = self.sections.last_mut().expect("push before any section");
        entries.push((key.to_string(), value.into()));
        self
    }

    pub fn push_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, fmt_f64(value))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k}={v}");
            }
        }
        out
    }
}

/// Standard opening sections shared by every command: the run identity, the
/// derived exponents, and the solver tolerances actually in effect.
pub fn base_summary(command: &str, settings: &Settings, params: &ProblemParams) -> Summary {
    let mut s = Summary::new();
    s.section("run");
    s.push("command", command);
    s.push("operator", params.variant.as_str());
    s.push_f64("lambda", params.lambda);
    s.push_f64("Lambda", params.big_lambda);
    s.push("N", params.dim.to_string());
    s.push_f64("p", params.p);
    s.push_f64("a", params.a);
    s.push("seed", settings.seed.to_string());

    s.section("exponents");
    s.push_f64("n_plus", params.exponents.n_plus);
    s.push_f64("n_minus", params.exponents.n_minus);
    s.push_f64("n_effective", params.n_effective());
    s.push_f64("p_serrin", params.exponents.p_serrin);
    s.push_f64("p_pseudo", params.exponents.p_pseudo);
    s.push_f64("p_laplace", params.exponents.p_laplace);
    s.push_f64("alpha", params.exponents.alpha);
    s
}

/// Echo the full solver configuration so no tolerance is a silent default.
pub fn solver_section(s: &mut Summary, config: &SolverConfig, boundary_tol: f64) {
    s.section("solver");
    s.push_f64("rel_tol", config.rel_tol);
    s.push_f64("abs_tol", config.abs_tol);
    s.push("max_steps", config.max_steps.to_string());
    s.push_f64("boundary_tol", boundary_tol);
    s.push_f64("delta_min", config.delta_min);
    s.push_f64("delta_max", config.delta_max);
    s.push_f64("expansion_factor", config.expansion_factor);
    s.push_f64("delta_bracket_rtol", config.delta_bracket_rtol);
    s.push_f64("rho_r_max_factor", config.rho_r_max_factor);
    s.push_f64("exterior_r_max_factor", config.exterior_r_max_factor);
    s.push_f64("annulus_r_max_factor", config.annulus_r_max_factor);
    s.push_f64("phase_budget", config.phase_budget);
    s.push_f64("fast_ball_radius", config.fast_ball_radius);
    s.push_f64("slow_ball_radius", config.slow_ball_radius);
    s.push(
        "pseudo_min_crossings",
        config.pseudo_min_crossings.to_string(),
    );
    s.push_f64("pseudo_min_amplitude", config.pseudo_min_amplitude);
    s.push(
        "max_bisection_iters",
        config.max_bisection_iters.to_string(),
    );
}

pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub const PROFILE_HEADER: &str = "r,u,uprime,x,z,small_energy,big_energy";

/// Profile table rows. The plane coordinates mirror the sign of `u` so the
/// negative branch tabulates the reflection of its positive twin; endpoint
/// zeros of `u` have no plane image and print as nan.
pub fn profile_csv(profile: &SolutionProfile) -> String {
    let params = &profile.input.params;
    let energies = energy_samples(profile);
    assert_eq!(energies.len(), profile.samples.len());
    let rows = profile.samples.iter().zip(&energies).map(|(s, e)| {
        let (x, z) = if s.u == 0.0 {
            (f64::NAN, f64::NAN)
        } else {
            (
                -s.r * s.du / s.u,
                s.r.powf(2.0 + params.a) * s.u.abs().powf(params.p - 1.0) * s.u.signum(),
            )
        };
        format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(s.r),
            fmt_f64(s.u),
            fmt_f64(s.du),
            fmt_f64(x),
            fmt_f64(z),
            fmt_f64(e.small_energy),
            fmt_f64(e.big_energy)
        )
    });
    csv(PROFILE_HEADER, rows)
}

pub const PHASE_HEADER: &str = "t,x,z";

pub fn phase_csv(traj: &PhaseTrajectory) -> String {
    let rows = traj
        .points
        .iter()
        .map(|p| format!("{},{},{}", fmt_f64(p.t), fmt_f64(p.x), fmt_f64(p.z)));
    csv(PHASE_HEADER, rows)
}

/// Plane trajectory of a profile. Negative profiles are mapped through their
/// positive reflection, which solves the swapped operator.
pub fn profile_phase(profile: &SolutionProfile) -> anyhow::Result<PhaseTrajectory> {
    let negative = profile.samples.iter().any(|s| s.u < 0.0);
    if !negative {
        return to_phase(profile).map_err(|e| anyhow::anyhow!("plane mapping failed: {e}"));
    }
    let mut twin = profile.clone();
    for s in &mut twin.samples {
        s.u = -s.u;
        s.du = -s.du;
    }
    twin.input.params = profile.input.params.swapped();
    twin.input.delta = -profile.input.delta;
    to_phase(&twin).map_err(|e| anyhow::anyhow!("plane mapping failed: {e}"))
}

pub const BRACKET_HEADER: &str = "delta,rho,rho_kind";

pub fn bracket_csv(history: &[(f64, Rho)]) -> String {
    let rows = history.iter().map(|(delta, rho)| {
        format!(
            "{},{},{}",
            fmt_f64(*delta),
            fmt_f64(rho.radius()),
            rho_kind(*rho)
        )
    });
    csv(BRACKET_HEADER, rows)
}

pub fn rho_kind(rho: Rho) -> &'static str {
    match rho {
        Rho::FirstZero(_) => "first_zero",
        Rho::Truncated(_) => "truncated",
    }
}

/// Profile facts every solve summary reports.
pub fn profile_section(s: &mut Summary, profile: &SolutionProfile) {
    s.push_f64("rho", profile.rho.radius());
    s.push("rho_kind", rho_kind(profile.rho));
    s.push_f64("tau", profile.tau.unwrap_or(f64::NAN));
    s.push("switch_count", profile.switch_radii.len().to_string());
    s.push("samples", profile.samples.len().to_string());
    s.push("steps", profile.steps.to_string());
    s.push("rhs_evals", profile.rhs_evals.to_string());
}
