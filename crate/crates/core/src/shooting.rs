//! Shooting-method solvers built on the radial integrator and the phase
//! plane: annulus boundary-value solves by bracketing the initial slope,
//! exterior-domain decay classification, the fast-decay threshold search,
//! and slope sweeps mapping out the set of slopes with a finite first zero.

use crate::ivp::{integrate_ivp, IntegratorConfig, IvpError, Rho, ShootingInput, SolutionProfile};
use crate::phase::{
    a0_location, apriori_box, integrate_phase, m0_location, to_phase, PhaseConfig, PhasePoint,
    PhaseStops, PhaseTrajectory, SectionHit, StationaryName, Termination,
};
use crate::pucci::ProblemParams;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct AnnulusRequest {
    pub params: ProblemParams,
    pub inner: f64,
    pub outer: f64,
    /// Acceptable |u| at the outer radius.
    pub boundary_tol: f64,
}

impl AnnulusRequest {
    pub fn new(params: ProblemParams, inner: f64, outer: f64) -> Result<Self, SolveError> {
        if !(inner.is_finite() && outer.is_finite() && 0.0 < inner && inner < outer) {
            return Err(SolveError::InvalidAnnulus { inner, outer });
        }
        Ok(Self {
            params,
            inner,
            outer,
            boundary_tol: 1e-8,
        })
    }

    pub fn with_boundary_tol(mut self, tol: f64) -> Self {
        self.boundary_tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    /// Trajectory reaches the stable point A0: `u ~ r^{-(N_eff - 2)}`.
    Fast,
    /// Trajectory reaches M0: `u ~ r^{-alpha}`.
    Slow,
    /// Recurrent bounded oscillation around M0 between the two rates.
    PseudoSlow,
    /// `u` has a finite first zero.
    Annular,
    /// Budget exhausted without a conclusive signature.
    Undetermined,
}

impl DecayClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayClass::Fast => "fast",
            DecayClass::Slow => "slow",
            DecayClass::PseudoSlow => "pseudo-slow",
            DecayClass::Annular => "annular",
            DecayClass::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub found_delta: f64,
    /// For annulus solves, |u| at the outer radius; for exterior threshold
    /// solves, the closest approach to A0 in phase space.
    pub boundary_residual: f64,
    pub profile: SolutionProfile,
    pub decay: DecayClass,
    /// Every slope probed, in probe order, with the resulting first zero.
    pub bracket_history: Vec<(f64, Rho)>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepEntry {
    pub delta: f64,
    pub rho: Rho,
    pub class: DecayClass,
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Refined boundary of the unbounded connected component of finite-zero
    /// slopes, when the grid brackets one.
    pub delta_star: Option<f64>,
    /// Maximal runs of consecutive finite-zero grid slopes, as index ranges.
    pub annular_components: Vec<(usize, usize)>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid annulus: inner={inner}, outer={outer}")]
    InvalidAnnulus { inner: f64, outer: f64 },
    #[error("bracketing failed between delta={lo} and delta={hi}: {note}")]
    BracketFailure { lo: f64, hi: f64, note: String },
    #[error("no finite-zero / unbounded transition in the slope budget [{lo}, {hi}]")]
    NoTransitionFound { lo: f64, hi: f64 },
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Slope budget for bracket expansion.
    pub delta_min: f64,
    pub delta_max: f64,
    pub expansion_factor: f64,
    /// Relative width at which slope bisection stops.
    pub delta_bracket_rtol: f64,
    /// Radius cap factors (times the inner radius, resp. the outer radius).
    pub rho_r_max_factor: f64,
    pub exterior_r_max_factor: f64,
    pub annulus_r_max_factor: f64,
    /// Time budget for phase-space continuation past the radial cap.
    pub phase_budget: f64,
    /// Capture radius at A0 deciding Fast. Scaled to sit between the closest
    /// approach of a slope resolved to the bracket tolerance (below it) and
    /// that of a slope off by ten bracket widths (above it), given the
    /// generic saddle rates; see find_fast_decay_delta.
    pub fast_ball_radius: f64,
    /// Capture radius at M0 deciding Slow.
    pub slow_ball_radius: f64,
    pub pseudo_min_crossings: usize,
    /// Minimal |z - z0| at the final section crossings for PseudoSlow.
    pub pseudo_min_amplitude: f64,
    pub max_bisection_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
            delta_min: 1e-8,
            delta_max: 1e8,
            expansion_factor: 4.0,
            delta_bracket_rtol: 1e-10,
            rho_r_max_factor: 1e3,
            exterior_r_max_factor: 1e6,
            annulus_r_max_factor: 1e3,
            phase_budget: 200.0,
            fast_ball_radius: 5e-8,
            slow_ball_radius: 1e-4,
            pseudo_min_crossings: 5,
            pseudo_min_amplitude: 1e-6,
            max_bisection_iters: 200,
        }
    }
}

impl SolverConfig {
    pub fn ivp_config(&self, inner: f64, r_max: f64) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::defaults_for(inner).with_r_max(r_max);
        cfg.rel_tol = self.rel_tol;
        cfg.abs_tol = self.abs_tol;
        cfg.max_steps = self.max_steps;
        cfg
    }

    pub fn phase_config(&self) -> PhaseConfig {
        PhaseConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            t_budget: self.phase_budget,
            ball_radius: self.slow_ball_radius,
            x_forward_margin: 0.5,
            ..PhaseConfig::default()
        }
    }
}

/// First zero of the shot solution, integrating out to the standard sweep
/// cap `rho_r_max_factor * inner`.
pub fn rho_of_delta(
    params: &ProblemParams,
    inner: f64,
    delta: f64,
    config: &SolverConfig,
) -> Result<Rho, SolveError> {
    let input = ShootingInput {
        params: *params,
        inner_radius: inner,
        delta,
    };
    let cfg = config.ivp_config(inner, config.rho_r_max_factor * inner);
    Ok(integrate_ivp(&input, &cfg)?.rho)
}

struct Continuation {
    class: DecayClass,
    /// Smallest sampled distance to A0 across the continuation.
    closest_a0: f64,
}

/// Classify the forward fate of a truncated (still positive) profile by
/// continuing it in phase space.
fn continue_in_phase(
    profile: &SolutionProfile,
    config: &SolverConfig,
) -> Result<Continuation, SolveError> {
    let params = profile.input.params;
    let traj = to_phase(profile).map_err(|e| SolveError::BracketFailure {
        lo: profile.input.delta,
        hi: profile.input.delta,
        note: format!("phase mapping failed: {e}"),
    })?;
    let seed = traj.last();
    let (ax, az) = a0_location(&params);
    let mut closest_a0 = f64::INFINITY;
    for p in &traj.points {
        let d = ((p.x - ax).powi(2) + (p.z - az).powi(2)).sqrt();
        closest_a0 = closest_a0.min(d);
    }

    // Past the blow-up threshold the x' sign is fixed positive, so x escapes
    // in finite time and the first zero is finite: conclusively annular. A
    // radial run truncated deep into that regime can arrive with x far past
    // the stop, where the crossing event can no longer fire.
    let x_escape = params.n_effective() - 2.0 + 0.5;
    if seed.x >= x_escape {
        return Ok(Continuation {
            class: DecayClass::Annular,
            closest_a0,
        });
    }

    let (alpha, z0) = m0_location(&params);
    let stops = PhaseStops {
        x_hi: Some(x_escape),
        x_lo: None,
        a0_ball: Some(config.fast_ball_radius),
        m0_ball: if z0 > 2.0 * config.slow_ball_radius {
            Some(config.slow_ball_radius)
        } else {
            None
        },
        section_x: Some(alpha),
    };
    let phase_cfg = config.phase_config();
    let run = integrate_phase(
        &params,
        seed,
        config.phase_budget,
        false,
        &stops,
        &phase_cfg,
    );

    for p in &run.points {
        let d = ((p.x - ax).powi(2) + (p.z - az).powi(2)).sqrt();
        closest_a0 = closest_a0.min(d);
    }

    let class = match run.termination {
        Termination::BlowupForwardX => DecayClass::Annular,
        Termination::ConvergedToStationary(StationaryName::A0) => DecayClass::Fast,
        Termination::ConvergedToStationary(StationaryName::M0) => DecayClass::Slow,
        Termination::ConvergedToStationary(StationaryName::O) => DecayClass::Undetermined,
        Termination::BlowupBackward2Q => DecayClass::Undetermined,
        Termination::SectionBudget => pseudo_slow_or_undetermined(&run, z0, config),
    };
    // A terminal ball hit locates the crossing exactly; sampling may miss it.
    if matches!(
        run.termination,
        Termination::ConvergedToStationary(StationaryName::A0)
    ) {
        closest_a0 = closest_a0.min(config.fast_ball_radius);
    }
    Ok(Continuation { class, closest_a0 })
}

fn pseudo_slow_or_undetermined(
    run: &PhaseTrajectory,
    z0: f64,
    config: &SolverConfig,
) -> DecayClass {
    if run.section_hits.len() < config.pseudo_min_crossings {
        return DecayClass::Undetermined;
    }
    let amp_floor = config.pseudo_min_amplitude * z0.max(1.0);
    let recent: Vec<&SectionHit> = run.section_hits.iter().rev().take(2).collect();
    if recent.iter().any(|h| (h.point.z - z0).abs() < amp_floor) {
        return DecayClass::Undetermined;
    }
    let (x_hi, z_hi) = apriori_box(&run.params);
    let confined = run
        .points
        .iter()
        .all(|p| p.x > 0.0 && p.x < x_hi && p.z > 0.0 && p.z < z_hi);
    if confined {
        DecayClass::PseudoSlow
    } else {
        DecayClass::Undetermined
    }
}

/// Decay classification of the exterior shot from radius `big_r` with slope
/// `delta`: radial integration to the exterior cap, then phase continuation.
pub fn classify_decay(
    params: &ProblemParams,
    big_r: f64,
    delta: f64,
    config: &SolverConfig,
) -> Result<DecayClass, SolveError> {
    let input = ShootingInput {
        params: *params,
        inner_radius: big_r,
        delta,
    };
    let cfg = config.ivp_config(big_r, config.exterior_r_max_factor * big_r);
    let profile = integrate_ivp(&input, &cfg)?;
    match profile.rho {
        Rho::FirstZero(_) => Ok(DecayClass::Annular),
        Rho::Truncated(_) => Ok(continue_in_phase(&profile, config)?.class),
    }
}

/// Side test for threshold bisection: does this slope produce a finite first
/// zero (directly or by conclusive phase blow-up)?
fn is_annular_side(
    params: &ProblemParams,
    big_r: f64,
    delta: f64,
    config: &SolverConfig,
) -> Result<(bool, Rho, f64), SolveError> {
    let input = ShootingInput {
        params: *params,
        inner_radius: big_r,
        delta,
    };
    let cfg = config.ivp_config(big_r, config.exterior_r_max_factor * big_r);
    let profile = integrate_ivp(&input, &cfg)?;
    match profile.rho {
        Rho::FirstZero(_) => Ok((true, profile.rho, f64::INFINITY)),
        Rho::Truncated(_) => {
            let cont = continue_in_phase(&profile, config)?;
            Ok((
                cont.class == DecayClass::Annular,
                profile.rho,
                cont.closest_a0,
            ))
        }
    }
}

/// Locate the fast-decay threshold slope for the exterior problem on
/// `(big_r, infinity)`: the boundary between the finite-zero regime (large
/// slopes) and the unbounded regime (small slopes).
pub fn find_fast_decay_delta(
    params: &ProblemParams,
    big_r: f64,
    config: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let mut history: Vec<(f64, Rho)> = Vec::new();
    let mut probe = |delta: f64| -> Result<(bool, f64), SolveError> {
        let (annular, rho, closest) = is_annular_side(params, big_r, delta, config)?;
        history.push((delta, rho));
        Ok((annular, closest))
    };

    // Geometric expansion from slope 1 to bracket the transition.
    let start = 1.0f64.clamp(config.delta_min, config.delta_max);
    let (first_annular, _) = probe(start)?;
    let (mut lo, mut hi) = (start, start);
    if first_annular {
        loop {
            lo /= config.expansion_factor;
            if lo < config.delta_min {
                return Err(SolveError::NoTransitionFound {
                    lo: config.delta_min,
                    hi: start,
                });
            }
            if !probe(lo)?.0 {
                break;
            }
        }
        hi = lo * config.expansion_factor;
    } else {
        loop {
            hi *= config.expansion_factor;
            if hi > config.delta_max {
                return Err(SolveError::NoTransitionFound {
                    lo: start,
                    hi: config.delta_max,
                });
            }
            if probe(hi)?.0 {
                break;
            }
        }
        lo = hi / config.expansion_factor;
    }

    // Bisection: geometric while the bracket spans more than a factor two.
    let mut iters = 0usize;
    while hi - lo > config.delta_bracket_rtol * hi {
        iters += 1;
        if iters > config.max_bisection_iters {
            return Err(SolveError::BracketFailure {
                lo,
                hi,
                note: "bisection iteration cap reached".into(),
            });
        }
        let mid = if hi / lo > 2.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if probe(mid)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let found = 0.5 * (lo + hi);
    let input = ShootingInput {
        params: *params,
        inner_radius: big_r,
        delta: found,
    };
    let cfg = config.ivp_config(big_r, config.exterior_r_max_factor * big_r);
    let profile = integrate_ivp(&input, &cfg)?;
    let (closest, class) = match profile.rho {
        Rho::FirstZero(_) => (f64::INFINITY, DecayClass::Annular),
        Rho::Truncated(_) => {
            let cont = continue_in_phase(&profile, config)?;
            (cont.closest_a0, cont.class)
        }
    };
    // A slope resolved to the bracket tolerance stands for the exact
    // threshold inside it, whose trajectory is the stable manifold of A0.
    let decay = if closest <= 20.0 * config.fast_ball_radius || class == DecayClass::Fast {
        DecayClass::Fast
    } else {
        class
    };
    let diagnostics = vec![
        format!("bracket=[{lo}, {hi}]"),
        format!("relative_width={}", (hi - lo) / found),
        format!("closest_approach_to_a0={closest}"),
        format!("probes={}", history.len()),
    ];
    Ok(SolveReport {
        found_delta: found,
        boundary_residual: closest,
        profile,
        decay,
        bracket_history: history,
        diagnostics,
    })
}

/// Solve the annulus problem by bracketing the slope whose first zero is the
/// outer radius.
pub fn solve_annulus(
    request: &AnnulusRequest,
    config: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let AnnulusRequest {
        params,
        inner,
        outer,
        boundary_tol,
    } = *request;
    if !(inner < outer) {
        return Err(SolveError::InvalidAnnulus { inner, outer });
    }
    let mut history: Vec<(f64, Rho)> = Vec::new();

    // Side probe at the outer radius: a first zero before it puts the slope
    // on the high side; still positive at it, on the low side.
    let side_cfg = config.ivp_config(inner, outer);
    let mut side = |delta: f64| -> Result<(bool, f64), SolveError> {
        let input = ShootingInput {
            params,
            inner_radius: inner,
            delta,
        };
        let profile = integrate_ivp(&input, &side_cfg)?;
        let (high, boundary_u) = match profile.rho {
            Rho::FirstZero(_) => (true, 0.0),
            Rho::Truncated(_) => (false, profile.last().u),
        };
        history.push((delta, profile.rho));
        Ok((high, boundary_u))
    };

    // Expansion: a large enough slope zeroes before the outer radius, a
    // small enough one stays positive through it.
    let start = 1.0f64.clamp(config.delta_min, config.delta_max);
    let (start_high, start_u) = side(start)?;
    if !start_high && start_u.abs() <= boundary_tol {
        return finish_annulus(request, start, &history, config);
    }
    let (mut lo, mut hi) = (start, start);
    if start_high {
        loop {
            lo /= config.expansion_factor;
            if lo < config.delta_min {
                return Err(SolveError::BracketFailure {
                    lo: config.delta_min,
                    hi: start,
                    note: "no slope with first zero beyond the outer radius".into(),
                });
            }
            if !side(lo)?.0 {
                break;
            }
        }
        hi = lo * config.expansion_factor;
    } else {
        loop {
            hi *= config.expansion_factor;
            if hi > config.delta_max {
                return Err(SolveError::BracketFailure {
                    lo: start,
                    hi: config.delta_max,
                    note: "no slope with first zero inside the outer radius".into(),
                });
            }
            if side(hi)?.0 {
                break;
            }
        }
        lo = hi / config.expansion_factor;
    }

    // Bisection until the boundary value is below tolerance on the low side.
    let mut best: Option<f64> = None;
    for _ in 0..config.max_bisection_iters {
        let mid = if hi / lo > 2.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at float resolution
        }
        let (high, boundary_u) = side(mid)?;
        if high {
            hi = mid;
        } else {
            lo = mid;
            best = Some(mid);
            if boundary_u.abs() <= boundary_tol {
                return finish_annulus(request, mid, &history, config);
            }
        }
    }
    Err(SolveError::BracketFailure {
        lo,
        hi,
        note: format!(
            "boundary value did not reach tolerance {boundary_tol}; best low-side slope {best:?}"
        ),
    })
}

fn finish_annulus(
    request: &AnnulusRequest,
    delta: f64,
    history: &[(f64, Rho)],
    config: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let AnnulusRequest {
        params,
        inner,
        outer,
        boundary_tol,
    } = *request;
    let input = ShootingInput {
        params,
        inner_radius: inner,
        delta,
    };
    let profile = integrate_ivp(&input, &config.ivp_config(inner, outer))?;
    let boundary_residual = match profile.rho {
        Rho::FirstZero(_) => 0.0,
        Rho::Truncated(_) => profile.last().u.abs(),
    };
    let interior_min = profile
        .samples
        .iter()
        .filter(|s| s.r > inner && s.r < outer * (1.0 - 1e-12))
        .map(|s| s.u)
        .fold(f64::INFINITY, f64::min);
    let sign_changes = profile
        .samples
        .windows(2)
        .filter(|w| w[0].du.signum() != w[1].du.signum() && w[0].du != 0.0 && w[1].du != 0.0)
        .count();
    let mut diagnostics = vec![
        format!("boundary_residual={boundary_residual}"),
        format!("interior_min_u={interior_min}"),
        format!("du_sign_changes={sign_changes}"),
        format!("probes={}", history.len()),
    ];
    if boundary_residual > boundary_tol {
        diagnostics.push("warning: boundary residual above tolerance".into());
    }
    if interior_min <= 0.0 {
        diagnostics.push("warning: interior positivity violated".into());
    }
    Ok(SolveReport {
        found_delta: delta,
        boundary_residual,
        profile,
        decay: DecayClass::Annular,
        bracket_history: history.to_vec(),
        diagnostics,
    })
}

/// Solve for a negative annular solution of the stated operator by solving
/// the positive problem for the swapped operator and negating.
pub fn solve_negative(
    request: &AnnulusRequest,
    config: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let swapped_request = AnnulusRequest {
        params: request.params.swapped(),
        inner: request.inner,
        outer: request.outer,
        boundary_tol: request.boundary_tol,
    };
    let mut report = solve_annulus(&swapped_request, config)?;
    for s in &mut report.profile.samples {
        s.u = -s.u;
        s.du = -s.du;
    }
    report.profile.input = ShootingInput {
        params: request.params,
        inner_radius: request.inner,
        delta: -report.found_delta,
    };
    report.found_delta = -report.found_delta;
    report
        .diagnostics
        .push("negative solution via operator swap".into());
    Ok(report)
}

/// Tabulate the first zero and decay class over a slope grid, in parallel,
/// and refine the lower edge of the top annular component.
///
/// The first-zero column is truncated at the tabulation cap
/// (`rho_r_max_factor`), but component membership and the refined edge come
/// from the full classifier, so the reported threshold agrees with
/// [`find_fast_decay_delta`] instead of drifting with the cap.
pub fn explore_d(
    params: &ProblemParams,
    inner: f64,
    delta_grid: &[f64],
    config: &SolverConfig,
) -> SweepReport {
    let entries: Vec<SweepEntry> = delta_grid
        .par_iter()
        .map(|&delta| {
            let input = ShootingInput {
                params: *params,
                inner_radius: inner,
                delta,
            };
            let cfg = config.ivp_config(inner, config.rho_r_max_factor * inner);
            match integrate_ivp(&input, &cfg) {
                Err(_) => SweepEntry {
                    delta,
                    rho: Rho::Truncated(f64::NAN),
                    class: DecayClass::Undetermined,
                    failed: true,
                },
                Ok(profile) => {
                    let class = match profile.rho {
                        Rho::FirstZero(_) => DecayClass::Annular,
                        Rho::Truncated(_) => continue_in_phase(&profile, config)
                            .map(|c| c.class)
                            .unwrap_or(DecayClass::Undetermined),
                    };
                    SweepEntry {
                        delta,
                        rho: profile.rho,
                        class,
                        failed: false,
                    }
                }
            }
        })
        .collect();

    let annular: Vec<bool> = entries
        .iter()
        .map(|e| !e.failed && e.class == DecayClass::Annular)
        .collect();
    let mut annular_components = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, &f) in annular.iter().enumerate() {
        match (f, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                annular_components.push((s, i - 1));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        annular_components.push((s, annular.len() - 1));
    }

    // Refine the lower edge of the top component when the grid brackets it.
    let delta_star = annular_components.last().and_then(|&(s, e)| {
        if s == 0 || e != annular.len() - 1 {
            return None;
        }
        let (mut lo, mut hi) = (entries[s - 1].delta, entries[s].delta);
        for _ in 0..config.max_bisection_iters {
            if hi - lo <= config.delta_bracket_rtol * hi {
                break;
            }
            let mid = if hi / lo > 2.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            match is_annular_side(params, inner, mid, config) {
                Ok((true, _, _)) => hi = mid,
                Ok(_) => lo = mid,
                Err(_) => return None,
            }
        }
        Some(0.5 * (lo + hi))
    });

    SweepReport {
        entries,
        delta_star,
        annular_components,
    }
}

/// Least-squares slope of `ln u` against `ln r` over the samples inside
/// `[r_lo, r_hi]`; `None` with fewer than a dozen positive samples there.
pub fn fit_decay_exponent(profile: &SolutionProfile, r_lo: f64, r_hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = profile
        .samples
        .iter()
        .filter(|s| s.r >= r_lo && s.r <= r_hi && s.u > 0.0)
        .map(|s| (s.r.ln(), s.u.ln()))
        .collect();
    if pts.len() < 12 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Continue a truncated exterior profile in phase space with no stopping
/// conditions, for reconstructing far-field behavior past the radial cap.
pub fn phase_tail(
    profile: &SolutionProfile,
    extra_t: f64,
    config: &SolverConfig,
) -> Result<PhaseTrajectory, SolveError> {
    let traj = to_phase(profile).map_err(|e| SolveError::BracketFailure {
        lo: profile.input.delta,
        hi: profile.input.delta,
        note: format!("phase mapping failed: {e}"),
    })?;
    let seed: PhasePoint = traj.last();
    let phase_cfg = config.phase_config();
    Ok(integrate_phase(
        &profile.input.params,
        seed,
        extra_t,
        false,
        &PhaseStops::default(),
        &phase_cfg,
    ))
}
