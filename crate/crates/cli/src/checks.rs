//! The property suite behind `henon check-invariants`: qualitative flow
//! directions, stationary classifications against an independent finite
//! difference Jacobian, energy monotonicity and the bounds it implies,
//! second-quadrant blow-up envelopes, exact singular profiles, return-map
//! amplitude trends, and the plane/profile round trip.
//!
//! Checks that do not apply to the configured regime are reported as SKIP
//! with the reason; the command fails only on FAIL records.

use henon_core::phase::{
    blowup_bound_2q, flow_direction_audit, m0_location, numerical_jacobian,
    same_direction_crossings, stable_manifold_a0,
};
use henon_core::{
    from_phase, integrate_ivp, monotonicity_audit, poincare_return, small_delta_bound,
    solve_annulus, stationary_points, time_map_bound, to_phase, AnnulusRequest, Classification,
    OperatorVariant, PhaseConfig, PhasePoint, ProblemParams, Rho, SolutionProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::fmt_f64;
use crate::settings::Settings;

pub const ENERGY_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

pub struct CheckRecord {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl CheckRecord {
    pub fn line(&self) -> String {
        format!("{}: {} ({})", self.name, self.status.as_str(), self.detail)
    }
}

fn pass(name: &'static str, detail: String) -> CheckRecord {
    CheckRecord {
        name,
        status: Status::Pass,
        detail,
    }
}

fn fail(name: &'static str, detail: String) -> CheckRecord {
    CheckRecord {
        name,
        status: Status::Fail,
        detail,
    }
}

fn skip(name: &'static str, detail: String) -> CheckRecord {
    CheckRecord {
        name,
        status: Status::Skip,
        detail,
    }
}

pub fn run_all(settings: &Settings, params: &ProblemParams) -> anyhow::Result<Vec<CheckRecord>> {
    let mut records = Vec::new();

    records.push(flow_check("flow_directions", params, settings.budget));
    match ProblemParams::new(
        params.variant.swapped_variant(),
        params.lambda,
        params.big_lambda,
        params.dim,
        params.p,
        params.a,
    ) {
        Ok(swapped) => records.push(flow_check(
            "flow_directions_swapped",
            &swapped,
            settings.budget,
        )),
        Err(e) => records.push(skip(
            "flow_directions_swapped",
            format!("invalid swap: {e}"),
        )),
    }

    records.push(stationary_consistency(settings.seed));
    records.push(singular_residual(params));

    let annulus = annulus_profile(settings, params);
    match &annulus {
        Ok(profile) => {
            records.push(energy_monotonicity(profile));
            records.push(boundary_consistency(settings, profile));
            records.push(small_delta(profile));
            records.push(time_map(profile));
            records.push(roundtrip(profile));
            records.push(two_q_launch_tail(profile, params));
        }
        Err(e) => {
            for name in [
                "annulus_energy",
                "boundary_consistency",
                "small_delta_bound",
                "time_map_bound",
                "plane_roundtrip",
                "two_q_envelope",
            ] {
                records.push(skip(name, format!("annulus solve failed: {e}")));
            }
        }
    }

    let phase_config = PhaseConfig {
        rel_tol: settings.rel_tol,
        abs_tol: settings.abs_tol,
        ..PhaseConfig::default()
    };
    records.push(upsilon_envelope(params, &phase_config));
    records.push(return_amplitudes(params, &phase_config));

    Ok(records)
}

trait SwapVariant {
    fn swapped_variant(self) -> Self;
}

impl SwapVariant for OperatorVariant {
    fn swapped_variant(self) -> Self {
        match self {
            OperatorVariant::Plus => OperatorVariant::Minus,
            OperatorVariant::Minus => OperatorVariant::Plus,
        }
    }
}

fn flow_check(name: &'static str, params: &ProblemParams, budget: usize) -> CheckRecord {
    let report = flow_direction_audit(params, budget);
    if report.violations.is_empty() {
        pass(name, format!("checks={} violations=0", report.checks))
    } else {
        let first = &report.violations[0];
        fail(
            name,
            format!(
                "checks={} violations={} first at (x={}, z={}): {}",
                report.checks,
                report.violations.len(),
                fmt_f64(first.x),
                fmt_f64(first.z),
                first.detail
            ),
        )
    }
}

/// Classify each stationary point of seeded random parameter sets from the
/// finite-difference Jacobian alone and compare with the reported label.
fn stationary_consistency(seed: u64) -> CheckRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = 0usize;
    let mut mismatches = Vec::new();
    let mut sets = 0usize;
    while sets < 10 {
        let lambda = rng.gen_range(0.5..2.0);
        let big_lambda = lambda * rng.gen_range(1.0..2.5);
        let dim = rng.gen_range(3..8u32);
        let a = rng.gen_range(0.0..2.0);
        let variant = if sets % 2 == 0 {
            OperatorVariant::Plus
        } else {
            OperatorVariant::Minus
        };
        let Ok(base) = ProblemParams::new(variant, lambda, big_lambda, dim, 2.5, a) else {
            continue;
        };
        let (ps, pp) = (base.exponents.p_serrin, base.exponents.p_pseudo);
        let t = rng.gen_range(0.1..0.9);
        let p = match sets % 3 {
            0 => ps - t * (ps - 1.0),
            1 => ps + t * (pp - ps),
            _ => pp + t * 3.0,
        };
        let Ok(params) = ProblemParams::new(variant, lambda, big_lambda, dim, p, a) else {
            continue;
        };
        sets += 1;
        for sp in stationary_points(&params) {
            let j = numerical_jacobian(&params, sp.location.0, sp.location.1, 1e-6);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let tr = j[0][0] + j[1][1];
            let expected = if det < 0.0 {
                Classification::Saddle
            } else if tr > 0.0 {
                Classification::Source
            } else {
                Classification::Sink
            };
            points += 1;
            if sp.classification != expected {
                mismatches.push(format!(
                    "{:?} at ({}, {}): reported {:?}, jacobian says {:?}",
                    sp.name,
                    fmt_f64(sp.location.0),
                    fmt_f64(sp.location.1),
                    sp.classification,
                    expected
                ));
            }
        }
    }
    if mismatches.is_empty() {
        pass(
            "stationary_consistency",
            format!("sets=10 points={points} mismatches=0"),
        )
    } else {
        fail(
            "stationary_consistency",
            format!(
                "points={points} mismatches={}: {}",
                mismatches.len(),
                mismatches.join("; ")
            ),
        )
    }
}

/// In the supercritical range the scaled power profile solves the equation
/// exactly; its residual is a direct accuracy probe of the radial right-hand
/// side.
fn singular_residual(params: &ProblemParams) -> CheckRecord {
    let (_, z0) = m0_location(params);
    if z0 <= 0.0 {
        return skip(
            "singular_residual",
            format!(
                "requires p > p_serrin={}",
                fmt_f64(params.exponents.p_serrin)
            ),
        );
    }
    let alpha = params.exponents.alpha;
    let coef = z0.powf(1.0 / (params.p - 1.0));
    let mut worst = 0.0f64;
    let n = 200;
    for i in 0..=n {
        let r = 0.5 * (50.0f64 / 0.5).powf(i as f64 / n as f64);
        let u = coef * r.powf(-alpha);
        let du = -alpha * u / r;
        let ddu_exact = alpha * (alpha + 1.0) * u / (r * r);
        let ddu = params.radial_rhs(r, u, du);
        let scale = ddu_exact.abs().max(1.0);
        worst = worst.max((ddu - ddu_exact).abs() / scale);
    }
    if worst < 1e-8 {
        pass(
            "singular_residual",
            format!("worst_relative_residual={}", fmt_f64(worst)),
        )
    } else {
        fail(
            "singular_residual",
            format!("worst_relative_residual={} >= 1e-8", fmt_f64(worst)),
        )
    }
}

fn annulus_profile(settings: &Settings, params: &ProblemParams) -> anyhow::Result<SolutionProfile> {
    let (inner, outer) = match (settings.inner, settings.outer) {
        (Some(i), Some(o)) => (i, o),
        _ => (1.0, 2.0),
    };
    let request = AnnulusRequest::new(*params, inner, outer)
        .map_err(|e| anyhow::anyhow!("{e}"))?
        .with_boundary_tol(settings.boundary_tol);
    let report = solve_annulus(&request, &settings.solver_config())?;
    Ok(report.profile)
}

fn energy_monotonicity(profile: &SolutionProfile) -> CheckRecord {
    let audit = monotonicity_audit(profile);
    let detail = format!(
        "checks={} worst_small={} at r={} worst_big={} at r={} tol={}",
        audit.checks,
        fmt_f64(audit.worst_small),
        fmt_f64(audit.worst_small_r),
        fmt_f64(audit.worst_big),
        fmt_f64(audit.worst_big_r),
        fmt_f64(ENERGY_REL_TOL)
    );
    if audit.passed(ENERGY_REL_TOL) {
        pass("annulus_energy", detail)
    } else {
        fail("annulus_energy", detail)
    }
}

/// Re-integrate the solved launch slope at a hundredfold tighter tolerance:
/// the boundary landing must survive refinement. A tolerance too sloppy to
/// support the claimed boundary residual fails here even when the energy
/// audit stays quiet, because the audit only sees the profile's own samples
/// while this check measures its distance to the converged trajectory.
fn boundary_consistency(settings: &Settings, profile: &SolutionProfile) -> CheckRecord {
    let outer = profile.samples.last().expect("profiles are non-empty").r;
    let config = settings.solver_config();
    let icfg = config
        .ivp_config(profile.input.inner_radius, outer)
        .refined(100.0);
    let refined = match integrate_ivp(&profile.input, &icfg) {
        Ok(p) => p,
        Err(e) => return skip("boundary_consistency", format!("refined run failed: {e}")),
    };
    let last = refined.samples.last().expect("profiles are non-empty");
    // A refined run that crosses zero short of the boundary has its miss
    // measured through the slope at the crossing.
    let residual = match refined.rho {
        Rho::Truncated(_) => last.u.abs(),
        Rho::FirstZero(r) => (last.du * (outer - r)).abs(),
    };
    let gate = 1e3 * settings.boundary_tol;
    let detail = format!(
        "refined_residual={} gate={}",
        fmt_f64(residual),
        fmt_f64(gate)
    );
    if residual <= gate {
        pass("boundary_consistency", detail)
    } else {
        fail("boundary_consistency", detail)
    }
}

fn small_delta(profile: &SolutionProfile) -> CheckRecord {
    let check = small_delta_bound(profile);
    let detail = format!(
        "worst_ratio={} at r={}",
        fmt_f64(check.worst_ratio),
        fmt_f64(check.at_r)
    );
    if check.holds {
        pass("small_delta_bound", detail)
    } else {
        fail("small_delta_bound", detail)
    }
}

fn time_map(profile: &SolutionProfile) -> CheckRecord {
    match time_map_bound(profile) {
        Ok(check) => {
            let detail = format!(
                "worst_ratio={} at r={}",
                fmt_f64(check.worst_ratio),
                fmt_f64(check.at_r)
            );
            if check.holds {
                pass("time_map_bound", detail)
            } else {
                fail("time_map_bound", detail)
            }
        }
        Err(e) => skip("time_map_bound", e.to_string()),
    }
}

/// The plane map and its inverse are algebraic; composing them must
/// reproduce the profile to round-off.
fn roundtrip(profile: &SolutionProfile) -> CheckRecord {
    let traj = match to_phase(profile) {
        Ok(t) => t,
        Err(e) => return skip("plane_roundtrip", e.to_string()),
    };
    let back = match from_phase(&traj) {
        Ok(b) => b,
        Err(e) => return fail("plane_roundtrip", format!("inverse map failed: {e}")),
    };
    let mut worst = 0.0f64;
    let positive: Vec<_> = profile.samples.iter().filter(|s| s.u != 0.0).collect();
    if positive.len() != back.samples.len() {
        return fail(
            "plane_roundtrip",
            format!(
                "sample count changed: {} vs {}",
                positive.len(),
                back.samples.len()
            ),
        );
    }
    for (s, b) in positive.iter().zip(&back.samples) {
        worst = worst.max((s.u - b.u).abs() / s.u.abs().max(1e-300));
    }
    if worst < 1e-8 {
        pass(
            "plane_roundtrip",
            format!(
                "samples={} worst_relative={}",
                back.samples.len(),
                fmt_f64(worst)
            ),
        )
    } else {
        fail(
            "plane_roundtrip",
            format!("worst_relative={} >= 1e-8", fmt_f64(worst)),
        )
    }
}

/// The launch tail of an annular profile lies in the second quadrant of the
/// plane; the blow-up envelope and field signs must hold along it.
fn two_q_launch_tail(profile: &SolutionProfile, params: &ProblemParams) -> CheckRecord {
    let traj = match to_phase(profile) {
        Ok(t) => t,
        Err(e) => return skip("two_q_envelope", e.to_string()),
    };
    let tail: Vec<PhasePoint> = traj
        .points
        .iter()
        .take_while(|p| p.x < 0.0)
        .copied()
        .collect();
    if tail.len() < 10 {
        return skip(
            "two_q_envelope",
            format!("only {} second-quadrant samples", tail.len()),
        );
    }
    let t0 = tail.last().expect("nonempty").t;
    match blowup_bound_2q(&tail, t0, params) {
        Ok(report) if report.clean() => pass(
            "two_q_envelope",
            format!("checked={} violations=0", report.checked),
        ),
        Ok(report) => fail(
            "two_q_envelope",
            format!(
                "checked={} bound_violations={} sign_violations={}",
                report.checked,
                report.bound_violations.len(),
                report.sign_violations.len()
            ),
        ),
        Err(e) => skip("two_q_envelope", e.to_string()),
    }
}

/// Same envelope on the backward continuation of the stable orbit of A0,
/// when that orbit is numerically obtainable.
fn upsilon_envelope(params: &ProblemParams, config: &PhaseConfig) -> CheckRecord {
    let traj = match stable_manifold_a0(params, config) {
        Ok(t) => t,
        Err(e) => return skip("upsilon_envelope", format!("unavailable: {e}")),
    };
    let tail: Vec<PhasePoint> = traj
        .points
        .iter()
        .take_while(|p| p.x < 0.0)
        .copied()
        .collect();
    if tail.len() < 10 {
        return skip(
            "upsilon_envelope",
            format!("only {} second-quadrant samples", tail.len()),
        );
    }
    let t0 = tail.last().expect("nonempty").t;
    match blowup_bound_2q(&tail, t0, params) {
        Ok(report) if report.clean() => pass(
            "upsilon_envelope",
            format!("checked={} violations=0", report.checked),
        ),
        Ok(report) => fail(
            "upsilon_envelope",
            format!(
                "checked={} bound_violations={} sign_violations={}",
                report.checked,
                report.bound_violations.len(),
                report.sign_violations.len()
            ),
        ),
        Err(e) => skip("upsilon_envelope", e.to_string()),
    }
}

/// Return-map amplitudes around the interior stationary point grow below the
/// pseudo-critical exponent and shrink above it.
fn return_amplitudes(params: &ProblemParams, config: &PhaseConfig) -> CheckRecord {
    let (_, z0) = m0_location(params);
    if z0 <= 0.0 {
        return skip(
            "return_amplitudes",
            format!(
                "requires p > p_serrin={}",
                fmt_f64(params.exponents.p_serrin)
            ),
        );
    }
    let pp = params.exponents.p_pseudo;
    if (params.p - pp).abs() < 1e-9 {
        return skip(
            "return_amplitudes",
            "p is pseudo-critical: orbits close".into(),
        );
    }
    // Small offset so a growing spiral fits several returns inside the box
    // before escaping.
    let alpha = params.exponents.alpha;
    let seed = PhasePoint {
        x: alpha,
        z: 1.005 * z0,
        t: 0.0,
    };
    let run = poincare_return(params, seed, alpha, 8, config);
    let amps: Vec<f64> = same_direction_crossings(&run, true)
        .iter()
        .map(|z| (z - z0).abs())
        .collect();
    if amps.len() < 3 {
        return skip(
            "return_amplitudes",
            format!("only {} returns before escape", amps.len()),
        );
    }
    let growing = params.p < pp;
    let ok = amps
        .windows(2)
        .all(|w| if growing { w[1] > w[0] } else { w[1] < w[0] });
    let detail = format!(
        "returns={} first={} last={} expected {}",
        amps.len(),
        fmt_f64(amps[0]),
        fmt_f64(amps[amps.len() - 1]),
        if growing { "growing" } else { "shrinking" }
    );
    if ok {
        pass("return_amplitudes", detail)
    } else {
        fail("return_amplitudes", detail)
    }
}
