//! Radial shooting initial value problem.
//!
//! Integrates `u'' = rhs(r, u, u')` from the inner radius with `u = 0` and
//! prescribed slope, up to the first return of `u` to zero or a radius cap.
//! Switching surfaces of the piecewise right-hand side (`u' = 0` and the
//! operator-argument zero) are localized and step-aligned; the first return of
//! `u` to zero terminates the run and defines `rho`.

use crate::ode::{self, Direction, EventDef, SolverOptions, Stop};
use crate::pucci::ProblemParams;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct ShootingInput {
    pub params: ProblemParams,
    /// Inner radius, strictly positive.
    pub inner_radius: f64,
    /// Launch slope `u'(inner_radius)`; nonzero. Negative slopes produce the
    /// mirrored (negative) profile.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_max: f64,
    pub max_steps: usize,
    /// Localization width for events, in radius units.
    pub event_tol: f64,
}

impl IntegratorConfig {
    /// Defaults scaled to the inner radius: tolerances 1e-10/1e-12, radius cap
    /// `1e6 * inner`, localization width `1e-12 * inner`.
    pub fn defaults_for(inner_radius: f64) -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r_max: 1e6 * inner_radius,
            max_steps: 5_000_000,
            event_tol: 1e-12 * inner_radius,
        }
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn refined(mut self, factor: f64) -> Self {
        self.rel_tol /= factor;
        self.abs_tol /= factor;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

/// How the profile ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    /// `u` returned to zero at this radius.
    FirstZero(f64),
    /// The radius cap was reached with `u` still of one sign.
    Truncated(f64),
}

impl Rho {
    pub fn radius(&self) -> f64 {
        match *self {
            Rho::FirstZero(r) | Rho::Truncated(r) => r,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rho::FirstZero(_))
    }
}

#[derive(Debug, Clone)]
pub struct SolutionProfile {
    /// Strictly increasing in `r`, starting at `(inner, 0, delta)`. Between the
    /// endpoints `u` keeps the sign of `delta`.
    pub samples: Vec<Sample>,
    /// First interior critical radius (`u' = 0`), when one was crossed.
    pub tau: Option<f64>,
    /// Radii where the piecewise right-hand side switches branch (`u' = 0` or
    /// the operator argument changes sign). The solution is smooth between
    /// consecutive entries but only C^2 across them.
    pub switch_radii: Vec<f64>,
    pub rho: Rho,
    pub input: ShootingInput,
    pub steps: usize,
    pub rhs_evals: usize,
}

impl SolutionProfile {
    pub fn last(&self) -> Sample {
        *self.samples.last().expect("profiles are non-empty")
    }

    /// Value of `u` at the critical radius, when present.
    pub fn u_at_tau(&self) -> Option<f64> {
        let tau = self.tau?;
        self.samples
            .iter()
            .min_by(|a, b| {
                (a.r - tau)
                    .abs()
                    .partial_cmp(&(b.r - tau).abs())
                    .expect("finite radii")
            })
            .map(|s| s.u)
    }
}

#[derive(Debug, Error, Clone)]
pub enum IvpError {
    #[error("invalid shooting input: {0}")]
    InvalidInput(String),
    #[error("step limit {max_steps} exceeded at r={r}, u={u}, du={du}")]
    StepLimitExceeded {
        max_steps: usize,
        r: f64,
        u: f64,
        du: f64,
    },
    #[error("step size collapsed near r={r} (u={u}, du={du}); the problem looks stiff here")]
    StiffnessFailure { r: f64, u: f64, du: f64 },
}

/// Integrate the shooting problem until `u` returns to zero or `r_max`.
pub fn integrate_ivp(
    input: &ShootingInput,
    config: &IntegratorConfig,
) -> Result<SolutionProfile, IvpError> {
    let p = &input.params;
    let a0 = input.inner_radius;
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(IvpError::InvalidInput(format!(
            "inner radius must be positive, got {a0}"
        )));
    }
    if input.delta == 0.0 || !input.delta.is_finite() {
        return Err(IvpError::InvalidInput(format!(
            "launch slope must be nonzero and finite, got {}",
            input.delta
        )));
    }
    if !(config.r_max > a0) {
        return Err(IvpError::InvalidInput(format!(
            "r_max {} must exceed the inner radius {a0}",
            config.r_max
        )));
    }

    // Analytic first step: u(a0) = 0 makes the forcing vanish, so the Taylor
    // expansion u ~ delta*(r - a0) + u''(a0)/2 (r - a0)^2 is exact to third
    // order and sidesteps the 0/0 in any x-diagnostic right at launch.
    let delta = input.delta;
    let ddu0 = p.m_inv(-(f64::from(p.dim) - 1.0) / a0 * p.m(delta));
    // Launch truncation is O(h0^2) relative, so tie h0 to the requested
    // tolerance: refining the tolerance then also refines the launch.
    let h0 = (1e-6 * (config.rel_tol / 1e-10).sqrt()).clamp(1e-12, 1e-5) * a0;
    let r1 = a0 + h0;
    let u1 = delta * h0 + 0.5 * ddu0 * h0 * h0;
    let du1 = delta + ddu0 * h0;

    let rhs = move |r: f64, y: &[f64; 2]| [y[1], p.radial_rhs(r, y[0], y[1])];
    let events = [
        // u' = 0: switching surface of m, and the critical radius.
        EventDef::new(|_r, y: &[f64; 2]| y[1], Direction::Any, false),
        // Operator-argument zero: switching surface of m_inv.
        EventDef::new(
            move |r: f64, y: &[f64; 2]| {
                -(f64::from(p.dim) - 1.0) / r * p.m(y[1]) - r.powf(p.a) * p.forcing(y[0])
            },
            Direction::Any,
            false,
        ),
        // First return of u to zero; the launch zero is skipped because the
        // event only arms once |u| grows past the hysteresis threshold.
        EventDef::new(
            |_r, y: &[f64; 2]| y[0],
            if delta > 0.0 {
                Direction::Falling
            } else {
                Direction::Rising
            },
            true,
        ),
    ];
    let opts = SolverOptions {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_steps: config.max_steps,
        loc_tol: config.event_tol,
        // Keeps samples dense enough for derivative audits and phase mapping.
        h_max_rel: Some(0.005),
        h_max_abs: f64::INFINITY,
        h_init: None,
    };

    let run = ode::integrate(&rhs, r1, [u1, du1], config.r_max, &events, &opts);

    let mut samples = Vec::with_capacity(run.samples.len() + 1);
    samples.push(Sample {
        r: a0,
        u: 0.0,
        du: delta,
    });
    samples.extend(run.samples.iter().map(|s| Sample {
        r: s.x,
        u: s.y[0],
        du: s.y[1],
    }));

    let tau = run.hits.iter().find(|h| h.event == 0).map(|h| h.x);
    let switch_radii: Vec<f64> = run
        .hits
        .iter()
        .filter(|h| h.event <= 1)
        .map(|h| h.x)
        .collect();

    let rho = match run.stop {
        Stop::Event(2) => {
            // Pin the endpoint exactly onto the axis; localization already put
            // it within event_tol.
            if let Some(last) = samples.last_mut() {
                last.u = 0.0;
            }
            Rho::FirstZero(samples.last().expect("non-empty").r)
        }
        Stop::ReachedEnd => Rho::Truncated(config.r_max),
        Stop::Event(_) => unreachable!("only the u-zero event is terminal"),
        Stop::StepLimit => {
            let s = samples.last().expect("non-empty");
            return Err(IvpError::StepLimitExceeded {
                max_steps: config.max_steps,
                r: s.r,
                u: s.u,
                du: s.du,
            });
        }
        Stop::StepUnderflow => {
            let s = samples.last().expect("non-empty");
            return Err(IvpError::StiffnessFailure {
                r: s.r,
                u: s.u,
                du: s.du,
            });
        }
    };

    Ok(SolutionProfile {
        samples,
        tau,
        switch_radii,
        rho,
        input: *input,
        steps: run.steps,
        rhs_evals: run.rhs_evals,
    })
}

/// Anisotropic rescaling `u_gamma(r) = gamma * u(gamma^{1/alpha} r)`.
///
/// Maps a solution to a solution of the same equation with inner radius
/// `inner * gamma^{-1/alpha}` and launch slope `delta * gamma^{1 + 1/alpha}`.
pub fn rescale_profile(profile: &SolutionProfile, gamma: f64) -> SolutionProfile {
    assert!(
        gamma > 0.0,
        "rescaling factor must be positive, got {gamma}"
    );
    let alpha = profile.input.params.exponents.alpha;
    let radius_factor = gamma.powf(-1.0 / alpha);
    let slope_factor = gamma.powf(1.0 + 1.0 / alpha);
    let map = |s: &Sample| Sample {
        r: s.r * radius_factor,
        u: s.u * gamma,
        du: s.du * slope_factor,
    };
    SolutionProfile {
        samples: profile.samples.iter().map(map).collect(),
        tau: profile.tau.map(|t| t * radius_factor),
        switch_radii: profile
            .switch_radii
            .iter()
            .map(|r| r * radius_factor)
            .collect(),
        rho: match profile.rho {
            Rho::FirstZero(r) => Rho::FirstZero(r * radius_factor),
            Rho::Truncated(r) => Rho::Truncated(r * radius_factor),
        },
        input: ShootingInput {
            params: profile.input.params,
            inner_radius: profile.input.inner_radius * radius_factor,
            delta: profile.input.delta * slope_factor,
        },
        steps: profile.steps,
        rhs_evals: profile.rhs_evals,
    }
}

/// Maximum absolute defect `|u'' - rhs(r, u, u')|` over interior samples,
/// with `u''` recovered from the sampled `u'` by five-point local polynomial
/// differentiation on the (non-uniform) radius grid.
///
/// Independent of the integrator: it only reads the stored samples, so it
/// flags profiles that merely look plausible but do not satisfy the equation.
/// Windows that straddle a recorded switching radius are excluded (the third
/// derivative jumps there, which breaks polynomial derivative recovery), as
/// are windows whose mesh is too strongly graded for the stencil to be
/// trustworthy, such as the micro-step at launch.
pub fn residual_audit(profile: &SolutionProfile) -> f64 {
    let s = &profile.samples;
    if s.len() < 5 {
        return 0.0;
    }
    let params = &profile.input.params;
    let mut worst: f64 = 0.0;
    for i in 2..s.len() - 2 {
        let window = &s[i - 2..i + 3];
        let (lo, hi) = (window[0].r, window[4].r);
        // A switch at a window endpoint is harmless: all five nodes then lie
        // in the closure of one smooth piece.
        if profile.switch_radii.iter().any(|&sw| lo < sw && sw < hi) {
            continue;
        }
        let mut gap_min = f64::INFINITY;
        let mut gap_max: f64 = 0.0;
        for w in window.windows(2) {
            let g = w[1].r - w[0].r;
            gap_min = gap_min.min(g);
            gap_max = gap_max.max(g);
        }
        if gap_max > 50.0 * gap_min {
            continue;
        }
        let ddu = lagrange_derivative_at(window, 2);
        let defect = ddu - params.radial_rhs(s[i].r, s[i].u, s[i].du);
        worst = worst.max(defect.abs());
    }
    worst
}

/// Derivative of the degree-4 interpolant of `du` through five samples,
/// evaluated at node `c`.
fn lagrange_derivative_at(window: &[Sample], c: usize) -> f64 {
    let x: Vec<f64> = window.iter().map(|s| s.r).collect();
    let mut acc = 0.0;
    for j in 0..5 {
        let w = if j == c {
            let mut sum = 0.0;
            for m in 0..5 {
                if m != c {
                    sum += 1.0 / (x[c] - x[m]);
                }
            }
            sum
        } else {
            let mut num = 1.0;
            let mut den = 1.0;
            for m in 0..5 {
                if m != j {
                    den *= x[j] - x[m];
                    if m != c {
                        num *= x[c] - x[m];
                    }
                }
            }
            num / den
        };
        acc += w * window[j].du;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pucci::{OperatorVariant, ProblemParams};

    fn c1() -> ProblemParams {
        ProblemParams::new(OperatorVariant::Plus, 1.0, 1.5, 4, 4.0, 0.0).unwrap()
    }

    fn solve(params: ProblemParams, delta: f64, r_max: f64) -> SolutionProfile {
        let input = ShootingInput {
            params,
            inner_radius: 1.0,
            delta,
        };
        let config = IntegratorConfig::defaults_for(1.0).with_r_max(r_max);
        integrate_ivp(&input, &config).unwrap()
    }

    #[test]
    fn launch_structure_and_interior_sign() {
        let profile = solve(c1(), 50.0, 1e3);
        let first = profile.samples[0];
        assert_eq!((first.r, first.u, first.du), (1.0, 0.0, 50.0));
        assert!(profile.samples.windows(2).all(|w| w[1].r > w[0].r));
        for s in &profile.samples[1..profile.samples.len() - 1] {
            assert!(s.u > 0.0, "interior positivity failed at r={}", s.r);
        }
        assert!(profile.rho.is_zero());
        let tau = profile.tau.expect("steep launch must turn around");
        let rho = profile.rho.radius();
        assert!(1.0 < tau && tau < rho);
        // Steep launch returns close to the inner radius.
        assert!(rho < 1.5);
    }

    #[test]
    fn single_interior_critical_point() {
        for delta in [0.5, 5.0, 500.0] {
            let profile = solve(c1(), delta, 1e3);
            let flips = profile
                .samples
                .windows(2)
                .filter(|w| w[0].du != 0.0 && w[1].du != 0.0 && (w[0].du > 0.0) != (w[1].du > 0.0))
                .count();
            assert!(
                flips <= 1,
                "du changed sign {flips} times for delta={delta}"
            );
            if profile.rho.is_zero() {
                assert_eq!(flips, 1);
            }
        }
    }

    #[test]
    fn never_convex_while_positive_and_increasing() {
        let profile = solve(c1(), 2.0, 1e3);
        for s in &profile.samples[1..] {
            if s.u > 0.0 && s.du > 0.0 {
                let ddu = profile.input.params.radial_rhs(s.r, s.u, s.du);
                assert!(ddu < 0.0, "convex increasing state at r={}", s.r);
            }
        }
    }

    #[test]
    fn tiny_slope_is_truncated_at_r_max() {
        let input = ShootingInput {
            params: c1(),
            inner_radius: 1.0,
            delta: 1e-3,
        };
        let config = IntegratorConfig::defaults_for(1.0).with_r_max(50.0);
        let profile = integrate_ivp(&input, &config).unwrap();
        assert_eq!(profile.rho, Rho::Truncated(50.0));
        let last = profile.last();
        assert_eq!(last.r, 50.0, "truncated run must land exactly on r_max");
        assert!(last.u > 0.0);
    }

    #[test]
    fn negative_slope_mirrors_the_swapped_operator_exactly() {
        let plus = solve(c1(), 3.0, 1e3);
        let minus_input = ShootingInput {
            params: c1().swapped(),
            inner_radius: 1.0,
            delta: -3.0,
        };
        let config = IntegratorConfig::defaults_for(1.0).with_r_max(1e3);
        let minus = integrate_ivp(&minus_input, &config).unwrap();
        assert_eq!(plus.samples.len(), minus.samples.len());
        for (p, m) in plus.samples.iter().zip(minus.samples.iter()) {
            assert_eq!(p.r, m.r);
            assert_eq!(p.u, -m.u);
            assert_eq!(p.du, -m.du);
        }
    }

    #[test]
    fn event_locations_stable_under_tolerance_refinement() {
        let input = ShootingInput {
            params: c1(),
            inner_radius: 1.0,
            delta: 50.0,
        };
        let mut config = IntegratorConfig::defaults_for(1.0).with_r_max(1e3);
        config.event_tol = 1e-9;
        let coarse = integrate_ivp(&input, &config).unwrap();
        let fine = integrate_ivp(&input, &config.refined(2.0)).unwrap();
        let dtau = (coarse.tau.unwrap() - fine.tau.unwrap()).abs();
        let drho = (coarse.rho.radius() - fine.rho.radius()).abs();
        assert!(dtau <= 10.0 * config.event_tol, "tau moved by {dtau}");
        assert!(drho <= 10.0 * config.event_tol, "rho moved by {drho}");
    }

    #[test]
    fn rescale_identity_and_reference_factors() {
        let profile = solve(c1(), 5.0, 1e3);
        let same = rescale_profile(&profile, 1.0);
        assert_eq!(same.samples[3], profile.samples[3]);
        // alpha = 2/3: gamma = 1/2 sends inner 1 -> 2^{3/2}, slope factor 2^{-5/2}.
        let scaled = rescale_profile(&profile, 0.5);
        assert!((scaled.input.inner_radius - 2f64.powf(1.5)).abs() < 1e-14);
        assert!((scaled.input.delta - 5.0 * 2f64.powf(-2.5)).abs() < 1e-13);
        assert!(
            residual_audit(&scaled) < 1e-6,
            "rescaled profile must still solve the equation"
        );
    }

    #[test]
    fn residual_audit_accepts_solver_output_and_flags_corruption() {
        let mut profile = solve(c1(), 5.0, 1e3);
        let clean = residual_audit(&profile);
        assert!(clean < 1e-6, "clean residual {clean}");
        let mid = profile.samples.len() / 2;
        profile.samples[mid].u *= 1.001;
        let corrupted = residual_audit(&profile);
        assert!(
            corrupted > 100.0 * clean.max(1e-9),
            "corruption not flagged: {corrupted}"
        );
    }

    #[test]
    fn residual_audit_on_exact_singular_profile() {
        let params = c1();
        let alpha = params.exponents.alpha;
        let z0 = alpha * params.big_lambda * (params.exponents.n_plus - 2.0 - alpha);
        let c = z0.powf(1.0 / (params.p - 1.0));
        let n = 2000;
        let samples: Vec<Sample> = (0..n)
            .map(|i| {
                let r = 0.5 * (100.0f64).powf(i as f64 / (n - 1) as f64);
                Sample {
                    r,
                    u: c * r.powf(-alpha),
                    du: -alpha * c * r.powf(-alpha - 1.0),
                }
            })
            .collect();
        let profile = SolutionProfile {
            samples,
            tau: None,
            switch_radii: Vec::new(),
            rho: Rho::Truncated(50.0),
            input: ShootingInput {
                params,
                inner_radius: 0.5,
                delta: 1.0,
            },
            steps: 0,
            rhs_evals: 0,
        };
        let res = residual_audit(&profile);
        assert!(res < 1e-8, "analytic profile residual {res}");
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let config = IntegratorConfig::defaults_for(1.0);
        let bad = ShootingInput {
            params: c1(),
            inner_radius: 0.0,
            delta: 1.0,
        };
        assert!(matches!(
            integrate_ivp(&bad, &config),
            Err(IvpError::InvalidInput(_))
        ));
        let bad = ShootingInput {
            params: c1(),
            inner_radius: 1.0,
            delta: 0.0,
        };
        assert!(matches!(
            integrate_ivp(&bad, &config),
            Err(IvpError::InvalidInput(_))
        ));
        let bad_cfg = IntegratorConfig {
            r_max: 0.5,
            ..config
        };
        let input = ShootingInput {
            params: c1(),
            inner_radius: 1.0,
            delta: 1.0,
        };
        assert!(matches!(
            integrate_ivp(&input, &bad_cfg),
            Err(IvpError::InvalidInput(_))
        ));
    }

    #[test]
    fn step_limit_error_carries_the_frontier_state() {
        let input = ShootingInput {
            params: c1(),
            inner_radius: 1.0,
            delta: 1e-3,
        };
        let mut config = IntegratorConfig::defaults_for(1.0).with_r_max(1e5);
        config.max_steps = 25;
        match integrate_ivp(&input, &config) {
            Err(IvpError::StepLimitExceeded { r, u, .. }) => {
                assert!(r > 1.0 && u > 0.0);
            }
            other => panic!("expected step limit, got {other:?}"),
        }
    }
}
