//! Weighted energy functionals along radial profiles.
//!
//! Two families are tracked: the small energy, piecewise monotone decreasing
//! with the weight switched by the sign of `u u'`, and the big energy
//! `E = r^{2(N_minus - 1) + a} * small`, monotone increasing with the lower
//! weight up to the critical radius and the upper weight after it. Their
//! monotonicity is an exact property of solutions, so the audit doubles as an
//! integrator diagnostic; the module also checks the closed-form bounds that
//! the energies imply for extreme shooting slopes.

use crate::ivp::{Rho, SolutionProfile};
use crate::pucci::ProblemParams;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// The lower ellipticity weight.
    Lambda,
    /// The upper ellipticity weight.
    BigLambda,
}

impl Weight {
    pub fn value(self, params: &ProblemParams) -> f64 {
        match self {
            Weight::Lambda => params.lambda,
            Weight::BigLambda => params.big_lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTag {
    /// `u u' > 0`.
    Increasing,
    /// `u u' < 0`.
    Decreasing,
    /// `u u' = 0` (launch, critical radius, or a zero of `u`).
    Critical,
}

#[derive(Debug, Clone, Copy)]
pub struct EnergySample {
    pub r: f64,
    pub small_energy: f64,
    pub big_energy: f64,
    /// Weight used for the small energy at this sample.
    pub sigma_used: Weight,
    pub phase: PhaseTag,
}

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("profile has no critical radius (u' never vanishes)")]
    NoCriticalRadius,
}

/// `(u')^2 / (2 r^a) + |u|^{p+1} / (sigma (p+1))`.
pub fn small_energy(r: f64, u: f64, uprime: f64, sigma: f64, params: &ProblemParams) -> f64 {
    let p1 = params.p + 1.0;
    uprime * uprime / (2.0 * r.powf(params.a)) + u.abs().powf(p1) / (sigma * p1)
}

/// `r^{2 (N_minus - 1) + a}` times the small energy; the exponent uses the
/// lower effective dimension for both operator variants.
pub fn big_energy(r: f64, u: f64, uprime: f64, sigma: f64, params: &ProblemParams) -> f64 {
    let exponent = 2.0 * (params.exponents.n_minus - 1.0) + params.a;
    r.powf(exponent) * small_energy(r, u, uprime, sigma, params)
}

fn phase_of(u: f64, du: f64) -> PhaseTag {
    let s = u * du;
    if s > 0.0 {
        PhaseTag::Increasing
    } else if s < 0.0 {
        PhaseTag::Decreasing
    } else {
        PhaseTag::Critical
    }
}

/// Per-sample energies. The small energy takes the upper weight on increasing
/// stretches and the lower on decreasing ones (lower at critical samples);
/// the big energy takes the lower weight up to the critical radius and the
/// upper one beyond it.
pub fn energy_samples(profile: &SolutionProfile) -> Vec<EnergySample> {
    let params = &profile.input.params;
    let tau = profile.tau;
    profile
        .samples
        .iter()
        .map(|s| {
            let phase = phase_of(s.u, s.du);
            let sigma_used = match phase {
                PhaseTag::Increasing => Weight::BigLambda,
                PhaseTag::Decreasing | PhaseTag::Critical => Weight::Lambda,
            };
            let big_weight = match tau {
                Some(t) if s.r > t => Weight::BigLambda,
                _ => Weight::Lambda,
            };
            EnergySample {
                r: s.r,
                small_energy: small_energy(s.r, s.u, s.du, sigma_used.value(params), params),
                big_energy: big_energy(s.r, s.u, s.du, big_weight.value(params), params),
                sigma_used,
                phase,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicityReport {
    /// Largest relative increase of the small energy inside one phase
    /// (negative when it only ever decreases).
    pub worst_small: f64,
    pub worst_small_r: f64,
    /// Largest relative decrease of the big energy on its monotone intervals.
    pub worst_big: f64,
    pub worst_big_r: f64,
    pub checks: usize,
}

impl MonotonicityReport {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.worst_small <= rel_tol && self.worst_big <= rel_tol
    }
}

/// Audit both monotonicity statements sample pair by sample pair. Pairs that
/// straddle a phase switch are boundaries of the statements, not instances
/// of them, and are skipped.
pub fn monotonicity_audit(profile: &SolutionProfile) -> MonotonicityReport {
    let params = &profile.input.params;
    let tau = profile.tau;
    let mut report = MonotonicityReport {
        worst_small: f64::NEG_INFINITY,
        worst_small_r: f64::NAN,
        worst_big: f64::NEG_INFINITY,
        worst_big_r: f64::NAN,
        checks: 0,
    };

    for w in profile.samples.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);

        // Small energy: both endpoints strictly inside the same phase.
        let (p0, p1) = (phase_of(s0.u, s0.du), phase_of(s1.u, s1.du));
        if p0 == p1 && p0 != PhaseTag::Critical {
            let sigma = match p0 {
                PhaseTag::Increasing => params.big_lambda,
                _ => params.lambda,
            };
            let e0 = small_energy(s0.r, s0.u, s0.du, sigma, params);
            let e1 = small_energy(s1.r, s1.u, s1.du, sigma, params);
            let scale = e0.abs().max(e1.abs()).max(f64::MIN_POSITIVE);
            let rise = (e1 - e0) / scale;
            report.checks += 1;
            if rise > report.worst_small {
                report.worst_small = rise;
                report.worst_small_r = s1.r;
            }
        }

        // Big energy: lower weight while at or before the critical radius,
        // upper weight after it.
        let weight = match tau {
            None => Some(params.lambda),
            Some(t) => {
                let eps = 1e-12 * t;
                if s1.r <= t + eps {
                    Some(params.lambda)
                } else if s0.r >= t - eps {
                    Some(params.big_lambda)
                } else {
                    None
                }
            }
        };
        if let Some(sigma) = weight {
            let e0 = big_energy(s0.r, s0.u, s0.du, sigma, params);
            let e1 = big_energy(s1.r, s1.u, s1.du, sigma, params);
            let scale = e0.abs().max(e1.abs()).max(f64::MIN_POSITIVE);
            let drop = (e0 - e1) / scale;
            report.checks += 1;
            if drop > report.worst_big {
                report.worst_big = drop;
                report.worst_big_r = s1.r;
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub holds: bool,
    /// Constrained side over the bounding side: at most 1 when an upper
    /// bound holds, at least 1 when a lower bound does.
    pub worst_ratio: f64,
    pub at_r: f64,
}

/// Pointwise consequence of small-energy decay on the increasing stretch:
/// `a^a u^{p+1}(r) / (p+1) <= Lambda delta^2 / 2` up to the critical radius.
pub fn small_delta_bound(profile: &SolutionProfile) -> BoundCheck {
    let params = &profile.input.params;
    let inner = profile.input.inner_radius;
    let delta = profile.input.delta;
    let rhs = params.big_lambda * delta * delta / 2.0;
    let upto = profile.tau.unwrap_or(f64::INFINITY);
    let mut worst = BoundCheck {
        holds: true,
        worst_ratio: 0.0,
        at_r: inner,
    };
    for s in &profile.samples {
        if s.r > upto {
            break;
        }
        let lhs = inner.powf(params.a) * s.u.abs().powf(params.p + 1.0) / (params.p + 1.0);
        let ratio = lhs / rhs;
        if ratio > worst.worst_ratio {
            worst = BoundCheck {
                holds: ratio <= 1.0 + 1e-9,
                worst_ratio: ratio,
                at_r: s.r,
            };
        }
    }
    worst
}

/// Consequence of big-energy growth, evaluated at the critical radius:
/// `tau^{2(N_minus - 1) + a} u^{p+1}(tau) >= lambda (p+1) a^{2(N_minus - 1)} delta^2 / 2`.
pub fn large_delta_bound(profile: &SolutionProfile) -> Result<BoundCheck, EnergyError> {
    let params = &profile.input.params;
    let tau = profile.tau.ok_or(EnergyError::NoCriticalRadius)?;
    let u_tau = profile.u_at_tau().ok_or(EnergyError::NoCriticalRadius)?;
    let inner = profile.input.inner_radius;
    let delta = profile.input.delta;
    let two_n = 2.0 * (params.exponents.n_minus - 1.0);
    let lhs = tau.powf(two_n + params.a) * u_tau.abs().powf(params.p + 1.0);
    let rhs = params.lambda * (params.p + 1.0) * inner.powf(two_n) * delta * delta / 2.0;
    let ratio = lhs / rhs;
    Ok(BoundCheck {
        holds: ratio >= 1.0 - 1e-9,
        worst_ratio: ratio,
        at_r: tau,
    })
}

/// Normalized time-map integral `int_0^1 (1 - s^{p+1})^{-1/2} ds`. The
/// integrand's square-root singularity is removed by substituting
/// `s = 1 - w^2`, after which composite Simpson converges at full order.
pub fn i_p(p: f64) -> f64 {
    assert!(p > 0.0 && p.is_finite(), "exponent must be positive");
    let p1 = p + 1.0;
    let g = |w: f64| {
        if w == 0.0 {
            2.0 / p1.sqrt()
        } else {
            // 1 - (1 - w^2)^{p+1}, evaluated without cancellation.
            let core = -f64::exp_m1(p1 * f64::ln_1p(-w * w));
            2.0 * w / core.sqrt()
        }
    };
    let n = 4000;
    let h = 1.0 / n as f64;
    let mut acc = g(0.0) + g(1.0);
    for i in 1..n {
        let w = i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(w);
    }
    acc * h / 3.0
}

/// Width bound for the increasing stretch:
/// `(tau - a) u^{(p-1)/2}(tau) <= i_p(p) sqrt(lambda (p+1) / (2 a^a))`.
pub fn time_map_bound(profile: &SolutionProfile) -> Result<BoundCheck, EnergyError> {
    let params = &profile.input.params;
    let tau = profile.tau.ok_or(EnergyError::NoCriticalRadius)?;
    let u_tau = profile.u_at_tau().ok_or(EnergyError::NoCriticalRadius)?;
    let inner = profile.input.inner_radius;
    let lhs = (tau - inner) * u_tau.abs().powf((params.p - 1.0) / 2.0);
    let rhs =
        i_p(params.p) * (params.lambda * (params.p + 1.0) / (2.0 * inner.powf(params.a))).sqrt();
    let ratio = lhs / rhs;
    Ok(BoundCheck {
        holds: ratio <= 1.0 + 1e-9,
        worst_ratio: ratio,
        at_r: tau,
    })
}

/// True when the profile ends at a zero of `u`, so the big-energy audit has
/// its full domain available.
pub fn spans_full_annulus(profile: &SolutionProfile) -> bool {
    matches!(profile.rho, Rho::FirstZero(_))
}
