//! Autonomous planar system associated with the radial equation.
//!
//! With `x = -r u'/u`, `z = r^{2+a} u^{p-1}`, `t = ln r`, positive solutions
//! become trajectories of a piecewise-quadratic field that is continuous and
//! locally Lipschitz. The module provides the field and its branch forms, the
//! switching-line geometry, stationary points with classification, the two
//! distinguished invariant manifolds, transforms between radial profiles and
//! phase trajectories, and audit helpers used by the solver and the test
//! suites.

use crate::ivp::{Rho, Sample, ShootingInput, SolutionProfile};
use crate::ode::{self, Direction, EventDef, SolverOptions, Stop};
use crate::pucci::{OperatorVariant, ProblemParams};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: f64,
    pub z: f64,
    /// Logarithmic radius, `t = ln r`.
    pub t: f64,
}

impl PhasePoint {
    pub fn r(&self) -> f64 {
        self.t.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryName {
    O,
    A0,
    M0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ConvergedToStationary(StationaryName),
    /// `x -> -inf` in finite backward time through the second quadrant.
    BlowupBackward2Q,
    /// `x` grew past the forward stopping threshold; once `x` exceeds
    /// `N_eff - 2` the field keeps `x` increasing, so this is conclusive.
    BlowupForwardX,
    /// Time or step budget exhausted without a conclusive exit.
    SectionBudget,
}

#[derive(Debug, Clone, Copy)]
pub struct SectionHit {
    pub point: PhasePoint,
    /// Crossing with physically increasing `x`.
    pub rightward: bool,
}

#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    pub params: ProblemParams,
    /// Ordered with `t` strictly increasing.
    pub points: Vec<PhasePoint>,
    pub termination: Termination,
    /// Crossings of the requested section `x = const`, chronological.
    pub section_hits: Vec<SectionHit>,
    /// Crossings of the `z` axis (`x = 0`), chronological.
    pub axis_hits: Vec<PhasePoint>,
}

impl PhaseTrajectory {
    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectories are non-empty")
    }

    pub fn first(&self) -> PhasePoint {
        *self.points.first().expect("trajectories are non-empty")
    }

    /// First crossing of the `z` axis, if any.
    pub fn z_axis_crossing(&self) -> Option<PhasePoint> {
        self.axis_hits.first().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Above the switching line: the concavity region of `u`.
    RPlus,
    /// Below the switching line, first quadrant: the convexity region.
    RMinus,
    OnEll,
    /// `x < 0`, i.e. `u' > 0`.
    SecondQuadrant,
}

#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    /// Slope of the switching line `ell`.
    pub ell_slope: f64,
    /// `pi1(x) = pi1_linear * x - pi1_quadratic * x^2`, the `xdot = 0`
    /// parabola of the lower branch.
    pub pi1_linear: f64,
    pub pi1_quadratic: f64,
    /// Vertical line where `zdot = 0`.
    pub pi2_x: f64,
    /// The unique point of `ell` where the field is parallel to `ell`.
    pub p_point: (f64, f64),
}

impl Geometry {
    pub fn pi1(&self, x: f64) -> f64 {
        self.pi1_linear * x - self.pi1_quadratic * x * x
    }

    pub fn ell(&self, x: f64) -> f64 {
        self.ell_slope * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Saddle,
    Source,
    Sink,
    Center,
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub name: StationaryName,
    pub location: (f64, f64),
    /// Ordered by ascending real part.
    pub eigenvalues: (Complex64, Complex64),
    pub classification: Classification,
    /// Invariant tangent slopes aligned with `eigenvalues`; empty when the
    /// eigenvalues are a complex pair.
    pub directions: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("profile sample at r={r} has non-positive u={u}")]
    NonPositiveU { r: f64, u: f64 },
    #[error("trajectory point at t={t} has non-positive z={z}")]
    NonPositiveZ { t: f64, z: f64 },
    #[error("no stable direction at A0: p={p} does not exceed the threshold {threshold}")]
    NotASaddle { p: f64, threshold: f64 },
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("manifold construction lost precision at (x={x}, z={z}, t={t})")]
    PrecisionLoss { x: f64, z: f64, t: f64 },
}

/// Weight on the lower-branch side: divisor of `z` below `ell`, coefficient
/// of the parabola, and the factor in `z0`.
fn sigma_lower(params: &ProblemParams) -> f64 {
    match params.variant {
        OperatorVariant::Plus => params.big_lambda,
        OperatorVariant::Minus => params.lambda,
    }
}

/// Weight on the upper-branch side: slope factor of `ell` and divisor of `z`
/// above it.
fn sigma_upper(params: &ProblemParams) -> f64 {
    match params.variant {
        OperatorVariant::Plus => params.lambda,
        OperatorVariant::Minus => params.big_lambda,
    }
}

/// The full piecewise field. Valid on `z >= 0` for any sign of `x`; the three
/// branch forms below are special cases and agree with it on their regions.
pub fn vector_field(params: &ProblemParams, x: f64, z: f64) -> (f64, f64) {
    let n1 = f64::from(params.dim) - 1.0;
    let w = -n1 * params.m(-x) - z;
    let dx = x * (x + 1.0) - params.m_inv(w);
    let dz = z * (x + 2.0 + params.a - params.p * x);
    (dx, dz)
}

/// `xdot` above the switching line (`u` strictly concave there).
pub fn branch_upper(params: &ProblemParams, x: f64, z: f64) -> f64 {
    let n = f64::from(params.dim);
    x * (x - n + 2.0) + z / sigma_upper(params)
}

/// `xdot` below the switching line in the first quadrant.
pub fn branch_lower(params: &ProblemParams, x: f64, z: f64) -> f64 {
    x * (x - params.n_effective() + 2.0) + z / sigma_lower(params)
}

/// `xdot` in the second quadrant, where `u' > 0` forces concavity.
pub fn branch_second_quadrant(params: &ProblemParams, x: f64, z: f64) -> f64 {
    let (n_eff, div) = match params.variant {
        OperatorVariant::Plus => (params.exponents.n_minus, params.lambda),
        OperatorVariant::Minus => (params.exponents.n_plus, params.big_lambda),
    };
    x * (x - n_eff + 2.0) + z / div
}

pub fn region_of(params: &ProblemParams, x: f64, z: f64) -> Region {
    if x < 0.0 {
        return Region::SecondQuadrant;
    }
    // On x = 0 the upper form applies by continuity.
    if x == 0.0 {
        return Region::RPlus;
    }
    let ell = sigma_upper(params) * (f64::from(params.dim) - 1.0) * x;
    if z > ell {
        Region::RPlus
    } else if z < ell {
        Region::RMinus
    } else {
        Region::OnEll
    }
}

pub fn geometry(params: &ProblemParams) -> Geometry {
    let n1 = f64::from(params.dim) - 1.0;
    let ell_slope = sigma_upper(params) * n1;
    let sp = sigma_lower(params);
    let thr = (1.0 + params.a) / params.p;
    Geometry {
        ell_slope,
        pi1_linear: sp * (params.n_effective() - 2.0),
        pi1_quadratic: sp,
        pi2_x: params.exponents.alpha,
        p_point: (thr, thr * ell_slope),
    }
}

pub fn a0_location(params: &ProblemParams) -> (f64, f64) {
    (params.n_effective() - 2.0, 0.0)
}

/// `M0 = (alpha, z0)`; `z0 > 0` exactly when `p` exceeds the Serrin-type
/// exponent, otherwise the point sits on or below the `x` axis.
pub fn m0_location(params: &ProblemParams) -> (f64, f64) {
    let alpha = params.exponents.alpha;
    let z0 = alpha * sigma_lower(params) * (params.n_effective() - 2.0 - alpha);
    (alpha, z0)
}

/// Forward/backward a-priori bounds for globally defined first-quadrant
/// trajectories: `x` in `(0, x_hi)` and `z` in `(0, z_hi)`.
pub fn apriori_box(params: &ProblemParams) -> (f64, f64) {
    let alpha = params.exponents.alpha;
    let n = f64::from(params.dim);
    (
        params.n_effective() - 2.0,
        sigma_upper(params) * alpha * (n + params.a),
    )
}

/// Half-width of the `p`-interval treated as exactly critical when
/// classifying stationary points.
pub const CRITICAL_P_TOL: f64 = 1e-9;

pub fn stationary_points(params: &ProblemParams) -> Vec<StationaryPoint> {
    let n_eff = params.n_effective();
    let n = f64::from(params.dim);
    let (p, a) = (params.p, params.a);
    let alpha = params.exponents.alpha;
    let p_s = params.exponents.p_serrin;
    let p_p = params.exponents.p_pseudo;
    let sp = sigma_lower(params);
    let degenerate = (p - p_s).abs() <= CRITICAL_P_TOL;

    let re = |v: f64| Complex64::new(v, 0.0);

    // Origin. The contraction rate -(n_eff - 2) acts along the x axis (lower
    // branch); the expansion rate 2 + a is shared by both branches. The
    // outgoing tangent must be computed from the upper branch: the ray lies
    // above ell for every admissible a > -1, so the lower-branch eigenvector
    // is not invariant for the piecewise field.
    let origin = StationaryPoint {
        name: StationaryName::O,
        location: (0.0, 0.0),
        eigenvalues: (re(-(n_eff - 2.0)), re(2.0 + a)),
        classification: Classification::Saddle,
        directions: vec![0.0, sigma_upper(params) * (n + a)],
    };

    // A0 = (n_eff - 2, 0), analyzed in the lower branch (a full neighborhood
    // of it lies strictly below ell).
    let mu = 2.0 + a - (p - 1.0) * (n_eff - 2.0);
    let a_slope = -sp * ((n_eff - 2.0) * p - (2.0 + a));
    let a0 = if degenerate {
        StationaryPoint {
            name: StationaryName::A0,
            location: a0_location(params),
            eigenvalues: (re(0.0), re(n_eff - 2.0)),
            classification: Classification::Degenerate,
            directions: vec![a_slope, 0.0],
        }
    } else {
        let (eigs, dirs) = if mu < n_eff - 2.0 {
            ((re(mu), re(n_eff - 2.0)), vec![a_slope, 0.0])
        } else {
            ((re(n_eff - 2.0), re(mu)), vec![0.0, a_slope])
        };
        StationaryPoint {
            name: StationaryName::A0,
            location: a0_location(params),
            eigenvalues: eigs,
            classification: if mu < 0.0 {
                Classification::Saddle
            } else {
                Classification::Source
            },
            directions: dirs,
        }
    };

    // M0 = (alpha, z0), also a lower-branch point whenever z0 != 0.
    let (_, z0) = m0_location(params);
    let trace = 2.0 * alpha - (n_eff - 2.0);
    let det = (p - 1.0) * alpha * (n_eff - 2.0 - alpha);
    let disc = trace * trace - 4.0 * det;
    let (eig_lo, eig_hi, dirs) = if disc >= 0.0 {
        let root = disc.sqrt();
        let (lo, hi) = ((trace - root) / 2.0, (trace + root) / 2.0);
        // Eigenvector of [[trace, 1/sp], [-(p-1) z0, 0]] for eigenvalue e has
        // slope sp (e - trace).
        (re(lo), re(hi), vec![sp * (lo - trace), sp * (hi - trace)])
    } else {
        let im = (-disc).sqrt() / 2.0;
        (
            Complex64::new(trace / 2.0, -im),
            Complex64::new(trace / 2.0, im),
            Vec::new(),
        )
    };
    let m0_class = if degenerate {
        Classification::Degenerate
    } else if p < p_s {
        // z0 < 0: the point lies in the fourth quadrant where det < 0.
        Classification::Saddle
    } else if (p - p_p).abs() <= CRITICAL_P_TOL {
        Classification::Center
    } else if p < p_p {
        Classification::Source
    } else {
        Classification::Sink
    };
    let m0 = StationaryPoint {
        name: StationaryName::M0,
        location: (alpha, z0),
        eigenvalues: (eig_lo, eig_hi),
        classification: m0_class,
        directions: dirs,
    };

    vec![origin, a0, m0]
}

/// Central-difference Jacobian of the field, row order (xdot, zdot).
pub fn numerical_jacobian(params: &ProblemParams, x: f64, z: f64, step: f64) -> [[f64; 2]; 2] {
    let fx_p = vector_field(params, x + step, z);
    let fx_m = vector_field(params, x - step, z);
    let fz_p = vector_field(params, x, z + step);
    let fz_m = vector_field(params, x, z - step);
    [
        [
            (fx_p.0 - fx_m.0) / (2.0 * step),
            (fz_p.0 - fz_m.0) / (2.0 * step),
        ],
        [
            (fx_p.1 - fx_m.1) / (2.0 * step),
            (fz_p.1 - fz_m.1) / (2.0 * step),
        ],
    ]
}

pub fn eigenvalues_2x2(j: &[[f64; 2]; 2]) -> (Complex64, Complex64) {
    let trace = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(trace * trace - 4.0 * det, 0.0).sqrt();
    let half = Complex64::new(trace / 2.0, 0.0);
    let (e1, e2) = (half - disc / 2.0, half + disc / 2.0);
    if e1.re <= e2.re {
        (e1, e2)
    } else {
        (e2, e1)
    }
}

/// Map a radial profile into phase space. Boundary samples with `u = 0` are
/// dropped; an interior non-positive sample is an error.
pub fn to_phase(profile: &SolutionProfile) -> Result<PhaseTrajectory, PhaseError> {
    let params = profile.input.params;
    let mut samples: &[Sample] = &profile.samples;
    while let Some(first) = samples.first() {
        if first.u == 0.0 {
            samples = &samples[1..];
        } else {
            break;
        }
    }
    while let Some(last) = samples.last() {
        if last.u == 0.0 {
            samples = &samples[..samples.len() - 1];
        } else {
            break;
        }
    }
    let mut points = Vec::with_capacity(samples.len());
    for s in samples {
        if s.u <= 0.0 {
            return Err(PhaseError::NonPositiveU { r: s.r, u: s.u });
        }
        points.push(PhasePoint {
            x: -s.r * s.du / s.u,
            z: s.r.powf(2.0 + params.a) * s.u.powf(params.p - 1.0),
            t: s.r.ln(),
        });
    }
    if points.is_empty() {
        return Err(PhaseError::InvalidSegment(
            "profile has no positive samples".into(),
        ));
    }
    let termination = match profile.rho {
        Rho::FirstZero(_) => Termination::BlowupForwardX,
        Rho::Truncated(_) => Termination::SectionBudget,
    };
    Ok(PhaseTrajectory {
        params,
        points,
        termination,
        section_hits: Vec::new(),
        axis_hits: Vec::new(),
    })
}

/// Reconstruct the radial profile `u(r) = r^{-alpha} z^{1/(p-1)}`,
/// `u' = -x u / r` from a phase trajectory.
pub fn from_phase(traj: &PhaseTrajectory) -> Result<SolutionProfile, PhaseError> {
    let params = traj.params;
    let alpha = params.exponents.alpha;
    let pw = 1.0 / (params.p - 1.0);
    let mut samples = Vec::with_capacity(traj.points.len());
    for pt in &traj.points {
        if pt.z <= 0.0 {
            return Err(PhaseError::NonPositiveZ { t: pt.t, z: pt.z });
        }
        let r = pt.t.exp();
        let u = r.powf(-alpha) * pt.z.powf(pw);
        samples.push(Sample {
            r,
            u,
            du: -pt.x * u / r,
        });
    }
    if samples.is_empty() {
        return Err(PhaseError::InvalidSegment(
            "trajectory has no points".into(),
        ));
    }

    // Branch switches of the radial equation happen where x changes sign
    // (u' = 0) and where the trajectory crosses ell.
    let ell_slope = sigma_upper(&params) * (f64::from(params.dim) - 1.0);
    let mut switch_radii = Vec::new();
    let mut tau = None;
    for w in traj.points.windows(2) {
        let (p0, p1) = (w[0], w[1]);
        for (g0, g1) in [
            (p0.x, p1.x),
            (p0.z - ell_slope * p0.x, p1.z - ell_slope * p1.x),
        ] {
            if g0 == 0.0 || g0.signum() == g1.signum() || g1 == 0.0 {
                continue;
            }
            let t_cross = p0.t + (p1.t - p0.t) * (-g0) / (g1 - g0);
            switch_radii.push(t_cross.exp());
        }
        if p0.x < 0.0 && p1.x >= 0.0 && tau.is_none() {
            let t_cross = p0.t + (p1.t - p0.t) * (-p0.x) / (p1.x - p0.x);
            tau = Some(t_cross.exp());
        }
    }
    switch_radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));

    let first = samples[0];
    let last = samples[samples.len() - 1];
    Ok(SolutionProfile {
        samples,
        tau,
        switch_radii,
        rho: Rho::Truncated(last.r),
        input: ShootingInput {
            params,
            inner_radius: first.r,
            delta: first.du,
        },
        steps: 0,
        rhs_evals: 0,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Maximum integration time per run, in t units.
    pub t_budget: f64,
    /// Radius of the capture ball around a stationary target.
    pub ball_radius: f64,
    /// Seed offset for manifold construction; `None` scales it as
    /// `1e-6 * max(1, n_eff - 2)`.
    pub seed_eps: Option<f64>,
    /// Forward stop at `x = n_eff - 2 + this margin`.
    pub x_forward_margin: f64,
    /// Backward stop deep in the second quadrant.
    pub x_backward_stop: f64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
            t_budget: 200.0,
            ball_radius: 1e-4,
            seed_eps: None,
            x_forward_margin: 1.0,
            x_backward_stop: -40.0,
        }
    }
}

impl PhaseConfig {
    pub fn seed_eps_for(&self, params: &ProblemParams) -> f64 {
        self.seed_eps
            .unwrap_or_else(|| 1e-6 * (params.n_effective() - 2.0).max(1.0))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseStops {
    /// Terminal: conclusive forward blow-up threshold.
    pub x_hi: Option<f64>,
    /// Terminal: conclusive backward blow-up threshold.
    pub x_lo: Option<f64>,
    /// Terminal: capture ball radius around A0.
    pub a0_ball: Option<f64>,
    /// Terminal: capture ball radius around M0.
    pub m0_ball: Option<f64>,
    /// Non-terminal: record crossings of this vertical section.
    pub section_x: Option<f64>,
}

#[derive(Clone, Copy)]
enum StopRole {
    XHi,
    XLo,
    BallA0,
    BallM0,
    Section,
    ZAxis,
}

/// Integrate the phase field from `start` for up to `duration` in `t`
/// (physical time runs backward when `backward` is set; points are returned
/// with `t` increasing either way).
pub fn integrate_phase(
    params: &ProblemParams,
    start: PhasePoint,
    duration: f64,
    backward: bool,
    stops: &PhaseStops,
    config: &PhaseConfig,
) -> PhaseTrajectory {
    let sign = if backward { -1.0 } else { 1.0 };
    let rhs = move |_s: f64, y: &[f64; 2]| {
        let (dx, dz) = vector_field(params, y[0], y[1]);
        [sign * dx, sign * dz]
    };

    let mut events: Vec<EventDef<2>> = Vec::new();
    let mut roles: Vec<StopRole> = Vec::new();
    if let Some(x_hi) = stops.x_hi {
        events.push(EventDef::new(
            move |_s, y: &[f64; 2]| y[0] - x_hi,
            Direction::Any,
            true,
        ));
        roles.push(StopRole::XHi);
    }
    if let Some(x_lo) = stops.x_lo {
        events.push(EventDef::new(
            move |_s, y: &[f64; 2]| y[0] - x_lo,
            Direction::Any,
            true,
        ));
        roles.push(StopRole::XLo);
    }
    if let Some(radius) = stops.a0_ball {
        let (cx, cz) = a0_location(params);
        events.push(EventDef::new(
            move |_s, y: &[f64; 2]| {
                (y[0] - cx) * (y[0] - cx) + (y[1] - cz) * (y[1] - cz) - radius * radius
            },
            Direction::Falling,
            true,
        ));
        roles.push(StopRole::BallA0);
    }
    if let Some(radius) = stops.m0_ball {
        let (cx, cz) = m0_location(params);
        events.push(EventDef::new(
            move |_s, y: &[f64; 2]| {
                (y[0] - cx) * (y[0] - cx) + (y[1] - cz) * (y[1] - cz) - radius * radius
            },
            Direction::Falling,
            true,
        ));
        roles.push(StopRole::BallM0);
    }
    if let Some(sx) = stops.section_x {
        events.push(EventDef::new(
            move |_s, y: &[f64; 2]| y[0] - sx,
            Direction::Any,
            false,
        ));
        roles.push(StopRole::Section);
    }
    events.push(EventDef::new(
        |_s, y: &[f64; 2]| y[0],
        Direction::Any,
        false,
    ));
    roles.push(StopRole::ZAxis);

    let opts = SolverOptions {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_steps: config.max_steps,
        loc_tol: 1e-12,
        h_max_rel: None,
        h_max_abs: 0.05,
        h_init: None,
    };
    let run = ode::integrate(&rhs, 0.0, [start.x, start.z], duration, &events, &opts);

    let to_t = |s: f64| start.t + sign * s;
    let mut points: Vec<PhasePoint> = run
        .samples
        .iter()
        .map(|s| PhasePoint {
            x: s.y[0],
            z: s.y[1],
            t: to_t(s.x),
        })
        .collect();
    let mut section_hits: Vec<SectionHit> = Vec::new();
    let mut axis_hits: Vec<PhasePoint> = Vec::new();
    for hit in &run.hits {
        let point = PhasePoint {
            x: hit.y[0],
            z: hit.y[1],
            t: to_t(hit.x),
        };
        match roles[hit.event] {
            StopRole::Section => {
                section_hits.push(SectionHit {
                    point,
                    rightward: hit.rising != backward,
                });
            }
            StopRole::ZAxis => axis_hits.push(point),
            _ => {}
        }
    }
    let termination = match run.stop {
        Stop::Event(idx) => match roles[idx] {
            StopRole::XHi => Termination::BlowupForwardX,
            StopRole::XLo => Termination::BlowupBackward2Q,
            StopRole::BallA0 => Termination::ConvergedToStationary(StationaryName::A0),
            StopRole::BallM0 => Termination::ConvergedToStationary(StationaryName::M0),
            StopRole::Section | StopRole::ZAxis => {
                unreachable!("section and axis events are not terminal")
            }
        },
        Stop::ReachedEnd | Stop::StepLimit | Stop::StepUnderflow => Termination::SectionBudget,
    };
    if backward {
        points.reverse();
        section_hits.reverse();
        axis_hits.reverse();
    }
    PhaseTrajectory {
        params: *params,
        points,
        termination,
        section_hits,
        axis_hits,
    }
}

/// Advance a manifold seed from offset `eps` to offset `d0` along the local
/// eigendirection and restart the clock there, so the parameterization does
/// not depend on `eps`. Returns the trajectory of the free stage.
fn staged_manifold_run(
    params: &ProblemParams,
    seed: PhasePoint,
    center: (f64, f64),
    d0: f64,
    departure_rate: f64,
    backward: bool,
    stops: &PhaseStops,
    config: &PhaseConfig,
) -> Result<PhaseTrajectory, PhaseError> {
    let dist0 = ((seed.x - center.0).powi(2) + (seed.z - center.1).powi(2)).sqrt();
    let start = if dist0 >= d0 {
        seed
    } else {
        let (cx, cz) = center;
        // The distance to the stationary point grows like e^{rate * s} in the
        // local regime, so this budget comfortably covers the staging leg
        // regardless of the caller's trajectory budget.
        let stage_budget = 2.0 * (d0 / dist0).ln() / departure_rate + 10.0;
        // Terminal departure event: distance to the stationary point reaches d0.
        let sign = if backward { -1.0 } else { 1.0 };
        let rhs = move |_s: f64, y: &[f64; 2]| {
            let (dx, dz) = vector_field(params, y[0], y[1]);
            [sign * dx, sign * dz]
        };
        let events = [EventDef::new(
            move |_s, y: &[f64; 2]| (y[0] - cx) * (y[0] - cx) + (y[1] - cz) * (y[1] - cz) - d0 * d0,
            Direction::Rising,
            true,
        )];
        let opts = SolverOptions {
            rel_tol: config.rel_tol,
            abs_tol: config.abs_tol,
            max_steps: config.max_steps,
            loc_tol: 1e-14,
            h_max_rel: None,
            h_max_abs: 0.05,
            h_init: None,
        };
        let run = ode::integrate(&rhs, 0.0, [seed.x, seed.z], stage_budget, &events, &opts);
        match run.stop {
            Stop::Event(_) => {
                let s = run.samples.last().expect("non-empty run");
                PhasePoint {
                    x: s.y[0],
                    z: s.y[1],
                    t: 0.0,
                }
            }
            _ => {
                let s = run.samples.last().expect("non-empty run");
                return Err(PhaseError::PrecisionLoss {
                    x: s.y[0],
                    z: s.y[1],
                    t: s.x,
                });
            }
        }
    };
    Ok(integrate_phase(
        params,
        start,
        config.t_budget,
        backward,
        stops,
        config,
    ))
}

/// The unique trajectory leaving the origin into the open first quadrant,
/// integrated forward until a conclusive exit or the budget runs out.
pub fn unstable_manifold_o(
    params: &ProblemParams,
    config: &PhaseConfig,
) -> Result<PhaseTrajectory, PhaseError> {
    let n = f64::from(params.dim);
    let slope = sigma_upper(params) * (n + params.a);
    let eps = config.seed_eps_for(params);
    let norm = (1.0 + slope * slope).sqrt();
    let seed = PhasePoint {
        x: eps / norm,
        z: eps * slope / norm,
        t: 0.0,
    };
    let d0 = (100.0 * eps).max(1e-4 * (params.n_effective() - 2.0).max(1.0));
    let (_, z0) = m0_location(params);
    let stops = PhaseStops {
        x_hi: Some(params.n_effective() - 2.0 + config.x_forward_margin),
        x_lo: None,
        a0_ball: Some(config.ball_radius),
        m0_ball: if z0 > config.ball_radius {
            Some(config.ball_radius)
        } else {
            None
        },
        section_x: None,
    };
    staged_manifold_run(
        params,
        seed,
        (0.0, 0.0),
        d0,
        2.0 + params.a,
        false,
        &stops,
        config,
    )
}

/// The unique trajectory arriving at `A0` along its stable direction,
/// integrated backward through the `z` axis until the second-quadrant
/// blow-up threshold. Points are returned with `t` increasing, ending near
/// `A0` at `t = 0`.
pub fn stable_manifold_a0(
    params: &ProblemParams,
    config: &PhaseConfig,
) -> Result<PhaseTrajectory, PhaseError> {
    let n_eff = params.n_effective();
    let mu = 2.0 + params.a - (params.p - 1.0) * (n_eff - 2.0);
    if mu >= 0.0 {
        return Err(PhaseError::NotASaddle {
            p: params.p,
            threshold: params.exponents.p_serrin,
        });
    }
    let a_coef = sigma_lower(params) * ((n_eff - 2.0) * params.p - (2.0 + params.a));
    let eps = config.seed_eps_for(params);
    let norm = (1.0 + a_coef * a_coef).sqrt();
    let (ax, _) = a0_location(params);
    // Into the first quadrant: x below n_eff - 2, z above zero.
    let seed = PhasePoint {
        x: ax - eps / norm,
        z: eps * a_coef / norm,
        t: 0.0,
    };
    let d0 = (100.0 * eps).max(1e-4 * (n_eff - 2.0).max(1.0));
    let stops = PhaseStops {
        x_hi: None,
        x_lo: Some(config.x_backward_stop),
        a0_ball: None,
        m0_ball: None,
        section_x: None,
    };
    let traj = staged_manifold_run(params, seed, (ax, 0.0), d0, -mu, true, &stops, config)?;
    if traj.termination != Termination::BlowupBackward2Q {
        let first = traj.first();
        return Err(PhaseError::PrecisionLoss {
            x: first.x,
            z: first.z,
            t: first.t,
        });
    }
    if let Some(bad) = traj.points.iter().find(|p| p.z <= 0.0) {
        return Err(PhaseError::NonPositiveZ { t: bad.t, z: bad.z });
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy)]
pub struct BoundViolation {
    pub t: f64,
    pub x: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct TwoQReport {
    pub checked: usize,
    pub bound_violations: Vec<BoundViolation>,
    pub sign_violations: Vec<PhasePoint>,
}

impl TwoQReport {
    pub fn clean(&self) -> bool {
        self.bound_violations.is_empty() && self.sign_violations.is_empty()
    }
}

/// Check the backward blow-up envelope on a second-quadrant segment anchored
/// at the sample nearest to `t0`, and the field signs at every point.
pub fn blowup_bound_2q(
    points: &[PhasePoint],
    t0: f64,
    params: &ProblemParams,
) -> Result<TwoQReport, PhaseError> {
    let anchor = points
        .iter()
        .min_by(|a, b| {
            (a.t - t0)
                .abs()
                .partial_cmp(&(b.t - t0).abs())
                .expect("finite t")
        })
        .ok_or_else(|| PhaseError::InvalidSegment("empty 2Q segment".into()))?;
    if anchor.x >= 0.0 {
        return Err(PhaseError::InvalidSegment(format!(
            "anchor at t={} has x={} >= 0",
            anchor.t, anchor.x
        )));
    }
    let n2 = match params.variant {
        OperatorVariant::Plus => params.exponents.n_minus - 2.0,
        OperatorVariant::Minus => params.exponents.n_plus - 2.0,
    };
    let c0 = 1.0 - n2 / anchor.x;
    let mut report = TwoQReport {
        checked: 0,
        bound_violations: Vec::new(),
        sign_violations: Vec::new(),
    };
    for pt in points {
        if pt.x >= 0.0 {
            continue;
        }
        let (dx, dz) = vector_field(params, pt.x, pt.z);
        if dx <= 0.0 || (pt.z > 0.0 && dz <= 0.0) {
            report.sign_violations.push(*pt);
        }
        if pt.t <= anchor.t {
            let den = c0 * (n2 * (pt.t - anchor.t)).exp() - 1.0;
            if den.abs() > 1e-300 {
                let bound = -n2 / den;
                report.checked += 1;
                // Positive bound (before the envelope's blow-up time) holds
                // vacuously for x < 0.
                if pt.x > bound + 1e-9 * (1.0 + bound.abs()) {
                    report.bound_violations.push(BoundViolation {
                        t: pt.t,
                        x: pt.x,
                        bound,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct BoxReport {
    pub x_hi: f64,
    pub z_hi: f64,
    pub inside: bool,
    pub first_exit: Option<PhasePoint>,
}

/// Check containment in the a-priori box for globally defined trajectories.
pub fn apriori_box_check(traj: &PhaseTrajectory, params: &ProblemParams) -> BoxReport {
    let (x_hi, z_hi) = apriori_box(params);
    let first_exit = traj
        .points
        .iter()
        .find(|p| !(p.x > 0.0 && p.x < x_hi && p.z > 0.0 && p.z < z_hi))
        .copied();
    BoxReport {
        x_hi,
        z_hi,
        inside: first_exit.is_none(),
        first_exit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowFamily {
    EllCrossing,
    XAxis,
    ZAxis,
    Pi1,
    Pi2,
}

#[derive(Debug, Clone)]
pub struct FlowViolation {
    pub family: FlowFamily,
    pub x: f64,
    pub z: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct FlowAuditReport {
    pub checks: usize,
    pub violations: Vec<FlowViolation>,
}

/// Deterministic audit of the qualitative flow statements on the
/// distinguished curves: crossing directions of `ell`, axis directions, and
/// the nullcline sign patterns on `pi1` and `pi2`.
pub fn flow_direction_audit(params: &ProblemParams, budget: usize) -> FlowAuditReport {
    let geo = geometry(params);
    let n_eff = params.n_effective();
    let n1 = f64::from(params.dim) - 1.0;
    let su = sigma_upper(params);
    let alpha = params.exponents.alpha;
    let thr = (1.0 + params.a) / params.p;
    let (_, z0) = m0_location(params);
    let (x_hi, z_hi) = apriori_box(params);
    let per_family = budget.div_ceil(5).max(10);
    let mut report = FlowAuditReport {
        checks: 0,
        violations: Vec::new(),
    };
    let mut fail = |family: FlowFamily, x: f64, z: f64, detail: String| {
        report.violations.push(FlowViolation {
            family,
            x,
            z,
            detail,
        });
    };

    // Crossings of ell: steeper than the line exactly below the threshold
    // x = (1+a)/p, with the closed-form slope ratio.
    for i in 0..per_family {
        let x = x_hi * (i as f64 + 0.5) / per_family as f64;
        if (x - thr).abs() < 1e-9 * (1.0 + thr) {
            continue;
        }
        let z = geo.ell(x);
        let (dx, dz) = vector_field(params, x, z);
        report.checks += 1;
        if dx <= 0.0 {
            fail(
                FlowFamily::EllCrossing,
                x,
                z,
                format!("xdot={dx} not positive on ell"),
            );
            continue;
        }
        let slope = dz / dx;
        let closed_form = su * n1 * (params.p - 1.0) * x * (alpha - x) / (x * (x + 1.0));
        if (slope - closed_form).abs() > 1e-8 * (1.0 + closed_form.abs()) {
            fail(
                FlowFamily::EllCrossing,
                x,
                z,
                format!("slope {slope} disagrees with closed form {closed_form}"),
            );
        }
        if (slope > geo.ell_slope) != (x < thr) {
            fail(
                FlowFamily::EllCrossing,
                x,
                z,
                format!(
                    "crossing direction wrong: slope {slope} vs line {}",
                    geo.ell_slope
                ),
            );
        }
    }
    // The tangency point itself: field parallel to ell.
    {
        let (px, pz) = geo.p_point;
        let (dx, dz) = vector_field(params, px, pz);
        report.checks += 1;
        if (dz - geo.ell_slope * dx).abs() > 1e-10 * (1.0 + dz.abs()) {
            fail(
                FlowFamily::EllCrossing,
                px,
                pz,
                "field not parallel to ell at P".into(),
            );
        }
    }

    // x axis: leftward flow on (0, n_eff - 2), rightward beyond.
    for i in 0..per_family {
        let frac = (i as f64 + 0.5) / per_family as f64;
        let x = 2.0 * x_hi * frac;
        if (x - x_hi).abs() < 1e-9 * (1.0 + x_hi) || x == 0.0 {
            continue;
        }
        let (dx, _) = vector_field(params, x, 0.0);
        report.checks += 1;
        if (dx < 0.0) != (x < x_hi) {
            fail(
                FlowFamily::XAxis,
                x,
                0.0,
                format!("xdot={dx} has wrong sign"),
            );
        }
    }

    // z axis: up and to the right.
    for i in 0..per_family {
        let z = 2.0 * z_hi * (i as f64 + 0.5) / per_family as f64;
        let (dx, dz) = vector_field(params, 0.0, z);
        report.checks += 1;
        if dx <= 0.0 || dz <= 0.0 {
            fail(
                FlowFamily::ZAxis,
                0.0,
                z,
                format!("field ({dx}, {dz}) not up-right"),
            );
        }
    }

    // pi1: vertical field, up before alpha and down after.
    for i in 0..per_family {
        let x = (n_eff - 2.0) * (i as f64 + 0.5) / per_family as f64;
        if (x - alpha).abs() < 1e-9 * (1.0 + alpha) {
            continue;
        }
        let z = geo.pi1(x);
        if z <= 0.0 {
            continue;
        }
        let (dx, dz) = vector_field(params, x, z);
        report.checks += 1;
        if dx.abs() > 1e-10 * (1.0 + x * x + z) {
            fail(
                FlowFamily::Pi1,
                x,
                z,
                format!("xdot={dx} not vertical on pi1"),
            );
        }
        if (dz > 0.0) != (x < alpha) {
            fail(FlowFamily::Pi1, x, z, format!("zdot={dz} has wrong sign"));
        }
    }

    // pi2: horizontal field, left below z0 and right above.
    for i in 0..per_family {
        let z = 2.0 * z_hi * (i as f64 + 0.5) / per_family as f64;
        if z0 > 0.0 && (z - z0).abs() < 1e-9 * (1.0 + z0) {
            continue;
        }
        let (dx, dz) = vector_field(params, alpha, z);
        report.checks += 1;
        if dz.abs() > 1e-12 * (1.0 + z) * (1.0 + alpha) {
            fail(
                FlowFamily::Pi2,
                alpha,
                z,
                format!("zdot={dz} not horizontal on pi2"),
            );
        }
        if (dx > 0.0) != (z > z0) {
            fail(
                FlowFamily::Pi2,
                alpha,
                z,
                format!("xdot={dx} has wrong sign"),
            );
        }
    }

    report
}

#[derive(Debug, Clone)]
pub struct PoincareRun {
    pub crossings: Vec<SectionHit>,
    /// Budget ran out before the requested number of crossings.
    pub exhausted: bool,
    pub termination: Termination,
}

/// Record successive crossings of the vertical section `x = section_x`,
/// stopping early on a conclusive forward blow-up.
pub fn poincare_return(
    params: &ProblemParams,
    seed: PhasePoint,
    section_x: f64,
    min_crossings: usize,
    config: &PhaseConfig,
) -> PoincareRun {
    let stops = PhaseStops {
        x_hi: Some(params.n_effective() - 2.0 + config.x_forward_margin),
        x_lo: None,
        a0_ball: None,
        m0_ball: None,
        section_x: Some(section_x),
    };
    let traj = integrate_phase(params, seed, config.t_budget, false, &stops, config);
    let exhausted = traj.section_hits.len() < min_crossings;
    PoincareRun {
        crossings: traj.section_hits,
        exhausted,
        termination: traj.termination,
    }
}

/// z-values of the crossings that pass the section in the given direction:
/// consecutive entries are one revolution apart.
pub fn same_direction_crossings(run: &PoincareRun, rightward: bool) -> Vec<f64> {
    run.crossings
        .iter()
        .filter(|c| c.rightward == rightward)
        .map(|c| c.point.z)
        .collect()
}
