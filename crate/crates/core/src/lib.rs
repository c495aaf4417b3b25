//! Radial shooting solver and phase-plane analysis for Henon-weighted
//! extremal (Pucci) equations `M(D^2 u) + r^a |u|^{p-1} u = 0`.
//!
//! The crate is organized bottom-up:
//! - [`pucci`]: operator algebra, parameter validation, derived exponents;
//! - [`ode`]: an embedded Runge-Kutta integrator with event localization;
//! - [`ivp`]: the radial initial value problem launched from a boundary zero;
//! - [`phase`]: the planar dynamical system equivalent to the radial flow;
//! - [`energy`]: weighted energies monotone along solutions, and the bounds
//!   they imply near the endpoints of the shooting parameter;
//! - [`shooting`]: boundary-value solves and decay classification.

pub mod energy;
pub mod ivp;
pub mod ode;
pub mod phase;
pub mod pucci;
pub mod shooting;

pub use energy::{
    big_energy, energy_samples, i_p, large_delta_bound, monotonicity_audit, small_delta_bound,
    small_energy, time_map_bound, BoundCheck, EnergyError, EnergySample, MonotonicityReport,
    PhaseTag, Weight,
};
pub use ivp::{
    integrate_ivp, rescale_profile, residual_audit, IntegratorConfig, IvpError, Rho, Sample,
    ShootingInput, SolutionProfile,
};
pub use phase::{
    from_phase, geometry, integrate_phase, poincare_return, stable_manifold_a0, stationary_points,
    to_phase, unstable_manifold_o, vector_field, Classification, Geometry, PhaseConfig, PhaseError,
    PhasePoint, PhaseStops, PhaseTrajectory, Region, StationaryName, StationaryPoint, Termination,
};
pub use pucci::{DerivedExponents, OperatorVariant, ParamsError, ProblemParams};
pub use shooting::{
    classify_decay, explore_d, find_fast_decay_delta, fit_decay_exponent, phase_tail, rho_of_delta,
    solve_annulus, solve_negative, AnnulusRequest, DecayClass, SolveError, SolveReport,
    SolverConfig, SweepEntry, SweepReport,
};
