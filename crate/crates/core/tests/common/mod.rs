//! Independent oracles for the acceptance suite. Everything here is written
//! from the closed-form statements of the problem, not by calling back into
//! the library's own composition path: the planar field is assembled from
//! the per-region branch formulas, the integrator is plain fixed-step RK4,
//! and the decay-rate fit is a two-parameter least squares on (ln r, ln u).
#![allow(dead_code)]

use henon_core::{OperatorVariant, ProblemParams};

/// Planar field from the printed branch forms. Region logic: second
/// quadrant for x < 0; in the right half-plane the branch switches on the
/// line z = sigma_up * (N - 1) * x.
pub fn oracle_field(params: &ProblemParams, x: f64, z: f64) -> (f64, f64) {
    let n = params.dim as f64;
    let (lam, big) = (params.lambda, params.big_lambda);
    let (sigma_up, sigma_lo, n_eff) = match params.variant {
        OperatorVariant::Plus => (lam, big, params.exponents.n_plus),
        OperatorVariant::Minus => (big, lam, params.exponents.n_minus),
    };
    let dx = if x < 0.0 {
        let (n2, sig2) = match params.variant {
            OperatorVariant::Plus => (params.exponents.n_minus, lam),
            OperatorVariant::Minus => (params.exponents.n_plus, big),
        };
        x * (x - (n2 - 2.0)) + z / sig2
    } else if z > sigma_up * (n - 1.0) * x {
        x * (x - (n - 2.0)) + z / sigma_up
    } else {
        x * (x - (n_eff - 2.0)) + z / sigma_lo
    };
    let dz = z * (2.0 + params.a - (params.p - 1.0) * x);
    (dx, dz)
}

/// Central-difference Jacobian of the oracle field.
pub fn oracle_jacobian(params: &ProblemParams, x: f64, z: f64, h: f64) -> [[f64; 2]; 2] {
    let fx_p = oracle_field(params, x + h, z);
    let fx_m = oracle_field(params, x - h, z);
    let fz_p = oracle_field(params, x, z + h);
    let fz_m = oracle_field(params, x, z - h);
    [
        [(fx_p.0 - fx_m.0) / (2.0 * h), (fz_p.0 - fz_m.0) / (2.0 * h)],
        [(fx_p.1 - fx_m.1) / (2.0 * h), (fz_p.1 - fz_m.1) / (2.0 * h)],
    ]
}

/// (det, trace, discriminant) of a 2x2 matrix.
pub fn det_trace_disc(j: &[[f64; 2]; 2]) -> (f64, f64, f64) {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let tr = j[0][0] + j[1][1];
    (det, tr, tr * tr - 4.0 * det)
}

/// Fixed-step classical RK4 advancing the oracle field from `t0` to `t1`.
pub fn rk4_phase(
    params: &ProblemParams,
    mut y: (f64, f64),
    t0: f64,
    t1: f64,
    steps: usize,
) -> (f64, f64) {
    let h = (t1 - t0) / steps as f64;
    for _ in 0..steps {
        let k1 = oracle_field(params, y.0, y.1);
        let k2 = oracle_field(params, y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1);
        let k3 = oracle_field(params, y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1);
        let k4 = oracle_field(params, y.0 + h * k3.0, y.1 + h * k3.1);
        y.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    y
}

/// Least-squares slope of y against x.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Log-spaced grid on [lo, hi], inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
