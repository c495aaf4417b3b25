//! Adaptive embedded Runge-Kutta 4(5) engine with event localization.
//!
//! Dormand-Prince coefficients, proportional-integral step-size control, and
//! step-aligned event handling: when an event function changes sign inside an
//! accepted step, the zero is bracketed by bisection on a dense interpolant of
//! the step and the step is truncated exactly at the located point. Truncating
//! keeps every accepted step on one smooth branch of a piecewise right-hand
//! side, which preserves the integrator's order across switching surfaces.
//!
//! The dense interpolant is a two-point Hermite quintic anchored by an extra
//! half-step state, so its interior accuracy matches the order of the step
//! itself rather than the O(h^4) of a plain cubic.

/// Sign constraint for an event trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Any,
    /// Trigger only on a negative-to-positive crossing.
    Rising,
    /// Trigger only on a positive-to-negative crossing.
    Falling,
}

pub struct EventDef<'a, const N: usize> {
    pub f: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, const N: usize> EventDef<'a, N> {
    pub fn new(
        f: impl Fn(f64, &[f64; N]) -> f64 + 'a,
        direction: Direction,
        terminal: bool,
    ) -> Self {
        Self {
            f: Box::new(f),
            direction,
            terminal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Bisection width target for event localization, in units of the
    /// independent variable.
    pub loc_tol: f64,
    /// Cap `h <= h_max_rel * x` (useful when the natural scale grows with x).
    pub h_max_rel: Option<f64>,
    pub h_max_abs: f64,
    pub h_init: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 5_000_000,
            loc_tol: 1e-12,
            h_max_rel: None,
            h_max_abs: f64::INFINITY,
            h_init: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepRecord<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, Copy)]
pub struct EventHit<const N: usize> {
    pub event: usize,
    pub x: f64,
    pub y: [f64; N],
    /// Sign of the event function after the crossing.
    pub rising: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    ReachedEnd,
    /// Terminal event with this index fired.
    Event(usize),
    StepLimit,
    /// Step size collapsed below the resolvable scale.
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct OdeRun<const N: usize> {
    /// Accepted states, starting with the initial condition; event points are
    /// included exactly because steps are truncated at them.
    pub samples: Vec<StepRecord<N>>,
    pub hits: Vec<EventHit<N>>,
    pub stop: Stop,
    pub steps: usize,
    pub rhs_evals: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

// PI controller constants for a 5th-order error estimate (Hairer's values).
const PI_ALPHA: f64 = 0.17;
const PI_BETA: f64 = 0.04;
const SAFETY: f64 = 0.9;
const SHRINK_MIN: f64 = 0.2;
const GROW_MAX: f64 = 5.0;

struct Dense<const N: usize> {
    x0: f64,
    h: f64,
    /// Newton divided-difference coefficients on confluent nodes [0,0,1/2,1,1].
    coef: [[f64; 5]; N],
}

impl<const N: usize> Dense<N> {
    /// Hermite quintic through (y0, f0), a midpoint state, and (y1, f1).
    fn build(
        x0: f64,
        h: f64,
        y0: &[f64; N],
        f0: &[f64; N],
        ym: &[f64; N],
        y1: &[f64; N],
        f1: &[f64; N],
    ) -> Self {
        let mut coef = [[0.0; 5]; N];
        for i in 0..N {
            // Nodes 0, 0, 1/2, 1, 1 with derivative data scaled by h.
            let d01 = h * f0[i];
            let d12 = (ym[i] - y0[i]) / 0.5;
            let d23 = (y1[i] - ym[i]) / 0.5;
            let d34 = h * f1[i];
            let e0 = (d12 - d01) / 0.5;
            let e1 = (d23 - d12) / 1.0;
            let e2 = (d34 - d23) / 0.5;
            let g0 = (e1 - e0) / 1.0;
            let g1 = (e2 - e1) / 1.0;
            let q = (g1 - g0) / 1.0;
            coef[i] = [y0[i], d01, e0, g0, q];
        }
        Self { x0, h, coef }
    }

    /// Evaluate at `x` inside the step.
    fn eval(&self, x: f64) -> [f64; N] {
        let s = ((x - self.x0) / self.h).clamp(0.0, 1.0);
        let mut y = [0.0; N];
        for i in 0..N {
            let c = &self.coef[i];
            // Newton basis: 1, s, s^2, s^2(s-1/2), s^2(s-1/2)(s-1).
            y[i] = c[0] + s * (c[1] + s * (c[2] + (s - 0.5) * (c[3] + (s - 1.0) * c[4])));
        }
        y
    }
}

fn err_norm<const N: usize>(
    e: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    opts: &SolverOptions,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
        let q = e[i] / scale;
        acc += q * q;
    }
    (acc / N as f64).sqrt()
}

/// Integrate `y' = rhs(x, y)` forward from `x0` to `x_end` (`x_end > x0`).
pub fn integrate<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    events: &[EventDef<'_, N>],
    opts: &SolverOptions,
) -> OdeRun<N> {
    assert!(
        x_end > x0,
        "integration span must be forward: {x0} -> {x_end}"
    );
    let mut run = OdeRun {
        samples: vec![StepRecord { x: x0, y: y0 }],
        hits: Vec::new(),
        stop: Stop::ReachedEnd,
        steps: 0,
        rhs_evals: 0,
    };

    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, &y);
    run.rhs_evals += 1;

    let h_cap = |x: f64, opts: &SolverOptions| -> f64 {
        let mut cap = opts.h_max_abs;
        if let Some(rel) = opts.h_max_rel {
            cap = cap.min(rel * x.abs().max(f64::MIN_POSITIVE));
        }
        cap.min(x_end - x)
    };

    let mut h = opts
        .h_init
        .unwrap_or_else(|| (1e-4 * (x_end - x0)).min(h_cap(x0, opts)));
    h = h.min(h_cap(x, opts)).max(f64::EPSILON * x0.abs().max(1.0));

    // Event bookkeeping: previous value and an armed flag with hysteresis so a
    // step that lands exactly on a surface does not immediately re-fire.
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.f)(x, &y)).collect();
    let mut g_scale: Vec<f64> = g_prev.iter().map(|g| g.abs().max(1.0)).collect();
    let mut armed: Vec<bool> = g_prev.iter().map(|g| g.abs() > 0.0).collect();

    let mut err_prev: f64 = 1.0;
    let mut k = [[0.0; N]; 7];

    while x < x_end {
        if run.steps >= opts.max_steps {
            run.stop = Stop::StepLimit;
            return run;
        }
        let h_min = 4.0 * f64::EPSILON * x.abs().max(1.0);
        if h < h_min {
            run.stop = Stop::StepUnderflow;
            return run;
        }
        h = h.min(h_cap(x, opts));
        if x + h > x_end - 0.25 * h_min {
            h = x_end - x;
        }

        // Stage evaluations.
        k[0] = k1;
        let mut finite = true;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] += h * acc;
            }
            k[s] = rhs(x + C[s] * h, &ys);
            run.rhs_evals += 1;
            if k[s].iter().any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
        }
        if !finite {
            h *= 0.25;
            continue;
        }

        let mut y_new = y;
        let mut e = [0.0; N];
        for i in 0..N {
            let mut acc5 = 0.0;
            let mut acce = 0.0;
            for s in 0..7 {
                acc5 += B5[s] * k[s][i];
                acce += (B5[s] - B4[s]) * k[s][i];
            }
            y_new[i] += h * acc5;
            e[i] = h * acce;
        }
        if y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            continue;
        }

        let err = err_norm(&e, &y, &y_new, opts).max(1e-30);
        if err > 1.0 {
            // Reject: shrink with the plain proportional rule.
            let fac = (SAFETY * err.powf(-PI_ALPHA)).max(SHRINK_MIN);
            h *= fac.min(1.0);
            run.steps += 1;
            continue;
        }

        run.steps += 1;
        // k[6] = f(x+h, y_new) by the FSAL property.
        let f_new = k[6];

        // Scan events over the accepted span.
        let mut best: Option<(usize, f64, bool)> = None; // (event index, x_hit, rising)
        let mut dense: Option<Dense<N>> = None;
        for (idx, ev) in events.iter().enumerate() {
            let g_new = (ev.f)(x + h, &y_new);
            let scale = g_scale[idx].max(g_new.abs());
            if !armed[idx] {
                // Re-arm once clearly away from the surface.
                if g_new.abs() > 1e-11 * scale {
                    armed[idx] = true;
                    g_prev[idx] = g_new;
                }
                continue;
            }
            let crossed =
                g_prev[idx] != 0.0 && g_new != 0.0 && (g_prev[idx] < 0.0) != (g_new < 0.0);
            let rising = g_new > g_prev[idx];
            let dir_ok = match ev.direction {
                Direction::Any => true,
                Direction::Rising => rising,
                Direction::Falling => !rising,
            };
            if crossed && dir_ok {
                let d = dense.get_or_insert_with(|| {
                    // Half-step state for the quintic anchor: a single 5th-order
                    // step of size h/2 from (x, y), reusing k1.
                    let ym = half_step(rhs, x, &y, &k[0], h * 0.5, &mut run.rhs_evals);
                    Dense::build(x, h, &y, &k[0], &ym, &y_new, &f_new)
                });
                // Bisect for the earliest sign change of this event.
                let mut lo = x;
                let mut hi = x + h;
                let mut g_lo = g_prev[idx];
                for _ in 0..80 {
                    if hi - lo <= opts.loc_tol {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let g_mid = (ev.f)(mid, &d.eval(mid));
                    if g_mid == 0.0 {
                        hi = mid;
                        break;
                    }
                    if (g_mid < 0.0) == (g_lo < 0.0) {
                        lo = mid;
                        g_lo = g_mid;
                    } else {
                        hi = mid;
                    }
                }
                let x_hit = hi;
                if best.map_or(true, |(_, bx, _)| x_hit < bx) {
                    best = Some((idx, x_hit, rising));
                }
            }
            g_prev[idx] = g_new;
            g_scale[idx] = scale;
        }

        if let Some((idx, x_hit, rising)) = best {
            // Truncate the step at the event point.
            let d = dense
                .as_ref()
                .expect("dense interpolant built with the hit");
            let y_hit = d.eval(x_hit);
            x = x_hit;
            y = y_hit;
            run.samples.push(StepRecord { x, y });
            run.hits.push(EventHit {
                event: idx,
                x,
                y,
                rising,
            });
            armed[idx] = false;
            // Other events must re-sync their previous values to the new point.
            for (j, ev) in events.iter().enumerate() {
                if j != idx {
                    g_prev[j] = (ev.f)(x, &y);
                }
            }
            if events[idx].terminal {
                run.stop = Stop::Event(idx);
                return run;
            }
            k1 = rhs(x, &y);
            run.rhs_evals += 1;
            // Keep the suggested h; the controller re-limits next round.
            continue;
        }

        // Plain acceptance.
        x += h;
        y = y_new;
        k1 = f_new;
        run.samples.push(StepRecord { x, y });
        let fac =
            (SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA)).clamp(SHRINK_MIN, GROW_MAX);
        err_prev = err;
        h *= fac;
    }

    run.stop = Stop::ReachedEnd;
    run
}

/// One 5th-order step of size `h` without error control (dense-output anchor).
fn half_step<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    evals: &mut usize,
) -> [f64; N] {
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut ys = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            ys[i] += h * acc;
        }
        k[s] = rhs(x + C[s] * h, &ys);
        *evals += 1;
    }
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for s in 0..7 {
            acc += B5[s] * k[s][i];
        }
        out[i] += h * acc;
    }
    out
}
