//! Dormand–Prince 5(4) integration of the Bloch equations with dense output.

use num_complex::Complex64;
use thiserror::Error;

use super::{rhs_array, BlochState, DriveParams};

/// Accepted steps may exceed the physical Bloch ball by at most this much.
pub const INVARIANT_ABORT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid integrator options: {0}")]
    InvalidOptions(String),
    #[error("step size underflow at t = {t} ns (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({steps}) reached at t = {t} ns")]
    MaxSteps { t: f64, steps: usize },
    #[error("non-finite state or drive at t = {t} ns")]
    NonFinite { t: f64 },
    #[error("state left the Bloch ball at t = {t} ns: Z = {z}, Z² + |R|² = {norm}")]
    InvariantViolation { t: f64, z: f64, norm: f64 },
}

impl IntegrateError {
    /// Time of failure, when known.
    pub fn time(&self) -> Option<f64> {
        match *self {
            IntegrateError::InvalidOptions(_) => None,
            IntegrateError::StepUnderflow { t, .. }
            | IntegrateError::MaxSteps { t, .. }
            | IntegrateError::NonFinite { t }
            | IntegrateError::InvariantViolation { t, .. } => Some(t),
        }
    }
}

/// Time-dependent drive. Implemented for constant [`DriveParams`] and for
/// closures `Fn(f64) -> DriveParams`.
pub trait DriveProtocol {
    fn drive_at(&self, t: f64) -> DriveParams;
}

impl DriveProtocol for DriveParams {
    fn drive_at(&self, _t: f64) -> DriveParams {
        *self
    }
}

impl<F: Fn(f64) -> DriveParams> DriveProtocol for F {
    fn drive_at(&self, t: f64) -> DriveParams {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Spacing of dense-output samples (ns). The end point is always sampled.
    pub sample_stride: f64,
    pub max_steps: usize,
    /// Upper bound on the step size (ns); `None` means the whole span.
    pub max_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rel_tol: 1e-10, abs_tol: 1e-12, sample_stride: 0.1, max_steps: 10_000_000, max_step: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub omega0: Complex64,
    pub state: BlochState,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrajectoryStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest `Z² + |R|²` over accepted step end points.
    pub max_bloch_norm: f64,
    /// Largest `|Z|` over accepted step end points.
    pub max_abs_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: TrajectoryStats,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds at least the initial sample")
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Hairer's continuous extension of order 4
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type V = [f64; 3];

fn axpy(y: &V, h: f64, terms: &[(f64, &V)]) -> V {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..3 {
            out[i] += h * coef * k[i];
        }
    }
    out
}

struct Step {
    y_new: V,
    k7: V,
    err: f64,
    dense: [V; 5],
}

fn dp5_step<F: Fn(f64, &V) -> V>(f: &F, t: f64, y: &V, k1: &V, h: f64, rel_tol: f64, abs_tol: f64) -> Step {
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);

    let mut sum = 0.0;
    let mut dense = [[0.0; 3]; 5];
    for i in 0..3 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (e / scale).powi(2);

        let diff = y_new[i] - y[i];
        let bspl = h * k1[i] - diff;
        dense[0][i] = y[i];
        dense[1][i] = diff;
        dense[2][i] = bspl;
        dense[3][i] = diff - h * k7[i] - bspl;
        dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Step { y_new, k7, err: (sum / 3.0).sqrt(), dense }
}

fn interpolate(dense: &[V; 5], theta: f64) -> V {
    let theta1 = 1.0 - theta;
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] =
            dense[0][i] + theta * (dense[1][i] + theta1 * (dense[2][i] + theta * (dense[3][i] + theta1 * dense[4][i])));
    }
    out
}

fn initial_step<F: Fn(f64, &V) -> V>(f: &F, t0: f64, y0: &V, k1: &V, opts: &IntegratorOptions, span: f64) -> f64 {
    let sc = |i: usize| opts.abs_tol + opts.rel_tol * y0[i].abs();
    let norm = |v: &V| ((0..3).map(|i| (v[i] / sc(i)).powi(2)).sum::<f64>() / 3.0).sqrt();
    let d0 = norm(y0);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = axpy(y0, h0, &[(1.0, k1)]);
    let k2 = f(t0 + h0, &y1);
    let diff: V = [k2[0] - k1[0], k2[1] - k1[1], k2[2] - k1[2]];
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 5.0) };
    (100.0 * h0).min(h1).min(span)
}

/// Adaptive integration from `t_span.0` to `t_span.1`.
///
/// Samples are produced at `t0 + k·stride` and at `t1`. The Bloch-ball
/// invariant is checked on every accepted step while `Γ ≥ γ/2`.
pub fn integrate<P: DriveProtocol + ?Sized>(
    initial: BlochState,
    protocol: &P,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<Trajectory, IntegrateError> {
    let (t0, t1) = t_span;
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(IntegrateError::InvalidOptions("tolerances must be positive".into()));
    }
    if !(opts.sample_stride > 0.0) {
        return Err(IntegrateError::InvalidOptions("sample_stride must be positive".into()));
    }
    if !(t1 >= t0 && t0.is_finite() && t1.is_finite()) {
        return Err(IntegrateError::InvalidOptions(format!("invalid time span [{t0}, {t1}]")));
    }
    let y_init = initial.to_array();
    if y_init.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFinite { t: t0 });
    }

    let mut stats =
        TrajectoryStats { max_bloch_norm: initial.bloch_norm(), max_abs_z: initial.z.abs(), ..Default::default() };
    let evaluations = std::cell::Cell::new(0usize);
    let f = |t: f64, y: &V| {
        evaluations.set(evaluations.get() + 1);
        rhs_array(y, &protocol.drive_at(t))
    };
    let sample = |t: f64, y: V| Sample { t, omega0: protocol.drive_at(t).omega0, state: BlochState::from_array(y) };

    let mut samples = vec![sample(t0, y_init)];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(Trajectory { samples, stats });
    }
    let stride = opts.sample_stride;
    let mut next_index = 1usize;
    let next_sample_time = |k: usize| t0 + k as f64 * stride;

    let max_step = opts.max_step.unwrap_or(span).min(span);
    let mut t = t0;
    let mut y = y_init;
    let mut k1 = f(t, &y);
    let mut h = initial_step(&f, t, &y, &k1, opts, span).min(max_step);
    let mut last_rejected = false;

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegrateError::MaxSteps { t, steps: opts.max_steps });
        }
        let last = t + h >= t1 || t1 - (t + h) < 1e-12 * span;
        if last {
            h = t1 - t;
        }
        if h < 1e-14 * t.abs().max(span) {
            return Err(IntegrateError::StepUnderflow { t, h });
        }
        let step = dp5_step(&f, t, &y, &k1, h, opts.rel_tol, opts.abs_tol);
        if !step.err.is_finite() || step.y_new.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        if step.err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            while next_sample_time(next_index) < t_new {
                let ts = next_sample_time(next_index);
                let theta = (ts - t) / h;
                samples.push(sample(ts, interpolate(&step.dense, theta)));
                next_index += 1;
            }
            t = t_new;
            y = step.y_new;
            k1 = step.k7;
            stats.accepted += 1;

            let state = BlochState::from_array(y);
            let norm = state.bloch_norm();
            stats.max_bloch_norm = stats.max_bloch_norm.max(norm);
            stats.max_abs_z = stats.max_abs_z.max(state.z.abs());
            let drive = protocol.drive_at(t);
            if drive.dephasing >= 0.5 * drive.gamma
                && (norm > 1.0 + INVARIANT_ABORT || state.z.abs() > 1.0 + INVARIANT_ABORT)
            {
                return Err(IntegrateError::InvariantViolation { t, z: state.z, norm });
            }

            let fac = if step.err == 0.0 { 5.0 } else { 0.9 * step.err.powf(-0.2) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            h = (h * fac.clamp(0.2, 5.0)).min(max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * step.err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    samples.push(sample(t1, y));
    stats.evaluations = evaluations.get();
    Ok(Trajectory { samples, stats })
}
