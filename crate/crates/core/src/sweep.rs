//! Experiment drivers: branch diagrams, the bistable window, hysteresis
//! sweeps and parameter-space maps.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::bloch::steady::root_count;
use crate::bloch::{
    integrate, steady_states, BlochState, BranchPoint, DriveParams, IntegrateError, IntegratorOptions, Sample,
};
use crate::coupling::{CouplingError, Orientation, SystemConfig};
use crate::materials::DielectricTable;

/// Sweep legs last this many slowest relaxation times, `800 / min(γ, Γ)`.
pub const DEFAULT_LEG_RELAXATIONS: f64 = 800.0;
/// Jump criterion on consecutive samples.
pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.1;
/// Default sample stride in units of the slowest relaxation time.
pub const DEFAULT_STRIDE_RELAXATIONS: f64 = 0.5;
/// Uniform scan resolution used to locate the multivalued window.
pub const DEFAULT_SCAN_POINTS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sweep protocol: {0}")]
    InvalidProtocol(String),
    #[error("integration failed on the {leg} leg at |Omega0| = {omega0_abs} ns^-1: {source}")]
    Integration {
        leg: Leg,
        omega0_abs: f64,
        #[source]
        source: IntegrateError,
    },
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    Up,
    Down,
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Leg::Up => "up",
            Leg::Down => "down",
        })
    }
}

fn check_increasing(grid: &[f64]) -> Result<(), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(SweepError::InvalidGrid("amplitudes must be finite and non-negative".into()));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(SweepError::InvalidGrid(format!(
            "grid must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub omega0_abs: f64,
    pub points: Vec<BranchPoint>,
}

/// Stationary points at each `|Ω₀|` of `grid`, with the phase of the template.
pub fn branch_diagram(template: &DriveParams, grid: &[f64]) -> Result<Vec<BranchRow>, SweepError> {
    check_increasing(grid)?;
    Ok(grid
        .iter()
        .map(|&omega0_abs| BranchRow { omega0_abs, points: steady_states(&template.with_amplitude(omega0_abs)) })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistableInterval {
    pub low: f64,
    pub high: f64,
}

impl BistableInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, omega0_abs: f64) -> bool {
        omega0_abs >= self.low && omega0_abs <= self.high
    }
}

/// Search range `[0, √(γ/Γ)·|G|]` that contains every fold point.
///
/// At a fold `|Ω₀|² = (γ/Γ)(1−u)h(u)/u` is stationary in `u = −Z`, which
/// forces `√h ≤ 2|G|u(1−u)` and hence `|Ω₀|² ≤ (27/64)(γ/Γ)|G|²`.
pub fn default_search_range(template: &DriveParams) -> (f64, f64) {
    let ratio = (template.gamma / template.dephasing).sqrt();
    let cap = ratio * template.self_action.norm();
    let fallback = 10.0 * (template.gamma * template.dephasing).sqrt();
    (0.0, cap.max(fallback))
}

fn multivalued(template: &DriveParams, omega0_abs: f64) -> bool {
    root_count(&template.with_amplitude(omega0_abs)) > 1
}

/// Bisects between a single-valued and a multivalued amplitude.
fn bisect_edge(template: &DriveParams, mut single: f64, mut multi: f64, tol: f64) -> f64 {
    while (multi - single).abs() > tol {
        let mid = 0.5 * (single + multi);
        if mid == single || mid == multi {
            break;
        }
        if multivalued(template, mid) {
            multi = mid;
        } else {
            single = mid;
        }
    }
    0.5 * (single + multi)
}

/// Window of `|Ω₀|` inside `range` with more than one stationary point.
pub fn bistable_interval(
    template: &DriveParams,
    range: (f64, f64),
    tol: f64,
) -> Result<Option<BistableInterval>, SweepError> {
    bistable_interval_with(template, range, tol, DEFAULT_SCAN_POINTS)
}

pub fn bistable_interval_with(
    template: &DriveParams,
    range: (f64, f64),
    tol: f64,
    scan_points: usize,
) -> Result<Option<BistableInterval>, SweepError> {
    if !(tol > 0.0) {
        return Err(SweepError::InvalidGrid(format!("tolerance must be positive, got {tol}")));
    }
    if !(range.0 >= 0.0 && range.1 > range.0 && range.1.is_finite()) {
        return Err(SweepError::InvalidGrid(format!("invalid search range [{}, {}]", range.0, range.1)));
    }
    if template.self_action.norm() == 0.0 {
        return Ok(None);
    }
    let grid = linspace(range.0, range.1, scan_points.max(2));
    let flags: Vec<bool> = grid.iter().map(|&w| multivalued(template, w)).collect();
    let Some(first) = flags.iter().position(|&m| m) else {
        return Ok(None);
    };
    let last = flags.iter().rposition(|&m| m).expect("at least one multivalued point");
    let low = if first == 0 { grid[0] } else { bisect_edge(template, grid[first - 1], grid[first], tol) };
    let high = if last == grid.len() - 1 { grid[last] } else { bisect_edge(template, grid[last + 1], grid[last], tol) };
    Ok(Some(BistableInterval { low, high }))
}

/// Triangular amplitude ramp `min → max → min` at constant `|dΩ₀/dt|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepProtocol {
    pub omega0_min: f64,
    pub omega0_max: f64,
    /// `d|Ω₀|/dt` in ns⁻².
    pub ramp_rate: f64,
    /// Fixed phase of `Ω₀` (rad).
    pub phase: f64,
}

impl SweepProtocol {
    pub fn new(omega0_min: f64, omega0_max: f64, ramp_rate: f64, phase: f64) -> Result<Self, SweepError> {
        let p = SweepProtocol { omega0_min, omega0_max, ramp_rate, phase };
        p.validate()?;
        Ok(p)
    }

    /// Ramp whose legs each last `DEFAULT_LEG_RELAXATIONS / min(γ, Γ)`.
    pub fn with_default_rate(omega0_min: f64, omega0_max: f64, drive: &DriveParams) -> Result<Self, SweepError> {
        let leg = DEFAULT_LEG_RELAXATIONS / drive.gamma.min(drive.dephasing);
        Self::new(omega0_min, omega0_max, (omega0_max - omega0_min) / leg, 0.0)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.omega0_min >= 0.0 && self.omega0_max > self.omega0_min && self.omega0_max.is_finite()) {
            return Err(SweepError::InvalidProtocol(format!(
                "need 0 <= omega0_min < omega0_max, got [{}, {}]",
                self.omega0_min, self.omega0_max
            )));
        }
        if !(self.ramp_rate > 0.0 && self.ramp_rate.is_finite()) {
            return Err(SweepError::InvalidProtocol(format!("ramp_rate must be positive, got {}", self.ramp_rate)));
        }
        if !self.phase.is_finite() {
            return Err(SweepError::InvalidProtocol("phase must be finite".into()));
        }
        Ok(())
    }

    pub fn leg_duration(&self) -> f64 {
        (self.omega0_max - self.omega0_min) / self.ramp_rate
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        let leg = self.leg_duration();
        if t <= leg {
            (self.omega0_min + self.ramp_rate * t).min(self.omega0_max)
        } else {
            (self.omega0_max - self.ramp_rate * (t - leg)).max(self.omega0_min)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Sample stride (ns); `None` uses `0.5 / min(γ, Γ)`.
    pub sample_stride: Option<f64>,
    pub jump_threshold: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { rel_tol: 1e-9, abs_tol: 1e-11, sample_stride: None, jump_threshold: DEFAULT_JUMP_THRESHOLD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSample {
    pub omega0_abs: f64,
    pub z: f64,
    pub r_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisResult {
    pub protocol: SweepProtocol,
    /// Raw samples of both legs; the turning point appears in each.
    pub samples: Vec<(Leg, Sample)>,
    /// Increasing `|Ω₀|`.
    pub up_branch: Vec<LoopSample>,
    /// Decreasing `|Ω₀|`, in time order.
    pub down_branch: Vec<LoopSample>,
    pub threshold_up: Option<f64>,
    pub threshold_down: Option<f64>,
    /// `∫ |Z_down − Z_up| d|Ω₀|` over the common amplitude range.
    pub loop_area: f64,
}

impl HysteresisResult {
    /// Area of the full `(|Ω₀|, Z)` box, `(max − min) · 2`.
    pub fn area_scale(&self) -> f64 {
        2.0 * (self.protocol.omega0_max - self.protocol.omega0_min)
    }
}

fn loop_sample(s: &Sample) -> LoopSample {
    LoopSample { omega0_abs: s.omega0.norm(), z: s.state.z, r_abs: s.state.r.norm() }
}

/// Amplitude at the last sample before the first jump `|ΔZ| > threshold`.
fn first_jump(series: &[LoopSample], threshold: f64) -> Option<f64> {
    series.windows(2).find(|w| (w[1].z - w[0].z).abs() > threshold).map(|w| w[0].omega0_abs)
}

fn interp_z(sorted: &[LoopSample], omega: f64) -> Option<f64> {
    let i = sorted.partition_point(|s| s.omega0_abs < omega);
    if i < sorted.len() && sorted[i].omega0_abs == omega {
        return Some(sorted[i].z);
    }
    if i == 0 || i == sorted.len() {
        return None;
    }
    let (a, b) = (&sorted[i - 1], &sorted[i]);
    let t = (omega - a.omega0_abs) / (b.omega0_abs - a.omega0_abs);
    Some(a.z + t * (b.z - a.z))
}

/// Trapezoidal `∫ |Z_down − Z_up| d|Ω₀|` on the up-branch amplitude grid.
pub fn loop_area(up: &[LoopSample], down: &[LoopSample]) -> f64 {
    let mut down_sorted: Vec<LoopSample> = down.to_vec();
    down_sorted.sort_by(|a, b| a.omega0_abs.total_cmp(&b.omega0_abs));
    down_sorted.dedup_by(|a, b| a.omega0_abs == b.omega0_abs);
    let pts: Vec<(f64, f64)> = up
        .iter()
        .filter_map(|s| interp_z(&down_sorted, s.omega0_abs).map(|zd| (s.omega0_abs, (zd - s.z).abs())))
        .collect();
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum::<f64>().abs()
}

/// Integrates a triangular sweep from the ground state and extracts the
/// switching thresholds of each leg.
pub fn hysteresis_run(
    template: &DriveParams,
    protocol: &SweepProtocol,
    opts: &SweepOptions,
) -> Result<HysteresisResult, SweepError> {
    protocol.validate()?;
    let stride = opts.sample_stride.unwrap_or(DEFAULT_STRIDE_RELAXATIONS / template.gamma.min(template.dephasing));
    if !(stride > 0.0) {
        return Err(SweepError::InvalidProtocol(format!("sample stride must be positive, got {stride}")));
    }
    let integrator =
        IntegratorOptions { rel_tol: opts.rel_tol, abs_tol: opts.abs_tol, sample_stride: stride, ..Default::default() };
    let phase = Complex64::from_polar(1.0, protocol.phase);
    let drive = |t: f64| DriveParams { omega0: phase * protocol.amplitude_at(t), ..*template };
    let leg = protocol.leg_duration();

    let run_leg = |which: Leg, start: BlochState, span: (f64, f64)| {
        integrate(start, &drive, span, &integrator).map_err(|source| SweepError::Integration {
            leg: which,
            omega0_abs: source.time().map_or(f64::NAN, |t| protocol.amplitude_at(t)),
            source,
        })
    };
    let up = run_leg(Leg::Up, BlochState::ground(), (0.0, leg))?;
    let down = run_leg(Leg::Down, up.last().state, (leg, 2.0 * leg))?;

    let up_branch: Vec<LoopSample> = up.samples.iter().map(loop_sample).collect();
    let down_branch: Vec<LoopSample> = down.samples.iter().map(loop_sample).collect();
    let threshold_up = first_jump(&up_branch, opts.jump_threshold);
    let threshold_down = first_jump(&down_branch, opts.jump_threshold);
    let loop_area = loop_area(&up_branch, &down_branch);

    let samples =
        up.samples.into_iter().map(|s| (Leg::Up, s)).chain(down.samples.into_iter().map(|s| (Leg::Down, s))).collect();
    Ok(HysteresisResult {
        protocol: *protocol,
        samples,
        up_branch,
        down_branch,
        threshold_up,
        threshold_down,
        loop_area,
    })
}

/// `(|Ω₀|, |R|)` along the up leg followed by the down leg.
pub fn polarization_loop(result: &HysteresisResult) -> Vec<(f64, f64)> {
    result.up_branch.iter().chain(&result.down_branch).map(|s| (s.omega0_abs, s.r_abs)).collect()
}

/// A `SystemConfig` field that a phase map can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParameter {
    TransitionEnergy,
    EpsS,
    EpsB,
    Radius,
    Distance,
    Dipole,
    Gamma,
    Dephasing,
    Detuning,
    /// Field angle to the axis (rad).
    Angle,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 10] = [
        SweepParameter::TransitionEnergy,
        SweepParameter::EpsS,
        SweepParameter::EpsB,
        SweepParameter::Radius,
        SweepParameter::Distance,
        SweepParameter::Dipole,
        SweepParameter::Gamma,
        SweepParameter::Dephasing,
        SweepParameter::Detuning,
        SweepParameter::Angle,
    ];

    /// Key used in configuration files and CSV headers.
    pub fn key(self) -> &'static str {
        match self {
            SweepParameter::TransitionEnergy => "transition_energy_ev",
            SweepParameter::EpsS => "eps_s",
            SweepParameter::EpsB => "eps_b",
            SweepParameter::Radius => "radius_nm",
            SweepParameter::Distance => "distance_nm",
            SweepParameter::Dipole => "dipole_e_nm",
            SweepParameter::Gamma => "gamma_per_ns",
            SweepParameter::Dephasing => "dephasing_per_ns",
            SweepParameter::Detuning => "detuning_per_ns",
            SweepParameter::Angle => "angle_rad",
        }
    }

    pub fn apply(self, config: &mut SystemConfig, value: f64) {
        match self {
            SweepParameter::TransitionEnergy => config.transition_energy_ev = value,
            SweepParameter::EpsS => config.eps_s = value,
            SweepParameter::EpsB => config.eps_b = value,
            SweepParameter::Radius => config.radius_nm = value,
            SweepParameter::Distance => config.distance_nm = value,
            SweepParameter::Dipole => config.dipole_e_nm = value,
            SweepParameter::Gamma => config.gamma = value,
            SweepParameter::Dephasing => config.dephasing = value,
            SweepParameter::Detuning => config.detuning = value,
            SweepParameter::Angle => config.orientation = Orientation::Tilted(value),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParameter::ALL.into_iter().find(|p| p.key() == s).ok_or_else(|| {
            let keys: Vec<&str> = SweepParameter::ALL.iter().map(|p| p.key()).collect();
            format!("unknown parameter '{s}' (expected one of {})", keys.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Monostable,
    Bistable(BistableInterval),
    Failed(String),
}

impl CellOutcome {
    pub fn is_bistable(&self) -> bool {
        matches!(self, CellOutcome::Bistable(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub axis1: Axis,
    pub axis2: Axis,
    /// `cells[i][j]` belongs to `axis1.values[i]`, `axis2.values[j]`.
    pub cells: Vec<Vec<CellOutcome>>,
}

/// Relative tolerance (of the search range) for the window edges in a map.
pub const PHASE_MAP_REL_TOL: f64 = 1e-6;

/// Classifies one parameter point as mono- or bistable.
pub fn classify(config: &SystemConfig, table: &DielectricTable) -> CellOutcome {
    let coupling = match config.coupling(table) {
        Ok(c) => c,
        Err(e) => return CellOutcome::Failed(e.to_string()),
    };
    let template = coupling.drive(config, Complex64::new(1.0, 0.0));
    let range = default_search_range(&template);
    match bistable_interval(&template, range, PHASE_MAP_REL_TOL * range.1) {
        Ok(Some(interval)) => CellOutcome::Bistable(interval),
        Ok(None) => CellOutcome::Monostable,
        Err(e) => CellOutcome::Failed(e.to_string()),
    }
}

/// Bistability classification over a rectangular parameter grid. Cells are
/// independent and evaluated in parallel.
pub fn phase_map(
    base: &SystemConfig,
    table: &DielectricTable,
    axis1: Axis,
    axis2: Axis,
) -> Result<PhaseMap, SweepError> {
    if axis1.values.is_empty() || axis2.values.is_empty() {
        return Err(SweepError::InvalidGrid("phase map axes must be non-empty".into()));
    }
    if axis1.values.iter().chain(&axis2.values).any(|v| !v.is_finite()) {
        return Err(SweepError::InvalidGrid("phase map axis values must be finite".into()));
    }
    let n2 = axis2.values.len();
    let flat: Vec<CellOutcome> = (0..axis1.values.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let mut config = *base;
            axis1.parameter.apply(&mut config, axis1.values[idx / n2]);
            axis2.parameter.apply(&mut config, axis2.values[idx % n2]);
            classify(&config, table)
        })
        .collect();
    let cells = flat.chunks(n2).map(|row| row.to_vec()).collect();
    Ok(PhaseMap { axis1, axis2, cells })
}
