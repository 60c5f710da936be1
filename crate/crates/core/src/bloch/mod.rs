//! Two-level Bloch dynamics with self-action.
//!
//! Equations of motion in the rotating frame:
//!
//! ```text
//! dZ/dt = −γ(Z + 1) − ½(Ω R* + Ω* R)
//! dR/dt = −(iΔ + Γ) R + Ω Z
//! Ω     = Ω₀ − i G R
//! ```
//!
//! `Z = ρ₁₁ − ρ₀₀` and the coherence amplitude follows the convention
//! `R = 2iρ₁₀`, which makes the dot dipole `P = (−i/2) R μ` and turns
//! density-matrix positivity into `Z² + |R|² ≤ 1`.
//!
//! Real coordinates for the Jacobian are ordered `(Re R, Im R, Z)`.

mod integrate;
pub(crate) mod steady;

pub use integrate::{integrate, DriveProtocol, IntegrateError, IntegratorOptions, Sample, Trajectory, TrajectoryStats};
pub use steady::{cubic_coefficients, cubic_residual, steady_states, BranchPoint};

use nalgebra::Matrix3;
use num_complex::Complex64;

/// Margin on the leading eigenvalue real part treated as marginal.
pub const STABILITY_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub z: f64,
    pub r: Complex64,
}

impl BlochState {
    pub fn new(z: f64, r: Complex64) -> Self {
        BlochState { z, r }
    }

    pub fn ground() -> Self {
        BlochState { z: -1.0, r: Complex64::new(0.0, 0.0) }
    }

    /// `Z² + |R|²`; at most 1 for a physical state.
    pub fn bloch_norm(&self) -> f64 {
        self.z * self.z + self.r.norm_sqr()
    }

    pub(crate) fn to_array(self) -> [f64; 3] {
        [self.r.re, self.r.im, self.z]
    }

    pub(crate) fn from_array(y: [f64; 3]) -> Self {
        BlochState { z: y[2], r: Complex64::new(y[0], y[1]) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Renormalized Rabi amplitude `Ω₀` (ns⁻¹).
    pub omega0: Complex64,
    pub detuning: f64,
    pub gamma: f64,
    pub dephasing: f64,
    /// Self-action constant `G` (ns⁻¹).
    pub self_action: Complex64,
}

impl DriveParams {
    /// Same drive with `|Ω₀|` replaced, keeping the phase of `Ω₀`.
    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        DriveParams { omega0: Complex64::from_polar(amplitude, self.phase()), ..*self }
    }

    pub fn phase(&self) -> f64 {
        if self.omega0.norm() > 0.0 {
            self.omega0.arg()
        } else {
            0.0
        }
    }

    /// Full Rabi frequency `Ω₀ − iGR` seen by the dot.
    pub fn rabi(&self, r: Complex64) -> Complex64 {
        self.omega0 - Complex64::i() * self.self_action * r
    }
}

/// Time derivatives `(dZ/dt, dR/dt)`.
pub fn rhs(state: &BlochState, drive: &DriveParams) -> (f64, Complex64) {
    let omega = drive.rabi(state.r);
    let dz = -drive.gamma * (state.z + 1.0) - (omega * state.r.conj()).re;
    let dr = -Complex64::new(drive.dephasing, drive.detuning) * state.r + omega * state.z;
    (dz, dr)
}

pub(crate) fn rhs_array(y: &[f64; 3], drive: &DriveParams) -> [f64; 3] {
    let (dz, dr) = rhs(&BlochState::from_array(*y), drive);
    [dr.re, dr.im, dz]
}

/// Analytic Jacobian of [`rhs`] in `(x, y, Z)` with `R = x + iy`.
///
/// With `Ω₀ = a + ib` and `G = g_r + i g_i` the right-hand side expands to
///
/// ```text
/// dx/dt = −Γx + Δy + Z (a + g_i x + g_r y)
/// dy/dt = −Δx − Γy + Z (b − g_r x + g_i y)
/// dZ/dt = −γ(Z + 1) − a x − b y − g_i (x² + y²)
/// ```
pub fn jacobian(state: &BlochState, drive: &DriveParams) -> Matrix3<f64> {
    let (x, y, z) = (state.r.re, state.r.im, state.z);
    let (a, b) = (drive.omega0.re, drive.omega0.im);
    let (gr, gi) = (drive.self_action.re, drive.self_action.im);
    let (dephasing, detuning) = (drive.dephasing, drive.detuning);
    Matrix3::new(
        -dephasing + z * gi,
        detuning + z * gr,
        a + gi * x + gr * y,
        -detuning - z * gr,
        -dephasing + z * gi,
        b - gr * x + gi * y,
        -a - 2.0 * gi * x,
        -b - 2.0 * gi * y,
        -drive.gamma,
    )
}

/// Eigenvalues of the linearization, sorted by descending real part.
pub fn eigenvalues(state: &BlochState, drive: &DriveParams) -> [Complex64; 3] {
    let ev = jacobian(state, drive).complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|p, q| q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im)));
    out
}

/// Stable iff every eigenvalue has real part below `−STABILITY_MARGIN`.
pub fn is_stable(eigenvalues: &[Complex64; 3]) -> bool {
    eigenvalues.iter().all(|l| l.re < -STABILITY_MARGIN)
}
