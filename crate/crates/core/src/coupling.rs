//! Dipole–dipole coupling between the quantum dot and the metal sphere.
//!
//! Both particles are point dipoles. The sphere responds with polarizability
//! `α a³`, the dot with transition dipole `μ`. Eliminating the sphere's induced
//! dipole leaves two numbers that drive the Bloch equations:
//!
//! * `enhancement`: the factor `(1/ε′ₛ)(1 + s α a³ / (ε_b d³))` that turns the
//!   bare Rabi frequency `μE₀/ħ` into the renormalized amplitude `Ω₀`;
//! * `self_action`: the complex constant `G` in `Ω = Ω₀ − iGR`, obtained by
//!   feeding the dot's own dipole `(−i/2)Rμ` back through the sphere:
//!   `G = (s²/2) α a³ μ² / (ħ ε′ₛ ε_b d⁶)`.
//!
//! Lengths are in nm, `μ` in e·nm and rates in ns⁻¹. The dipole-field term is
//! written in Gaussian form, so `μ²/d³` carries the Coulomb constant
//! `e²/(4πε₀) = 1.439964547 eV·nm` when converted to energy.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::bloch::DriveParams;
use crate::materials::{clausius_mossotti, DielectricTable, MaterialError};

/// Reduced Planck constant in eV·ns.
pub const HBAR_EV_NS: f64 = 6.582119569e-7;
/// `e²/(4πε₀)` in eV·nm.
pub const COULOMB_EV_NM: f64 = 1.439964547;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),
    #[error("polarizability must be finite, got {0}")]
    NonFiniteAlpha(Complex64),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Direction of the driving field (and of `μ`) relative to the dimer axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    Parallel,
    Perpendicular,
    /// Field at `theta` radians from the axis. Extension beyond the two
    /// principal orientations: `s = 2cos²θ − sin²θ`, `s² → 4cos²θ + sin²θ`.
    Tilted(f64),
}

impl Orientation {
    /// Projected Green-tensor factor entering the external-field term.
    pub fn field_factor(self) -> f64 {
        match self {
            Orientation::Parallel => 2.0,
            Orientation::Perpendicular => -1.0,
            Orientation::Tilted(theta) => {
                let (s, c) = theta.sin_cos();
                2.0 * c * c - s * s
            }
        }
    }

    /// Projected factor of `S²` entering the self-action.
    pub fn feedback_factor(self) -> f64 {
        match self {
            Orientation::Parallel => 4.0,
            Orientation::Perpendicular => 1.0,
            Orientation::Tilted(theta) => {
                let (s, c) = theta.sin_cos();
                4.0 * c * c + s * s
            }
        }
    }

    /// Angle from the axis in radians.
    pub fn angle(self) -> f64 {
        match self {
            Orientation::Parallel => 0.0,
            Orientation::Perpendicular => FRAC_PI_2,
            Orientation::Tilted(theta) => theta,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Parallel => f.write_str("parallel"),
            Orientation::Perpendicular => f.write_str("perpendicular"),
            Orientation::Tilted(theta) => write!(f, "{theta:?}"),
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    /// `parallel`, `perpendicular`, or an angle in radians.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(Orientation::Parallel),
            "perpendicular" => Ok(Orientation::Perpendicular),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .map(Orientation::Tilted)
                .ok_or_else(|| format!("expected parallel, perpendicular or an angle in radians, got '{other}'")),
        }
    }
}

/// Green-tensor angular factor `s` for the principal orientations, from
/// `S = diag(−1, −1, 2)` with the axis along z.
pub fn green_tensor_factor(orientation: Orientation) -> Option<i32> {
    match orientation {
        Orientation::Parallel => Some(2),
        Orientation::Perpendicular => Some(-1),
        Orientation::Tilted(_) => None,
    }
}

/// Geometry, material and relaxation parameters of the dimer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Photon energy of the drive, at resonance with the dot (eV).
    pub transition_energy_ev: f64,
    /// Dot dielectric constant.
    pub eps_s: f64,
    /// Host dielectric constant.
    pub eps_b: f64,
    /// Metal sphere radius `a` (nm).
    pub radius_nm: f64,
    /// Center-to-center distance `d` (nm).
    pub distance_nm: f64,
    /// Transition dipole `μ` (e·nm).
    pub dipole_e_nm: f64,
    /// Population relaxation `γ` (ns⁻¹).
    pub gamma: f64,
    /// Dephasing `Γ` (ns⁻¹).
    pub dephasing: f64,
    /// Detuning `Δ` (ns⁻¹), entering as `dR/dt = −(iΔ + Γ)R + ΩZ`.
    pub detuning: f64,
    pub orientation: Orientation,
    /// Multiplier on `G`; 1 is the physical value, 0 switches feedback off.
    pub feedback_scale: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            transition_energy_ev: 2.36,
            eps_s: 6.2,
            eps_b: 1.0,
            radius_nm: 10.0,
            distance_nm: 17.0,
            dipole_e_nm: 0.65,
            gamma: 1.0 / 0.8,
            dephasing: 1.0 / 0.3,
            detuning: 0.0,
            orientation: Orientation::Parallel,
            feedback_scale: 1.0,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), CouplingError> {
        let positive = [
            ("transition_energy_ev", self.transition_energy_ev),
            ("eps_s", self.eps_s),
            ("eps_b", self.eps_b),
            ("radius_nm", self.radius_nm),
            ("dipole_e_nm", self.dipole_e_nm),
            ("gamma", self.gamma),
            ("dephasing", self.dephasing),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CouplingError::InvalidConfig(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if !self.detuning.is_finite() {
            return Err(CouplingError::InvalidConfig(format!("detuning must be finite, got {}", self.detuning)));
        }
        if !(self.distance_nm > self.radius_nm && self.distance_nm.is_finite()) {
            return Err(CouplingError::InvalidConfig(format!(
                "distance d = {} nm must exceed radius a = {} nm (d > a)",
                self.distance_nm, self.radius_nm
            )));
        }
        if !(self.feedback_scale >= 0.0 && self.feedback_scale.is_finite()) {
            return Err(CouplingError::InvalidConfig(format!(
                "feedback_scale must be finite and non-negative, got {}",
                self.feedback_scale
            )));
        }
        if let Orientation::Tilted(theta) = self.orientation {
            if !theta.is_finite() {
                return Err(CouplingError::InvalidConfig("orientation angle must be finite".into()));
            }
        }
        Ok(())
    }

    /// Polarizability factor of the sphere at the drive photon energy.
    pub fn alpha(&self, table: &DielectricTable) -> Result<Complex64, CouplingError> {
        let eps_m = table.permittivity_at(self.transition_energy_ev)?;
        Ok(clausius_mossotti(eps_m, self.eps_b)?)
    }

    /// Validates and derives coupling using `table` for the metal.
    pub fn coupling(&self, table: &DielectricTable) -> Result<CouplingParams, CouplingError> {
        self.validate()?;
        derive_coupling(self, self.alpha(table)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub eps_s_prime: f64,
    /// Multiplies `μE₀/ħ` to give `Ω₀`.
    pub enhancement: Complex64,
    /// `G` in ns⁻¹.
    pub self_action: Complex64,
}

impl CouplingParams {
    /// Drive parameters for a renormalized amplitude `omega0`.
    pub fn drive(&self, config: &SystemConfig, omega0: Complex64) -> DriveParams {
        DriveParams {
            omega0,
            detuning: config.detuning,
            gamma: config.gamma,
            dephasing: config.dephasing,
            self_action: self.self_action,
        }
    }
}

/// `ε′ₛ = 3ε_b / (ε_s + 2ε_b)`.
pub fn screening_factor(eps_s: f64, eps_b: f64) -> f64 {
    3.0 * eps_b / (eps_s + 2.0 * eps_b)
}

pub fn derive_coupling(config: &SystemConfig, alpha: Complex64) -> Result<CouplingParams, CouplingError> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(CouplingError::NonFiniteAlpha(alpha));
    }
    config.validate()?;
    let eps_s_prime = screening_factor(config.eps_s, config.eps_b);
    let a3 = config.radius_nm.powi(3);
    let d3 = config.distance_nm.powi(3);
    let s = config.orientation.field_factor();
    let s2 = config.orientation.feedback_factor();

    let enhancement = (Complex64::from(1.0) + alpha * (s * a3 / (config.eps_b * d3))) / eps_s_prime;
    let mu2 = config.dipole_e_nm * config.dipole_e_nm;
    let scale = config.feedback_scale * 0.5 * s2 * a3 * mu2 * COULOMB_EV_NM
        / (HBAR_EV_NS * eps_s_prime * config.eps_b * d3 * d3);
    Ok(CouplingParams { eps_s_prime, enhancement, self_action: alpha * scale })
}

/// Bare Rabi frequency `μE₀/ħ` in ns⁻¹ for `μ` in e·nm and `E₀` in V/m.
pub fn rabi_from_field(dipole_e_nm: f64, field_v_per_m: f64) -> f64 {
    dipole_e_nm * field_v_per_m * 1e-9 / HBAR_EV_NS
}
