//! Metal dielectric data and the dipolar polarizability factor.
//!
//! Tables are sampled complex permittivities versus photon energy. Values in
//! between samples are linearly interpolated in (Re ε, Im ε); energies outside
//! the tabulated span are rejected rather than extrapolated.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

/// `|ε_M + 2ε_b|` below this is treated as sitting on the Fröhlich pole.
pub const POLE_TOLERANCE: f64 = 1e-9;

const GOLD_JC: &str = include_str!("../data/gold_jc.nk");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: energy {energy} eV does not exceed previous energy {previous} eV")]
    NonIncreasingEnergy { line: usize, energy: f64, previous: f64 },
    #[error("table has {rows} data rows, at least 2 are required")]
    TooFewRows { rows: usize },
    #[error("line {line}: {what} = {value} is negative (medium must be passive)")]
    Active { line: usize, what: &'static str, value: f64 },
    #[error("photon energy {energy} eV outside tabulated range [{min}, {max}] eV")]
    OutOfRange { energy: f64, min: f64, max: f64 },
    #[error(
        "polarizability pole: |eps_m + 2 eps_b| = {magnitude:e} below {POLE_TOLERANCE:e} \
         (Froehlich resonance eps_m ~ -2 eps_b)"
    )]
    Singular { magnitude: f64 },
    #[error("invalid Drude parameters: {0}")]
    InvalidDrude(&'static str),
}

/// Interpretation of the two value columns of a material file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaterialFormat {
    /// Refractive index `n` and extinction coefficient `k`.
    NK,
    /// Real and imaginary permittivity `ε₁`, `ε₂`.
    Eps,
}

impl MaterialFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            MaterialFormat::NK => "n_k",
            MaterialFormat::Eps => "eps",
        }
    }
}

impl fmt::Display for MaterialFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaterialFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n_k" | "nk" => Ok(MaterialFormat::NK),
            "eps" => Ok(MaterialFormat::Eps),
            other => Err(format!("unknown material format '{other}' (expected n_k or eps)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DielectricRow {
    pub energy_ev: f64,
    pub eps: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DielectricTable {
    rows: Vec<DielectricRow>,
    source_label: String,
}

impl DielectricTable {
    /// Parses a line-oriented `E a b` table. Rows must already be sorted.
    pub fn parse(text: &str, format: MaterialFormat, source_label: impl Into<String>) -> Result<Self, MaterialError> {
        let mut rows: Vec<DielectricRow> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(MaterialError::MalformedLine {
                    line,
                    reason: format!("expected 3 numeric fields, found {}", fields.len()),
                });
            }
            let mut values = [0.0; 3];
            for (slot, field) in values.iter_mut().zip(&fields) {
                *slot = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    MaterialError::MalformedLine { line, reason: format!("'{field}' is not a finite number") }
                })?;
            }
            let [energy, a, b] = values;
            if energy <= 0.0 {
                return Err(MaterialError::MalformedLine {
                    line,
                    reason: format!("photon energy {energy} must be positive"),
                });
            }
            if let Some(prev) = rows.last() {
                if energy <= prev.energy_ev {
                    return Err(MaterialError::NonIncreasingEnergy { line, energy, previous: prev.energy_ev });
                }
            }
            let eps = match format {
                MaterialFormat::NK => {
                    if a < 0.0 {
                        return Err(MaterialError::Active { line, what: "n", value: a });
                    }
                    if b < 0.0 {
                        return Err(MaterialError::Active { line, what: "k", value: b });
                    }
                    Complex64::new(a * a - b * b, 2.0 * a * b)
                }
                MaterialFormat::Eps => {
                    if b < 0.0 {
                        return Err(MaterialError::Active { line, what: "eps_im", value: b });
                    }
                    Complex64::new(a, b)
                }
            };
            rows.push(DielectricRow { energy_ev: energy, eps });
        }
        if rows.len() < 2 {
            return Err(MaterialError::TooFewRows { rows: rows.len() });
        }
        Ok(DielectricTable { rows, source_label: source_label.into() })
    }

    /// Bundled Johnson–Christy gold data (n, k).
    pub fn gold() -> Self {
        Self::parse(GOLD_JC, MaterialFormat::NK, "builtin:gold").expect("bundled gold table is well formed")
    }

    pub fn rows(&self) -> &[DielectricRow] {
        &self.rows
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    /// Tabulated `(min, max)` photon energy in eV.
    pub fn span(&self) -> (f64, f64) {
        (self.rows[0].energy_ev, self.rows[self.rows.len() - 1].energy_ev)
    }

    pub fn permittivity_at(&self, energy_ev: f64) -> Result<Complex64, MaterialError> {
        let (min, max) = self.span();
        if !(energy_ev >= min && energy_ev <= max) {
            return Err(MaterialError::OutOfRange { energy: energy_ev, min, max });
        }
        match self.rows.binary_search_by(|row| row.energy_ev.total_cmp(&energy_ev)) {
            Ok(i) => Ok(self.rows[i].eps),
            Err(i) => {
                // 0 < i < len since the energy is strictly inside the span
                let lo = &self.rows[i - 1];
                let hi = &self.rows[i];
                let t = (energy_ev - lo.energy_ev) / (hi.energy_ev - lo.energy_ev);
                Ok(Complex64::new(lo.eps.re + t * (hi.eps.re - lo.eps.re), lo.eps.im + t * (hi.eps.im - lo.eps.im)))
            }
        }
    }
}

/// Free-electron permittivity `ε∞ − E_p² / (E² + i E E_γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    pub eps_inf: f64,
    pub plasma_energy: f64,
    pub damping_energy: f64,
}

impl DrudeParams {
    pub fn new(eps_inf: f64, plasma_energy: f64, damping_energy: f64) -> Result<Self, MaterialError> {
        if !(plasma_energy > 0.0) {
            return Err(MaterialError::InvalidDrude("plasma_energy must be > 0"));
        }
        if !(damping_energy >= 0.0) {
            return Err(MaterialError::InvalidDrude("damping_energy must be >= 0"));
        }
        if !(eps_inf >= 1.0) {
            return Err(MaterialError::InvalidDrude("eps_inf must be >= 1"));
        }
        Ok(DrudeParams { eps_inf, plasma_energy, damping_energy })
    }

    pub fn permittivity(&self, energy_ev: f64) -> Complex64 {
        debug_assert!(energy_ev > 0.0);
        let denom = Complex64::new(energy_ev * energy_ev, energy_ev * self.damping_energy);
        Complex64::from(self.eps_inf) - self.plasma_energy * self.plasma_energy / denom
    }
}

/// Dipolar polarizability factor `(ε_M − ε_b) / (ε_M + 2ε_b)`.
pub fn clausius_mossotti(eps_m: Complex64, eps_b: f64) -> Result<Complex64, MaterialError> {
    let denom = eps_m + 2.0 * eps_b;
    let magnitude = denom.norm();
    if magnitude < POLE_TOLERANCE {
        return Err(MaterialError::Singular { magnitude });
    }
    Ok((eps_m - eps_b) / denom)
}
