//! Stationary points of the Bloch equations.
//!
//! Eliminating `R` from the stationary equations gives a real cubic in `Z`:
//!
//! ```text
//! −|Ω₀|² (Γ/γ) Z = (Z + 1) [(Γ − G_I Z)² + (Δ + G_R Z)²]
//! ```
//!
//! For `Z > 0` both sides have opposite signs and for `Z < −1` likewise, so
//! every real root lies in `[−1, 0]`. The roots are found in closed form,
//! polished by Newton, and `R` is recovered from
//! `R = Ω₀ Z / (Γ + i(Δ + G Z))`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{eigenvalues, is_stable, BlochState, DriveParams};

/// Roots closer than this are one (fold) root.
pub const FOLD_MERGE: f64 = 1e-8;
/// Roots outside `[−1, 0]` by less than this are clamped.
pub const CLAMP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub z: f64,
    pub r: Complex64,
    pub stable: bool,
    /// Sorted by descending real part.
    pub eigenvalues: [Complex64; 3],
    /// Merged double root at a saddle-node.
    pub fold: bool,
}

impl BranchPoint {
    pub fn state(&self) -> BlochState {
        BlochState::new(self.z, self.r)
    }
}

/// Coefficients `[c0, c1, c2, c3]` of `c3 Z³ + c2 Z² + c1 Z + c0 = 0`.
pub fn cubic_coefficients(drive: &DriveParams) -> [f64; 4] {
    let (gr, gi) = (drive.self_action.re, drive.self_action.im);
    let p = drive.dephasing * drive.dephasing + drive.detuning * drive.detuning;
    let q = 2.0 * (drive.detuning * gr - drive.dephasing * gi);
    let r = gr * gr + gi * gi;
    let k = drive.omega0.norm_sqr() * drive.dephasing / drive.gamma;
    [p, p + q + k, q + r, r]
}

/// `|f(Z)|` divided by the sum of the magnitudes of its terms.
pub fn cubic_residual(coeffs: &[f64; 4], z: f64) -> f64 {
    let terms = [coeffs[0], coeffs[1] * z, coeffs[2] * z * z, coeffs[3] * z * z * z];
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    let value: f64 = terms.iter().sum();
    if scale == 0.0 {
        0.0
    } else {
        value.abs() / scale
    }
}

fn eval(c: &[f64; 4], z: f64) -> (f64, f64) {
    let f = ((c[3] * z + c[2]) * z + c[1]) * z + c[0];
    let df = (3.0 * c[3] * z + 2.0 * c[2]) * z + c[1];
    (f, df)
}

fn polish(c: &[f64; 4], mut z: f64) -> f64 {
    for _ in 0..8 {
        let (f, df) = eval(c, z);
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let step = f / df;
        let next = z - step;
        if !next.is_finite() {
            break;
        }
        let (f_next, _) = eval(c, next);
        if f_next.abs() > f.abs() {
            break;
        }
        z = next;
        if step.abs() <= 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// Real roots of a polynomial of degree ≤ 3, unpolished.
fn real_roots(c: &[f64; 4]) -> Vec<f64> {
    let [c0, c1, c2, c3] = *c;
    if c3 == 0.0 {
        if c2 == 0.0 {
            return if c1 == 0.0 { vec![] } else { vec![-c0 / c1] };
        }
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        let mut out = vec![q / c2];
        if q != 0.0 {
            out.push(c0 / q);
        }
        return out;
    }
    let (a, b, cc) = (c2 / c3, c1 / c3, c0 / c3);
    // depressed cubic t³ + p t + q with Z = t − a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + cc;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * sq).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3).map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift).collect()
    }
}

/// Bisection fallback on `[−1, 0]`, where `f(−1) ≤ 0 < f(0)` always holds.
fn bracketed_root(c: &[f64; 4]) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(c, mid).0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    polish(c, 0.5 * (lo + hi))
}

/// Sorted physical roots in `Z`, with fold flags.
pub(crate) fn physical_roots(drive: &DriveParams) -> Vec<(f64, bool)> {
    if drive.omega0.norm_sqr() == 0.0 {
        return vec![(-1.0, false)];
    }
    let c = cubic_coefficients(drive);
    let mut roots: Vec<f64> = real_roots(&c)
        .into_iter()
        .filter(|z| z.is_finite())
        .map(|z| polish(&c, z))
        .filter_map(|z| {
            if (-1.0..=0.0).contains(&z) {
                Some(z)
            } else if z > -1.0 - CLAMP_SLACK && z < -1.0 {
                Some(-1.0)
            } else if z > 0.0 && z < CLAMP_SLACK {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    if roots.is_empty() {
        roots.push(bracketed_root(&c));
    }
    roots.sort_by(f64::total_cmp);

    let mut merged: Vec<(f64, bool)> = Vec::with_capacity(roots.len());
    for z in roots {
        match merged.last_mut() {
            Some((prev, fold)) if (z - *prev).abs() < FOLD_MERGE => {
                *prev = 0.5 * (*prev + z);
                *fold = true;
            }
            _ => merged.push((z, false)),
        }
    }
    merged
}

/// Number of distinct physical stationary points (1, 2 at a fold, or 3).
pub(crate) fn root_count(drive: &DriveParams) -> usize {
    physical_roots(drive).len()
}

/// Coherence at a stationary `Z`.
pub(crate) fn stationary_r(drive: &DriveParams, z: f64) -> Complex64 {
    let denom = Complex64::new(drive.dephasing, drive.detuning) + Complex64::i() * drive.self_action * z;
    drive.omega0 * z / denom
}

/// All stationary points ordered by increasing `Z`, with stability flags.
pub fn steady_states(drive: &DriveParams) -> Vec<BranchPoint> {
    physical_roots(drive)
        .into_iter()
        .map(|(z, fold)| {
            let r = stationary_r(drive, z);
            let state = BlochState::new(z, r);
            let eigenvalues = eigenvalues(&state, drive);
            BranchPoint { z, r, stable: is_stable(&eigenvalues), eigenvalues, fold }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::rhs;
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_drive(omega0: f64) -> DriveParams {
        DriveParams { omega0: c(omega0, 0.0), detuning: 0.0, gamma: 1.0, dephasing: 1.0, self_action: c(0.0, 0.0) }
    }

    #[test]
    fn undriven_is_ground_state() {
        let d = DriveParams { self_action: c(100.0, 30.0), ..unit_drive(0.0) };
        let roots = steady_states(&d);
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].z, -1.0);
        assert_eq!(roots[0].r, c(0.0, 0.0));
        assert!(roots[0].stable);
    }

    #[test]
    fn saturation_limit() {
        let roots = steady_states(&unit_drive(1.0));
        assert_eq!(roots.len(), 1);
        assert!((roots[0].z + 0.5).abs() < 1e-15);
        assert!((roots[0].r.norm() - 0.5).abs() < 1e-15);
        assert!(roots[0].stable);
    }

    #[test]
    fn g_zero_closed_form_randomized() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..1000 {
            let d = DriveParams {
                omega0: Complex64::from_polar(rng.gen_range(0.0..50.0), rng.gen_range(-3.0..3.0)),
                detuning: rng.gen_range(-10.0..10.0),
                gamma: rng.gen_range(0.1..5.0),
                dephasing: rng.gen_range(0.1..10.0),
                self_action: c(0.0, 0.0),
            };
            let a = d.omega0.norm_sqr() / (d.gamma * d.dephasing);
            let b = (d.dephasing.powi(2) + d.detuning.powi(2)) / d.dephasing.powi(2);
            let expected = -b / (a + b);
            let roots = steady_states(&d);
            assert_eq!(roots.len(), 1);
            assert!((roots[0].z - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_feedback_has_three_roots() {
        // G well above Γ with the default rates
        let d = DriveParams {
            omega0: c(60.0, 0.0),
            detuning: 0.0,
            gamma: 1.25,
            dephasing: 1.0 / 0.3,
            self_action: c(334.0, 138.0),
        };
        let roots = steady_states(&d);
        assert_eq!(roots.len(), 3);
        let flags: Vec<bool> = roots.iter().map(|b| b.stable).collect();
        assert_eq!(flags, vec![true, false, true]);
        let coeffs = cubic_coefficients(&d);
        for b in &roots {
            assert!(cubic_residual(&coeffs, b.z) < 1e-9);
            let (dz, dr) = rhs(&b.state(), &d);
            assert!(dz.abs().max(dr.norm()) < 1e-9 * d.dephasing, "{dz} {dr}");
        }
    }

    #[test]
    fn tiny_feedback_is_well_conditioned() {
        let d = DriveParams { self_action: c(1e-7, 1e-8), ..unit_drive(1.0) };
        let roots = steady_states(&d);
        assert_eq!(roots.len(), 1);
        assert!((roots[0].z + 0.5).abs() < 1e-6);
        assert!(cubic_residual(&cubic_coefficients(&d), roots[0].z) < 1e-12);
    }

    #[test]
    fn random_drives_are_fixed_points_with_consistent_stability() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..2000 {
            let d = DriveParams {
                omega0: Complex64::from_polar(rng.gen_range(0.0..150.0), rng.gen_range(-3.0..3.0)),
                detuning: rng.gen_range(-20.0..20.0),
                gamma: rng.gen_range(0.2..3.0),
                dephasing: rng.gen_range(1.5..6.0),
                self_action: c(rng.gen_range(-400.0..400.0), rng.gen_range(0.0..200.0)),
            };
            let roots = steady_states(&d);
            assert!(matches!(roots.len(), 1..=3));
            let coeffs = cubic_coefficients(&d);
            let scale = d.gamma.max(d.dephasing);
            for b in &roots {
                assert!((-1.0..=0.0).contains(&b.z));
                assert!(cubic_residual(&coeffs, b.z) < 1e-9);
                let (dz, dr) = rhs(&b.state(), &d);
                let norm = (dz * dz + dr.norm_sqr()).sqrt();
                // scale by the magnitude of the individual terms
                let mag = d.omega0.norm() + d.self_action.norm() + scale;
                assert!(norm < 1e-9 * mag, "{norm} {mag}");
                let lead = b.eigenvalues[0].re;
                if lead.abs() > 1e-8 {
                    assert_eq!(b.stable, lead < 0.0);
                }
            }
            if roots.len() == 3 && roots.iter().all(|b| !b.fold) {
                // the middle root is always a saddle; outer ones may lose
                // stability through oscillatory modes away from the default regime
                assert!(!roots[1].stable, "{d:?}");
            }
        }
    }
}
