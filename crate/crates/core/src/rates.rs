//! Photon-scattering lifetimes and collisional gate timing.

use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};
use crate::lattice::{recoil_energy, SpeciesOptics};
use crate::units::CODATA_2018;

/// Suppression of scattering for an atom sitting at an intensity minimum,
/// `η ≈ ½ sqrt(E_R / ΔU)`.
pub fn scattering_suppression(recoil: f64, depth: f64) -> f64 {
    0.5 * (recoil / depth).sqrt()
}

/// Mean time between photon-scattering events for one trapped atom, s.
///
/// The Rayleigh rate `η (8π/3) (ω/c)⁴ α² I / (ħω)` with α the polarizability
/// volume; `depth` is the well depth that sets η.
pub fn photon_scattering_time(
    species: &SpeciesOptics,
    intensity: f64,
    depth: f64,
    lambda_m: f64,
) -> Result<f64> {
    require_positive("depth", depth)?;
    require_positive("lambda_m", lambda_m)?;
    if !(intensity >= 0.0) {
        return Err(Error::Negative { what: "intensity", value: intensity });
    }
    let c = &CODATA_2018;
    let recoil = recoil_energy(species.mass(), lambda_m)?;
    let eta = scattering_suppression(recoil, depth);
    let omega = 2.0 * PI * c.speed_of_light / lambda_m;
    let alpha_volume = c.polarizability_volume(species.alpha_scalar_si());
    let cross_section = 8.0 * PI / 3.0 * (omega / c.speed_of_light).powi(4) * alpha_volume * alpha_volume;
    let rate = eta * cross_section * intensity / (c.planck_reduced * omega);
    Ok(1.0 / rate)
}

/// `(m₁x₁ · m₂x₂) / (m₁x₁ + m₂x₂)`, the reduced-mass analogue for one axis.
fn reduced(a: f64, b: f64) -> f64 {
    a * b / (a + b)
}

/// Mean-field energy of two particles in overlapped ground states of
/// independent anisotropic harmonic traps, J.
pub fn interaction_energy(
    a_scatt: f64,
    m1: f64,
    m2: f64,
    omegas1: [f64; 3],
    omegas2: [f64; 3],
) -> Result<f64> {
    require_positive("m1", m1)?;
    require_positive("m2", m2)?;
    for &w in omegas1.iter().chain(&omegas2) {
        require_positive("trap frequency", w)?;
    }
    let m_bar = reduced(m1, m2);
    let product: f64 = omegas1
        .iter()
        .zip(&omegas2)
        .map(|(&w1, &w2)| reduced(m1 * w1, m2 * w2).sqrt())
        .product();
    Ok(2.0 * a_scatt / m_bar * (CODATA_2018.planck_reduced / PI).sqrt() * product)
}

/// Time for the collisional shift `delta_e` to accumulate `target_phase`.
pub fn phase_gate_duration(delta_e: f64, target_phase: f64) -> Result<f64> {
    if delta_e == 0.0 || !delta_e.is_finite() {
        return Err(Error::NoInteraction);
    }
    Ok(target_phase.abs() * CODATA_2018.planck_reduced / delta_e.abs())
}
