//! Physical constants and the Gaussian-to-SI translation helpers.
//!
//! Everything inside the crate is SI. Light-shift formulas written in
//! Gaussian form (`I = c E² / 8π`, `U = -(E/2)² α`) are translated here and
//! nowhere else: a Gaussian field amplitude squared becomes `2 I / (c ε₀)` and
//! an atomic-unit polarizability becomes `α · 4πε₀a₀³` in C·m²/V.

use std::f64::consts::PI;

/// CODATA 2018 values plus the derived atomic-unit conversions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsTable {
    /// ħ, J·s
    pub planck_reduced: f64,
    /// c, m/s
    pub speed_of_light: f64,
    /// ε₀, F/m
    pub vacuum_permittivity: f64,
    /// k_B, J/K
    pub boltzmann: f64,
    /// u, kg
    pub atomic_mass_unit: f64,
    /// a₀, m
    pub bohr_radius: f64,
    /// One atomic unit of polarizability in C·m²/V.
    pub polarizability_au_in_si: f64,
    /// One atomic unit of length in m.
    pub length_au_in_si: f64,
}

pub const CODATA_2018: ConstantsTable = ConstantsTable::from_base(
    1.054_571_817e-34,
    299_792_458.0,
    8.854_187_812_8e-12,
    1.380_649e-23,
    1.660_539_066_60e-27,
    5.291_772_109_03e-11,
);

impl Default for ConstantsTable {
    fn default() -> Self {
        CODATA_2018
    }
}

impl ConstantsTable {
    /// Builds a table whose derived atomic-unit entries are assembled from
    /// the base constants, so the table is internally consistent.
    pub const fn from_base(
        planck_reduced: f64,
        speed_of_light: f64,
        vacuum_permittivity: f64,
        boltzmann: f64,
        atomic_mass_unit: f64,
        bohr_radius: f64,
    ) -> Self {
        Self {
            planck_reduced,
            speed_of_light,
            vacuum_permittivity,
            boltzmann,
            atomic_mass_unit,
            bohr_radius,
            polarizability_au_in_si: 4.0
                * PI
                * vacuum_permittivity
                * bohr_radius
                * bohr_radius
                * bohr_radius,
            length_au_in_si: bohr_radius,
        }
    }

    pub fn all_positive(&self) -> bool {
        [
            self.planck_reduced,
            self.speed_of_light,
            self.vacuum_permittivity,
            self.boltzmann,
            self.atomic_mass_unit,
            self.bohr_radius,
            self.polarizability_au_in_si,
            self.length_au_in_si,
        ]
        .iter()
        .all(|&v| v > 0.0 && v.is_finite())
    }

    /// Relative mismatch between the stored polarizability unit and 4πε₀a₀³.
    pub fn polarizability_consistency(&self) -> f64 {
        let a0 = self.bohr_radius;
        let expected = 4.0 * PI * self.vacuum_permittivity * a0 * a0 * a0;
        ((self.polarizability_au_in_si - expected) / expected).abs()
    }

    /// Sum of the squared field amplitudes `E₊² + E₋²` (V²/m²) carried by a
    /// lattice of total intensity `intensity` (W/m²).
    pub fn field_squared_from_intensity(&self, intensity: f64) -> f64 {
        2.0 * intensity / (self.speed_of_light * self.vacuum_permittivity)
    }

    /// Converts an SI polarizability to a polarizability volume (m³), the
    /// quantity that plays the role of α in Gaussian-form scattering formulas.
    pub fn polarizability_volume(&self, alpha_si: f64) -> f64 {
        alpha_si / (4.0 * PI * self.vacuum_permittivity)
    }
}

pub fn au_to_si_polarizability(alpha_au: f64) -> f64 {
    au_to_si_polarizability_with(&CODATA_2018, alpha_au)
}

pub fn au_to_si_polarizability_with(constants: &ConstantsTable, alpha_au: f64) -> f64 {
    alpha_au * constants.polarizability_au_in_si
}

// Human-scale unit conversions used at the configuration boundary.

pub fn kw_per_cm2_to_si(value: f64) -> f64 {
    value * 1.0e7
}

pub fn si_to_kw_per_cm2(value: f64) -> f64 {
    value * 1.0e-7
}

pub fn nm_to_m(value: f64) -> f64 {
    value * 1.0e-9
}

pub fn us_to_s(value: f64) -> f64 {
    value * 1.0e-6
}

pub fn mass_from_u(mass_u: f64) -> f64 {
    mass_u * CODATA_2018.atomic_mass_unit
}

pub fn bohr_to_m(value: f64) -> f64 {
    value * CODATA_2018.length_au_in_si
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_positive_and_consistent() {
        assert!(CODATA_2018.all_positive());
        assert!(CODATA_2018.polarizability_consistency() < 1e-12);
    }

    #[test]
    fn zero_maps_to_zero() {
        assert_eq!(au_to_si_polarizability(0.0), 0.0);
    }

    #[test]
    fn one_au_matches_published_codata_unit() {
        // CODATA 2018 atomic unit of electric polarizability, C m^2 V^-1.
        let published = 1.648_777_274_36e-41;
        let computed = au_to_si_polarizability(1.0);
        assert!(((computed - published) / published).abs() < 1e-9);
    }

    #[test]
    fn negative_polarizability_keeps_sign() {
        let si = au_to_si_polarizability(-470.0);
        assert!(si < 0.0);
        let expected = 470.0 * CODATA_2018.polarizability_au_in_si;
        assert!((si.abs() - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn volume_round_trip() {
        let c = CODATA_2018;
        let vol = c.polarizability_volume(c.polarizability_au_in_si);
        let a0_cubed = c.bohr_radius.powi(3);
        assert!(((vol - a0_cubed) / a0_cubed).abs() < 1e-14);
    }
}
