//! Polarization-screw transport lattice: sublattice depths, the optical
//! potential along the lattice axis, well depths, trap frequencies, and the
//! intensity needed to keep every species bound.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::units::{au_to_si_polarizability, CODATA_2018};

/// Uniform samples per lattice period used to bracket the extrema.
pub const DEPTH_GRID_POINTS: usize = 4096;

/// Default intensity misbalance between the σ⁺ and σ⁻ standing waves.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Default ΔU / E_R requirement.
pub const DEFAULT_DEPTH_FACTOR: f64 = 5.0;

/// Blue magic wavelength of Sr, m.
pub const SR_BLUE_MAGIC_WAVELENGTH: f64 = 389.9e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Clock,
    HeadUp,
    HeadDown,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Clock => "clock",
            Role::HeadUp => "head_up",
            Role::HeadDown => "head_down",
        }
    }

    pub fn is_head(self) -> bool {
        !matches!(self, Role::Clock)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Hyperfine sublevel of a head-atom state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperfine {
    pub f: f64,
    pub m_f: f64,
}

/// Optical response of one trapped species (or one internal state of the
/// head atom) at the lattice wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesOptics {
    name: String,
    mass: f64,
    alpha_scalar_au: f64,
    rho: f64,
    role: Role,
    hyperfine: Option<Hyperfine>,
}

impl SpeciesOptics {
    /// A scalar (J = 0) clock state; its vector polarizability vanishes.
    pub fn clock(name: impl Into<String>, mass: f64, alpha_scalar_au: f64) -> Result<Self> {
        require_positive("species mass", mass)?;
        finite("alpha_scalar", alpha_scalar_au)?;
        Ok(Self {
            name: name.into(),
            mass,
            alpha_scalar_au,
            rho: 0.0,
            role: Role::Clock,
            hyperfine: None,
        })
    }

    pub fn head(
        name: impl Into<String>,
        mass: f64,
        alpha_scalar_au: f64,
        rho: f64,
        role: Role,
        hyperfine: Hyperfine,
    ) -> Result<Self> {
        if !role.is_head() {
            return Err(Error::InvalidInput(
                "head constructor needs role head_up or head_down".into(),
            ));
        }
        require_positive("species mass", mass)?;
        finite("alpha_scalar", alpha_scalar_au)?;
        finite("rho", rho)?;
        if hyperfine.m_f.abs() > hyperfine.f || hyperfine.f < 0.0 {
            return Err(Error::InvalidInput(format!(
                "|M_F| <= F violated: F = {}, M_F = {}",
                hyperfine.f, hyperfine.m_f
            )));
        }
        Ok(Self {
            name: name.into(),
            mass,
            alpha_scalar_au,
            rho,
            role,
            hyperfine: Some(hyperfine),
        })
    }

    /// ⁸⁸Sr at the blue magic wavelength, α^s ≃ −470 a.u.
    pub fn strontium_88() -> Self {
        Self::clock("Sr-88", crate::units::mass_from_u(87.905_612_5), -470.0).expect("valid")
    }

    /// ²⁷Al |F=3, M_F=−3⟩, α^s ≃ −340 a.u., ρ ≈ −1.25.
    pub fn aluminium_27_up() -> Self {
        Self::head(
            "Al-27 |3,-3>",
            crate::units::mass_from_u(26.981_538_4),
            -340.0,
            -1.25,
            Role::HeadUp,
            Hyperfine { f: 3.0, m_f: -3.0 },
        )
        .expect("valid")
    }

    /// ²⁷Al |F=2, M_F=−2⟩, α^s ≃ −340 a.u., ρ ≈ +0.84.
    pub fn aluminium_27_down() -> Self {
        Self::head(
            "Al-27 |2,-2>",
            crate::units::mass_from_u(26.981_538_4),
            -340.0,
            0.84,
            Role::HeadDown,
            Hyperfine { f: 2.0, m_f: -2.0 },
        )
        .expect("valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn alpha_scalar_au(&self) -> f64 {
        self.alpha_scalar_au
    }

    pub fn alpha_scalar_si(&self) -> f64 {
        au_to_si_polarizability(self.alpha_scalar_au)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn hyperfine(&self) -> Option<Hyperfine> {
        self.hyperfine
    }

    /// Same species with every polarizability multiplied by `factor`.
    pub fn with_scaled_polarizability(&self, factor: f64) -> Self {
        Self {
            alpha_scalar_au: self.alpha_scalar_au * factor,
            ..self.clone()
        }
    }
}

fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite, got {value}")))
    }
}

/// Transport-lattice parameters in SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    lambda_m: f64,
    intensity: f64,
    delta: f64,
    phi: f64,
    transverse_intensity: f64,
}

impl LatticeConfig {
    pub fn new(
        lambda_m: f64,
        intensity: f64,
        delta: f64,
        phi: f64,
        transverse_intensity: f64,
    ) -> Result<Self> {
        require_positive("lambda_m", lambda_m)?;
        require_positive("intensity", intensity)?;
        require_non_negative("transverse_intensity", transverse_intensity)?;
        finite("phi", phi)?;
        if !(delta.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "|delta| <= 1 violated: delta = {delta}"
            )));
        }
        Ok(Self {
            lambda_m,
            intensity,
            delta,
            phi,
            transverse_intensity,
        })
    }

    /// Blue Sr magic wavelength, δ = 1/4, overlap phase, transverse lattices at
    /// the transport-lattice intensity.
    pub fn blue_magic(intensity: f64) -> Result<Self> {
        Self::new(SR_BLUE_MAGIC_WAVELENGTH, intensity, DEFAULT_DELTA, 0.0, intensity)
    }

    pub fn lambda_m(&self) -> f64 {
        self.lambda_m
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn transverse_intensity(&self) -> f64 {
        self.transverse_intensity
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda_m
    }

    /// Spatial period of the cos² potential, λ_m / 2.
    pub fn period(&self) -> f64 {
        0.5 * self.lambda_m
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self { phi, ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.lambda_m, self.intensity, delta, self.phi, self.transverse_intensity)
    }

    pub fn with_intensity(&self, intensity: f64) -> Result<Self> {
        Self::new(self.lambda_m, intensity, self.delta, self.phi, self.transverse_intensity)
    }

    pub fn with_transverse_intensity(&self, transverse_intensity: f64) -> Result<Self> {
        Self::new(self.lambda_m, self.intensity, self.delta, self.phi, transverse_intensity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violated_constraints: Vec<&'static str>,
    /// Smallest slack among the four strict inequalities.
    pub margin: f64,
}

pub fn recoil_energy(mass: f64, lambda_m: f64) -> Result<f64> {
    require_positive("mass", mass)?;
    require_positive("lambda_m", lambda_m)?;
    let p = 2.0 * PI * CODATA_2018.planck_reduced / lambda_m;
    Ok(p * p / (2.0 * mass))
}

/// Peak light shifts `(U₀⁺, U₀⁻)` of the σ⁺ and σ⁻ standing waves, J.
pub fn sublattice_depths(config: &LatticeConfig, species: &SpeciesOptics) -> (f64, f64) {
    let e_total_sq = CODATA_2018.field_squared_from_intensity(config.intensity);
    let e_plus_sq = 0.5 * (1.0 + config.delta) * e_total_sq;
    let e_minus_sq = 0.5 * (1.0 - config.delta) * e_total_sq;
    let alpha = species.alpha_scalar_si();
    let rho = species.rho;
    (
        -0.25 * e_plus_sq * alpha * (1.0 + rho),
        -0.25 * e_minus_sq * alpha * (1.0 - rho),
    )
}

fn potential_at(u_plus: f64, u_minus: f64, k: f64, phi: f64, z: f64) -> f64 {
    let a = (k * z).cos();
    let b = (k * z - phi).cos();
    u_plus * a * a + u_minus * b * b
}

pub fn optical_potential_curve(
    config: &LatticeConfig,
    species: &SpeciesOptics,
    z_grid: &[f64],
) -> Vec<f64> {
    let (u_plus, u_minus) = sublattice_depths(config, species);
    let k = config.wavenumber();
    z_grid
        .iter()
        .map(|&z| potential_at(u_plus, u_minus, k, config.phi, z))
        .collect()
}

/// Located extremum of the potential within one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialWell {
    pub minimum: Extremum,
    pub maximum: Extremum,
    /// max − min, snapped to exactly zero for a z-independent potential.
    pub depth: f64,
}

/// Grid scan plus golden-section refinement of both extrema over one period.
pub fn locate_well(config: &LatticeConfig, species: &SpeciesOptics) -> PotentialWell {
    let (u_plus, u_minus) = sublattice_depths(config, species);
    let k = config.wavenumber();
    let phi = config.phi;
    let period = config.period();
    let step = period / DEPTH_GRID_POINTS as f64;
    let u = |z: f64| potential_at(u_plus, u_minus, k, phi, z);

    let (mut i_min, mut i_max) = (0usize, 0usize);
    let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..DEPTH_GRID_POINTS {
        let v = u(i as f64 * step);
        if v < v_min {
            v_min = v;
            i_min = i;
        }
        if v > v_max {
            v_max = v;
            i_max = i;
        }
    }

    let tol = 1e-12 * period;
    let refine = |i: usize, sign: f64| {
        let centre = i as f64 * step;
        let z = golden_section_min(|z| sign * u(z), centre - step, centre + step, tol);
        Extremum { z, value: u(z) }
    };
    let minimum = refine(i_min, 1.0);
    let maximum = refine(i_max, -1.0);
    let minimum = if minimum.value <= v_min { minimum } else { Extremum { z: i_min as f64 * step, value: v_min } };
    let maximum = if maximum.value >= v_max { maximum } else { Extremum { z: i_max as f64 * step, value: v_max } };

    let mut depth = maximum.value - minimum.value;
    if depth <= 1e-12 * (u_plus.abs() + u_minus.abs()) {
        depth = 0.0;
    }
    PotentialWell { minimum, maximum, depth }
}

pub fn well_depth(config: &LatticeConfig, species: &SpeciesOptics) -> f64 {
    locate_well(config, species).depth
}

/// Depth at the maximum-overlap phase, `2 I π |α^s| (1 + δρ) / c` in Gaussian
/// form, here in SI.
pub fn closed_form_overlap_depth(config: &LatticeConfig, species: &SpeciesOptics) -> f64 {
    let c = &CODATA_2018;
    species.alpha_scalar_si().abs() * config.intensity * (1.0 + config.delta * species.rho).abs()
        / (2.0 * c.speed_of_light * c.vacuum_permittivity)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn transport_feasibility(rho_up: f64, rho_down: f64, delta: f64) -> Result<FeasibilityReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::UndefinedMisbalance(delta));
    }
    let checks: [(&'static str, f64); 4] = [
        ("rho_up > -1/delta", rho_up + 1.0 / delta),
        ("rho_up < -delta", -delta - rho_up),
        ("rho_down > delta", rho_down - delta),
        ("rho_down < 1/delta", 1.0 / delta - rho_down),
    ];
    let violated_constraints: Vec<_> = checks
        .iter()
        .filter(|(_, slack)| !(*slack > 0.0))
        .map(|(label, _)| *label)
        .collect();
    let margin = checks.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    Ok(FeasibilityReport {
        feasible: violated_constraints.is_empty(),
        violated_constraints,
        margin,
    })
}

/// Phase at which a species' depth is weakest during the protocol: the head
/// at maximum overlap with a clock atom, the clock atom at φ = π/2.
pub fn worst_case_phase(role: Role) -> f64 {
    match role {
        Role::Clock => FRAC_PI_2,
        Role::HeadUp | Role::HeadDown => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRequirement {
    pub name: String,
    pub role: Role,
    pub phase: f64,
    pub recoil_energy: f64,
    /// Worst-case depth at the configured intensity, J.
    pub depth: f64,
    pub required_intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityRequirement {
    pub intensity: f64,
    pub binding_species: String,
    pub feasibility: Option<FeasibilityReport>,
    pub per_species: Vec<SpeciesRequirement>,
}

/// Smallest lattice intensity for which every species keeps a worst-case depth
/// above `depth_factor · E_R`.
pub fn min_required_intensity(
    species_list: &[SpeciesOptics],
    config: &LatticeConfig,
    depth_factor: f64,
) -> Result<IntensityRequirement> {
    require_non_negative("depth_factor", depth_factor)?;
    if species_list.is_empty() {
        return Err(Error::InvalidInput("species list is empty".into()));
    }
    let up = species_list.iter().find(|s| s.role == Role::HeadUp);
    let down = species_list.iter().find(|s| s.role == Role::HeadDown);
    let feasibility = match (up, down) {
        (Some(up), Some(down)) => {
            let report = transport_feasibility(up.rho, down.rho, config.delta)?;
            if !report.feasible {
                return Err(Error::Infeasible(report));
            }
            Some(report)
        }
        _ => None,
    };

    let mut per_species = Vec::with_capacity(species_list.len());
    for species in species_list {
        let phase = worst_case_phase(species.role);
        let depth = well_depth(&config.with_phi(phase), species);
        let recoil = recoil_energy(species.mass, config.lambda_m)?;
        let required = if depth_factor == 0.0 {
            0.0
        } else if depth > 0.0 {
            depth_factor * recoil * config.intensity / depth
        } else {
            return Err(Error::Untrapped {
                species: species.name.clone(),
                depth,
            });
        };
        per_species.push(SpeciesRequirement {
            name: species.name.clone(),
            role: species.role,
            phase,
            recoil_energy: recoil,
            depth,
            required_intensity: required,
        });
    }
    let binding = per_species
        .iter()
        .max_by(|a, b| a.required_intensity.total_cmp(&b.required_intensity))
        .expect("non-empty");
    Ok(IntensityRequirement {
        intensity: binding.required_intensity,
        binding_species: binding.name.clone(),
        feasibility,
        per_species,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapFrequencies {
    pub axial: f64,
    pub radial_1: f64,
    pub radial_2: f64,
}

impl TrapFrequencies {
    pub fn as_array(&self) -> [f64; 3] {
        [self.axial, self.radial_1, self.radial_2]
    }
}

/// Angular frequency of a cos²-form well of depth `depth`: `k·sqrt(2ΔU/M)`.
pub fn harmonic_frequency(depth: f64, mass: f64, lambda_m: f64) -> f64 {
    2.0 * PI / lambda_m * (2.0 * depth / mass).sqrt()
}

/// Axial frequency at the configured phase; radial frequencies from the two
/// linearly polarized transverse lattices (scalar polarizability only).
pub fn trap_frequencies(config: &LatticeConfig, species: &SpeciesOptics) -> Result<TrapFrequencies> {
    let axial_depth = well_depth(config, species);
    if !(axial_depth > 0.0) {
        return Err(Error::Untrapped {
            species: species.name.clone(),
            depth: axial_depth,
        });
    }
    let c = &CODATA_2018;
    let radial_depth = species.alpha_scalar_si().abs() * config.transverse_intensity
        / (2.0 * c.speed_of_light * c.vacuum_permittivity);
    if !(radial_depth > 0.0) {
        return Err(Error::Untrapped {
            species: species.name.clone(),
            depth: radial_depth,
        });
    }
    let radial = harmonic_frequency(radial_depth, species.mass, config.lambda_m);
    Ok(TrapFrequencies {
        axial: harmonic_frequency(axial_depth, species.mass, config.lambda_m),
        radial_1: radial,
        radial_2: radial,
    })
}
