//! Chains the lattice, rate, and schedule calculations into one budget:
//! intensity → depths → lifetimes and trap frequencies → gate time.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{
    min_required_intensity, trap_frequencies, well_depth, IntensityRequirement, LatticeConfig, Role, SpeciesOptics,
    TrapFrequencies,
};
use crate::rates::{interaction_energy, phase_gate_duration, photon_scattering_time};
use crate::schedule::{DecoherenceParams, StepTimes, DEFAULT_TRANSPORT_TIME};
use crate::units::bohr_to_m;

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSet {
    pub clock: SpeciesOptics,
    pub head_up: SpeciesOptics,
    pub head_down: SpeciesOptics,
}

impl SpeciesSet {
    /// ⁸⁸Sr clock atoms with a ²⁷Al head in |3,−3⟩ / |2,−2⟩.
    pub fn strontium_aluminium() -> Self {
        Self {
            clock: SpeciesOptics::strontium_88(),
            head_up: SpeciesOptics::aluminium_27_up(),
            head_down: SpeciesOptics::aluminium_27_down(),
        }
    }

    pub fn from_list(list: &[SpeciesOptics]) -> Result<Self> {
        let find = |role: Role| {
            list.iter()
                .find(|s| s.role() == role)
                .cloned()
                .ok_or(Error::MissingSpecies(role.label()))
        };
        Ok(Self {
            clock: find(Role::Clock)?,
            head_up: find(Role::HeadUp)?,
            head_down: find(Role::HeadDown)?,
        })
    }

    pub fn to_list(&self) -> [SpeciesOptics; 3] {
        [self.clock.clone(), self.head_up.clone(), self.head_down.clone()]
    }
}

/// Inputs of the budget; `None` means "derive from the physics".
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetInputs {
    pub species: SpeciesSet,
    /// Lattice geometry; its intensities are replaced when `intensity` is `None`.
    pub lattice: LatticeConfig,
    pub intensity: Option<f64>,
    pub transverse_intensity: Option<f64>,
    pub depth_factor: f64,
    /// Scattering-length difference, m.
    pub a_scatt: f64,
    pub transport_time: f64,
    pub pulse_time: f64,
    pub gate_time: Option<f64>,
    pub tau_clock: Option<f64>,
    pub tau_head: Option<f64>,
    pub extra_loss_rate: f64,
}

impl BudgetInputs {
    pub fn reference_defaults() -> Self {
        Self {
            species: SpeciesSet::strontium_aluminium(),
            lattice: LatticeConfig::blue_magic(1.0).expect("valid"),
            intensity: None,
            transverse_intensity: None,
            depth_factor: crate::lattice::DEFAULT_DEPTH_FACTOR,
            a_scatt: bohr_to_m(100.0),
            transport_time: DEFAULT_TRANSPORT_TIME,
            pulse_time: 0.0,
            gate_time: None,
            tau_clock: None,
            tau_head: None,
            extra_loss_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockBudget {
    pub requirement: IntensityRequirement,
    /// Lattice at the operating intensity, overlap phase.
    pub lattice: LatticeConfig,
    pub clock_overlap_depth: f64,
    pub head_overlap_depth: f64,
    pub clock_trap: TrapFrequencies,
    pub head_trap: TrapFrequencies,
    pub interaction_energy: f64,
    pub step_times: StepTimes,
    pub decoherence: DecoherenceParams,
}

pub fn compute_budget(inputs: &BudgetInputs) -> Result<ClockBudget> {
    let species = inputs.species.to_list();
    let requirement = min_required_intensity(&species, &inputs.lattice, inputs.depth_factor)?;
    let intensity = match inputs.intensity {
        Some(i) => i,
        None if requirement.intensity > 0.0 => requirement.intensity,
        None => {
            return Err(Error::InvalidInput(
                "lattice intensity must be given when depth_factor is 0".into(),
            ))
        }
    };
    let transverse = inputs.transverse_intensity.unwrap_or(intensity);
    let lattice = inputs
        .lattice
        .with_intensity(intensity)?
        .with_transverse_intensity(transverse)?
        .with_phi(0.0);

    let clock = &inputs.species.clock;
    let head = &inputs.species.head_up;
    let clock_overlap_depth = well_depth(&lattice, clock);
    let head_overlap_depth = well_depth(&lattice, head);

    let clock_trap = trap_frequencies(&lattice, clock)?;
    let head_trap = trap_frequencies(&lattice, head)?;
    let delta_e = interaction_energy(
        inputs.a_scatt,
        head.mass(),
        clock.mass(),
        head_trap.as_array(),
        clock_trap.as_array(),
    )?;
    let gate_time = match inputs.gate_time {
        Some(t) => t,
        None => phase_gate_duration(delta_e, PI)?,
    };

    let tau = |s: &SpeciesOptics, depth: f64, over: Option<f64>| -> Result<f64> {
        match over {
            Some(t) => Ok(t),
            None => photon_scattering_time(s, lattice.intensity(), depth, lattice.lambda_m()),
        }
    };
    let decoherence = DecoherenceParams::new(
        tau(clock, clock_overlap_depth, inputs.tau_clock)?,
        tau(head, head_overlap_depth, inputs.tau_head)?,
        inputs.extra_loss_rate,
    )?;

    Ok(ClockBudget {
        requirement,
        lattice,
        clock_overlap_depth,
        head_overlap_depth,
        clock_trap,
        head_trap,
        interaction_energy: delta_e,
        step_times: StepTimes {
            gate_time,
            transport_time: inputs.transport_time,
            pulse_time: inputs.pulse_time,
        },
        decoherence,
    })
}
