//! Timed step list of the entangled Ramsey sequence and the pessimistic
//! survival probability.

use std::fmt;

use crate::error::{require_non_negative, Error, Result};

/// Default transport time between neighbouring sites, s.
pub const DEFAULT_TRANSPORT_TIME: f64 = 10e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    pub tau_scatter_clock: f64,
    pub tau_scatter_head: f64,
    /// Aggregate rate standing in for inelastic head–clock collisions, 1/s.
    pub extra_loss_rate: f64,
}

impl DecoherenceParams {
    pub fn new(tau_scatter_clock: f64, tau_scatter_head: f64, extra_loss_rate: f64) -> Result<Self> {
        // An infinite lifetime means the channel is absent.
        for (what, tau) in [("tau_scatter_clock", tau_scatter_clock), ("tau_scatter_head", tau_scatter_head)] {
            if !(tau > 0.0) {
                return Err(Error::NonPositive { what, value: tau });
            }
        }
        require_non_negative("extra_loss_rate", extra_loss_rate)?;
        Ok(Self {
            tau_scatter_clock,
            tau_scatter_head,
            extra_loss_rate,
        })
    }

    /// No decoherence at all.
    pub fn noiseless() -> Self {
        Self {
            tau_scatter_clock: f64::INFINITY,
            tau_scatter_head: f64::INFINITY,
            extra_loss_rate: 0.0,
        }
    }

    /// Total rate of decohering events with `n_atoms` clock atoms, 1/s.
    pub fn total_rate(&self, n_atoms: usize) -> f64 {
        n_atoms as f64 / self.tau_scatter_clock + 1.0 / self.tau_scatter_head + self.extra_loss_rate
    }

    /// Every time divided by `factor`, every rate multiplied by it.
    pub fn rescaled_rates(&self, factor: f64) -> Self {
        Self {
            tau_scatter_clock: self.tau_scatter_clock / factor,
            tau_scatter_head: self.tau_scatter_head / factor,
            extra_loss_rate: self.extra_loss_rate * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    HadamardAll,
    HeadPulse,
    Transport,
    PhaseGate,
    FreeEvolution,
    Readout,
}

impl StepKind {
    pub fn label(self) -> &'static str {
        match self {
            StepKind::HadamardAll => "hadamard_all",
            StepKind::HeadPulse => "head_pulse",
            StepKind::Transport => "transport",
            StepKind::PhaseGate => "phase_gate",
            StepKind::FreeEvolution => "free_evolution",
            StepKind::Readout => "readout",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolStep {
    pub kind: StepKind,
    pub duration: f64,
    pub site: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule {
    steps: Vec<ProtocolStep>,
    total_duration: f64,
    ramsey_time: f64,
    n_atoms: usize,
}

/// Step durations of one protocol run, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTimes {
    pub gate_time: f64,
    pub transport_time: f64,
    pub pulse_time: f64,
}

impl StepTimes {
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            gate_time: self.gate_time * factor,
            transport_time: self.transport_time * factor,
            pulse_time: self.pulse_time * factor,
        }
    }
}

pub fn build_schedule(
    n_atoms: usize,
    gate_time: f64,
    transport_time: f64,
    ramsey_time: f64,
    pulse_time: f64,
) -> Result<ProtocolSchedule> {
    if n_atoms < 1 {
        return Err(Error::InvalidAtomCount(n_atoms));
    }
    require_non_negative("gate_time", gate_time)?;
    require_non_negative("transport_time", transport_time)?;
    require_non_negative("ramsey_time", ramsey_time)?;
    require_non_negative("pulse_time", pulse_time)?;

    let step = |kind, duration, site| ProtocolStep { kind, duration, site };
    let entangle = |steps: &mut Vec<ProtocolStep>| {
        for site in 0..n_atoms {
            steps.push(step(StepKind::Transport, transport_time, Some(site)));
            steps.push(step(StepKind::PhaseGate, gate_time, Some(site)));
        }
    };

    let mut steps = Vec::with_capacity(4 * n_atoms + 8);
    steps.push(step(StepKind::HadamardAll, pulse_time, None));
    steps.push(step(StepKind::HeadPulse, pulse_time, None));
    entangle(&mut steps);
    steps.push(step(StepKind::HadamardAll, pulse_time, None));
    steps.push(step(StepKind::FreeEvolution, ramsey_time, None));
    steps.push(step(StepKind::HadamardAll, pulse_time, None));
    entangle(&mut steps);
    steps.push(step(StepKind::HadamardAll, pulse_time, None));
    steps.push(step(StepKind::HeadPulse, pulse_time, None));
    steps.push(step(StepKind::Readout, 0.0, None));

    let total_duration = steps.iter().map(|s| s.duration).sum();
    Ok(ProtocolSchedule {
        steps,
        total_duration,
        ramsey_time,
        n_atoms,
    })
}

pub fn build_schedule_with(n_atoms: usize, times: &StepTimes, ramsey_time: f64) -> Result<ProtocolSchedule> {
    build_schedule(n_atoms, times.gate_time, times.transport_time, ramsey_time, times.pulse_time)
}

impl ProtocolSchedule {
    pub fn steps(&self) -> &[ProtocolStep] {
        &self.steps
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn ramsey_time(&self) -> f64 {
        self.ramsey_time
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Duration of everything except free evolution.
    pub fn entanglement_duration(&self) -> f64 {
        self.total_duration - self.ramsey_time
    }

    /// Start time of every step, s.
    pub fn start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.steps
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                start
            })
            .collect()
    }
}

/// Integrated decoherence exposure Λ of one run.
pub fn exposure(schedule: &ProtocolSchedule, n_atoms: usize, params: &DecoherenceParams) -> f64 {
    let rate = params.total_rate(n_atoms);
    if schedule.total_duration == 0.0 {
        0.0
    } else {
        schedule.total_duration * rate
    }
}

/// Probability that no decohering event occurs during the whole schedule.
pub fn survival_probability(schedule: &ProtocolSchedule, n_atoms: usize, params: &DecoherenceParams) -> f64 {
    (-exposure(schedule, n_atoms, params)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_bookkeeping() {
        let s = build_schedule(1, 1.0, 1.0, 10.0, 1.0).unwrap();
        // 10 s Ramsey + 2 × (transport + gate) + 4 clock Hadamards + 2 head pulses.
        assert_eq!(s.total_duration(), 10.0 + 2.0 * (1.0 + 1.0) + 6.0);
        assert_eq!(s.steps().iter().filter(|x| x.kind == StepKind::FreeEvolution).count(), 1);
    }

    #[test]
    fn thousand_atom_entanglement_stage() {
        let s = build_schedule(1000, 20e-6, 10e-6, 0.0, 0.0).unwrap();
        // One generalized pulse: 1000 × 30 μs = 30 ms; two of them bracket the Ramsey time.
        assert!((s.total_duration() - 0.060).abs() < 1e-12);
        assert!((s.entanglement_duration() / 2.0 - 0.030).abs() < 1e-12);
    }

    #[test]
    fn zero_atoms_rejected() {
        assert!(matches!(build_schedule(0, 1.0, 1.0, 1.0, 0.0), Err(Error::InvalidAtomCount(0))));
    }

    #[test]
    fn steps_alternate_over_sites() {
        let s = build_schedule(4, 1e-5, 1e-5, 1e-3, 0.0).unwrap();
        let sites: Vec<(StepKind, usize)> = s
            .steps()
            .iter()
            .filter_map(|st| st.site.map(|i| (st.kind, i)))
            .collect();
        assert_eq!(sites.len(), 16);
        for (chunk, pair) in sites.chunks(2).enumerate() {
            assert_eq!(pair[0], (StepKind::Transport, chunk % 4));
            assert_eq!(pair[1], (StepKind::PhaseGate, chunk % 4));
        }
        let sum: f64 = s.steps().iter().map(|x| x.duration).sum();
        assert_eq!(sum, s.total_duration());
    }

    #[test]
    fn survival_edge_cases() {
        let params = DecoherenceParams::new(10.0, 8.0, 0.0).unwrap();
        let zero = build_schedule(3, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(survival_probability(&zero, 3, &params), 1.0);

        // Λ = T · (N/τc + 1/τh) = ln 2.
        let params = DecoherenceParams::new(2.0, 2.0, 0.0).unwrap();
        let s = build_schedule(1, 0.0, 0.0, std::f64::consts::LN_2, 0.0).unwrap();
        assert!((survival_probability(&s, 1, &params) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(DecoherenceParams::new(0.0, 1.0, 0.0).is_err());
        assert!(DecoherenceParams::new(1.0, 1.0, -1.0).is_err());
        assert_eq!(DecoherenceParams::noiseless().total_rate(1000), 0.0);
    }
}
