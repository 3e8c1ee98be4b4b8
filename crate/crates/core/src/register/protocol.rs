//! Gate-level execution of the entangled Ramsey sequence.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    hadamard, init_register_with_cap, Backend, BranchProductState, Branch, DenseState, Matrix2, RegisterState,
    DEFAULT_DENSE_CAP,
};
use crate::error::{Error, Result};
use crate::schedule::{build_schedule, ProtocolSchedule, StepKind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Optical clock and microwave head detunings, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Detunings {
    pub clock: f64,
    pub head: f64,
}

impl Detunings {
    pub fn new(clock: f64, head: f64) -> Self {
        Self { clock, head }
    }

    /// Ramsey phase χ = (NΔω + Δω′)T.
    pub fn ramsey_phase(&self, n_atoms: usize, ramsey_time: f64) -> f64 {
        (n_atoms as f64 * self.clock + self.head) * ramsey_time
    }
}

pub fn apply_phase_gate(state: &mut RegisterState, site: usize) -> Result<()> {
    state.apply_phase_gate(site)
}

pub fn apply_free_evolution(
    state: &mut RegisterState,
    delta_omega: f64,
    delta_omega_head: f64,
    duration: f64,
) -> Result<()> {
    state.apply_free_evolution(delta_omega, delta_omega_head, duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// |0…0⟩|↓⟩
    Initial,
    /// Hadamards on every qubit.
    Superposed,
    /// Phase gates on every site.
    PhaseGated,
    /// First generalized π/2 pulse complete.
    Ghz,
    Evolved,
    /// Second generalized π/2 pulse complete.
    Final,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Initial,
        Stage::Superposed,
        Stage::PhaseGated,
        Stage::Ghz,
        Stage::Evolved,
        Stage::Final,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Superposed => "superposed",
            Stage::PhaseGated => "phase_gated",
            Stage::Ghz => "ghz",
            Stage::Evolved => "evolved",
            Stage::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub stage: Stage,
    pub state: RegisterState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub final_state: RegisterState,
    pub checkpoints: Vec<Checkpoint>,
    /// Largest branch count seen after any gate (branch backend only).
    pub max_rank: Option<usize>,
    pub ramsey_phase: f64,
}

impl ProtocolRun {
    pub fn checkpoint(&self, stage: Stage) -> Option<&RegisterState> {
        self.checkpoints.iter().find(|c| c.stage == stage).map(|c| &c.state)
    }

    pub fn p_up(&self) -> f64 {
        self.final_state.head_readout().1
    }
}

/// Runs the gate content of `schedule` on `state`. Detuning phases accrue only
/// during the free-evolution step. `on_step` sees the state after each step.
pub fn execute_schedule(
    state: &mut RegisterState,
    schedule: &ProtocolSchedule,
    detunings: Detunings,
    mut on_step: impl FnMut(usize, StepKind, &RegisterState),
) -> Result<Option<usize>> {
    if schedule.n_atoms() != state.n_atoms() {
        return Err(Error::IncompatibleStates);
    }
    let h = hadamard();
    let mut max_rank = state.rank();
    for (index, step) in schedule.steps().iter().enumerate() {
        match step.kind {
            StepKind::HadamardAll => state.apply_clock_rotation(&h)?,
            StepKind::HeadPulse => state.apply_head_rotation(&h)?,
            StepKind::PhaseGate => {
                let site = step.site.ok_or_else(|| Error::InvalidInput("phase gate without site".into()))?;
                state.apply_phase_gate(site)?
            }
            StepKind::FreeEvolution => state.apply_free_evolution(detunings.clock, detunings.head, step.duration)?,
            StepKind::Transport | StepKind::Readout => {}
        }
        max_rank = max_rank.max(state.rank());
        on_step(index, step.kind, state);
    }
    Ok(max_rank)
}

/// Noiseless end-to-end protocol with checkpoint capture.
pub fn run_protocol(
    n_atoms: usize,
    backend: Backend,
    delta_omega: f64,
    delta_omega_head: f64,
    ramsey_time: f64,
) -> Result<ProtocolRun> {
    run_protocol_with_cap(n_atoms, backend, Detunings::new(delta_omega, delta_omega_head), ramsey_time, DEFAULT_DENSE_CAP)
}

pub fn run_protocol_with_cap(
    n_atoms: usize,
    backend: Backend,
    detunings: Detunings,
    ramsey_time: f64,
    dense_cap: usize,
) -> Result<ProtocolRun> {
    let schedule = build_schedule(n_atoms, 0.0, 0.0, ramsey_time, 0.0)?;
    let mut state = init_register_with_cap(n_atoms, backend, dense_cap)?;

    // Step layout: H, H_head, 2N transport/gate steps, H, free, H, 2N, H, H_head, readout.
    let n = n_atoms;
    let marks = [
        (1, Stage::Superposed),
        (1 + 2 * n, Stage::PhaseGated),
        (2 + 2 * n, Stage::Ghz),
        (3 + 2 * n, Stage::Evolved),
    ];
    let mut checkpoints = vec![Checkpoint {
        stage: Stage::Initial,
        state: state.clone(),
    }];
    let max_rank = execute_schedule(&mut state, &schedule, detunings, |index, _, s| {
        if let Some((_, stage)) = marks.iter().find(|(i, _)| *i == index) {
            checkpoints.push(Checkpoint {
                stage: *stage,
                state: s.clone(),
            });
        }
    })?;
    checkpoints.push(Checkpoint {
        stage: Stage::Final,
        state: state.clone(),
    });
    Ok(ProtocolRun {
        final_state: state,
        checkpoints,
        max_rank,
        ramsey_phase: detunings.ramsey_phase(n_atoms, ramsey_time),
    })
}

/// Noiseless head-↑ probability at the end of the protocol.
pub fn noiseless_p_up(n_atoms: usize, backend: Backend, detunings: Detunings, ramsey_time: f64, dense_cap: usize) -> Result<f64> {
    let schedule = build_schedule(n_atoms, 0.0, 0.0, ramsey_time, 0.0)?;
    let mut state = init_register_with_cap(n_atoms, backend, dense_cap)?;
    execute_schedule(&mut state, &schedule, detunings, |_, _, _| {})?;
    Ok(state.head_readout().1)
}

fn uniform_clock(n: usize, f: [Complex64; 2]) -> Vec<[Complex64; 2]> {
    vec![f; n]
}

/// Ideal state at each checkpoint for Ramsey phase `chi`.
pub fn expected_checkpoint(stage: Stage, n_atoms: usize, chi: f64) -> Result<BranchProductState> {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let zero = [ONE, ZERO];
    let one = [ZERO, ONE];
    let plus = [s, s];
    let minus = [s, -s];
    let down = [ONE, ZERO];
    let up = [ZERO, ONE];
    let two = |a: (Vec<[Complex64; 2]>, [Complex64; 2]), b: (Vec<[Complex64; 2]>, [Complex64; 2]), phase: Complex64| {
        BranchProductState::from_branches(vec![
            Branch::normalized(s, a.0, a.1),
            Branch::normalized(s * phase, b.0, b.1),
        ])
    };
    match stage {
        Stage::Initial => BranchProductState::product(uniform_clock(n_atoms, zero), down),
        Stage::Superposed => BranchProductState::product(uniform_clock(n_atoms, plus), plus),
        Stage::PhaseGated => two(
            (uniform_clock(n_atoms, plus), down),
            (uniform_clock(n_atoms, minus), up),
            ONE,
        ),
        Stage::Ghz => two((uniform_clock(n_atoms, zero), down), (uniform_clock(n_atoms, one), up), ONE),
        Stage::Evolved => two(
            (uniform_clock(n_atoms, zero), down),
            (uniform_clock(n_atoms, one), up),
            Complex64::from_polar(1.0, chi),
        ),
        Stage::Final => BranchProductState::product(
            uniform_clock(n_atoms, zero),
            [
                Complex64::new((chi / 2.0).cos(), 0.0),
                Complex64::new(0.0, -(chi / 2.0).sin()),
            ],
        ),
    }
}

/// Supported gate set for randomized differential testing.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    ClockRotation(Matrix2),
    HeadRotation(Matrix2),
    PhaseGate(usize),
    FreeEvolution { delta_omega: f64, delta_omega_head: f64, duration: f64 },
}

fn random_unitary(rng: &mut impl Rng) -> Matrix2 {
    // Z-Y-Z Euler angles and a global phase.
    let [alpha, beta, gamma, delta]: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let (c, s) = ((gamma / 2.0).cos(), (gamma / 2.0).sin());
    let g = Complex64::from_polar(1.0, delta);
    [
        [
            g * Complex64::from_polar(c, -(alpha + beta) / 2.0),
            -g * Complex64::from_polar(s, -(alpha - beta) / 2.0),
        ],
        [
            g * Complex64::from_polar(s, (alpha - beta) / 2.0),
            g * Complex64::from_polar(c, (alpha + beta) / 2.0),
        ],
    ]
}

pub fn random_gate_sequence(n_atoms: usize, length: usize, seed: u64) -> Vec<Gate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length)
        .map(|_| match rng.random_range(0..4) {
            0 => Gate::ClockRotation(random_unitary(&mut rng)),
            1 => Gate::HeadRotation(random_unitary(&mut rng)),
            2 => Gate::PhaseGate(rng.random_range(0..n_atoms)),
            _ => Gate::FreeEvolution {
                delta_omega: rng.random_range(-3.0..3.0),
                delta_omega_head: rng.random_range(-3.0..3.0),
                duration: rng.random_range(0.0..1.0),
            },
        })
        .collect()
}

pub fn run_gate_sequence(state: &mut RegisterState, gates: &[Gate]) -> Result<()> {
    for gate in gates {
        match gate {
            Gate::ClockRotation(m) => state.apply_clock_rotation(m)?,
            Gate::HeadRotation(m) => state.apply_head_rotation(m)?,
            Gate::PhaseGate(site) => state.apply_phase_gate(*site)?,
            Gate::FreeEvolution {
                delta_omega,
                delta_omega_head,
                duration,
            } => state.apply_free_evolution(*delta_omega, *delta_omega_head, *duration)?,
        }
    }
    Ok(())
}

/// Runs `gates` on both backends and returns the largest amplitude deviation
/// after aligning the global phase.
pub fn backend_crosscheck(n_atoms: usize, gates: &[Gate]) -> Result<f64> {
    let mut dense = RegisterState::Dense(DenseState::new_with_cap(n_atoms, n_atoms.max(DEFAULT_DENSE_CAP))?);
    let mut branch = RegisterState::Branch(BranchProductState::new(n_atoms)?);
    run_gate_sequence(&mut dense, gates)?;
    run_gate_sequence(&mut branch, gates)?;
    let d = dense.to_dense_amplitudes()?;
    let b = branch.to_dense_amplitudes()?;
    let overlap: Complex64 = b.iter().zip(&d).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    Ok(d.iter().zip(&b).map(|(x, y)| (x - y * phase).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::init_register;
    use std::f64::consts::PI;

    #[test]
    fn ghz_after_first_pulse() {
        for backend in [Backend::Dense, Backend::Branch] {
            let run = run_protocol(3, backend, 0.0, 0.0, 1.0).unwrap();
            let ghz = expected_checkpoint(Stage::Ghz, 3, 0.0).unwrap();
            let f = run.checkpoint(Stage::Ghz).unwrap().fidelity_with(&ghz).unwrap();
            assert!(f >= 1.0 - 1e-10, "{backend}: {f}");
        }
    }

    #[test]
    fn all_checkpoints_match_ideal_states() {
        let chi_target = 0.7;
        let n = 4;
        let t = 2.0;
        let dw = chi_target / (n as f64 * t);
        for backend in [Backend::Dense, Backend::Branch] {
            let run = run_protocol(n, backend, dw, 0.0, t).unwrap();
            for stage in Stage::ALL {
                let reference = expected_checkpoint(stage, n, run.ramsey_phase).unwrap();
                let f = run.checkpoint(stage).unwrap().fidelity_with(&reference).unwrap();
                assert!(f >= 1.0 - 1e-10, "{backend} {stage:?}: {f}");
            }
        }
    }

    #[test]
    fn zero_phase_returns_to_initial_state() {
        let run = run_protocol(5, Backend::Dense, 0.0, 0.0, 3.0).unwrap();
        let amps = run.final_state.to_dense_amplitudes().unwrap();
        assert!((amps[0].norm() - 1.0).abs() < 1e-12);
        assert!(amps[1..].iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn clock_register_disentangles_for_any_phase() {
        for chi in [0.3, 1.1, 2.5, PI] {
            let run = run_protocol(8, Backend::Dense, chi / 8.0, 0.0, 1.0).unwrap();
            let amps = run.final_state.to_dense_amplitudes().unwrap();
            let half = 1 << 8;
            let weight = amps[0].norm_sqr() + amps[half].norm_sqr();
            assert!((weight - 1.0).abs() < 1e-12, "chi {chi}: clock weight {weight}");
        }
    }

    #[test]
    fn readout_probabilities() {
        let run = run_protocol(2, Backend::Dense, PI / 2.0, 0.0, 1.0).unwrap();
        assert!((run.p_up() - 1.0).abs() < 1e-12);
        let run = run_protocol(2, Backend::Branch, PI / 4.0, 0.0, 1.0).unwrap();
        assert!((run.p_up() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_run_stays_rank_two() {
        let run = run_protocol(50, Backend::Branch, 0.013, 0.002, 1.0).unwrap();
        assert!(run.max_rank.unwrap() <= 2);
    }

    #[test]
    fn free_evolution_phase_on_ghz() {
        // N = 5, ΔωT = 0.1, Δω′T = 0.02 → relative branch phase 0.52 rad.
        let mut state = init_register(5, Backend::Dense).unwrap();
        let h = hadamard();
        state.apply_clock_rotation(&h).unwrap();
        state.apply_head_rotation(&h).unwrap();
        for site in 0..5 {
            state.apply_phase_gate(site).unwrap();
        }
        state.apply_clock_rotation(&h).unwrap();
        state.apply_free_evolution(0.1, 0.02, 1.0).unwrap();
        let amps = state.to_dense_amplitudes().unwrap();
        let low = amps[0];
        let high = amps[(1 << 5) - 1 + (1 << 5)];
        let phase = (high / low).arg();
        assert!((phase - 0.52).abs() < 1e-12, "{phase}");
    }

    #[test]
    fn single_hadamard_crosscheck() {
        let dev = backend_crosscheck(1, &[Gate::ClockRotation(hadamard())]).unwrap();
        assert!(dev < 1e-14);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert!(super::super::unitarity_deviation(&random_unitary(&mut rng)) < 1e-14);
        }
    }
}
