//! Clock register of N qubits plus one head qubit.
//!
//! Two interchangeable representations: [`DenseState`] keeps all 2^(N+1)
//! amplitudes and is exact but memory-bound; [`BranchProductState`] keeps a
//! short sum of product states and handles thousands of atoms, since the
//! protocol never needs more than two branches.

mod branch;
mod dense;
mod noise;
mod protocol;

pub use branch::{Branch, BranchProductState, DEFAULT_RANK_BOUND, PRUNE_THRESHOLD};
pub use dense::{DenseState, DEFAULT_DENSE_CAP};
pub use noise::{
    derive_seeds, sample_noisy_trajectory, NoiseEffect, NoiseEvent, NoiseTarget, TrajectoryBatch,
    TrajectoryOutcome, TrajectorySampler,
};
pub use protocol::{
    apply_free_evolution, apply_phase_gate, backend_crosscheck, execute_schedule, expected_checkpoint,
    noiseless_p_up, random_gate_sequence, run_gate_sequence, run_protocol, run_protocol_with_cap, Checkpoint, Detunings, Gate,
    ProtocolRun, Stage,
};

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix2 = [[Complex64; 2]; 2];

pub const UNITARITY_TOLERANCE: f64 = 1e-12;

pub fn hadamard() -> Matrix2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

pub fn identity() -> Matrix2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_deviation(m: &Matrix2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let mut s: Complex64 = m.iter().map(|row| row[i].conj() * row[j]).sum();
            if i == j {
                s -= 1.0;
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

pub(crate) fn check_unitary(m: &Matrix2) -> Result<()> {
    let dev = unitarity_deviation(m);
    if dev <= UNITARITY_TOLERANCE {
        Ok(())
    } else {
        Err(Error::NonUnitary(dev))
    }
}

#[inline]
pub(crate) fn mat_vec(m: &Matrix2, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    Dense,
    #[default]
    Branch,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Branch => "branch",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Backend::Dense),
            "branch" => Ok(Backend::Branch),
            other => Err(Error::InvalidInput(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegisterState {
    Dense(DenseState),
    Branch(BranchProductState),
}

pub fn init_register(n_atoms: usize, backend: Backend) -> Result<RegisterState> {
    init_register_with_cap(n_atoms, backend, DEFAULT_DENSE_CAP)
}

pub fn init_register_with_cap(n_atoms: usize, backend: Backend, dense_cap: usize) -> Result<RegisterState> {
    match backend {
        Backend::Dense => DenseState::new_with_cap(n_atoms, dense_cap).map(RegisterState::Dense),
        Backend::Branch => BranchProductState::new(n_atoms).map(RegisterState::Branch),
    }
}

impl RegisterState {
    pub fn n_atoms(&self) -> usize {
        match self {
            RegisterState::Dense(s) => s.n_atoms(),
            RegisterState::Branch(s) => s.n_atoms(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            RegisterState::Dense(_) => Backend::Dense,
            RegisterState::Branch(_) => Backend::Branch,
        }
    }

    /// Number of product-state branches; `None` for the dense backend.
    pub fn rank(&self) -> Option<usize> {
        match self {
            RegisterState::Dense(_) => None,
            RegisterState::Branch(s) => Some(s.rank()),
        }
    }

    pub fn apply_clock_rotation(&mut self, matrix: &Matrix2) -> Result<()> {
        match self {
            RegisterState::Dense(s) => s.apply_clock_rotation(matrix),
            RegisterState::Branch(s) => s.apply_clock_rotation(matrix),
        }
    }

    pub fn apply_head_rotation(&mut self, matrix: &Matrix2) -> Result<()> {
        match self {
            RegisterState::Dense(s) => s.apply_head_rotation(matrix),
            RegisterState::Branch(s) => s.apply_head_rotation(matrix),
        }
    }

    pub fn apply_phase_gate(&mut self, site: usize) -> Result<()> {
        match self {
            RegisterState::Dense(s) => s.apply_phase_gate(site),
            RegisterState::Branch(s) => s.apply_phase_gate(site),
        }
    }

    pub fn apply_free_evolution(&mut self, delta_omega: f64, delta_omega_head: f64, duration: f64) -> Result<()> {
        match self {
            RegisterState::Dense(s) => s.apply_free_evolution(delta_omega, delta_omega_head, duration),
            RegisterState::Branch(s) => s.apply_free_evolution(delta_omega, delta_omega_head, duration),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            RegisterState::Dense(s) => s.norm_sqr(),
            RegisterState::Branch(s) => s.norm_sqr(),
        }
    }

    /// Born probabilities `(p_down, p_up)` of the head qubit.
    pub fn head_readout(&self) -> (f64, f64) {
        match self {
            RegisterState::Dense(s) => s.head_probabilities(),
            RegisterState::Branch(s) => s.head_probabilities(),
        }
    }

    /// `⟨reference|self⟩`.
    pub fn overlap_with(&self, reference: &BranchProductState) -> Result<Complex64> {
        if reference.n_atoms() != self.n_atoms() {
            return Err(Error::IncompatibleStates);
        }
        match self {
            RegisterState::Dense(s) => {
                let r = reference.to_dense_amplitudes()?;
                Ok(r.iter().zip(s.amplitudes()).map(|(a, b)| a.conj() * b).sum())
            }
            RegisterState::Branch(s) => Ok(reference.overlap(s)),
        }
    }

    pub fn fidelity_with(&self, reference: &BranchProductState) -> Result<f64> {
        Ok(self.overlap_with(reference)?.norm_sqr())
    }

    /// Full amplitude vector in the `p + 2^N·h` ordering.
    pub fn to_dense_amplitudes(&self) -> Result<Vec<Complex64>> {
        match self {
            RegisterState::Dense(s) => Ok(s.amplitudes().to_vec()),
            RegisterState::Branch(s) => s.to_dense_amplitudes(),
        }
    }
}
