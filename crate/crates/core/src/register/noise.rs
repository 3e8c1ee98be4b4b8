//! Monte Carlo scattering trajectories under the all-or-nothing decoherence
//! model: one scattered photon anywhere destroys the fringe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::{noiseless_p_up, Backend, Detunings, DEFAULT_DENSE_CAP};
use crate::error::Result;
use crate::schedule::{DecoherenceParams, ProtocolSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseTarget {
    Clock(usize),
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseEffect {
    DecohereAll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEvent {
    pub time: f64,
    pub target: NoiseTarget,
    pub effect: NoiseEffect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub p_up: f64,
    pub scattered: bool,
    pub seed: u64,
    pub event: Option<NoiseEvent>,
}

/// Samples trajectories of one protocol configuration whose noiseless
/// readout probability is already known.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySampler {
    n_atoms: usize,
    duration: f64,
    params: DecoherenceParams,
    noiseless_p_up: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryBatch {
    pub trajectories: usize,
    pub scattered: usize,
    pub mean_p_up: f64,
}

impl TrajectoryBatch {
    pub fn scattered_fraction(&self) -> f64 {
        self.scattered as f64 / self.trajectories as f64
    }
}

/// `count` per-trajectory seeds derived from `(base_seed, stream)`.
pub fn derive_seeds(base_seed: u64, stream: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.random()).collect()
}

impl TrajectorySampler {
    pub fn new(schedule: &ProtocolSchedule, params: DecoherenceParams, noiseless_p_up: f64) -> Self {
        Self {
            n_atoms: schedule.n_atoms(),
            duration: schedule.total_duration(),
            params,
            noiseless_p_up,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.params.total_rate(self.n_atoms)
    }

    pub fn sample(&self, seed: u64) -> TrajectoryOutcome {
        let rate = self.total_rate();
        let event = if rate > 0.0 && rate.is_finite() && self.duration > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let time = Exp::new(rate).expect("positive rate").sample(&mut rng);
            (time < self.duration).then(|| {
                let pick = rng.random::<f64>() * rate;
                let clock_rate = self.n_atoms as f64 / self.params.tau_scatter_clock;
                let target = if pick < clock_rate {
                    NoiseTarget::Clock(((pick / clock_rate) * self.n_atoms as f64) as usize % self.n_atoms)
                } else {
                    NoiseTarget::Head
                };
                NoiseEvent {
                    time,
                    target,
                    effect: NoiseEffect::DecohereAll,
                }
            })
        } else if rate.is_infinite() && self.duration > 0.0 {
            Some(NoiseEvent {
                time: 0.0,
                target: NoiseTarget::Head,
                effect: NoiseEffect::DecohereAll,
            })
        } else {
            None
        };
        TrajectoryOutcome {
            p_up: if event.is_some() { 0.5 } else { self.noiseless_p_up },
            scattered: event.is_some(),
            seed,
            event,
        }
    }

    /// Runs `count` trajectories in parallel. The result depends only on
    /// `(base_seed, stream, count)`.
    pub fn run_batch(&self, base_seed: u64, stream: u64, count: usize) -> TrajectoryBatch {
        let seeds = derive_seeds(base_seed, stream, count);
        let scattered = seeds.par_iter().filter(|&&s| self.sample(s).scattered).count();
        let survived = count - scattered;
        let mean_p_up = if count == 0 {
            self.noiseless_p_up
        } else {
            (0.5 * scattered as f64 + self.noiseless_p_up * survived as f64) / count as f64
        };
        TrajectoryBatch {
            trajectories: count,
            scattered,
            mean_p_up,
        }
    }
}

/// One noisy trajectory of the full protocol.
pub fn sample_noisy_trajectory(
    n_atoms: usize,
    schedule: &ProtocolSchedule,
    params: &DecoherenceParams,
    detunings: Detunings,
    seed: u64,
) -> Result<TrajectoryOutcome> {
    let backend = if n_atoms <= DEFAULT_DENSE_CAP { Backend::Dense } else { Backend::Branch };
    let p = noiseless_p_up(n_atoms, backend, detunings, schedule.ramsey_time(), DEFAULT_DENSE_CAP)?;
    Ok(TrajectorySampler::new(schedule, *params, p).sample(seed))
}
