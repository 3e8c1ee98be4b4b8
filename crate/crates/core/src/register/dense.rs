use num_complex::Complex64;

use super::{check_unitary, mat_vec, Matrix2};
use crate::error::{Error, Result};

/// Largest clock register the dense backend accepts unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 14;

/// Full state vector; amplitude index is `p + 2^N·h` with `p = Σ p_j 2^j`
/// the clock register and `h` the head (0 = ↓, 1 = ↑).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_atoms: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn new(n_atoms: usize) -> Result<Self> {
        Self::new_with_cap(n_atoms, DEFAULT_DENSE_CAP)
    }

    pub fn new_with_cap(n_atoms: usize, cap: usize) -> Result<Self> {
        if n_atoms < 1 {
            return Err(Error::InvalidAtomCount(n_atoms));
        }
        // 2^(N+1) must stay addressable regardless of the configured cap.
        if n_atoms > cap || n_atoms >= usize::BITS as usize - 2 {
            return Err(Error::Capacity { n_atoms, cap });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << (n_atoms + 1)];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_atoms, amplitudes })
    }

    /// Wraps an explicit amplitude vector of length 2^(N+1).
    pub fn from_amplitudes(n_atoms: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_atoms < 1 {
            return Err(Error::InvalidAtomCount(n_atoms));
        }
        if amplitudes.len() != 1usize << (n_atoms + 1) {
            return Err(Error::InvalidInput(format!(
                "expected {} amplitudes, got {}",
                1usize << (n_atoms + 1),
                amplitudes.len()
            )));
        }
        Ok(Self { n_atoms, amplitudes })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    fn rotate_bit(&mut self, bit: usize, m: &Matrix2) {
        let stride = 1usize << bit;
        for base in (0..self.amplitudes.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let j = i + stride;
                let [a, b] = mat_vec(m, [self.amplitudes[i], self.amplitudes[j]]);
                self.amplitudes[i] = a;
                self.amplitudes[j] = b;
            }
        }
    }

    pub fn apply_clock_rotation(&mut self, matrix: &Matrix2) -> Result<()> {
        check_unitary(matrix)?;
        for bit in 0..self.n_atoms {
            self.rotate_bit(bit, matrix);
        }
        Ok(())
    }

    pub fn apply_head_rotation(&mut self, matrix: &Matrix2) -> Result<()> {
        check_unitary(matrix)?;
        self.rotate_bit(self.n_atoms, matrix);
        Ok(())
    }

    /// `|↓⟩⟨↓| ⊗ I + |↑⟩⟨↑| ⊗ Z_site`.
    pub fn apply_phase_gate(&mut self, site: usize) -> Result<()> {
        if site >= self.n_atoms {
            return Err(Error::SiteOutOfRange {
                site,
                n_atoms: self.n_atoms,
            });
        }
        let head_up = 1usize << self.n_atoms;
        let mask = head_up | (1 << site);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask == mask {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Rotating-frame detuning phases: `e^{iΔωT}` per raised clock bit and
    /// `e^{iΔω′T}` on head ↑.
    pub fn apply_free_evolution(&mut self, delta_omega: f64, delta_omega_head: f64, duration: f64) -> Result<()> {
        crate::error::require_non_negative("free evolution time", duration)?;
        let n = self.n_atoms;
        let clock_phase: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::from_polar(1.0, delta_omega * duration * k as f64))
            .collect();
        let head_phase = Complex64::from_polar(1.0, delta_omega_head * duration);
        let clock_mask = (1usize << n) - 1;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            let k = (i & clock_mask).count_ones() as usize;
            *a *= clock_phase[k];
            if i >> n & 1 == 1 {
                *a *= head_phase;
            }
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn head_probabilities(&self) -> (f64, f64) {
        let half = 1usize << self.n_atoms;
        let down = self.amplitudes[..half].iter().map(|a| a.norm_sqr()).sum();
        let up = self.amplitudes[half..].iter().map(|a| a.norm_sqr()).sum();
        (down, up)
    }

    pub fn inner(&self, other: &DenseState) -> Result<Complex64> {
        if self.n_atoms != other.n_atoms {
            return Err(Error::IncompatibleStates);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}
