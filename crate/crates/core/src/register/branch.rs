use num_complex::Complex64;

use super::{check_unitary, mat_vec, Matrix2};
use crate::error::{Error, Result};

/// Branches with a smaller amplitude magnitude are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

pub const DEFAULT_RANK_BOUND: usize = 4096;

/// Largest register expanded into a dense vector.
const MAX_EXPANSION: usize = 24;

/// Perpendicular-component tolerance for treating two unit factors as
/// colinear.
const COLINEAR_TOLERANCE: f64 = 1e-13;

/// Head component magnitude below which a head factor counts as a basis state.
const ALIGN_TOLERANCE: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) type Factor = [Complex64; 2];

fn factor_norm(f: &Factor) -> f64 {
    (f[0].norm_sqr() + f[1].norm_sqr()).sqrt()
}

#[inline]
fn dot(a: &Factor, b: &Factor) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// `|a₀b₁ − a₁b₀|`, the component of unit `b` orthogonal to unit `a`.
#[inline]
fn perpendicular(a: &Factor, b: &Factor) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).norm()
}

/// One product-state term: `amplitude · (⊗_j clock_j) ⊗ head`, unit factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub amplitude: Complex64,
    pub clock_factors: Vec<Factor>,
    pub head_factor: Factor,
}

impl Branch {
    /// Normalizes every factor, moving scale and phase-free norms into the
    /// amplitude.
    pub fn normalized(amplitude: Complex64, clock_factors: Vec<Factor>, head_factor: Factor) -> Self {
        let mut b = Branch {
            amplitude,
            clock_factors,
            head_factor,
        };
        for f in b.clock_factors.iter_mut().chain(std::iter::once(&mut b.head_factor)) {
            let n = factor_norm(f);
            if n > 0.0 {
                f[0] /= n;
                f[1] /= n;
            }
            b.amplitude *= n;
        }
        b
    }

    fn clock_overlap(&self, other: &Branch) -> Complex64 {
        self.clock_factors
            .iter()
            .zip(&other.clock_factors)
            .map(|(a, b)| dot(a, b))
            .product()
    }
}

/// Sum of product states over the clock register and the head.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProductState {
    n_atoms: usize,
    branches: Vec<Branch>,
    rank_bound: usize,
}

/// Position of the single differing factor between two branches.
#[derive(Clone, Copy)]
enum Slot {
    Head,
    Clock(usize),
}

impl BranchProductState {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if n_atoms < 1 {
            return Err(Error::InvalidAtomCount(n_atoms));
        }
        Self::product(vec![[ONE, ZERO]; n_atoms], [ONE, ZERO])
    }

    /// A single product state.
    pub fn product(clock_factors: Vec<Factor>, head_factor: Factor) -> Result<Self> {
        Self::from_branches(vec![Branch::normalized(ONE, clock_factors, head_factor)])
    }

    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        let n_atoms = branches.first().map(|b| b.clock_factors.len()).unwrap_or(0);
        if n_atoms < 1 {
            return Err(Error::InvalidAtomCount(n_atoms));
        }
        if branches.iter().any(|b| b.clock_factors.len() != n_atoms) {
            return Err(Error::IncompatibleStates);
        }
        let branches = branches
            .into_iter()
            .map(|b| Branch::normalized(b.amplitude, b.clock_factors, b.head_factor))
            .collect();
        let mut state = Self {
            n_atoms,
            branches,
            rank_bound: DEFAULT_RANK_BOUND,
        };
        state.compact();
        Ok(state)
    }

    pub fn with_rank_bound(mut self, rank_bound: usize) -> Self {
        self.rank_bound = rank_bound.max(1);
        self
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn rank(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn apply_clock_rotation(&mut self, matrix: &Matrix2) -> Result<()> {
        check_unitary(matrix)?;
        for b in &mut self.branches {
            let mut scale = 1.0;
            for f in &mut b.clock_factors {
                *f = mat_vec(matrix, *f);
                let n = factor_norm(f);
                f[0] /= n;
                f[1] /= n;
                scale *= n;
            }
            b.amplitude *= scale;
        }
        self.compact();
        Ok(())
    }

    pub fn apply_head_rotation(&mut self, matrix: &Matrix2) -> Result<()> {
        check_unitary(matrix)?;
        for b in &mut self.branches {
            b.head_factor = mat_vec(matrix, b.head_factor);
            let n = factor_norm(&b.head_factor);
            b.head_factor[0] /= n;
            b.head_factor[1] /= n;
            b.amplitude *= n;
        }
        self.compact();
        Ok(())
    }

    /// Splits every branch into head-↓ and head-↑ parts, then applies Z to the
    /// site factor of the ↑ parts.
    pub fn apply_phase_gate(&mut self, site: usize) -> Result<()> {
        if site >= self.n_atoms {
            return Err(Error::SiteOutOfRange {
                site,
                n_atoms: self.n_atoms,
            });
        }
        let before = self.branches.len();
        let mut next = Vec::with_capacity(before + 1);
        for b in self.branches.drain(..) {
            let [down, up] = b.head_factor;
            let has_down = down.norm() > ALIGN_TOLERANCE;
            let has_up = up.norm() > ALIGN_TOLERANCE;
            if has_down && has_up {
                next.push(Branch {
                    amplitude: b.amplitude * down,
                    clock_factors: b.clock_factors.clone(),
                    head_factor: [ONE, ZERO],
                });
            }
            if has_up {
                let mut clock_factors = b.clock_factors;
                clock_factors[site][1] = -clock_factors[site][1];
                let (amplitude, head_factor) = if has_down {
                    (b.amplitude * up, [ZERO, ONE])
                } else {
                    (b.amplitude, b.head_factor)
                };
                next.push(Branch {
                    amplitude,
                    clock_factors,
                    head_factor,
                });
            } else {
                next.push(b);
            }
        }
        self.branches = next;
        // Without a split the rank cannot grow; deferring compaction to the
        // next rotation keeps a full entangling pass linear in N.
        if self.branches.len() > before {
            self.compact();
        }
        if self.branches.len() > self.rank_bound {
            return Err(Error::RankExceeded {
                bound: self.rank_bound,
            });
        }
        Ok(())
    }

    pub fn apply_free_evolution(&mut self, delta_omega: f64, delta_omega_head: f64, duration: f64) -> Result<()> {
        crate::error::require_non_negative("free evolution time", duration)?;
        let clock_phase = Complex64::from_polar(1.0, delta_omega * duration);
        let head_phase = Complex64::from_polar(1.0, delta_omega_head * duration);
        for b in &mut self.branches {
            for f in &mut b.clock_factors {
                f[1] *= clock_phase;
            }
            b.head_factor[1] *= head_phase;
        }
        Ok(())
    }

    /// `⟨self|other⟩`, O(rank² · N).
    pub fn overlap(&self, other: &BranchProductState) -> Complex64 {
        let mut total = ZERO;
        for a in &self.branches {
            for b in &other.branches {
                total += a.amplitude.conj() * b.amplitude * a.clock_overlap(b) * dot(&a.head_factor, &b.head_factor);
            }
        }
        total
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap(self).re
    }

    pub fn head_probabilities(&self) -> (f64, f64) {
        let mut down = ZERO;
        let mut up = ZERO;
        for (i, a) in self.branches.iter().enumerate() {
            for b in &self.branches[i..] {
                let weight = a.amplitude.conj() * b.amplitude * a.clock_overlap(b);
                let d = weight * a.head_factor[0].conj() * b.head_factor[0];
                let u = weight * a.head_factor[1].conj() * b.head_factor[1];
                if std::ptr::eq(a, b) {
                    down += d;
                    up += u;
                } else {
                    down += 2.0 * d.re;
                    up += 2.0 * u.re;
                }
            }
        }
        (down.re, up.re)
    }

    pub fn to_dense_amplitudes(&self) -> Result<Vec<Complex64>> {
        let n = self.n_atoms;
        if n > MAX_EXPANSION {
            return Err(Error::Capacity {
                n_atoms: n,
                cap: MAX_EXPANSION,
            });
        }
        let mut out = vec![ZERO; 1 << (n + 1)];
        for b in &self.branches {
            // Build the clock tensor product incrementally: bit j of the index is site j.
            let mut clock = vec![b.amplitude];
            for f in &b.clock_factors {
                let mut next = Vec::with_capacity(clock.len() * 2);
                next.extend(clock.iter().map(|c| c * f[0]));
                next.extend(clock.iter().map(|c| c * f[1]));
                clock = next;
            }
            let half = 1usize << n;
            for (p, c) in clock.iter().enumerate() {
                out[p] += c * b.head_factor[0];
                out[p + half] += c * b.head_factor[1];
            }
        }
        Ok(out)
    }

    /// Drops negligible branches and merges pairs that differ in at most one
    /// factor; the merged factor is the exact sum of the two.
    fn compact(&mut self) {
        self.branches.retain(|b| b.amplitude.norm() >= PRUNE_THRESHOLD);
        let mut i = 0;
        while i < self.branches.len() {
            let mut j = i + 1;
            let mut merged = false;
            while j < self.branches.len() {
                if let Some(slot) = differing_slot(&self.branches[i], &self.branches[j]) {
                    let b = self.branches.swap_remove(j);
                    let keep = merge_into(&mut self.branches[i], &b, slot);
                    if !keep {
                        self.branches.swap_remove(i);
                    }
                    merged = true;
                    break;
                }
                j += 1;
            }
            if !merged {
                i += 1;
            } else {
                // Restart the scan from the beginning; a merge can enable another.
                i = 0;
            }
        }
    }
}

/// The only factor in which `a` and `b` are not colinear; `Head` when all
/// factors are colinear. `None` when two or more factors differ.
fn differing_slot(a: &Branch, b: &Branch) -> Option<Slot> {
    let mut slot = None;
    if perpendicular(&a.head_factor, &b.head_factor) > COLINEAR_TOLERANCE {
        slot = Some(Slot::Head);
    }
    for (k, (fa, fb)) in a.clock_factors.iter().zip(&b.clock_factors).enumerate() {
        if perpendicular(fa, fb) > COLINEAR_TOLERANCE {
            if slot.is_some() {
                return None;
            }
            slot = Some(Slot::Clock(k));
        }
    }
    Some(slot.unwrap_or(Slot::Head))
}

fn unit_phase(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n > 0.0 {
        z / n
    } else {
        ONE
    }
}

/// Folds `b` into `a`. Returns false when the sum vanishes.
fn merge_into(a: &mut Branch, b: &Branch, slot: Slot) -> bool {
    let mut phase = ONE;
    for (k, (fa, fb)) in a.clock_factors.iter().zip(&b.clock_factors).enumerate() {
        if !matches!(slot, Slot::Clock(s) if s == k) {
            phase *= unit_phase(dot(fa, fb));
        }
    }
    if !matches!(slot, Slot::Head) {
        phase *= unit_phase(dot(&a.head_factor, &b.head_factor));
    }
    let b_amp = b.amplitude * phase;
    let (fa, fb) = match slot {
        Slot::Head => (&mut a.head_factor, &b.head_factor),
        Slot::Clock(k) => (&mut a.clock_factors[k], &b.clock_factors[k]),
    };
    let w = [
        a.amplitude * fa[0] + b_amp * fb[0],
        a.amplitude * fa[1] + b_amp * fb[1],
    ];
    let n = factor_norm(&w);
    if n < PRUNE_THRESHOLD {
        return false;
    }
    *fa = [w[0] / n, w[1] / n];
    a.amplitude = Complex64::new(n, 0.0);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::{hadamard, identity, DenseState};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn initial_state_is_rank_one_all_zero() {
        let s = BranchProductState::new(3).unwrap();
        assert_eq!(s.rank(), 1);
        let d = s.to_dense_amplitudes().unwrap();
        assert_eq!(d[0], ONE);
        assert!(d[1..].iter().all(|a| *a == ZERO));
        assert!(BranchProductState::new(0).is_err());
    }

    #[test]
    fn expansion_uses_little_endian_sites() {
        // Site 0 raised, site 1 lowered, head ↑ → index 1 + 4.
        let s = BranchProductState::product(vec![[ZERO, ONE], [ONE, ZERO]], [ZERO, ONE]).unwrap();
        let d = s.to_dense_amplitudes().unwrap();
        assert_eq!(d[5], ONE);
    }

    #[test]
    fn head_hadamard_matches_expected_superposition() {
        let mut s = BranchProductState::new(2).unwrap();
        s.apply_head_rotation(&hadamard()).unwrap();
        let d = s.to_dense_amplitudes().unwrap();
        assert!((d[0] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((d[4] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn identity_rotation_is_a_no_op() {
        let mut s = BranchProductState::new(4).unwrap();
        s.apply_clock_rotation(&hadamard()).unwrap();
        let before = s.to_dense_amplitudes().unwrap();
        s.apply_clock_rotation(&identity()).unwrap();
        s.apply_head_rotation(&identity()).unwrap();
        assert!(max_dev(&before, &s.to_dense_amplitudes().unwrap()) < 1e-15);
    }

    #[test]
    fn phase_gate_splits_superposed_head_once() {
        let mut s = BranchProductState::new(5).unwrap();
        s.apply_clock_rotation(&hadamard()).unwrap();
        s.apply_head_rotation(&hadamard()).unwrap();
        for site in 0..5 {
            s.apply_phase_gate(site).unwrap();
            assert_eq!(s.rank(), 2);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_gate_matches_dense() {
        let mut b = BranchProductState::new(3).unwrap();
        let mut d = DenseState::new(3).unwrap();
        b.apply_clock_rotation(&hadamard()).unwrap();
        d.apply_clock_rotation(&hadamard()).unwrap();
        b.apply_head_rotation(&hadamard()).unwrap();
        d.apply_head_rotation(&hadamard()).unwrap();
        for site in [1, 0, 2, 1] {
            b.apply_phase_gate(site).unwrap();
            d.apply_phase_gate(site).unwrap();
        }
        assert!(max_dev(&b.to_dense_amplitudes().unwrap(), d.amplitudes()) < 1e-14);
        assert!(matches!(b.apply_phase_gate(3), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn cancelling_branches_are_pruned() {
        let plus = Branch::normalized(ONE, vec![[ONE, ZERO]], [ONE, ZERO]);
        let minus = Branch::normalized(-ONE, vec![[ONE, ZERO]], [ONE, ZERO]);
        let other = Branch::normalized(ONE, vec![[ZERO, ONE]], [ZERO, ONE]);
        let s = BranchProductState::from_branches(vec![plus, minus, other]).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merge_of_single_differing_factor_is_exact() {
        let a = Branch::normalized(Complex64::new(0.3, 0.1), vec![[ONE, ZERO], [ONE, ONE]], [ONE, ZERO]);
        let b = Branch::normalized(Complex64::new(-0.2, 0.4), vec![[ONE, ZERO], [ONE, ONE]], [ZERO, ONE]);
        let raw = BranchProductState {
            n_atoms: 2,
            branches: vec![a.clone(), b.clone()],
            rank_bound: DEFAULT_RANK_BOUND,
        };
        let merged = BranchProductState::from_branches(vec![a, b]).unwrap();
        assert_eq!(merged.rank(), 1);
        assert!(max_dev(&raw.to_dense_amplitudes().unwrap(), &merged.to_dense_amplitudes().unwrap()) < 1e-15);
    }

    #[test]
    fn rank_bound_enforced() {
        let mut s = BranchProductState::new(2).unwrap().with_rank_bound(1);
        s.apply_head_rotation(&hadamard()).unwrap();
        s.apply_clock_rotation(&hadamard()).unwrap();
        assert!(matches!(s.apply_phase_gate(0), Err(Error::RankExceeded { bound: 1 })));
    }
}
