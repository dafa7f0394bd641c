use super::{QError, UnitaryMatrix, SPECTRUM_CUTOFF};
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeSet;

pub const DEFAULT_HEAP: usize = 200;
pub const DEFAULT_SIM_CAP: usize = 24;

/// Amplitude vector over the currently allocated heap qbits.
///
/// Slot `s` is bit `s` of an amplitude index. Heap indices are stable labels;
/// slots are compacted on release.
#[derive(Debug, Clone)]
pub struct QuantumState {
    amps: Vec<Complex64>,
    slot_of: Vec<Option<usize>>,
    heap_of: Vec<usize>,
    free: BTreeSet<usize>,
    sim_cap: usize,
}

impl Default for QuantumState {
    fn default() -> Self {
        Self::new(DEFAULT_HEAP, DEFAULT_SIM_CAP)
    }
}

impl QuantumState {
    pub fn new(heap_capacity: usize, sim_cap: usize) -> Self {
        QuantumState {
            amps: vec![Complex64::new(1.0, 0.0)],
            slot_of: vec![None; heap_capacity],
            heap_of: Vec::new(),
            free: (0..heap_capacity).collect(),
            sim_cap,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slot_of.len()
    }

    /// Number of live qbits.
    pub fn allocated(&self) -> usize {
        self.heap_of.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn is_allocated(&self, index: usize) -> bool {
        self.slot_of.get(index).copied().flatten().is_some()
    }

    /// Heap indices in slot order (slot 0 first).
    pub fn live_indices(&self) -> &[usize] {
        &self.heap_of
    }

    pub fn slot(&self, index: usize) -> Result<usize, QError> {
        self.slot_of
            .get(index)
            .copied()
            .flatten()
            .ok_or(QError::NotAllocated(index))
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Allocates `n` qbits in basis state `init`, whose most significant of
    /// `n` bits goes to the first returned index.
    pub fn alloc(&mut self, n: usize, init: u64) -> Result<Vec<usize>, QError> {
        let in_use = self.allocated();
        if in_use + n > self.capacity() {
            return Err(QError::HeapExhausted {
                requested: n,
                in_use,
                capacity: self.capacity(),
            });
        }
        if in_use + n > self.sim_cap {
            return Err(QError::SimCap {
                requested: in_use + n,
                cap: self.sim_cap,
            });
        }
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let bit = (init >> (n - 1 - k)) & 1 == 1;
            let index = *self.free.iter().next().expect("capacity checked above");
            self.free.remove(&index);
            let slot = self.heap_of.len();
            self.heap_of.push(index);
            self.slot_of[index] = Some(slot);
            let old = std::mem::take(&mut self.amps);
            let zero = Complex64::new(0.0, 0.0);
            let mut amps = vec![zero; old.len() * 2];
            let offset = if bit { old.len() } else { 0 };
            amps[offset..offset + old.len()].copy_from_slice(&old);
            self.amps = amps;
            out.push(index);
        }
        Ok(out)
    }

    fn target_slots(&self, targets: &[usize]) -> Result<Vec<usize>, QError> {
        let mut seen = BTreeSet::new();
        let mut slots = Vec::with_capacity(targets.len());
        for &t in targets {
            if !seen.insert(t) {
                return Err(QError::DuplicateTarget(t));
            }
            slots.push(self.slot(t)?);
        }
        Ok(slots)
    }

    /// Offsets (as amplitude-index deltas) of each local basis pattern, with
    /// the first slot as the most significant local bit.
    fn offsets(slots: &[usize]) -> Vec<usize> {
        let k = slots.len();
        (0..1usize << k)
            .map(|j| {
                (0..k)
                    .filter(|t| (j >> (k - 1 - t)) & 1 == 1)
                    .map(|t| 1usize << slots[t])
                    .sum()
            })
            .collect()
    }

    pub fn apply(&mut self, u: &UnitaryMatrix, targets: &[usize]) -> Result<(), QError> {
        if u.qbits() != targets.len() {
            return Err(QError::DimMismatch {
                expected: u.qbits(),
                found: targets.len(),
            });
        }
        let slots = self.target_slots(targets)?;
        let offsets = Self::offsets(&slots);
        let mask: usize = slots.iter().map(|s| 1usize << s).sum();
        let d = offsets.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut local = vec![zero; d];
        let m = u.entries();
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (j, off) in offsets.iter().enumerate() {
                local[j] = self.amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &m[r * d..(r + 1) * d];
                let mut acc = zero;
                for (a, x) in row.iter().zip(&local) {
                    acc += a * x;
                }
                self.amps[base + off] = acc;
            }
        }
        Ok(())
    }

    /// Pattern of the given slots encoded in amplitude index `i`, first slot
    /// most significant.
    fn pattern(i: usize, slots: &[usize]) -> u64 {
        slots
            .iter()
            .fold(0u64, |acc, &s| (acc << 1) | ((i >> s) & 1) as u64)
    }

    /// Marginal probability of every pattern on `targets`, dense.
    pub fn probabilities(&self, targets: &[usize]) -> Result<Vec<f64>, QError> {
        let slots = self.target_slots(targets)?;
        let mut probs = vec![0.0; 1usize << slots.len()];
        for (i, a) in self.amps.iter().enumerate() {
            probs[Self::pattern(i, &slots) as usize] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Non-destructive marginal spectrum in pattern order, omitting
    /// negligible entries.
    pub fn spectrum(&self, targets: &[usize]) -> Result<Vec<(u64, f64)>, QError> {
        Ok(self
            .probabilities(targets)?
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p >= SPECTRUM_CUTOFF)
            .map(|(v, p)| (v as u64, p))
            .collect())
    }

    /// Measures `targets` using a uniform sample `r` in [0,1) to pick the
    /// outcome. The state is projected and renormalized.
    pub fn measure_with(&mut self, targets: &[usize], r: f64) -> Result<u64, QError> {
        let probs = self.probabilities(targets)?;
        let mut acc = 0.0;
        let mut outcome = None;
        for (v, p) in probs.iter().enumerate() {
            if *p < SPECTRUM_CUTOFF {
                continue;
            }
            acc += p;
            outcome = Some(v);
            if r < acc {
                break;
            }
        }
        let outcome = outcome.unwrap_or(0) as u64;
        self.project(targets, outcome)?;
        Ok(outcome)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, targets: &[usize], rng: &mut R) -> Result<u64, QError> {
        let r: f64 = rng.random();
        self.measure_with(targets, r)
    }

    /// Projects onto `outcome` on `targets` and renormalizes. Returns the
    /// probability of the outcome before projection.
    pub fn project(&mut self, targets: &[usize], outcome: u64) -> Result<f64, QError> {
        let slots = self.target_slots(targets)?;
        let zero = Complex64::new(0.0, 0.0);
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if Self::pattern(i, &slots) == outcome {
                p += a.norm_sqr();
            } else {
                *a = zero;
            }
        }
        if p > 0.0 {
            let scale = 1.0 / p.sqrt();
            for a in &mut self.amps {
                *a *= scale;
            }
        }
        Ok(p)
    }

    /// Measures and removes the given qbits, returning their heap indices to
    /// the free list.
    pub fn release<R: Rng + ?Sized>(&mut self, indices: &[usize], rng: &mut R) -> Result<(), QError> {
        for &index in indices {
            let bit = self.measure(&[index], rng)?;
            self.remove(index, bit)?;
        }
        Ok(())
    }

    /// Removes a qbit already known to be in basis state `bit`.
    fn remove(&mut self, index: usize, bit: u64) -> Result<(), QError> {
        let slot = self.slot(index)?;
        let low = (1usize << slot) - 1;
        let half = self.amps.len() / 2;
        let mut amps = Vec::with_capacity(half);
        for i in 0..half {
            let full = ((i & !low) << 1) | ((bit as usize) << slot) | (i & low);
            amps.push(self.amps[full]);
        }
        self.amps = amps;
        self.heap_of.remove(slot);
        self.slot_of[index] = None;
        for (s, &h) in self.heap_of.iter().enumerate().skip(slot) {
            self.slot_of[h] = Some(s);
        }
        self.free.insert(index);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{builtin_gate, Builtin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gate(b: Builtin) -> UnitaryMatrix {
        builtin_gate(b).unwrap()
    }

    #[test]
    fn alloc_patterns() {
        let mut s = QuantumState::default();
        let q = s.alloc(1, 0).unwrap();
        assert_eq!(s.spectrum(&q).unwrap(), vec![(0, 1.0)]);
        let mut s = QuantumState::default();
        let q = s.alloc(2, 0b01).unwrap();
        assert_eq!(s.spectrum(&q).unwrap(), vec![(0b01, 1.0)]);
        assert_eq!(s.spectrum(&[q[0]]).unwrap(), vec![(0, 1.0)]);
        assert_eq!(s.spectrum(&[q[1]]).unwrap(), vec![(1, 1.0)]);
    }

    #[test]
    fn heap_budget_and_sim_cap() {
        let mut s = QuantumState::new(3, 24);
        s.alloc(2, 0).unwrap();
        assert_eq!(s.alloc(2, 0).unwrap_err().code(), "E_HEAP_EXHAUSTED");
        let mut s = QuantumState::new(200, 4);
        s.alloc(4, 0).unwrap();
        assert_eq!(s.alloc(1, 0).unwrap_err().code(), "E_SIM_CAP");
    }

    #[test]
    fn hadamard_and_cnot() {
        let mut s = QuantumState::default();
        let q = s.alloc(1, 0).unwrap();
        s.apply(&gate(Builtin::H), &q).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - h).abs() < 1e-15);

        let mut s = QuantumState::default();
        let q = s.alloc(2, 0b10).unwrap();
        s.apply(&gate(Builtin::CNot), &q).unwrap();
        assert_eq!(s.spectrum(&q).unwrap(), vec![(0b11, 1.0)]);
        let mut s = QuantumState::default();
        let q = s.alloc(2, 0b10).unwrap();
        s.apply(&gate(Builtin::CNot), &[q[1], q[0]]).unwrap();
        assert_eq!(s.spectrum(&q).unwrap(), vec![(0b10, 1.0)]);
    }

    #[test]
    fn ft_spectrum() {
        let mut s = QuantumState::default();
        let q = s.alloc(2, 0).unwrap();
        s.apply(&gate(Builtin::FT(2)), &q).unwrap();
        let spec = s.spectrum(&q).unwrap();
        assert_eq!(spec.len(), 4);
        for (i, (v, p)) in spec.iter().enumerate() {
            assert_eq!(*v, i as u64);
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn epr_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut s = QuantumState::default();
            let q = s.alloc(2, 0).unwrap();
            s.apply(&gate(Builtin::H), &[q[0]]).unwrap();
            s.apply(&gate(Builtin::CNot), &q).unwrap();
            let a = s.measure(&[q[0]], &mut rng).unwrap();
            let b = s.measure(&[q[1]], &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn measurement_keeps_qbits() {
        let mut s = QuantumState::default();
        let q = s.alloc(1, 1).unwrap();
        assert_eq!(s.measure_with(&q, 0.3).unwrap(), 1);
        assert_eq!(s.allocated(), 1);
    }

    #[test]
    fn release_shrinks_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = QuantumState::default();
        let q = s.alloc(3, 0b101).unwrap();
        s.release(&[q[1]], &mut rng).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        assert_eq!(s.spectrum(&[q[0], q[2]]).unwrap(), vec![(0b11, 1.0)]);
        s.release(&[q[0], q[2]], &mut rng).unwrap();
        assert_eq!(s.amplitudes(), &[Complex64::new(1.0, 0.0)]);
        assert_eq!(s.alloc(1, 0).unwrap(), vec![0]);
    }

    #[test]
    fn release_half_of_epr_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut s = QuantumState::default();
            let q = s.alloc(2, 0).unwrap();
            s.apply(&gate(Builtin::H), &[q[0]]).unwrap();
            s.apply(&gate(Builtin::CNot), &q).unwrap();
            s.release(&[q[0]], &mut rng).unwrap();
            let spec = s.spectrum(&[q[1]]).unwrap();
            assert_eq!(spec.len(), 1);
            assert!((spec[0].1 - 1.0).abs() < 1e-12);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_probability_outcome_never_chosen() {
        let mut s = QuantumState::default();
        let q = s.alloc(1, 0).unwrap();
        assert_eq!(s.measure_with(&q, 0.999_999).unwrap(), 0);
    }
}
