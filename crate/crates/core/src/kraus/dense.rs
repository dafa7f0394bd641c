//! Operations on dense `2^N x 2^N` matrices over heap positions, position `p`
//! being bit `p` of the basis index. Target lists are most significant first.

use super::set::CMatrix;
use crate::qcore::UnitaryMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn qbits_of(m: &CMatrix) -> usize {
    m.nrows().trailing_zeros() as usize
}

pub fn pattern(i: usize, bits: &[usize]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | ((i >> b) & 1) as u64)
}

fn mask(bits: &[usize]) -> usize {
    bits.iter().map(|b| 1usize << b).sum()
}

fn place(i: usize, bits: &[usize], value: u64) -> usize {
    let k = bits.len();
    let mut out = i & !mask(bits);
    for (t, &b) in bits.iter().enumerate() {
        if (value >> (k - 1 - t)) & 1 == 1 {
            out |= 1 << b;
        }
    }
    out
}

/// `|0…0><0…0|` on `n` qbits.
pub fn ground(n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    m[(0, 0)] = Complex64::new(1.0, 0.0);
    m
}

/// `U M`, with `U` acting on `bits` of the row index.
pub fn left_apply(m: &CMatrix, u: &UnitaryMatrix, bits: &[usize]) -> CMatrix {
    let d = m.nrows();
    let mk = mask(bits);
    let k = u.dim();
    let offs: Vec<usize> = (0..k as u64).map(|v| place(0, bits, v)).collect();
    let mut out = m.clone();
    let mut buf = vec![ZERO; k];
    for col in 0..m.ncols() {
        for base in (0..d).filter(|i| i & mk == 0) {
            for (a, off) in offs.iter().enumerate() {
                buf[a] = m[(base + off, col)];
            }
            for (r, off) in offs.iter().enumerate() {
                let mut s = ZERO;
                for (c, b) in buf.iter().enumerate() {
                    s += u.get(r, c) * b;
                }
                out[(base + off, col)] = s;
            }
        }
    }
    out
}

/// `U ρ U†`.
pub fn conjugate(rho: &CMatrix, u: &UnitaryMatrix, bits: &[usize]) -> CMatrix {
    let m = left_apply(rho, u, bits);
    left_apply(&m.adjoint(), u, bits).adjoint()
}

/// Keeps the block where `bits` read `value` on both sides.
pub fn project(rho: &CMatrix, bits: &[usize], value: u64) -> CMatrix {
    let mut out = rho.clone();
    for c in 0..rho.ncols() {
        let keep_c = pattern(c, bits) == value;
        for r in 0..rho.nrows() {
            if !keep_c || pattern(r, bits) != value {
                out[(r, c)] = ZERO;
            }
        }
    }
    out
}

/// Removes coherences between different patterns on `bits`.
pub fn dephase(rho: &CMatrix, bits: &[usize]) -> CMatrix {
    let mut out = rho.clone();
    for c in 0..rho.ncols() {
        for r in 0..rho.nrows() {
            if pattern(r, bits) != pattern(c, bits) {
                out[(r, c)] = ZERO;
            }
        }
    }
    out
}

/// Traces out `bits` and re-prepares them in basis state `init`.
pub fn reset(rho: &CMatrix, bits: &[usize], init: u64) -> CMatrix {
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for c in 0..rho.ncols() {
        for r in 0..rho.nrows() {
            if pattern(r, bits) == pattern(c, bits) {
                out[(place(r, bits, init), place(c, bits, init))] += rho[(r, c)];
            }
        }
    }
    out
}

/// Diagonal of the reduced matrix on `bits`, indexed by pattern.
pub fn marginal(rho: &CMatrix, bits: &[usize]) -> Vec<Complex64> {
    let mut out = vec![ZERO; 1 << bits.len()];
    for i in 0..rho.nrows() {
        out[pattern(i, bits) as usize] += rho[(i, i)];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{builtin_gate, Builtin, QuantumState};
    use crate::kraus::set::max_abs_diff;

    fn outer(v: &[Complex64]) -> CMatrix {
        let u = nalgebra::DVector::from_column_slice(v);
        &u * u.adjoint()
    }

    #[test]
    fn matches_state_vector_simulator() {
        let mut q = QuantumState::new(8, 8);
        let ix = q.alloc(3, 0b010).unwrap();
        let h = builtin_gate(Builtin::H).unwrap();
        let cn = builtin_gate(Builtin::CNot).unwrap();
        let ph = builtin_gate(Builtin::Phase(0.7)).unwrap();
        let mut rho = reset(&ground(3), &[0, 1, 2], 0b010);
        for (u, t) in [(&h, vec![ix[0]]), (&cn, vec![ix[0], ix[2]]), (&ph, vec![ix[2]]), (&h, vec![ix[1]])] {
            q.apply(u, &t).unwrap();
            let bits: Vec<usize> = t.iter().map(|i| q.slot(*i).unwrap()).collect();
            rho = conjugate(&rho, u, &bits);
        }
        let psi = outer(q.amplitudes());
        assert!(max_abs_diff(&rho, &psi) < 1e-12);
        let probs = q.probabilities(&[ix[0], ix[2]]).unwrap();
        let slots = [q.slot(ix[0]).unwrap(), q.slot(ix[2]).unwrap()];
        let m = marginal(&rho, &slots);
        for (p, z) in probs.iter().zip(m) {
            assert!((p - z.re).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_and_reset() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = outer(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
        let p1 = project(&plus, &[0], 1);
        assert!((p1[(1, 1)].re - 0.5).abs() < 1e-15 && p1[(0, 0)].norm() == 0.0);
        let r = reset(&plus, &[0], 1);
        assert!((r[(1, 1)].re - 1.0).abs() < 1e-15 && r[(0, 1)].norm() == 0.0);
        let d = dephase(&plus, &[0]);
        assert_eq!(d[(0, 1)], ZERO);
    }
}
