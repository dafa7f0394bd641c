#![allow(dead_code)]

pub mod gen;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub type Mat = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn load(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_unitary(rng: &mut impl Rng, d: usize) -> Mat {
    random_matrix(rng, d, d).qr().q()
}

pub fn random_density(rng: &mut impl Rng, d: usize) -> Mat {
    let a = random_matrix(rng, d, d);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn row_major(m: &Mat) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Density-matrix simulator built from full `2^n x 2^n` operators. The
/// first allocated qbit is the most significant bit of the basis index.
/// `order[k]` is the simulator heap index of oracle qbit `k`.
pub struct Oracle {
    pub rho: Mat,
    pub order: Vec<usize>,
}

impl Oracle {
    pub fn new() -> Self {
        Oracle {
            rho: Mat::from_element(1, 1, Complex64::new(1.0, 0.0)),
            order: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    fn qbit(&self, heap: usize) -> usize {
        self.order.iter().position(|&h| h == heap).expect("qbit is tracked")
    }

    fn bit(&self, x: usize, k: usize) -> usize {
        (x >> (self.n() - 1 - k)) & 1
    }

    fn sub(&self, x: usize, ks: &[usize]) -> usize {
        ks.iter().fold(0, |acc, &k| (acc << 1) | self.bit(x, k))
    }

    pub fn alloc(&mut self, heap: usize, one: bool) {
        let mut ket = Mat::zeros(2, 2);
        let b = one as usize;
        ket[(b, b)] = Complex64::new(1.0, 0.0);
        self.rho = self.rho.kronecker(&ket);
        self.order.push(heap);
    }

    /// Full operator acting as `u` on the given heap indices.
    pub fn embed(&self, u: &Mat, heap: &[usize]) -> Mat {
        let ks: Vec<usize> = heap.iter().map(|&h| self.qbit(h)).collect();
        let d = 1 << self.n();
        let rest = |x: usize| (0..self.n()).filter(|k| !ks.contains(k)).map(|k| self.bit(x, k)).collect::<Vec<_>>();
        Mat::from_fn(d, d, |r, c| {
            if rest(r) == rest(c) {
                u[(self.sub(r, &ks), self.sub(c, &ks))]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn apply(&mut self, u: &Mat, heap: &[usize]) {
        let f = self.embed(u, heap);
        self.rho = &f * &self.rho * f.adjoint();
    }

    pub fn probabilities(&self, heap: &[usize]) -> Vec<f64> {
        let ks: Vec<usize> = heap.iter().map(|&h| self.qbit(h)).collect();
        let mut p = vec![0.0; 1 << ks.len()];
        for i in 0..self.rho.nrows() {
            p[self.sub(i, &ks)] += self.rho[(i, i)].re;
        }
        p
    }

    /// Projects onto `outcome` and renormalises; returns its probability.
    pub fn project(&mut self, heap: &[usize], outcome: usize) -> f64 {
        let ks: Vec<usize> = heap.iter().map(|&h| self.qbit(h)).collect();
        let d = self.rho.nrows();
        let proj = Mat::from_fn(d, d, |r, c| {
            if r == c && self.sub(r, &ks) == outcome {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let m = &proj * &self.rho * &proj;
        let p = m.trace().re;
        self.rho = m / Complex64::new(p, 0.0);
        p
    }

    /// Traces out one qbit.
    pub fn remove(&mut self, heap: usize) {
        let k = self.qbit(heap);
        let n = self.n();
        let d = 1 << (n - 1);
        let widen = |x: usize, b: usize| {
            let low = x & ((1 << (n - 1 - k)) - 1);
            let high = x >> (n - 1 - k);
            (high << (n - k)) | (b << (n - 1 - k)) | low
        };
        let old = self.rho.clone();
        self.rho = Mat::from_fn(d, d, |r, c| old[(widen(r, 0), widen(c, 0))] + old[(widen(r, 1), widen(c, 1))]);
        self.order.remove(k);
    }
}

/// Parses a dump spectrum such as `0.25 |00>, 0.75 |11>` into dense
/// probabilities.
pub fn parse_spectrum(s: &str, width: usize) -> Vec<f64> {
    let mut p = vec![0.0; 1 << width];
    for entry in s.split(", ") {
        let (prob, ket) = entry.split_once(' ').expect("probability and ket");
        let bits = ket.trim_start_matches('|').trim_end_matches('>');
        p[usize::from_str_radix(bits, 2).unwrap()] = prob.parse().unwrap();
    }
    p
}
