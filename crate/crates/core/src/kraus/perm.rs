use super::set::{max_abs_diff, CMatrix};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a permutation of 1..={n}: {detail}")]
pub struct PermutationError {
    pub n: usize,
    pub detail: String,
}

/// A permutation of `1..=n`, stored as the sequence `φ(1) … φ(n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self, PermutationError> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &v in &images {
            if v == 0 || v > n || seen[v] {
                return Err(PermutationError {
                    n,
                    detail: format!("{images:?}"),
                });
            }
            seen[v] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((1..=n).collect())
    }

    /// Parses a digit string such as `52314`.
    pub fn parse(s: &str) -> Result<Self, PermutationError> {
        let images: Option<Vec<usize>> = s.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect();
        match images {
            Some(v) => Self::new(v),
            None => Err(PermutationError {
                n: s.chars().count(),
                detail: s.to_string(),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `φ(i)`, 1-based.
    pub fn apply(&self, i: usize) -> usize {
        self.0[i - 1]
    }

    /// `φ⁻¹(v)`, 1-based.
    pub fn inverse_of(&self, v: usize) -> usize {
        self.0.iter().position(|&x| x == v).expect("value in range") + 1
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_indices(&self.0, self.len()))
    }
}

fn render_indices(ix: &[usize], n: usize) -> String {
    if n < 10 {
        ix.iter().map(|i| i.to_string()).collect()
    } else {
        ix.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Pairs `(s, t)` with `t < s` where `s` occurs before `t` in `φ(1) … φ(n)`,
/// in order of occurrence.
pub fn inversions(phi: &Permutation) -> Vec<(usize, usize)> {
    let v = phi.images();
    let mut out = Vec::new();
    for (a, &s) in v.iter().enumerate() {
        for &t in &v[a + 1..] {
            if t < s {
                out.push((s, t));
            }
        }
    }
    out
}

/// One summand `X [A_s, A_t] Y Z_s` of the expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommutatorTerm {
    pub s: usize,
    pub t: usize,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
}

/// `A_φ(1) ⋯ A_φ(n) = A_1 ⋯ A_n + Σ terms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommutatorExpansion {
    pub permutation: Permutation,
    pub terms: Vec<CommutatorTerm>,
}

/// Builds the expansion. For an inversion `(s, t)` the left factor collects
/// `A_φ(i)` with `φ(i) < s` and `i < φ⁻¹(t)`, the right factor those with
/// `φ(i) < s` and `i > φ⁻¹(t)`, and the tail is `A_{s+1} ⋯ A_n`. Terms are
/// ordered by `s` then `t`, both descending.
pub fn commutator_expansion(phi: &Permutation) -> CommutatorExpansion {
    let n = phi.len();
    let mut pairs = inversions(phi);
    pairs.sort_by(|a, b| b.cmp(a));
    let terms = pairs
        .into_iter()
        .map(|(s, t)| {
            let pt = phi.inverse_of(t);
            let below = |i: &usize| phi.apply(*i) < s;
            CommutatorTerm {
                s,
                t,
                x: (1..pt).filter(below).map(|i| phi.apply(i)).collect(),
                y: (pt + 1..=n).filter(below).map(|i| phi.apply(i)).collect(),
                z: (s + 1..=n).collect(),
            }
        })
        .collect();
    CommutatorExpansion {
        permutation: phi.clone(),
        terms,
    }
}

impl CommutatorTerm {
    pub fn render(&self, n: usize) -> String {
        let sep = if n < 10 { "" } else { "." };
        let parts: Vec<String> = [
            render_indices(&self.x, n),
            format!("[{},{}]", self.s, self.t),
            render_indices(&self.y, n),
            render_indices(&self.z, n),
        ]
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect();
        parts.join(sep)
    }

    /// Evaluates the summand for concrete matrices `A_1 … A_n`.
    pub fn evaluate(&self, mats: &[CMatrix]) -> CMatrix {
        let prod = |ix: &[usize]| product(mats, ix);
        let a = &mats[self.s - 1];
        let b = &mats[self.t - 1];
        prod(&self.x) * (a * b - b * a) * prod(&self.y) * prod(&self.z)
    }
}

impl fmt::Display for CommutatorExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.permutation.len();
        write!(f, "{} = {}", self.permutation, Permutation::identity(n))?;
        for t in &self.terms {
            write!(f, " + {}", t.render(n))?;
        }
        Ok(())
    }
}

fn product(mats: &[CMatrix], ix: &[usize]) -> CMatrix {
    let d = mats[0].nrows();
    ix.iter().fold(CMatrix::identity(d, d), |acc, &i| acc * &mats[i - 1])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error("{0}")]
    Permutation(#[from] PermutationError),
    #[error("expected {expected} square matrices of one dimension")]
    Shape { expected: usize },
}

/// Largest entry of `A_φ(1)⋯A_φ(n) - (A_1⋯A_n + Σ terms)`.
pub fn verify_commutator_identity(mats: &[CMatrix], phi: &Permutation) -> Result<f64, IdentityError> {
    let n = phi.len();
    if mats.len() != n || n == 0 || mats.iter().any(|m| !m.is_square() || m.shape() != mats[0].shape()) {
        return Err(IdentityError::Shape { expected: n });
    }
    let lhs = product(mats, phi.images());
    let ident: Vec<usize> = (1..=n).collect();
    let mut rhs = product(mats, &ident);
    for t in commutator_expansion(phi).terms {
        rhs += t.evaluate(mats);
    }
    Ok(max_abs_diff(&lhs, &rhs))
}
