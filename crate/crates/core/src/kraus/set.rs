use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrausError {
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
}

impl KrausError {
    pub fn code(&self) -> &'static str {
        match self {
            KrausError::Dim(_) => "E_DIM",
            KrausError::NotHermitian(_) => "E_NOT_HERMITIAN",
            KrausError::NotDensity(_) => "E_NOT_DENSITY",
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry magnitude of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest entry magnitude of `a - a†`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(a, &a.adjoint())
}

/// Positive semidefinite, Hermitian, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const TOL: f64 = 1e-10;

    pub fn new(m: CMatrix) -> Result<Self, KrausError> {
        let dev = hermitian_deviation(&m);
        if dev > Self::TOL {
            return Err(KrausError::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > Self::TOL || tr.im.abs() > Self::TOL {
            return Err(KrausError::NotDensity(format!("trace is {tr}")));
        }
        let min = min_eigenvalue(&m);
        if min < -Self::TOL {
            return Err(KrausError::NotDensity(format!("eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// `|u><u|` for a normalized amplitude vector.
    pub fn pure(amps: &[Complex64]) -> Result<Self, KrausError> {
        let u = nalgebra::DVector::from_column_slice(amps);
        Self::new(&u * u.adjoint())
    }

    /// `|v><v|` for basis state `v` of dimension `d`.
    pub fn basis(d: usize, v: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(v, v)] = c(1.0);
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()).map(|x| x * 0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// A finite family of operators `{A_k}` acting as `ρ -> Σ A_k ρ A_k†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self, KrausError> {
        let first = ops
            .first()
            .ok_or_else(|| KrausError::Dim("a Kraus set needs at least one operator".into()))?;
        let (d_out, d_in) = first.shape();
        if let Some(bad) = ops.iter().find(|a| a.shape() != (d_out, d_in)) {
            return Err(KrausError::Dim(format!(
                "operators of shape {:?} and {:?} mixed",
                (d_out, d_in),
                bad.shape()
            )));
        }
        Ok(KrausSet { ops, d_in, d_out })
    }

    pub fn identity(d: usize) -> Self {
        KrausSet {
            ops: vec![CMatrix::identity(d, d)],
            d_in: d,
            d_out: d,
        }
    }

    pub fn unitary(u: CMatrix) -> Self {
        let d = u.nrows();
        KrausSet {
            ops: vec![u],
            d_in: d,
            d_out: d,
        }
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// `Σ A_k† A_k`; the identity for trace-preserving sets.
    pub fn completeness(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.d_in, self.d_in);
        for a in &self.ops {
            s += a.adjoint() * a;
        }
        s
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        max_abs_diff(&self.completeness(), &CMatrix::identity(self.d_in, self.d_in)) <= tol
    }

    /// Pads with zero operators up to `n` elements.
    pub fn padded(&self, n: usize) -> KrausSet {
        let mut ops = self.ops.clone();
        while ops.len() < n {
            ops.push(CMatrix::zeros(self.d_out, self.d_in));
        }
        KrausSet { ops, ..*self }
    }

    /// Scales every operator by `sqrt(p)`, weighting the channel by `p`.
    pub fn weighted(&self, p: f64) -> KrausSet {
        let s = c(p.sqrt());
        KrausSet {
            ops: self.ops.iter().map(|a| a * s).collect(),
            ..*self
        }
    }

    /// Union of the operator lists: the sum of the two channels.
    pub fn sum(&self, other: &KrausSet) -> Result<KrausSet, KrausError> {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return Err(KrausError::Dim("summed sets differ in shape".into()));
        }
        let mut ops = self.ops.clone();
        ops.extend(other.ops.iter().cloned());
        Ok(KrausSet { ops, ..*self })
    }

    /// Choi block `Σ_k A_k |i><j| A_k†`, a `d_out x d_out` matrix.
    pub fn choi_block(&self, i: usize, j: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for a in &self.ops {
            out += a.column(i) * a.column(j).adjoint();
        }
        out
    }

    /// Full Choi matrix `Σ_{ij} |i><j| ⊗ Λ(|i><j|)`.
    pub fn choi(&self) -> CMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        let mut m = CMatrix::zeros(di * dout, di * dout);
        for i in 0..di {
            for j in 0..di {
                let b = self.choi_block(i, j);
                m.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&b);
            }
        }
        m
    }
}

/// `Σ A_k ρ A_k†`.
pub fn apply_set(s: &KrausSet, rho: &CMatrix) -> Result<CMatrix, KrausError> {
    if rho.shape() != (s.d_in, s.d_in) {
        return Err(KrausError::Dim(format!(
            "set acts on dimension {} but the state has shape {:?}",
            s.d_in,
            rho.shape()
        )));
    }
    let mut out = CMatrix::zeros(s.d_out, s.d_out);
    for a in &s.ops {
        out += a * rho * a.adjoint();
    }
    Ok(out)
}

/// Normal form of "apply `first`, then `second`": `C_{iN+j} = B_i A_j` with
/// both sets zero-padded to a common size `N`.
pub fn contract(first: &KrausSet, second: &KrausSet) -> Result<KrausSet, KrausError> {
    if second.d_in != first.d_out {
        return Err(KrausError::Dim(format!(
            "first set outputs dimension {} but second expects {}",
            first.d_out, second.d_in
        )));
    }
    let n = first.len().max(second.len());
    let a = first.padded(n);
    let b = second.padded(n);
    let mut ops = Vec::with_capacity(n * n);
    for bi in &b.ops {
        for aj in &a.ops {
            ops.push(bi * aj);
        }
    }
    Ok(KrausSet {
        ops,
        d_in: first.d_in,
        d_out: second.d_out,
    })
}

/// Hilbert-Schmidt inner product `tr(K† L)`.
pub fn hs_inner(k: &CMatrix, l: &CMatrix) -> Result<Complex64, KrausError> {
    if k.shape() != l.shape() {
        return Err(KrausError::Dim(format!("{:?} vs {:?}", k.shape(), l.shape())));
    }
    Ok(k.iter().zip(l.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// `A ⊑ B`: `B - A` is positive semidefinite up to `tol`.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, KrausError> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(KrausError::Dim(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    for m in [a, b] {
        let dev = hermitian_deviation(m);
        if dev > tol {
            return Err(KrausError::NotHermitian(dev));
        }
    }
    Ok(min_eigenvalue(&(b - a)) >= -tol)
}

/// Whether two sets implement the same completely positive map, decided by
/// comparing Choi matrices block by block.
pub fn channel_equiv(s1: &KrausSet, s2: &KrausSet, tol: f64) -> Result<bool, KrausError> {
    if (s1.d_in, s1.d_out) != (s2.d_in, s2.d_out) {
        return Err(KrausError::Dim(format!(
            "{}->{} vs {}->{}",
            s1.d_in, s1.d_out, s2.d_in, s2.d_out
        )));
    }
    for i in 0..s1.d_in {
        for j in i..s1.d_in {
            if max_abs_diff(&s1.choi_block(i, j), &s2.choi_block(i, j)) > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
