use super::QError;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

/// Square complex matrix of dimension `2^k`, stored row-major.
#[derive(Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for UnitaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryMatrix")
            .field("dim", &self.dim)
            .field("data", &self.data)
            .finish()
    }
}

impl UnitaryMatrix {
    /// Builds a matrix from row-major entries. The entry count must be the
    /// square of a power of two; unitarity is not checked here.
    pub fn from_entries(data: Vec<Complex64>) -> Result<Self, QError> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() || !dim.is_power_of_two() {
            return Err(QError::BadParam(format!(
                "{} entries do not form a 2^k x 2^k matrix",
                data.len()
            )));
        }
        Ok(UnitaryMatrix { dim, data })
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self, QError> {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_entries(data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        UnitaryMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qbits the operator acts on.
    pub fn qbits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        UnitaryMatrix { dim: d, data }
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    data[r * d + c] += a * other.data[k * d + c];
                }
            }
        }
        UnitaryMatrix { dim: d, data }
    }

    /// Kronecker product; `self` acts on the more significant qbits.
    pub fn kron(&self, other: &UnitaryMatrix) -> Self {
        let (a, b) = (self.dim, other.dim);
        let d = a * b;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.data[r1 * a + c1];
                for r2 in 0..b {
                    for c2 in 0..b {
                        data[(r1 * b + r2) * d + c1 * b + c2] = x * other.data[r2 * b + c2];
                    }
                }
            }
        }
        UnitaryMatrix { dim: d, data }
    }

    /// Largest entry magnitude of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((p.get(r, c) - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    H,
    Not,
    CNot,
    Phase(f64),
    FT(u32),
}

pub fn builtin_gate(gate: Builtin) -> Result<UnitaryMatrix, QError> {
    let s = FRAC_1_SQRT_2;
    match gate {
        Builtin::H => UnitaryMatrix::from_real(&[&[s, s], &[s, -s]]),
        Builtin::Not => UnitaryMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]),
        Builtin::CNot => UnitaryMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]),
        Builtin::Phase(phi) => {
            if !phi.is_finite() {
                return Err(QError::BadParam(format!("phase {phi} is not a finite real")));
            }
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            UnitaryMatrix::from_entries(vec![one, zero, zero, Complex64::from_polar(1.0, phi)])
        }
        Builtin::FT(n) => {
            if n < 1 {
                return Err(QError::BadParam("FT needs at least one qbit".into()));
            }
            if n > 12 {
                return Err(QError::BadParam(format!(
                    "FT({n}) is too large to build as a dense matrix"
                )));
            }
            let h = builtin_gate(Builtin::H)?;
            let mut m = h.clone();
            for _ in 1..n {
                m = m.kron(&h);
            }
            Ok(m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &UnitaryMatrix, b: &UnitaryMatrix) -> bool {
        a.dim() == b.dim()
            && a.entries()
                .iter()
                .zip(b.entries())
                .all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn builtins_are_unitary() {
        for g in [
            Builtin::H,
            Builtin::Not,
            Builtin::CNot,
            Builtin::Phase(0.7),
            Builtin::FT(1),
            Builtin::FT(3),
        ] {
            assert!(builtin_gate(g).unwrap().unitarity_error() <= 1e-12, "{g:?}");
        }
    }

    #[test]
    fn identities() {
        let h = builtin_gate(Builtin::H).unwrap();
        assert!(close(&builtin_gate(Builtin::FT(1)).unwrap(), &h));
        assert!(close(&builtin_gate(Builtin::Phase(0.0)).unwrap(), &UnitaryMatrix::identity(2)));
        let x = builtin_gate(Builtin::Not).unwrap();
        assert!(close(&x.mul(&x), &UnitaryMatrix::identity(2)));
        assert_eq!(builtin_gate(Builtin::FT(2)).unwrap().qbits(), 2);
    }

    #[test]
    fn bad_parameters() {
        assert_eq!(builtin_gate(Builtin::FT(0)).unwrap_err().code(), "E_BAD_PARAM");
        assert_eq!(builtin_gate(Builtin::Phase(f64::NAN)).unwrap_err().code(), "E_BAD_PARAM");
        assert!(UnitaryMatrix::from_entries(vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn near_unitary_matrix_rejected() {
        let m = UnitaryMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.999]]).unwrap();
        assert!(m.unitarity_error() > 1e-9);
    }
}
