//! Dense state-vector simulation of the quantum heap.

mod format;
mod gates;
mod state;

pub use format::{format_probability, format_spectrum, ket};
pub use gates::{builtin_gate, Builtin, UnitaryMatrix};
pub use state::{QuantumState, DEFAULT_HEAP, DEFAULT_SIM_CAP};

use thiserror::Error;

/// Numerical tolerance for unitarity of user matrices.
pub const UNITARY_TOL: f64 = 1e-9;

/// Spectrum entries below this probability are omitted.
pub const SPECTRUM_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("quantum heap exhausted: {requested} more qbits requested, {in_use} of {capacity} in use")]
    HeapExhausted {
        requested: usize,
        in_use: usize,
        capacity: usize,
    },
    #[error("simulation cap reached: {requested} qbits would be live, cap is {cap}")]
    SimCap { requested: usize, cap: usize },
    #[error("{0}")]
    BadParam(String),
    #[error("operator acts on {expected} qbits but {found} were given")]
    DimMismatch { expected: usize, found: usize },
    #[error("heap index {0} is not allocated")]
    NotAllocated(usize),
    #[error("heap index {0} listed twice")]
    DuplicateTarget(usize),
}

impl QError {
    pub fn code(&self) -> &'static str {
        match self {
            QError::HeapExhausted { .. } => "E_HEAP_EXHAUSTED",
            QError::SimCap { .. } => "E_SIM_CAP",
            QError::BadParam(_) => "E_BAD_PARAM",
            QError::DimMismatch { .. } => "E_DIM_MISMATCH",
            QError::NotAllocated(_) => "E_NOT_ALLOCATED",
            QError::DuplicateTarget(_) => "E_DUP_TUPLE",
        }
    }
}
