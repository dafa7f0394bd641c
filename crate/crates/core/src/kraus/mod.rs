//! Kraus-operator semantics: channel algebra, the commutator expansion of
//! reordered products, and extraction of a program's semantics as a tree of
//! Kraus sets and communication placeholders.

mod compose;
pub mod dense;
mod equiv;
mod extract;
mod perm;
mod set;
mod trace;

pub use compose::{compose, Composite, Distribution, Event, Halt, Outcome, DEFAULT_RESOLVE_QBITS};
pub use equiv::{canonical, programs_equiv, EquivMode, CHANNEL_TOL, DEFAULT_MAX_QBITS};
pub use extract::{extract_semantics, MAX_ARMS, MAX_CALL_DEPTH, MAX_FORK_QBITS, MAX_STEPS};
pub use perm::{
    commutator_expansion, inversions, verify_commutator_identity, CommutatorExpansion, CommutatorTerm,
    IdentityError, Permutation, PermutationError,
};
pub use set::{
    apply_set, channel_equiv, contract, hermitian_deviation, hs_inner, loewner_leq, max_abs_diff, min_eigenvalue,
    CMatrix, DensityMatrix, KrausError, KrausSet,
};
pub use trace::{
    Arm, BranchKind, BranchSum, Element, GateOp, Item, ModuleTrace, Semantics, SemanticsError, Slot, Sym, Text,
};
