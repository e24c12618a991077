//! Weighted shifts on finite rooted directed trees, antilinear conjugations,
//! and certified decisions on whether a shift is complex symmetric.
//!
//! The usual entry point is [`decide_shift`]: build a tree with one of the
//! generators in [`tree`], attach weights with [`shift::WeightAssignment`],
//! and pass the resulting [`ShiftMatrix`] to the decider. Every `Cs` verdict
//! carries a conjugation that has been re-verified, and every `NotCs` verdict
//! carries a witness that can be rechecked independently.

pub mod broom;
pub mod conjugation;
pub mod crossval;
pub mod decider;
pub mod error;
pub mod family;
pub mod linalg;
pub mod shift;
pub mod tree;

pub use conjugation::{verify_c_symmetry, Conjugation, ConjugationDocument, SymmetryReport};
pub use decider::{decide_cs, decide_shift, DecideOptions, Outcome, Verdict, VerdictKind};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use shift::{build_shift, kernel_table, ShiftMatrix, WeightAssignment};
pub use tree::{DirectedTree, TreeDocument, TreeFamily, VertexId};
