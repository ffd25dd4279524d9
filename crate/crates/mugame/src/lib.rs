//! Model checking for the modal mu-calculus over finite Kripke structures.
//!
//! Three interchangeable semantics are implemented and cross-checked:
//!
//! * clock-bounded evaluation games ([`game`]), where fixpoint operators
//!   announce an ordinal clock that is strictly lowered as the play
//!   recurses, so every play is finite;
//! * clock-bounded compositional evaluation through ordinal-indexed
//!   approximants ([`semantics`]);
//! * the standard fixpoint semantics ([`semantics::eval_standard`]).
//!
//! On a finite model the bounded semantics coincide with the standard one
//! as soon as the clock bound exceeds the number of states. The [`harness`]
//! module generates random instances and checks the engines against each
//! other; the [`cli`](../mugame_cli/index.html) exposes everything on the
//! command line.

pub mod formula;
pub mod game;
pub mod harness;
pub mod kripke;
pub mod ordinal;
pub mod semantics;

pub use formula::{parse_formula, FixKind, Formula, LabelSym, OccPath, PropSym};
pub use game::{gts_truth, GameSpec, Player};
pub use kripke::{KripkeModel, ModelDoc, StateId, StateSet};
pub use ordinal::{Ordinal, OrdinalClass};
pub use semantics::{eval_bounded, eval_standard, Assignment};
