//! Locally unextendible non-maximally entangled bases in `d ⊗ d` systems.
//!
//! The crate builds orthogonal classes from a Schmidt-form seed with
//! one-sided Weyl operators, certifies their extendability numerically,
//! constructs an unambiguous-discrimination POVM for one representative per
//! class, and evaluates the resulting superdense-coding capacities.

pub mod discrimination;
pub mod error;
pub mod lunmeb;
pub mod numkit;
pub mod operators;
pub mod report;
pub mod sdc;
pub mod states;

pub use error::{Error, Result};
pub use numkit::{CMatrix, CVector, Tolerances, C64};
pub use states::{SchmidtState, Subsystem};
