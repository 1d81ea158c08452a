//! Macrostate complexity toolkit.
//!
//! The complexity of an equivalence class of microstates, `S(X/P)`, is the
//! length of the shortest program whose output is equivalent to `X` under an
//! observer relation `P`. This crate computes it two ways:
//!
//! * exactly, on a tiny self-delimiting machine whose programs can be
//!   enumerated ([`oracle`]);
//! * approximately, by composing a canonicalizer for `P` ([`quantizers`])
//!   with a lossless compressor ([`compressors`]) in [`estimators`].
//!
//! On top of the estimators sit conditional complexity, the max-distance,
//! Boltzmann-entropy estimates and nearest-macrostate classification
//! ([`classifier`]).

pub mod classifier;
pub mod compressors;
pub mod error;
pub mod estimators;
pub mod fixtures;
pub mod input;
pub mod oracle;
pub mod quantizers;
pub mod symbol;

pub use error::{Error, Result};
pub use symbol::{join_for_conditional, ComplexityReport, Compressor, Encoding, EquivalenceRelation, SymbolString};
