//! Evaluation harness for generated BLAS kernels.
//!
//! The crate bundles a plain, deterministic reference implementation of
//! twenty double-precision BLAS routines ([`oracle`]), the exhaustive test
//! matrix that drives verification ([`testgen`]), the epsilon-scaled
//! correctness check ([`verifier`]), timing and traffic/flop models
//! ([`bench`]), the generation prompts ([`promptkit`]), candidate sampling
//! backends ([`llm`]), crash-isolated compilation and execution of
//! candidates ([`sandbox`]), the run ledger ([`ledger`]) and the table
//! renderers ([`report`]).

pub mod bench;
pub mod dense;
pub mod ledger;
pub mod llm;
pub mod oracle;
pub mod problem;
pub mod promptkit;
pub mod report;
pub mod routine;
pub mod sandbox;
pub mod selftest;
pub mod testgen;
pub mod verifier;

pub use oracle::{ArgError, DiagKind, Side, Transpose, Triangle};
pub use routine::{Level, Routine};
