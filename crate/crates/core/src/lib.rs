//! Phase retrieval diagnostics for finite real frames.
//!
//! Checks spark, the complement property and cross-product recoverability,
//! issues weak phase retrieval verdicts with explicit counterexamples, and
//! reconstructs signals up to per-component signs from squared magnitudes
//! `|<x, phi_i>|^2`.
//!
//! Indices in all public types are 0-based.

pub mod certify;
pub mod combinatorics;
pub mod error;
pub mod fixtures;
pub mod frame;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod properties;
pub mod reconstruction;

pub use error::{Error, Result};
pub use frame::{Frame, FrameReport, MeasurementVector, Tolerance};
pub use linalg::Matrix;
pub use oracle::{EqualMeasurementPair, KernelSearchReport, MinimalityReport};
pub use properties::{Evidence, PartitionWitness, RecoveryMap, SearchBudget, Status, Verdict};
pub use reconstruction::{LiftedSystem, ProductEstimate, SolutionKind, WeakSolution};
