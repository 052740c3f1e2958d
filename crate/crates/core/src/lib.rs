//! Partially homogeneous reflected random walks on the quarter plane.
//!
//! The walk is zero-drift with covariance `Σ` away from the axes, and has its
//! own jump laws on the two boundary strips of width `R` and in the corner.
//! This crate classifies such walks (recurrent, transient or critical) via
//! the parameter `χ`, computes the stationary measures of the boundary
//! projection chains that feed it, builds and checks the Lyapunov function
//! behind the proof, and provides Monte Carlo probes of the passage-time
//! tail and the boundary drift averages.

pub mod alias;
pub mod classify;
pub mod exec;
pub mod harmonic;
pub mod linalg;
pub mod model;
pub mod projection;
pub mod rational;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod walks;

pub use classify::{classify, ClassificationReport, ClassifyError, ClassifyOptions, StationarySolver, Verdict};
pub use exec::Execution;
pub use linalg::{Mat2, Vec2};
pub use model::{IncrementLaw, Region, Side, ValidationReport, WalkSpec};
pub use projection::{ProjectionChain, StationaryMeasure, StationaryMethod};
