//! Effect-size bounds for 2×2 case-control designs.
//!
//! The standardized log odds ratio `γ = ln(OR)/σ` depends on the study
//! design through `σ`. Over all designs `|γ|` is bounded by the Laplace
//! limit constant (≈ 0.6627), which is also the convergence radius of the
//! eccentricity power series solving Kepler's equation. This crate provides
//! the table estimators, the closed-form bounds, Kepler solvers, and
//! prior-specification helpers built on them.

pub mod bayes_prior;
pub mod contingency;
pub mod effect_bounds;
pub mod error;
pub mod kepler;
pub mod numerics;

pub use contingency::{CohortParams, EffectSummary, RiskParams, TwoByTwoTable};
pub use effect_bounds::{BoundConstants, VerificationReport};
pub use error::{Error, Result};
pub use kepler::{KeplerProblem, KeplerSolution, SolveMethod};
pub use numerics::{Bracket, RootResult};
