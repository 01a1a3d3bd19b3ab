//! Detectability analysis for linear plants observed through networks of
//! consensus-coupled observers.
//!
//! A plant `dx/dt = A x` is watched by `N` observers connected over a
//! digraph; node `i` measures `y_i = C_i x` and exchanges `H x_hat` terms
//! with its neighbours. Whether the interconnected estimation-error
//! dynamics can be stabilized by output injection is equivalent to
//! detectability of the augmented pair `([Cbar; Hbar], I_N (x) A)`. This
//! crate decides that question along two independent computational routes
//! (a PBH rank oracle and a geometric subspace criterion), evaluates the
//! structural conditions that explain the verdict, extracts witnesses for
//! failures, certifies positive verdicts with stabilizing gains, and
//! simulates the closed-loop error dynamics.
//!
//! Modules:
//! * [`subspaces`] — rank-revealing subspace algebra and the
//!   stable/antistable modal split,
//! * [`schur`] — ordered real Schur decomposition backing the modal split
//!   and the Riccati solver,
//! * [`digraph`] — Laplacians, reaches and structured kernel bases,
//! * [`lti`] — observability matrices, undetectable subspaces, PBH tests,
//! * [`network`] — augmented-pair construction and the full analysis,
//! * [`synthesis`] — gain certification and error-dynamics simulation,
//! * [`corpus`] — deterministic random instances for sweeps and benches,
//! * [`demo`] — bundled example systems.
//!
//! The `parallel` feature (on by default) runs batch analyses on rayon;
//! sequential variants remain available for comparison.

pub mod config;
pub mod corpus;
pub mod demo;
pub mod digraph;
pub mod error;
mod linalg;
pub mod lti;
pub mod network;
pub mod schur;
pub mod subspaces;
pub mod synthesis;

pub use config::Tolerances;
pub use error::{Error, Result};
