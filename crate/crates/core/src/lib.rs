//! Solver library for continuous linear programs over measures (M-CLP) and
//! their symmetric duals (M-CLP*).
//!
//! An M-CLP instance is given by a constant matrix `A`, vectors `beta`, `b`,
//! `gamma`, `c`, and a horizon `T`:
//!
//! ```text
//! max   integral of (gamma + (T - t) c)' dU(t)   over [0, T]
//! s.t.  A U(t) <= beta + b t        for all 0 <= t <= T,
//!       U non-decreasing, right continuous, U(0-) = 0.
//! ```
//!
//! Controls are cumulative measures: they may place atoms (impulses) at the
//! ends of the horizon and a density inside. The crate provides
//!
//! * a dense LP solver with sign-restriction support ([`lp`]),
//! * the instance model, objective and slack evaluation ([`model`]),
//! * feasibility and strict-feasibility tests via a finite LP
//!   ([`feasibility`]),
//! * time discretizations with certified value brackets
//!   ([`discretization`], [`extension`]),
//! * a refinement driver that certifies the duality gap ([`solver`]),
//! * extraction of the structured optimal solution: endpoint atoms plus
//!   piecewise-constant densities ([`structure`]),
//! * the embedding of separated continuous LPs ([`sclp`]).
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the command
//! line live in the companion `mclp-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod discretization;
pub mod extension;
pub mod feasibility;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod sclp;
pub mod solver;
pub mod structure;

pub use lp::{LpError, LpOutcome, LpProblem, LpStatus, SignRestriction};
pub use matrix::Matrix;
pub use model::{MeasureSolution, ProblemData};
pub use solver::{SolveOptions, SolveReport, SolveStatus};
