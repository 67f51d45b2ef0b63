//! Simulation and verification tools for planar Boolean models of rectangles.
//!
//! * [`geometry`] measures exact intrinsic volumes of unions of aligned
//!   rectangles on the plane or the flat torus.
//! * [`arrangement`] does the same for arbitrarily rotated rectangles.
//! * [`analytic`] evaluates closed-form asymptotic covariances for aligned
//!   rectangles together with quadrature oracles.
//! * [`simulate`] samples Boolean-model realizations reproducibly.
//! * [`stats`] turns replications into covariance estimates, histograms and
//!   normality diagnostics.
//! * [`cli`] wires it all into the `boolean-lab` command line tool.

pub mod analytic;
pub mod arrangement;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};

pub use geometry::{Domain, DomainKind, FunctionalVector, PlacedGrain, UnionComplex};
