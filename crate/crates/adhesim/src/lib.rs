//! Finite-volume simulator for a two-phenotype cancer-cell model with
//! nonlocal cell-cell adhesion on bounded domains.
//!
//! The model couples two cell densities `u` and `v` through diffusion,
//! logistic growth with one-way mutation, and nonlocal adhesion velocities
//! `K[u,v]` and `S[u,v]` obtained by integrating the neighbouring densities
//! against an odd interaction kernel over a sensing region. Two no-flux
//! boundary regimes are supported:
//!
//! * a nonlocal Robin condition, where the diffusive boundary flux cancels
//!   the adhesive one (sensing ball clipped by the domain), and
//! * a zero-zero (independent) condition on balls, where the sensing region
//!   shrinks towards the boundary so the adhesion velocity itself vanishes
//!   there.
//!
//! The crate is organised by subsystem: [`geometry`] builds masked Cartesian
//! grids with boundary normals and the tapered interior extension of the
//! normal field, [`nonlocal`] constructs and evaluates the adhesion
//! operators (with a brute-force oracle), [`dynamics`] advances the coupled
//! system with a conservative positivity-preserving scheme, [`analysis`]
//! hosts the verification instruments (mass/Lyapunov monitors, discrete
//! mild-solution Picard oracle, linearised systems and rate estimation),
//! and [`cli`] provides the configuration-driven entry points.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod nonlocal;

pub use error::{Error, Result};
