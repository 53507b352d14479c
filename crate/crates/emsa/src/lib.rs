//! Numerical laboratory for eigensystem multiscale analysis of the Anderson
//! model on finite boxes in `Z^d`.
//!
//! The crate decides whether a finite box is *m-localizing* — level-spacing
//! spectrum plus a site-labeled eigensystem whose label-`x` eigenvector decays
//! at rate `m` away from `x` — and runs desk-scale Monte Carlo experiments
//! against the explicit finite-volume probability bounds of the multiscale
//! analysis: the initial large-disorder step, level-spacing and Minami-type
//! spectral statistics, Wegner-type resolvent bounds, and the two bridges
//! between eigensystem and Green's-function regularity.
//!
//! Layout:
//! - [`lattice`]: exact rational geometry (boxes, boundaries, covers, buffers)
//! - [`model`]: random potentials and Anderson Hamiltonians
//! - [`spectral`]: dense eigensystems, resolvents, defect and alignment bounds
//! - [`certify`]: level-spacing / localization certificates via Hall matching
//! - [`probability`]: seeded Monte Carlo drivers and scale scans
//! - [`green`]: Green's-function regularity and the cross-implication experiments

pub mod error;
pub mod lattice;
pub mod model;
pub mod spectral;
pub mod certify;
pub mod green;
pub mod probability;
pub mod rng;

pub use error::{Error, Result};
