//! Discrete-velocity simulator and entropy diagnostics for the polyatomic
//! ellipsoidal BGK (ES-BGK) relaxation model.
//!
//! The crate discretizes the phase space `(v, I)` of a polyatomic gas with
//! `d` translational and `delta` internal degrees of freedom, evolves the
//! relaxation equation `df/dt = A (M(f) - f)` toward the anisotropic
//! Gaussian attractor, and certifies the entropy inequalities that govern
//! the approach to equilibrium: the H-theorem, the Cercignani-type lower
//! bound on entropy production, and the theta-dependent dichotomy of the
//! asymptotic state.
//!
//! Module layout mirrors the pipeline:
//!
//! - [`phase_grid`]: truncated `(v, I)` box, midpoint quadrature, integration
//! - [`moments`]: macroscopic fields, temperatures, corrected tensor
//! - [`gaussians`]: the ellipsoidal Gaussian family and mixtures
//! - [`entropy`]: H-functionals, entropy production, inequality certificates
//! - [`solver`]: homogeneous relaxation and 1D-x transport stepping
//! - [`sampling`]: seeded random moment states for certificate sweeps

// `!(x > 0.0)` is the NaN-rejecting form of every positivity gate here, and
// index loops over <=3x3 tensors read better than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod entropy;
pub mod error;
pub mod gaussians;
pub mod linalg;
pub mod moments;
pub mod params;
pub mod phase_grid;
pub mod sampling;
pub mod solver;

pub use error::Error;
pub use moments::{CorrectedTensor, MacroState};
pub use params::ModelParams;
pub use phase_grid::{DistSnapshot, GridSpec, PhaseGrid};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
