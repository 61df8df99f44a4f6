//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or grid parameter violated its admissible range.
    #[error("invalid parameter `{name}`: {message} (got {value})")]
    InvalidParam {
        name: &'static str,
        message: &'static str,
        value: f64,
    },

    /// A grid function contained a NaN or infinity at the given flat node index.
    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    /// A distribution value was negative where nonnegativity is required.
    #[error("negative distribution value {value} at node {node}")]
    NegativeValue { node: usize, value: f64 },

    /// Density fell below the vacuum floor; moments are undefined.
    #[error("vacuum cell: density {rho} below floor {floor}")]
    VacuumCell { rho: f64, floor: f64 },

    /// The corrected temperature tensor left the positive-definite cone.
    #[error("corrected tensor not positive definite: min eigenvalue {min_eig}")]
    NotPositiveDefinite { min_eig: f64 },

    /// f > 0 on a node where the reference density vanishes.
    #[error("support violation at node {node}: f={f} where g=0")]
    SupportViolation { node: usize, f: f64 },

    /// A certificate was requested in the wrong theta regime.
    #[error("wrong regime: {message} (theta = {theta})")]
    WrongRegime { theta: f64, message: &'static str },

    /// Kullback hypothesis failure: the two densities carry different mass.
    #[error("mass mismatch: {mass_f} vs {mass_g} exceeds relative tolerance {tol}")]
    MassMismatch { mass_f: f64, mass_g: f64, tol: f64 },

    /// Transport CFL number exceeded the configured limit.
    #[error("CFL violation: v_max*dt/dx = {cfl} exceeds {limit}")]
    CflViolation { cfl: f64, limit: f64 },

    /// A solver step failed; carries the time and cause.
    #[error("solver step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}
