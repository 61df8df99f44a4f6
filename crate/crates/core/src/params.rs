//! Free parameters of the polyatomic ES-BGK model.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Every free parameter of the model: velocity dimension `d`, internal
/// degrees of freedom `delta`, the Prandtl knob `nu`, the energy-exchange
/// knob `theta`, and the viscosity `mu`.
///
/// The anisotropic Gaussian is well defined for `-1/2 < nu < 1`; `theta`
/// interpolates between frozen internal energy (`theta = 0`) and full
/// translational/internal exchange (`theta = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Velocity dimension, 1 to 3.
    pub d: usize,
    /// Internal degrees of freedom, > 0.
    pub delta: f64,
    /// Ellipsoidal correction, -1/2 < nu < 1.
    pub nu: f64,
    /// Translational/internal relaxation parameter, 0 <= theta <= 1.
    pub theta: f64,
    /// Viscosity, > 0.
    pub mu: f64,
}

impl ModelParams {
    pub fn new(d: usize, delta: f64, nu: f64, theta: f64, mu: f64) -> Result<Self> {
        let p = ModelParams {
            d,
            delta,
            nu,
            theta,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return Err(Error::InvalidParam {
                name: "d",
                message: "velocity dimension must be 1, 2 or 3",
                value: self.d as f64,
            });
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParam {
                name: "delta",
                message: "internal degrees of freedom must be positive",
                value: self.delta,
            });
        }
        if !(self.nu > -0.5 && self.nu < 1.0) {
            return Err(Error::InvalidParam {
                name: "nu",
                message: "nu must lie in (-1/2, 1)",
                value: self.nu,
            });
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParam {
                name: "theta",
                message: "theta must lie in [0, 1]",
                value: self.theta,
            });
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParam {
                name: "mu",
                message: "viscosity must be positive",
                value: self.mu,
            });
        }
        Ok(())
    }

    /// `theta = 0` splits translational and internal energy; the asymptotic
    /// state and the entropy production bound change accordingly.
    pub fn is_theta_zero(&self) -> bool {
        self.theta == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_admissible_ranges() {
        assert!(ModelParams::new(3, 2.0, 0.5, 0.5, 1.0).is_ok());
        assert!(ModelParams::new(1, 0.1, -0.49, 0.0, 2.0).is_ok());
        assert!(ModelParams::new(2, 4.0, 0.99, 1.0, 0.5).is_ok());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(0, 2.0, 0.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(4, 2.0, 0.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(3, 0.0, 0.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(3, 2.0, -0.5, 0.5, 1.0).is_err());
        assert!(ModelParams::new(3, 2.0, 1.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(3, 2.0, 1.2, 0.5, 1.0).is_err());
        assert!(ModelParams::new(3, 2.0, 0.0, -0.1, 1.0).is_err());
        assert!(ModelParams::new(3, 2.0, 0.0, 1.1, 1.0).is_err());
        assert!(ModelParams::new(3, 2.0, 0.0, 0.5, 0.0).is_err());
    }
}
