//! The polyatomic ellipsoidal Gaussian family: the relaxation target
//! `M_{nu,theta}(f)`, its named specializations, and Gaussian mixtures used
//! as initial data.
//!
//! All four constructors share one evaluation path: the quadratic form is
//! evaluated in the eigenbasis of the covariance, and the velocity and
//! internal factors are precomputed per axis so a full-grid evaluation costs
//! one `exp` per velocity node plus one per internal node.

use rayon::prelude::*;

use crate::linalg::SymMat;
use crate::moments::{CorrectedTensor, MacroState};
use crate::params::ModelParams;
use crate::phase_grid::PhaseGrid;
use crate::{Error, Result};

/// Exponents beyond this evaluate to exactly zero (underflow policy); the
/// downstream `f ln f` integrands treat 0 as contributing 0.
const EXP_CUTOFF: f64 = 700.0;

/// Normalization `Lambda_delta = 1 / integral_0^inf exp(-I^(2/delta)) dI`,
/// in closed form `2 / (delta * Gamma(delta / 2))`.
pub fn lambda_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParam {
            name: "delta",
            message: "lambda_delta requires delta > 0",
            value: delta,
        });
    }
    Ok(2.0 / (delta * libm::tgamma(delta / 2.0)))
}

/// An anisotropic Gaussian in `v` with exponential internal-energy factor:
/// density `rho`, mean `u`, velocity covariance `cov`, internal temperature
/// `t_i`, and `delta` internal degrees of freedom.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    pub d: usize,
    pub delta: f64,
    pub rho: f64,
    pub u: [f64; 3],
    pub cov: SymMat,
    pub t_i: f64,
}

impl GaussianSpec {
    fn prefactor_and_eig(&self) -> Result<(f64, crate::linalg::EigenDecomp)> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParam {
                name: "rho",
                message: "gaussian density must be positive",
                value: self.rho,
            });
        }
        if !(self.t_i > 0.0) {
            return Err(Error::InvalidParam {
                name: "t_i",
                message: "internal temperature must be positive",
                value: self.t_i,
            });
        }
        let eig = self.cov.eigen();
        if !(eig.min() > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eig: eig.min() });
        }
        let lam = lambda_delta(self.delta)?;
        let det_2pi: f64 = eig.values[..self.d]
            .iter()
            .map(|l| 2.0 * std::f64::consts::PI * l)
            .product();
        let pref = self.rho * lam / (det_2pi.sqrt() * self.t_i.powf(self.delta / 2.0));
        Ok((pref, eig))
    }

    /// Pointwise density at velocity `v` and internal-energy variable `i`.
    pub fn density_at(&self, v: [f64; 3], i: f64) -> Result<f64> {
        let (pref, eig) = self.prefactor_and_eig()?;
        let mut c = [0.0; 3];
        for a in 0..self.d {
            c[a] = v[a] - self.u[a];
        }
        let q = 0.5 * eig.inv_quadratic(c) + i.powf(2.0 / self.delta) / self.t_i;
        Ok(if q > EXP_CUTOFF { 0.0 } else { pref * (-q).exp() })
    }

    /// Grid moments of the evaluated Gaussian, computed from the separable
    /// factor sums instead of a full-grid pass. Agrees with measuring the
    /// evaluated density to rounding (the underflow gate only affects nodes
    /// whose contribution is below 1e-290 of the total).
    pub(crate) fn separable_moments(&self, grid: &PhaseGrid) -> Result<SeparableMoments> {
        let (pref, eig) = self.prefactor_and_eig()?;
        let mut s0 = 0.0;
        let mut s1 = [0.0; 3];
        let mut s2 = 0.0;
        for vflat in 0..grid.n_velocity_nodes() {
            let v = grid.velocity(vflat);
            let mut c = [0.0; 3];
            for a in 0..self.d {
                c[a] = v[a] - self.u[a];
            }
            let w = (-0.5 * eig.inv_quadratic(c)).exp();
            s0 += w;
            let mut speed2 = 0.0;
            for a in 0..self.d {
                s1[a] += w * v[a];
                speed2 += v[a] * v[a];
            }
            s2 += 0.5 * w * speed2;
        }
        let mut t0 = 0.0;
        let mut t1 = 0.0;
        for k in 0..grid.n_i() {
            let w = (-grid.i_energy(k) / self.t_i).exp();
            t0 += w;
            t1 += w * grid.i_energy(k);
        }
        let vol = grid.cell_volume();
        Ok(SeparableMoments {
            mass: pref * s0 * t0 * vol,
            mom: [
                pref * s1[0] * t0 * vol,
                pref * s1[1] * t0 * vol,
                pref * s1[2] * t0 * vol,
            ],
            e_tr_raw: pref * s2 * t0 * vol,
            e_int: pref * s0 * t1 * vol,
        })
    }

    /// Evaluates the density at every grid node.
    pub fn evaluate(&self, grid: &PhaseGrid) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.evaluate_into(grid, &mut out)?;
        Ok(out)
    }

    /// As [`Self::evaluate`], reusing the caller's buffer.
    pub fn evaluate_into(&self, grid: &PhaseGrid, out: &mut Vec<f64>) -> Result<()> {
        assert_eq!(grid.d(), self.d, "grid/gaussian dimension mismatch");
        let (pref, eig) = self.prefactor_and_eig()?;

        let n_vflat = grid.n_velocity_nodes();
        let n_i = grid.n_i();

        // Velocity exponents 1/2 (v-U)^T cov^{-1} (v-U), one per velocity node.
        let mut vq = vec![0.0; n_vflat];
        vq.par_iter_mut().enumerate().for_each(|(vflat, slot)| {
            let v = grid.velocity(vflat);
            let mut c = [0.0; 3];
            for a in 0..self.d {
                c[a] = v[a] - self.u[a];
            }
            *slot = 0.5 * eig.inv_quadratic(c);
        });

        // Internal exponents and factors, one per I node.
        let ie: Vec<f64> = (0..n_i).map(|k| grid.i_energy(k) / self.t_i).collect();
        let ie_exp: Vec<f64> = ie.iter().map(|e| (-e).exp()).collect();

        if out.len() != grid.n_nodes() {
            out.resize(grid.n_nodes(), 0.0);
        }
        out.par_chunks_mut(n_i).enumerate().for_each(|(vflat, block)| {
            let q = vq[vflat];
            let vfac = pref * (-q).exp();
            for (slot, (e, w)) in block.iter_mut().zip(ie.iter().zip(ie_exp.iter())) {
                *slot = if q + e > EXP_CUTOFF { 0.0 } else { vfac * w };
            }
        });
        Ok(())
    }
}

/// Conserved-moment block of a Gaussian measured on a grid: mass, raw
/// momentum, raw translational energy and internal energy.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SeparableMoments {
    pub mass: f64,
    pub mom: [f64; 3],
    pub e_tr_raw: f64,
    pub e_int: f64,
}

/// The relaxation target `M_{nu,theta}(f)`: covariance `T_{nu,theta}`,
/// internal temperature `T_theta`.
pub fn ellipsoidal_spec(
    state: &MacroState,
    ct: &CorrectedTensor,
    params: &ModelParams,
) -> GaussianSpec {
    GaussianSpec {
        d: state.d,
        delta: params.delta,
        rho: state.rho,
        u: state.u,
        cov: ct.tensor,
        t_i: ct.t_relax,
    }
}

pub fn ellipsoidal_gaussian(
    state: &MacroState,
    ct: &CorrectedTensor,
    params: &ModelParams,
    grid: &PhaseGrid,
) -> Result<Vec<f64>> {
    ellipsoidal_spec(state, ct, params).evaluate(grid)
}

/// Single-temperature Maxwellian `M_{0,1}`: isotropic at `T_delta` in both
/// velocity and internal energy. The equilibrium state for `theta > 0`.
pub fn maxwellian_01_spec(state: &MacroState, params: &ModelParams) -> GaussianSpec {
    GaussianSpec {
        d: state.d,
        delta: params.delta,
        rho: state.rho,
        u: state.u,
        cov: SymMat::scaled_identity(state.d, state.t_delta),
        t_i: state.t_delta,
    }
}

pub fn maxwellian_01(state: &MacroState, params: &ModelParams, grid: &PhaseGrid) -> Result<Vec<f64>> {
    maxwellian_01_spec(state, params).evaluate(grid)
}

/// Two-temperature Maxwellian `M_{0,0}`: translational temperature `T_tr`,
/// internal temperature `T_int`. The equilibrium state for `theta = 0`.
pub fn maxwellian_00_spec(state: &MacroState, params: &ModelParams) -> GaussianSpec {
    GaussianSpec {
        d: state.d,
        delta: params.delta,
        rho: state.rho,
        u: state.u,
        cov: SymMat::scaled_identity(state.d, state.t_tr),
        t_i: state.t_int,
    }
}

pub fn maxwellian_00(state: &MacroState, params: &ModelParams, grid: &PhaseGrid) -> Result<Vec<f64>> {
    maxwellian_00_spec(state, params).evaluate(grid)
}

/// `M_Theta`: the Gaussian whose velocity covariance is the stress tensor
/// itself (the `nu = 1, theta = 0` member of the family).
pub fn gaussian_theta_spec(state: &MacroState, params: &ModelParams) -> GaussianSpec {
    GaussianSpec {
        d: state.d,
        delta: params.delta,
        rho: state.rho,
        u: state.u,
        cov: state.theta_tensor,
        t_i: state.t_int,
    }
}

pub fn gaussian_theta(state: &MacroState, params: &ModelParams, grid: &PhaseGrid) -> Result<Vec<f64>> {
    gaussian_theta_spec(state, params).evaluate(grid)
}

/// Weighted component of a [`GaussianMixture`].
#[derive(Debug, Clone)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: [f64; 3],
    pub cov: SymMat,
    pub t_i: f64,
}

/// A convex combination of Gaussians with total mass `rho`; the standard
/// far-from-equilibrium initial condition.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    pub d: usize,
    pub delta: f64,
    pub rho: f64,
    pub components: Vec<MixtureComponent>,
}

impl GaussianMixture {
    pub fn new(d: usize, delta: f64, rho: f64, mut components: Vec<MixtureComponent>) -> Self {
        let total: f64 = components.iter().map(|c| c.weight).sum();
        for c in components.iter_mut() {
            c.weight /= total;
        }
        GaussianMixture {
            d,
            delta,
            rho,
            components,
        }
    }

    /// Two shifted anisotropic Gaussians.
    pub fn bimodal(
        d: usize,
        delta: f64,
        rho: f64,
        weights: [f64; 2],
        means: [[f64; 3]; 2],
        covs: [SymMat; 2],
        t_i: [f64; 2],
    ) -> Self {
        Self::new(
            d,
            delta,
            rho,
            (0..2)
                .map(|i| MixtureComponent {
                    weight: weights[i],
                    mean: means[i],
                    cov: covs[i],
                    t_i: t_i[i],
                })
                .collect(),
        )
    }

    /// Exact moments of the mixture; lets `auto_bounds` size a box that
    /// covers every mode before anything is evaluated.
    pub fn analytic_state(&self) -> MacroState {
        let mut u = [0.0; 3];
        for c in &self.components {
            for a in 0..self.d {
                u[a] += c.weight * c.mean[a];
            }
        }
        let theta_tensor = SymMat::from_upper(self.d, |i, j| {
            self.components
                .iter()
                .map(|c| {
                    c.weight * (c.cov.get(i, j) + (c.mean[i] - u[i]) * (c.mean[j] - u[j]))
                })
                .sum()
        });
        let t_int: f64 = self.components.iter().map(|c| c.weight * c.t_i).sum();
        MacroState::from_primitives(self.d, self.delta, self.rho, u, theta_tensor, t_int)
    }

    pub fn evaluate(&self, grid: &PhaseGrid) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.n_nodes()];
        for c in &self.components {
            let spec = GaussianSpec {
                d: self.d,
                delta: self.delta,
                rho: self.rho * c.weight,
                u: c.mean,
                cov: c.cov,
                t_i: c.t_i,
            };
            let part = spec.evaluate(grid)?;
            out.iter_mut().zip(part.iter()).for_each(|(o, p)| *o += p);
        }
        Ok(out)
    }
}
