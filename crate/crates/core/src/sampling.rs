//! Seeded random moment states and Gaussian mixtures for certificate sweeps
//! and property tests.
//!
//! Stress tensors are drawn as `R diag(l) R^T` with log-uniform eigenvalues
//! in `[0.2, 5] * t_scale` and a random orthogonal frame, so both well- and
//! ill-conditioned anisotropy show up reproducibly.

use rand::{Rng, RngExt};

use crate::gaussians::{GaussianMixture, MixtureComponent};
use crate::linalg::SymMat;
use crate::moments::MacroState;

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Random orthogonal `d x d` frame from Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation(d: usize, rng: &mut impl Rng) -> [[f64; 3]; 3] {
    let mut q = [[0.0; 3]; 3];
    for col in q.iter_mut().take(d) {
        for x in col.iter_mut().take(d) {
            *x = normal(rng);
        }
    }
    // Orthonormalize columns (stored as rows here; symmetric use downstream).
    for i in 0..d {
        for j in 0..i {
            let dot: f64 = (0..d).map(|k| q[i][k] * q[j][k]).sum();
            for k in 0..d {
                q[i][k] -= dot * q[j][k];
            }
        }
        let norm: f64 = (0..d).map(|k| q[i][k] * q[i][k]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            // Degenerate draw; fall back to a coordinate axis.
            for k in 0..d {
                q[i][k] = if k == i { 1.0 } else { 0.0 };
            }
        } else {
            for k in 0..d {
                q[i][k] /= norm;
            }
        }
    }
    q
}

/// Random symmetric positive definite matrix with spectrum in
/// `[0.2, 5] * t_scale`.
pub fn random_spd(d: usize, t_scale: f64, rng: &mut impl Rng) -> SymMat {
    let frame = random_rotation(d, rng);
    let mut eigs = [0.0; 3];
    for e in eigs.iter_mut().take(d) {
        *e = log_uniform(rng, 0.2 * t_scale, 5.0 * t_scale);
    }
    SymMat::from_upper(d, |i, j| {
        (0..d).map(|k| eigs[k] * frame[k][i] * frame[k][j]).sum()
    })
}

/// Random admissible macroscopic state: log-uniform density, bounded bulk
/// velocity, random SPD stress, log-uniform internal temperature.
pub fn random_state(d: usize, delta: f64, rng: &mut impl Rng) -> MacroState {
    let rho = log_uniform(rng, 0.5, 2.0);
    let mut u = [0.0; 3];
    for x in u.iter_mut().take(d) {
        *x = rng.random_range(-1.0..1.0);
    }
    let theta_tensor = random_spd(d, 1.0, rng);
    let t_int = log_uniform(rng, 0.2, 5.0);
    MacroState::from_primitives(d, delta, rho, u, theta_tensor, t_int)
}

/// Random `k`-component mixture of shifted anisotropic Gaussians with unit
/// total mass scale; a generic far-from-equilibrium distribution.
pub fn random_mixture(d: usize, delta: f64, k: usize, rng: &mut impl Rng) -> GaussianMixture {
    let components = (0..k.max(1))
        .map(|_| MixtureComponent {
            weight: rng.random_range(0.5..1.5),
            mean: {
                let mut m = [0.0; 3];
                for x in m.iter_mut().take(d) {
                    *x = rng.random_range(-1.5..1.5);
                }
                m
            },
            cov: random_spd(d, 0.8, rng),
            t_i: log_uniform(rng, 0.5, 2.0),
        })
        .collect();
    GaussianMixture::new(d, delta, log_uniform(rng, 0.5, 2.0), components)
}
