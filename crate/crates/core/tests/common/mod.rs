//! Shared test fixtures: an adaptive quadrature oracle independent of the
//! grid code, and the reference states used across the integration suites.
//! Each suite uses its own subset.
#![allow(dead_code)]

use esbgk_core::gaussians::GaussianMixture;
use esbgk_core::linalg::SymMat;
use esbgk_core::moments::MacroState;
use esbgk_core::params::ModelParams;

/// Adaptive Simpson quadrature; the independent oracle for every
/// one-dimensional integral the closed forms are checked against.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// The reference far-from-equilibrium initial condition: two shifted
/// anisotropic Gaussians with unequal weights and internal temperatures.
pub fn reference_bimodal(d: usize) -> GaussianMixture {
    let mut mean_a = [0.0; 3];
    let mut mean_b = [0.0; 3];
    mean_a[0] = 1.1;
    mean_b[0] = -1.2;
    if d > 1 {
        mean_b[1] = 0.3;
    }
    let cov_a = SymMat::from_upper(d, |i, j| {
        if i == j {
            0.8 + 0.2 * i as f64
        } else {
            0.1
        }
    });
    let cov_b = SymMat::scaled_identity(d, 1.1);
    GaussianMixture::bimodal(
        d,
        2.0,
        1.0,
        [0.55, 0.45],
        [mean_a, mean_b],
        [cov_a, cov_b],
        [1.0, 0.7],
    )
}

/// Mildly anisotropic single-cell state with distinct temperatures.
pub fn reference_state(d: usize) -> MacroState {
    let theta_tensor = SymMat::from_upper(d, |i, j| {
        if i == j {
            0.9 + 0.25 * i as f64
        } else {
            0.1
        }
    });
    MacroState::from_primitives(d, 2.0, 1.0, [0.1, -0.05, 0.2], theta_tensor, 0.8)
}

pub fn params(d: usize, nu: f64, theta: f64) -> ModelParams {
    ModelParams {
        d,
        delta: 2.0,
        nu,
        theta,
        mu: 1.0,
    }
}
