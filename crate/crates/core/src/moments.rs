//! Macroscopic fields of a distribution: density, bulk velocity, stress
//! tensor, the three temperatures, and the theta/nu mixtures that define the
//! relaxation target.

use serde::{Deserialize, Serialize};

use crate::linalg::{EigenDecomp, SymMat};
use crate::params::ModelParams;
use crate::phase_grid::{validate_cell, PhaseGrid};
use crate::{Error, Result};

/// Densities below this are treated as vacuum; moment divisions are refused.
pub const VACUUM_FLOOR: f64 = 1e-12;

/// One spatial cell's macroscopic state.
///
/// Temperatures are defined from the energy integrals, so the equipartition
/// identities `trace(Theta) = d T_tr` and
/// `(d + delta) T_delta = d T_tr + delta T_int` hold by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroState {
    pub d: usize,
    pub rho: f64,
    pub u: [f64; 3],
    /// Stress/temperature tensor `Theta` (second central velocity moment
    /// over density), symmetrized.
    pub theta_tensor: SymMat,
    pub e_tr: f64,
    pub e_int: f64,
    pub e_delta: f64,
    pub t_tr: f64,
    pub t_int: f64,
    pub t_delta: f64,
}

impl MacroState {
    /// Assembles a state from primitive fields, deriving every temperature
    /// and energy consistently. Used by samplers and closed-form tests.
    pub fn from_primitives(
        d: usize,
        delta: f64,
        rho: f64,
        u: [f64; 3],
        theta_tensor: SymMat,
        t_int: f64,
    ) -> Self {
        let t_tr = theta_tensor.trace() / d as f64;
        let e_tr = 0.5 * d as f64 * t_tr;
        let e_int = 0.5 * delta * t_int;
        let t_delta = (d as f64 * t_tr + delta * t_int) / (d as f64 + delta);
        MacroState {
            d,
            rho,
            u,
            theta_tensor,
            e_tr,
            e_int,
            e_delta: e_tr + e_int,
            t_tr,
            t_int,
            t_delta,
        }
    }
}

/// The relaxation temperature `T_theta` and corrected temperature tensor
/// `T_{nu,theta}`, with the eigendecomposition of the latter.
#[derive(Debug, Clone)]
pub struct CorrectedTensor {
    /// `theta T_delta + (1 - theta) T_int`.
    pub t_relax: f64,
    /// `theta T_delta Id + (1 - theta) { (1 - nu) T_tr Id + nu Theta }`.
    pub tensor: SymMat,
    /// Eigenvalues ascending; construction fails unless all are positive.
    pub eig: EigenDecomp,
}

/// Accumulates one velocity block of the raw moment lanes: mass, momentum,
/// raw second moments (upper triangle), internal energy, and a count of
/// invalid (negative or NaN) values.
#[inline]
pub(crate) fn raw_moment_block(
    v: [f64; 3],
    block: &[f64],
    i_energies: &[f64],
) -> [f64; 12] {
    let mut block_f = 0.0;
    let mut block_ie = 0.0;
    let mut bad = 0.0;
    for (fv, e) in block.iter().zip(i_energies.iter()) {
        bad += if *fv >= 0.0 { 0.0 } else { 1.0 };
        block_f += fv;
        block_ie += fv * e;
    }
    [
        block_f,
        block_f * v[0],
        block_f * v[1],
        block_f * v[2],
        block_f * v[0] * v[0],
        block_f * v[1] * v[1],
        block_f * v[2] * v[2],
        block_f * v[0] * v[1],
        block_f * v[0] * v[2],
        block_f * v[1] * v[2],
        block_ie,
        bad,
    ]
}

/// Turns accumulated raw moment lanes (cell volume already applied) into a
/// [`MacroState`], gating on vacuum and invalid values.
pub(crate) fn state_from_raw_moments(
    grid: &PhaseGrid,
    f: &[f64],
    m: &[f64; 12],
    params: &ModelParams,
) -> Result<MacroState> {
    let d = grid.d();
    if m[11] != 0.0 || !m[0].is_finite() {
        validate_cell(grid, f)?;
        return Err(Error::NonFinite {
            node: usize::MAX,
            value: m[0],
        });
    }
    let rho = m[0];
    if !(rho > VACUUM_FLOOR) {
        return Err(Error::VacuumCell {
            rho,
            floor: VACUUM_FLOOR,
        });
    }
    let mut u = [0.0; 3];
    for a in 0..d {
        u[a] = m[1 + a] / rho;
    }

    let theta_tensor = SymMat::from_upper(d, |i, j| {
        let lane = match (i, j) {
            (0, 0) => 4,
            (1, 1) => 5,
            (2, 2) => 6,
            (0, 1) => 7,
            (0, 2) => 8,
            _ => 9,
        };
        m[lane] / rho - u[i] * u[j]
    });
    let e_int = m[10] / rho;

    let t_tr = theta_tensor.trace() / d as f64;
    let e_tr = 0.5 * d as f64 * t_tr;
    let t_int = 2.0 * e_int / params.delta;
    let t_delta = (d as f64 * t_tr + params.delta * t_int) / (d as f64 + params.delta);
    let state = MacroState {
        d,
        rho,
        u,
        theta_tensor,
        e_tr,
        e_int,
        e_delta: e_tr + e_int,
        t_tr,
        t_int,
        t_delta,
    };
    for &x in [state.rho, state.e_tr, state.e_int, state.t_delta].iter() {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                node: usize::MAX,
                value: x,
            });
        }
    }
    Ok(state)
}

/// Measures all macroscopic fields of one cell by quadrature.
///
/// One fused pass accumulates mass, momentum, raw second moments and
/// internal energy; the stress tensor is centered algebraically and
/// symmetrized by construction (each pair is integrated once). A final lane
/// counts invalid values, so the pass doubles as the nonnegativity scan.
pub fn compute_moments(grid: &PhaseGrid, f: &[f64], params: &ModelParams) -> Result<MacroState> {
    assert_eq!(f.len(), grid.n_nodes(), "grid function length mismatch");
    let n_i = grid.n_i();
    let ie = grid.i_energies();
    let m = grid.reduce_blocks::<12>(&|vflat, base| {
        raw_moment_block(grid.velocity(vflat), &f[base..base + n_i], ie)
    });
    state_from_raw_moments(grid, f, &m, params)
}

/// Forms `T_theta` and `T_{nu,theta}` and gates on positive definiteness.
pub fn corrected_tensor(state: &MacroState, params: &ModelParams) -> Result<CorrectedTensor> {
    let d = state.d;
    let theta = params.theta;
    let nu = params.nu;
    let t_relax = theta * state.t_delta + (1.0 - theta) * state.t_int;
    let iso = SymMat::scaled_identity(d, theta * state.t_delta + (1.0 - theta) * (1.0 - nu) * state.t_tr);
    let tensor = iso.lin_comb(1.0, &state.theta_tensor, (1.0 - theta) * nu);
    let eig = tensor.eigen();
    if !(eig.min() > 0.0) || !(t_relax > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eig: eig.min().min(t_relax),
        });
    }
    Ok(CorrectedTensor {
        t_relax,
        tensor,
        eig,
    })
}

/// Collision frequency `A_{nu,theta} = rho T_delta / (mu (1 - nu + theta nu))`.
pub fn collision_frequency(state: &MacroState, params: &ModelParams) -> f64 {
    state.rho * state.t_delta / (params.mu * (1.0 - params.nu + params.theta * params.nu))
}
