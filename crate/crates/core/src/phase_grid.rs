//! Truncated phase-space box `[c - L, c + L]^d x [0, I_max]`, midpoint
//! quadrature on it, and the distribution container.
//!
//! Every moment and entropy integral in the crate reduces to the fixed-order
//! reductions defined here, so two runs of the same scenario produce
//! bit-identical diagnostics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::moments::MacroState;
use crate::params::ModelParams;
use crate::{Error, Result};

/// `ln(1e12)`: the internal-energy cutoff solves
/// `exp(-I_max^(2/delta) / T*) < 1e-12`.
const TAIL_LOG: f64 = 27.631021115928547;

/// Default box safety factor: 6.5 thermal widths keeps each Gaussian's
/// velocity-tail mass below ~1e-9 of its total.
pub const DEFAULT_SAFETY: f64 = 6.5;

/// Sequential base case of the pairwise reduction tree.
const LEAF: usize = 64;
/// Velocity-block count above which the two tree halves run on separate
/// threads. The tree shape never depends on this.
const PAR_BLOCKS: usize = 256;

/// Requested discretization of the `(v, I)` box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Velocity nodes per axis (>= 8).
    pub n_v: usize,
    /// Velocity box half-width per axis (> 0).
    pub half_width: f64,
    /// Velocity box center per axis; entries past `d` are ignored.
    pub center: [f64; 3],
    /// Internal-energy nodes (>= 8).
    pub n_i: usize,
    /// Internal-energy cutoff (> 0).
    pub i_max: f64,
}

/// Default node counts per velocity dimension, used by [`auto_bounds`].
///
/// The velocity axes resolve a 6-7 sigma box with spectral midpoint accuracy,
/// but the internal-energy factor `exp(-I^(2/delta)/T)` has a nonzero slope
/// at `I = 0` for `delta = 2`, so the I-axis error is a genuine `O(h^2)` and
/// dominates. The counts below keep that error near 1e-4 of the integrand
/// scale at unit temperature.
pub fn default_profile(d: usize) -> (usize, usize) {
    match d {
        1 => (256, 256),
        2 => (48, 256),
        _ => (32, 256),
    }
}

/// Discrete phase space: midpoint nodes, product weights, cached powers of
/// the internal-energy variable. Immutable after construction.
#[derive(Debug)]
pub struct PhaseGrid {
    d: usize,
    spec: GridSpec,
    delta: f64,
    /// Per-axis velocity midpoints, axis-major.
    v_axes: [Vec<f64>; 3],
    /// Flattened velocity nodes (axis 0 slowest), length `n_v^d`.
    v_lookup: Vec<[f64; 3]>,
    /// Internal-energy midpoints on `[0, i_max]`.
    i_nodes: Vec<f64>,
    /// `I_k^(2/delta)`, the internal energy carried by node `k`.
    i_energy: Vec<f64>,
    /// Product cell volume `(2L/n_v)^d * (i_max/n_i)`, equal at every node.
    cell_volume: f64,
    n_vflat: usize,
}

/// Builds the midpoint grid for the given box and parameters.
///
/// Node ordering is fixed: the internal-energy index varies fastest, then
/// the velocity axes in order (axis 0 slowest).
pub fn build_grid(spec: &GridSpec, params: &ModelParams) -> Result<PhaseGrid> {
    params.validate()?;
    if spec.n_v < 8 {
        return Err(Error::InvalidParam {
            name: "n_v",
            message: "velocity node count must be at least 8",
            value: spec.n_v as f64,
        });
    }
    if spec.n_i < 8 {
        return Err(Error::InvalidParam {
            name: "n_i",
            message: "internal-energy node count must be at least 8",
            value: spec.n_i as f64,
        });
    }
    if !(spec.half_width > 0.0) || !spec.half_width.is_finite() {
        return Err(Error::InvalidParam {
            name: "half_width",
            message: "velocity box half-width must be positive",
            value: spec.half_width,
        });
    }
    if !(spec.i_max > 0.0) || !spec.i_max.is_finite() {
        return Err(Error::InvalidParam {
            name: "i_max",
            message: "internal-energy cutoff must be positive",
            value: spec.i_max,
        });
    }

    let d = params.d;
    let dv = 2.0 * spec.half_width / spec.n_v as f64;
    let mut v_axes: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (a, axis) in v_axes.iter_mut().enumerate().take(d) {
        *axis = (0..spec.n_v)
            .map(|j| spec.center[a] - spec.half_width + (j as f64 + 0.5) * dv)
            .collect();
    }

    let n_vflat = spec.n_v.pow(d as u32);
    let mut v_lookup = Vec::with_capacity(n_vflat);
    for flat in 0..n_vflat {
        let mut v = [0.0; 3];
        let mut rest = flat;
        for a in (0..d).rev() {
            v[a] = v_axes[a][rest % spec.n_v];
            rest /= spec.n_v;
        }
        v_lookup.push(v);
    }

    let di = spec.i_max / spec.n_i as f64;
    let i_nodes: Vec<f64> = (0..spec.n_i).map(|k| (k as f64 + 0.5) * di).collect();
    let i_energy: Vec<f64> = i_nodes.iter().map(|i| i.powf(2.0 / params.delta)).collect();

    Ok(PhaseGrid {
        d,
        spec: *spec,
        delta: params.delta,
        v_axes,
        v_lookup,
        i_nodes,
        i_energy,
        cell_volume: dv.powi(d as i32) * di,
        n_vflat,
    })
}

/// Sizes the box around a macroscopic state: the velocity box covers
/// `safety` thermal widths of the widest temperature direction and the
/// energy cutoff pushes the internal tail below 1e-12.
pub fn auto_bounds(state: &MacroState, params: &ModelParams, safety: f64) -> Result<GridSpec> {
    if !(safety >= 4.0) {
        return Err(Error::InvalidParam {
            name: "safety",
            message: "safety factor must be at least 4",
            value: safety,
        });
    }
    let t_wide = state.theta_tensor.eigen().max().max(state.t_delta);
    if !(t_wide > 0.0) || !(state.t_int > 0.0) || !(state.t_delta > 0.0) {
        return Err(Error::InvalidParam {
            name: "temperature",
            message: "auto bounds require positive temperatures",
            value: t_wide.min(state.t_int).min(state.t_delta),
        });
    }
    let t_star = state.t_int.max(state.t_delta);
    let (n_v, n_i) = default_profile(params.d);
    Ok(GridSpec {
        n_v,
        half_width: safety * t_wide.sqrt(),
        center: state.u,
        n_i,
        i_max: (t_star * TAIL_LOG).powf(params.delta / 2.0),
    })
}

impl PhaseGrid {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Total node count `n_v^d * n_i`.
    pub fn n_nodes(&self) -> usize {
        self.n_vflat * self.spec.n_i
    }

    /// Flattened velocity node count `n_v^d`.
    pub fn n_velocity_nodes(&self) -> usize {
        self.n_vflat
    }

    pub fn n_i(&self) -> usize {
        self.spec.n_i
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Sum of all quadrature weights; equals the box measure
    /// `(2 L_v)^d * I_max` up to rounding.
    pub fn total_weight(&self) -> f64 {
        self.cell_volume * self.n_nodes() as f64
    }

    /// Velocity coordinates of flattened velocity node `vflat`.
    pub fn velocity(&self, vflat: usize) -> [f64; 3] {
        self.v_lookup[vflat]
    }

    pub fn velocity_axis(&self, axis: usize) -> &[f64] {
        &self.v_axes[axis]
    }

    pub fn i_node(&self, k: usize) -> f64 {
        self.i_nodes[k]
    }

    /// `I_k^(2/delta)`.
    pub fn i_energy(&self, k: usize) -> f64 {
        self.i_energy[k]
    }

    pub fn i_energies(&self) -> &[f64] {
        &self.i_energy
    }

    /// Flat node index of `(vflat, k)`; the I index varies fastest.
    pub fn node_index(&self, vflat: usize, k: usize) -> usize {
        vflat * self.spec.n_i + k
    }

    /// Largest velocity magnitude along the first axis (transport CFL speed).
    pub fn v1_max(&self) -> f64 {
        self.v_axes[0]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Integral of a grid function: fixed-order pairwise summation scaled by
    /// the cell volume. Rejects non-finite values, identifying the node.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        assert_eq!(values.len(), self.n_nodes(), "grid function length mismatch");
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node,
                value: values[node],
            });
        }
        Ok(self.cell_volume * pairwise_sum(values, values.len() >= PAR_BLOCKS * LEAF))
    }

    /// Fused deterministic reduction over all nodes. `leaf` accumulates one
    /// velocity block (all `n_i` internal nodes of `vflat`, starting at flat
    /// index `base`) into `K` lanes; blocks combine in a fixed pairwise tree.
    /// Results carry the cell volume already.
    pub fn reduce_blocks<const K: usize>(
        &self,
        leaf: &(dyn Fn(usize, usize) -> [f64; K] + Sync),
    ) -> [f64; K] {
        let mut acc = block_tree(self, leaf, 0, self.n_vflat);
        for lane in acc.iter_mut() {
            *lane *= self.cell_volume;
        }
        acc
    }
}

fn add<const K: usize>(mut a: [f64; K], b: [f64; K]) -> [f64; K] {
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x += y;
    }
    a
}

fn block_tree<const K: usize>(
    grid: &PhaseGrid,
    leaf: &(dyn Fn(usize, usize) -> [f64; K] + Sync),
    lo: usize,
    hi: usize,
) -> [f64; K] {
    let n = hi - lo;
    if n == 1 {
        return leaf(lo, grid.node_index(lo, 0));
    }
    let mid = lo + n / 2;
    let (a, b) = if n >= PAR_BLOCKS {
        rayon::join(
            || block_tree(grid, leaf, lo, mid),
            || block_tree(grid, leaf, mid, hi),
        )
    } else {
        (
            block_tree(grid, leaf, lo, mid),
            block_tree(grid, leaf, mid, hi),
        )
    };
    add(a, b)
}

/// Pairwise tree sum with a fixed sequential base case; the tree shape (and
/// therefore the result, bit for bit) depends only on the slice length.
pub fn pairwise_sum(values: &[f64], parallel: bool) -> f64 {
    let n = values.len();
    if n <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(n / 2);
    if parallel && n >= LEAF * PAR_BLOCKS {
        let (x, y) = rayon::join(|| pairwise_sum(a, true), || pairwise_sum(b, true));
        x + y
    } else {
        pairwise_sum(a, false) + pairwise_sum(b, false)
    }
}

/// Checks that a cell-sized grid function is finite and nonnegative.
pub fn validate_cell(grid: &PhaseGrid, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), grid.n_nodes(), "grid function length mismatch");
    for (node, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { node, value: v });
        }
        if v < 0.0 {
            return Err(Error::NegativeValue { node, value: v });
        }
    }
    Ok(())
}

/// Distribution values on a [`PhaseGrid`], one block per spatial cell
/// (`n_x = 1` for homogeneous runs).
#[derive(Debug, Clone)]
pub struct DistSnapshot {
    grid: Arc<PhaseGrid>,
    n_x: usize,
    dx: f64,
    values: Vec<f64>,
}

impl DistSnapshot {
    /// Single homogeneous cell.
    pub fn homogeneous(grid: Arc<PhaseGrid>, values: Vec<f64>) -> Result<Self> {
        validate_cell(&grid, &values)?;
        Ok(DistSnapshot {
            grid,
            n_x: 1,
            dx: 0.0,
            values,
        })
    }

    /// `n_x` spatial cells of width `dx`, values cell-major.
    pub fn spatial(grid: Arc<PhaseGrid>, n_x: usize, dx: f64, values: Vec<f64>) -> Result<Self> {
        assert!(n_x >= 1);
        assert_eq!(values.len(), n_x * grid.n_nodes());
        if n_x > 1 && !(dx > 0.0) {
            return Err(Error::InvalidParam {
                name: "dx",
                message: "spatial cell width must be positive",
                value: dx,
            });
        }
        for x in 0..n_x {
            validate_cell(&grid, &values[x * grid.n_nodes()..(x + 1) * grid.n_nodes()])?;
        }
        Ok(DistSnapshot {
            grid,
            n_x,
            dx,
            values,
        })
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn cell(&self, x: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.values[x * n..(x + 1) * n]
    }

    pub fn cell_mut(&mut self, x: usize) -> &mut [f64] {
        let n = self.grid.n_nodes();
        &mut self.values[x * n..(x + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}
