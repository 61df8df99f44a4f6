//! Scenario files: a single JSON document describing model parameters, the
//! grid (explicit or auto-sized), the initial condition family, the solver
//! configuration, and output paths.

#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use serde::Deserialize;

use esbgk_core::gaussians::{GaussianMixture, MixtureComponent};
use esbgk_core::linalg::SymMat;
use esbgk_core::moments::MacroState;
use esbgk_core::params::ModelParams;
use esbgk_core::phase_grid::{auto_bounds, build_grid, DistSnapshot, GridSpec, PhaseGrid, DEFAULT_SAFETY};
use esbgk_core::sampling::random_mixture;
use esbgk_core::solver::{Scheme, SolverConfig, TransportConfig};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: ParamsSpec,
    #[serde(default)]
    pub grid: GridChoice,
    pub initial: InitialSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub d: usize,
    pub delta: f64,
    pub nu: f64,
    pub theta: f64,
    pub mu: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum GridChoice {
    #[default]
    Unset,
    Named(String),
    Explicit(GridSpecDe),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpecDe {
    pub n_v: usize,
    pub half_width: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    pub n_i: usize,
    pub i_max: f64,
    #[serde(default = "default_safety")]
    pub safety: Option<f64>,
}

fn default_safety() -> Option<f64> {
    None
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Maxwellian01 {
        rho: f64,
        u: Vec<f64>,
        t_delta: f64,
    },
    Maxwellian00 {
        rho: f64,
        u: Vec<f64>,
        t_tr: f64,
        t_int: f64,
    },
    GaussianTheta {
        rho: f64,
        u: Vec<f64>,
        theta_tensor: Vec<Vec<f64>>,
        t_int: f64,
    },
    Bimodal {
        rho: f64,
        weights: [f64; 2],
        means: Vec<Vec<f64>>,
        covs: Vec<Vec<Vec<f64>>>,
        t_i: [f64; 2],
    },
    RandomMixture {
        k: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_report_every")]
    pub report_every: usize,
    #[serde(default = "default_true")]
    pub conservative: bool,
    #[serde(default)]
    pub transport: Option<TransportSpec>,
}

fn default_scheme() -> String {
    "exponential".to_string()
}

fn default_report_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    pub n_x: usize,
    pub dx: f64,
    /// Relative amplitude of the sinusoidal density profile applied to the
    /// initial condition across the periodic domain.
    #[serde(default)]
    pub density_wave: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "default_csv")]
    pub trajectory_csv: String,
    #[serde(default = "default_report")]
    pub report_json: String,
    /// Write the final distribution as a binary snapshot with this name.
    #[serde(default)]
    pub final_snapshot: Option<String>,
}

fn default_csv() -> String {
    "trajectory.csv".to_string()
}

fn default_report() -> String {
    "final_report.json".to_string()
}

/// A fully validated, buildable scenario.
pub struct Prepared {
    pub params: ModelParams,
    pub grid: Arc<PhaseGrid>,
    pub f0: Vec<f64>,
    pub initial_state: MacroState,
    pub cfg: SolverConfig,
    pub transport_field: Option<DistSnapshot>,
}

fn vec_to_array(name: &str, v: &[f64], d: usize) -> Result<[f64; 3], String> {
    if v.len() != d {
        return Err(format!("field `{name}` must have {d} entries, got {}", v.len()));
    }
    let mut out = [0.0; 3];
    out[..d].copy_from_slice(v);
    Ok(out)
}

fn matrix_to_sym(name: &str, m: &[Vec<f64>], d: usize) -> Result<SymMat, String> {
    if m.len() != d || m.iter().any(|row| row.len() != d) {
        return Err(format!("field `{name}` must be a {d}x{d} matrix"));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * (1.0 + m[i][j].abs()) {
                return Err(format!("field `{name}` must be symmetric"));
            }
        }
    }
    let sym = SymMat::from_upper(d, |i, j| m[i][j]);
    if sym.eigen().min() <= 0.0 {
        return Err(format!("field `{name}` must be positive definite"));
    }
    Ok(sym)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, String> {
        serde_json::from_str(text).map_err(|e| format!("scenario parse error: {e}"))
    }

    /// Validates everything and builds the grid and initial distribution.
    pub fn prepare(&self) -> Result<Prepared, String> {
        let params = ModelParams::new(
            self.params.d,
            self.params.delta,
            self.params.nu,
            self.params.theta,
            self.params.mu,
        )
        .map_err(|e| format!("params: {e}"))?;
        let d = params.d;

        // Initial condition as a mixture plus its analytic moments.
        let (mixture, state) = self.initial_mixture(&params)?;

        let grid_spec = match &self.grid {
            GridChoice::Unset => auto_bounds(&state, &params, DEFAULT_SAFETY)
                .map_err(|e| format!("grid auto-sizing: {e}"))?,
            GridChoice::Named(name) if name == "auto" => {
                auto_bounds(&state, &params, DEFAULT_SAFETY)
                    .map_err(|e| format!("grid auto-sizing: {e}"))?
            }
            GridChoice::Named(name) => {
                return Err(format!("grid: unknown name `{name}` (expected \"auto\")"))
            }
            GridChoice::Explicit(g) => {
                let center = if g.center.is_empty() {
                    state.u
                } else {
                    vec_to_array("grid.center", &g.center, d)?
                };
                if let Some(s) = g.safety {
                    return Err(format!(
                        "grid: `safety` ({s}) only applies to auto grids; remove it or use \"auto\""
                    ));
                }
                GridSpec {
                    n_v: g.n_v,
                    half_width: g.half_width,
                    center,
                    n_i: g.n_i,
                    i_max: g.i_max,
                }
            }
        };
        let grid = Arc::new(build_grid(&grid_spec, &params).map_err(|e| format!("grid: {e}"))?);

        let scheme = match self.solver.scheme.as_str() {
            "exponential" => Scheme::Exponential,
            "rk4" => Scheme::Rk4,
            other => return Err(format!("solver.scheme: unknown scheme `{other}`")),
        };
        let mut cfg = SolverConfig::new(self.solver.dt, self.solver.t_end, params);
        cfg.scheme = scheme;
        cfg.report_every = self.solver.report_every;
        cfg.conservative = self.solver.conservative;

        let f0 = mixture
            .evaluate(&grid)
            .map_err(|e| format!("initial condition: {e}"))?;

        let transport_field = if let Some(tr) = &self.solver.transport {
            if tr.n_x < 2 || !(tr.dx > 0.0) {
                return Err("solver.transport: need n_x >= 2 and dx > 0".to_string());
            }
            cfg.transport = Some(TransportConfig {
                n_x: tr.n_x,
                dx: tr.dx,
            });
            let wave = tr.density_wave;
            if !(0.0..1.0).contains(&wave) {
                return Err("solver.transport.density_wave must lie in [0, 1)".to_string());
            }
            let n = grid.n_nodes();
            let mut values = vec![0.0; tr.n_x * n];
            for x in 0..tr.n_x {
                let scale =
                    1.0 + wave * (2.0 * std::f64::consts::PI * x as f64 / tr.n_x as f64).sin();
                for (slot, v) in values[x * n..(x + 1) * n].iter_mut().zip(f0.iter()) {
                    *slot = scale * v;
                }
            }
            Some(
                DistSnapshot::spatial(grid.clone(), tr.n_x, tr.dx, values)
                    .map_err(|e| format!("transport field: {e}"))?,
            )
        } else {
            None
        };

        Ok(Prepared {
            params,
            grid,
            f0,
            initial_state: state,
            cfg,
            transport_field,
        })
    }

    fn initial_mixture(&self, params: &ModelParams) -> Result<(GaussianMixture, MacroState), String> {
        let d = params.d;
        let delta = params.delta;
        let single = |rho: f64,
                      u: [f64; 3],
                      cov: SymMat,
                      t_i: f64|
         -> Result<(GaussianMixture, MacroState), String> {
            if !(rho > 0.0) || !(t_i > 0.0) {
                return Err("initial: density and temperatures must be positive".to_string());
            }
            let mix = GaussianMixture::new(
                d,
                delta,
                rho,
                vec![MixtureComponent {
                    weight: 1.0,
                    mean: u,
                    cov,
                    t_i,
                }],
            );
            let st = mix.analytic_state();
            Ok((mix, st))
        };

        match &self.initial {
            InitialSpec::Maxwellian01 { rho, u, t_delta } => {
                let u = vec_to_array("initial.u", u, d)?;
                if !(*t_delta > 0.0) {
                    return Err("initial.t_delta must be positive".to_string());
                }
                single(*rho, u, SymMat::scaled_identity(d, *t_delta), *t_delta)
            }
            InitialSpec::Maxwellian00 { rho, u, t_tr, t_int } => {
                let u = vec_to_array("initial.u", u, d)?;
                if !(*t_tr > 0.0) || !(*t_int > 0.0) {
                    return Err("initial temperatures must be positive".to_string());
                }
                single(*rho, u, SymMat::scaled_identity(d, *t_tr), *t_int)
            }
            InitialSpec::GaussianTheta {
                rho,
                u,
                theta_tensor,
                t_int,
            } => {
                let u = vec_to_array("initial.u", u, d)?;
                let sym = matrix_to_sym("initial.theta_tensor", theta_tensor, d)?;
                if !(*t_int > 0.0) {
                    return Err("initial.t_int must be positive".to_string());
                }
                single(*rho, u, sym, *t_int)
            }
            InitialSpec::Bimodal {
                rho,
                weights,
                means,
                covs,
                t_i,
            } => {
                if means.len() != 2 || covs.len() != 2 {
                    return Err("initial: bimodal needs exactly 2 means and covs".to_string());
                }
                if weights.iter().any(|w| !(*w > 0.0)) || t_i.iter().any(|t| !(*t > 0.0)) {
                    return Err("initial: weights and temperatures must be positive".to_string());
                }
                let mix = GaussianMixture::bimodal(
                    d,
                    delta,
                    *rho,
                    *weights,
                    [
                        vec_to_array("initial.means[0]", &means[0], d)?,
                        vec_to_array("initial.means[1]", &means[1], d)?,
                    ],
                    [
                        matrix_to_sym("initial.covs[0]", &covs[0], d)?,
                        matrix_to_sym("initial.covs[1]", &covs[1], d)?,
                    ],
                    *t_i,
                );
                let st = mix.analytic_state();
                Ok((mix, st))
            }
            InitialSpec::RandomMixture { k } => {
                if *k == 0 || *k > 16 {
                    return Err("initial.k must lie in 1..=16".to_string());
                }
                let mut rng = StdRng::seed_from_u64(self.seed);
                let mix = random_mixture(d, delta, *k, &mut rng);
                let st = mix.analytic_state();
                Ok((mix, st))
            }
        }
    }
}
