//! Grid quadrature against independent oracles: box measures, linearity,
//! adaptive-quadrature cross-checks, the midpoint refinement order, and the
//! box auto-sizing rules.

mod common;

use common::{adaptive_simpson, params, reference_state};
use esbgk_core::phase_grid::{auto_bounds, build_grid, GridSpec};
use proptest::prelude::*;

fn grid_1d(n_v: usize, half_width: f64, n_i: usize, i_max: f64) -> esbgk_core::PhaseGrid {
    build_grid(
        &GridSpec {
            n_v,
            half_width,
            center: [0.0; 3],
            n_i,
            i_max,
        },
        &params(1, 0.0, 0.5),
    )
    .unwrap()
}

/// Fill a d=1 grid with `g(v) * h(I)`.
fn fill(grid: &esbgk_core::PhaseGrid, g: impl Fn(f64) -> f64, h: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut values = vec![0.0; grid.n_nodes()];
    for vflat in 0..grid.n_velocity_nodes() {
        let v = grid.velocity(vflat)[0];
        for k in 0..grid.n_i() {
            values[grid.node_index(vflat, k)] = g(v) * h(grid.i_node(k));
        }
    }
    values
}

#[test]
fn gaussian_integrand_matches_adaptive_oracle() {
    // e^{-v^2/2} e^{-I} over a wide box integrates to sqrt(2 pi) * 1.
    let grid = grid_1d(128, 8.0, 256, 30.0);
    let values = fill(&grid, |v| (-0.5 * v * v).exp(), |i| (-i).exp());
    let got = grid.integrate(&values).unwrap();

    let oracle_v = adaptive_simpson(&|v: f64| (-0.5 * v * v).exp(), -8.0, 8.0, 1e-13);
    let oracle_i = adaptive_simpson(&|i: f64| (-i).exp(), 0.0, 30.0, 1e-13);
    let oracle = oracle_v * oracle_i;
    assert!(
        (oracle - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9,
        "oracle sanity"
    );
    assert!(
        (got - oracle).abs() <= 2e-3 * oracle,
        "grid {got} vs oracle {oracle}"
    );
}

#[test]
fn midpoint_refinement_is_second_order() {
    // The I-axis boundary term makes the error a clean O(h^2); Richardson
    // ratio under simultaneous 2x refinement must sit near 4.
    let exact = {
        let ov = adaptive_simpson(&|v: f64| (-0.5 * v * v).exp(), -8.0, 8.0, 1e-13);
        let oi = adaptive_simpson(&|i: f64| (-i).exp(), 0.0, 24.0, 1e-13);
        ov * oi
    };
    let mut errors = Vec::new();
    for scale in [1usize, 2, 4] {
        let grid = grid_1d(64 * scale, 8.0, 64 * scale, 24.0);
        let values = fill(&grid, |v| (-0.5 * v * v).exp(), |i| (-i).exp());
        errors.push((grid.integrate(&values).unwrap() - exact).abs());
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (3.2..=4.8).contains(&ratio),
            "refinement ratio {ratio} outside midpoint expectation, errors {errors:?}"
        );
    }
}

#[test]
fn auto_bounds_reference_cases() {
    let p = params(3, 0.0, 0.5);
    let mut st = reference_state(3);
    st.theta_tensor = esbgk_core::linalg::SymMat::scaled_identity(3, 1.0);
    let st = esbgk_core::MacroState::from_primitives(3, 2.0, 1.0, [0.0; 3], st.theta_tensor, 1.0);
    let spec = auto_bounds(&st, &p, 6.0).unwrap();
    assert!((spec.half_width - 6.0).abs() < 1e-12);
    assert!(spec.i_max >= 12.0 * 10.0f64.ln() - 1e-9);
    assert!((spec.i_max - 27.631021115928547).abs() < 1e-9);

    // safety below the minimum is refused.
    assert!(auto_bounds(&st, &p, 3.0).is_err());

    // Scaling every temperature by 4 doubles the box.
    let hot = esbgk_core::MacroState::from_primitives(
        3,
        2.0,
        1.0,
        [0.0; 3],
        esbgk_core::linalg::SymMat::scaled_identity(3, 4.0),
        4.0,
    );
    let spec4 = auto_bounds(&hot, &p, 6.0).unwrap();
    assert!((spec4.half_width - 2.0 * spec.half_width).abs() < 1e-12);
}

#[test]
fn auto_bounds_rejects_nonpositive_temperature() {
    let p = params(3, 0.0, 0.5);
    let bad = esbgk_core::MacroState::from_primitives(
        3,
        2.0,
        1.0,
        [0.0; 3],
        esbgk_core::linalg::SymMat::scaled_identity(3, -1.0),
        1.0,
    );
    assert!(auto_bounds(&bad, &p, 6.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let grid = grid_1d(16, 2.0, 8, 4.0);
        let n = grid.n_nodes();
        let f: Vec<f64> = (0..n).map(|i| {
            let x = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(seed);
            (x % 1000) as f64 / 500.0 - 1.0
        }).collect();
        let g: Vec<f64> = (0..n).map(|i| {
            let x = (i as u64).wrapping_mul(1442695040888963407).wrapping_add(seed ^ 0xabcd);
            (x % 1000) as f64 / 250.0
        }).collect();
        let combo: Vec<f64> = f.iter().zip(g.iter()).map(|(x, y)| a * x + b * y).collect();
        let lhs = grid.integrate(&combo).unwrap();
        let rhs = a * grid.integrate(&f).unwrap() + b * grid.integrate(&g).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn box_measure_matches_spec(
        n_v in 8usize..40,
        n_i in 8usize..40,
        half in 0.5f64..10.0,
        i_max in 0.5f64..40.0,
    ) {
        let grid = build_grid(
            &GridSpec { n_v, half_width: half, center: [0.3; 3], n_i, i_max },
            &params(2, 0.0, 0.5),
        ).unwrap();
        let measure = (2.0 * half).powi(2) * i_max;
        prop_assert!((grid.total_weight() - measure).abs() <= 1e-12 * measure);
        let ones = vec![1.0; grid.n_nodes()];
        prop_assert!((grid.integrate(&ones).unwrap() - measure).abs() <= 1e-12 * measure);
    }
}
