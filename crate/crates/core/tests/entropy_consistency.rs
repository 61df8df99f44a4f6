//! Entropy functionals against closed forms and each other: the discrete H
//! of every constructed Gaussian must approach its closed form, the ordering
//! lemmas must certify on large seeded sweeps, and the convexity and Gibbs
//! inequalities must hold on the grid.

mod common;

use common::{adaptive_simpson, params, reference_state};
use esbgk_core::entropy::{
    certify_lemma21, certify_lemma22, certify_lemma31, h_closed_form, h_functional,
    kullback_certificate, lemma31_explicit_formula, relative_entropy, tol_quad, GaussianKind,
};
use esbgk_core::gaussians::{
    lambda_delta, maxwellian_00, maxwellian_01, GaussianMixture,
};
use esbgk_core::moments::{collision_frequency, compute_moments, corrected_tensor};
use esbgk_core::phase_grid::{auto_bounds, build_grid};
use esbgk_core::sampling::{random_mixture, random_state};
use esbgk_core::solver::relaxation_target;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

#[test]
fn lambda_delta_matches_defining_integral() {
    // Independent adaptive quadrature of 1 / integral exp(-I^(2/delta)) dI.
    for (delta, cutoff) in [(1.0, 12.0), (2.0, 60.0), (3.0, 250.0), (4.0, 1200.0)] {
        let integral = adaptive_simpson(
            &|i: f64| (-i.powf(2.0 / delta)).exp(),
            0.0,
            cutoff,
            1e-13,
        );
        let oracle = 1.0 / integral;
        let got = lambda_delta(delta).unwrap();
        assert!(
            (got - oracle).abs() <= 1e-10 * oracle,
            "delta {delta}: {got} vs oracle {oracle}"
        );
    }
}

#[test]
fn discrete_h_matches_closed_form_on_fine_1d_grid() {
    // d = 1 grid fine enough that the I-axis error is far below the check
    // tolerance; the four kinds collapse to two distinct densities at d = 1.
    let p = params(1, 0.3, 0.4);
    let st = reference_state(1);
    let ct = corrected_tensor(&st, &p).unwrap();
    let mut spec = auto_bounds(&st, &p, 7.0).unwrap();
    spec.n_v = 512;
    spec.n_i = 2048;
    let grid = build_grid(&spec, &p).unwrap();

    for (kind, values) in [
        (
            GaussianKind::Maxwellian01,
            maxwellian_01(&st, &p, &grid).unwrap(),
        ),
        (
            GaussianKind::Maxwellian00,
            maxwellian_00(&st, &p, &grid).unwrap(),
        ),
    ] {
        let closed = h_closed_form(kind, &st, Some(&ct), &p).unwrap();
        let discrete = h_functional(&grid, &values).unwrap();
        assert!(
            (discrete - closed).abs() <= 2e-4 * (1.0 + closed.abs()),
            "{kind:?}: discrete {discrete} closed {closed}"
        );
    }
}

#[test]
fn relative_entropy_equals_closed_h_difference_for_shared_moments() {
    // H(M00 | M01) = H(M00) - H(M01) because both share (rho, U, E_delta).
    let p = params(2, 0.0, 0.5);
    let st = reference_state(2);
    let mut spec = auto_bounds(&st, &p, 7.0).unwrap();
    spec.n_v = 128;
    spec.n_i = 1024;
    let grid = build_grid(&spec, &p).unwrap();
    let m00 = maxwellian_00(&st, &p, &grid).unwrap();
    let m01 = maxwellian_01(&st, &p, &grid).unwrap();
    let rel = relative_entropy(&grid, &m00, &m01).unwrap();
    let closed = h_closed_form(GaussianKind::Maxwellian00, &st, None, &p).unwrap()
        - h_closed_form(GaussianKind::Maxwellian01, &st, None, &p).unwrap();
    assert!(rel > 0.0, "distinct temperatures force H(M00|M01) > 0");
    assert!(
        (rel - closed).abs() <= 1e-3 * (1.0 + closed.abs()),
        "rel {rel} vs closed {closed}"
    );
}

#[test]
fn gibbs_nonnegativity_on_random_equal_mass_pairs() {
    let p = params(1, 0.0, 0.5);
    for seed in 0..10u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let mix_f = random_mixture(1, p.delta, 3, &mut rng);
        let mix_g = random_mixture(1, p.delta, 2, &mut rng);
        let st = mix_f.analytic_state();
        let mut spec = auto_bounds(&st, &p, 7.0).unwrap();
        // Cover both mixtures' modes.
        spec.half_width += 4.0;
        let grid = build_grid(&spec, &p).unwrap();
        let f = mix_f.evaluate(&grid).unwrap();
        let mut g = mix_g.evaluate(&grid).unwrap();
        let mass_f = grid.integrate(&f).unwrap();
        let mass_g = grid.integrate(&g).unwrap();
        let scale = mass_f / mass_g;
        g.iter_mut().for_each(|x| *x *= scale);
        let rel = relative_entropy(&grid, &f, &g).unwrap();
        assert!(rel >= -1e-12 * mass_f, "seed {seed}: H(f|g) = {rel}");
    }
}

#[test]
fn lemma21_sweep_is_nonnegative() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut min_gap = f64::INFINITY;
    for i in 0..1000 {
        let st = random_state(3, 2.0, &mut rng);
        let theta = 1.0 - rng.random::<f64>() * 0.999;
        let nu = rng.random_range(-0.49..0.99);
        let cert = certify_lemma21(&st, &params(3, nu, theta)).unwrap();
        assert!(cert.passed, "sample {i}: gap {} tol {}", cert.gap, cert.tolerance);
        min_gap = min_gap.min(cert.gap);
    }
    assert!(min_gap >= -1e-12, "min gap {min_gap}");
}

#[test]
fn lemma31_sweep_and_formula_identity() {
    let mut rng = StdRng::seed_from_u64(4040);
    for i in 0..1000 {
        let st = random_state(3, 2.0, &mut rng);
        let nu = rng.random_range(-0.49..0.99);
        let p = params(3, nu, 0.0);
        let cert = certify_lemma31(&st, &p).unwrap();
        assert!(cert.passed, "sample {i}: gap {}", cert.gap);
        // The two-branch explicit formula is exactly the generic bound.
        assert!(
            cert.formula_consistency <= cert.tolerance,
            "sample {i}: formula mismatch {}",
            cert.formula_consistency
        );
        // And the full difference dominates it (concavity direction).
        assert!(
            cert.concavity_slack >= -cert.tolerance,
            "sample {i}: concavity slack {}",
            cert.concavity_slack
        );
        assert!((lemma31_explicit_formula(&st, &p) - cert.explicit_formula).abs() == 0.0);
    }
}

#[test]
fn lemma22_ordering_on_mixtures() {
    let p = params(2, 0.2, 0.6);
    for seed in [11u64, 29, 57] {
        let mut rng = StdRng::seed_from_u64(seed);
        let mix = random_mixture(2, p.delta, 3, &mut rng);
        let st_guess = mix.analytic_state();
        let spec = auto_bounds(&st_guess, &p, 6.5).unwrap();
        let grid = build_grid(&spec, &p).unwrap();
        let f = mix.evaluate(&grid).unwrap();
        let st = compute_moments(&grid, &f, &p).unwrap();
        let (closed, measured) = certify_lemma22(&grid, &f, &st, &p).unwrap();
        assert!(closed.passed, "seed {seed}: H(M_Theta) < H(M01) by {}", closed.gap);
        assert!(measured.passed, "seed {seed}: H(f) < H(M_Theta) by {}", measured.gap);
    }
}

#[test]
fn lemma22_gaps_for_constructed_gaussians() {
    let p = params(2, 0.2, 0.6);
    let st = reference_state(2);
    let mut spec = auto_bounds(&st, &p, 6.5).unwrap();
    spec.n_i = 512;
    let grid = build_grid(&spec, &p).unwrap();

    // f = discretized M01: both gaps vanish within quadrature tolerance
    // (the first is closed-form and genuinely positive for anisotropic
    // stress; here it measures the anisotropy of the reference state).
    let m01 = maxwellian_01(&st, &p, &grid).unwrap();
    let st_m01 = compute_moments(&grid, &m01, &p).unwrap();
    let (closed, measured) = certify_lemma22(&grid, &m01, &st_m01, &p).unwrap();
    assert!(closed.gap.abs() <= 1e-3, "M01 is isotropic: {}", closed.gap);
    assert!(measured.gap.abs() <= measured.tolerance);

    // f = discretized M_Theta with anisotropic stress: first gap strictly
    // positive, second vanishes within tolerance.
    let mth = esbgk_core::gaussians::gaussian_theta(&st, &p, &grid).unwrap();
    let st_mth = compute_moments(&grid, &mth, &p).unwrap();
    let (closed, measured) = certify_lemma22(&grid, &mth, &st_mth, &p).unwrap();
    assert!(closed.gap > 1e-4, "anisotropy gap {}", closed.gap);
    assert!(measured.gap.abs() <= measured.tolerance);
}

#[test]
fn production_dominates_h_difference() {
    // D >= A (H(f) - H(M)) is exact on the grid for the mass-matched target
    // (pointwise convexity of x ln x with positive weights).
    let p = params(2, 0.4, 0.5);
    for seed in [5u64, 23] {
        let mut rng = StdRng::seed_from_u64(seed);
        let mix = random_mixture(2, p.delta, 3, &mut rng);
        let st_guess = mix.analytic_state();
        let spec = auto_bounds(&st_guess, &p, 6.5).unwrap();
        let grid = build_grid(&spec, &p).unwrap();
        let f = mix.evaluate(&grid).unwrap();
        let st = compute_moments(&grid, &f, &p).unwrap();
        let a = collision_frequency(&st, &p);

        let target = relaxation_target(&grid, &f, &p, true).unwrap();
        let d_prod = esbgk_core::entropy::entropy_production(&grid, &f, &target.m, a).unwrap();
        let h_f = h_functional(&grid, &f).unwrap();
        let h_m = h_functional(&grid, &target.m).unwrap();
        let slack = d_prod - a * (h_f - h_m);
        assert!(
            slack >= -1e-10 * (1.0 + d_prod.abs()),
            "seed {seed}: convexity slack {slack}"
        );
    }
}

#[test]
fn kullback_bound_for_two_temperature_pair() {
    // f = M00, g = M01 at T_tr = 2, T_int = 1: the L1 distance obeys the
    // Kullback bound, both sides by quadrature.
    let theta_tensor = esbgk_core::linalg::SymMat::scaled_identity(2, 2.0);
    let st = esbgk_core::MacroState::from_primitives(2, 2.0, 1.0, [0.0; 3], theta_tensor, 1.0);
    let p = params(2, 0.0, 0.5);
    let mut spec = auto_bounds(&st, &p, 7.0).unwrap();
    spec.n_i = 512;
    let grid = build_grid(&spec, &p).unwrap();
    let f = maxwellian_00(&st, &p, &grid).unwrap();
    let mut g = maxwellian_01(&st, &p, &grid).unwrap();
    let scale = grid.integrate(&f).unwrap() / grid.integrate(&g).unwrap();
    g.iter_mut().for_each(|x| *x *= scale);
    let rel = relative_entropy(&grid, &f, &g).unwrap();
    let cert = kullback_certificate(&grid, &f, &g, rel, tol_quad(st.rho, -5.0)).unwrap();
    assert!(cert.l1 > 0.0);
    assert!(cert.passed, "l1 {} bound {}", cert.l1, cert.bound);
}

#[test]
fn production_clamps_vanished_support() {
    let p = params(1, 0.0, 0.5);
    let st = reference_state(1);
    let spec = auto_bounds(&st, &p, 6.5).unwrap();
    let grid = build_grid(&spec, &p).unwrap();
    let m = maxwellian_01(&st, &p, &grid).unwrap();
    // f vanishes on half the grid while the target is positive there.
    let mut f = m.clone();
    for (i, v) in f.iter_mut().enumerate() {
        if i % 2 == 0 {
            *v = 0.0;
        }
    }
    let (d_prod, clamped) =
        esbgk_core::entropy::production_with_clamp(&grid, &f, &m, 1.0).unwrap();
    assert!(d_prod.is_finite());
    assert!(clamped > 0);
}

#[test]
fn h_closed_form_rejects_bad_inputs() {
    let p = params(3, 0.2, 0.5);
    let mut st = reference_state(3);
    st.rho = -1.0;
    assert!(h_closed_form(GaussianKind::Maxwellian01, &st, None, &p).is_err());
    let mut st = reference_state(3);
    st.t_int = 0.0;
    assert!(h_closed_form(GaussianKind::Maxwellian00, &st, None, &p).is_err());
    let st = reference_state(3);
    assert!(h_closed_form(GaussianKind::EllipsoidalNuTheta, &st, None, &p).is_err());
}

#[test]
fn mixture_h_is_above_maxwellian_h() {
    // A genuinely bimodal distribution carries strictly more H than the
    // Gaussian with its moments.
    let p = params(1, 0.0, 0.5);
    let mix = GaussianMixture::bimodal(
        1,
        2.0,
        1.0,
        [0.5, 0.5],
        [[2.0, 0.0, 0.0], [-2.0, 0.0, 0.0]],
        [
            esbgk_core::linalg::SymMat::scaled_identity(1, 0.5),
            esbgk_core::linalg::SymMat::scaled_identity(1, 0.5),
        ],
        [1.0, 1.0],
    );
    let st_guess = mix.analytic_state();
    let spec = auto_bounds(&st_guess, &p, 6.5).unwrap();
    let grid = build_grid(&spec, &p).unwrap();
    let f = mix.evaluate(&grid).unwrap();
    let st = compute_moments(&grid, &f, &p).unwrap();
    let (_, measured) = certify_lemma22(&grid, &f, &st, &p).unwrap();
    assert!(measured.gap > 0.1, "bimodal H excess {}", measured.gap);
}
