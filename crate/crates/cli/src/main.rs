//! Batch front-end: runs relaxation scenarios, sweeps closed-form
//! certificates over random states, calibrates grid tolerances, and compares
//! binary snapshots.
//!
//! Subcommands:
//!
//! ```text
//! esbgk run <scenario.json>
//! esbgk certify --regime theta-pos|theta-zero [--samples N] [--seed S] [--d D] [--delta X]
//! esbgk refine <scenario.json>
//! esbgk snapshot-diff <a.snap> <b.snap>
//! ```
//!
//! `ESBGK_OUT_DIR` overrides the output directory of `run`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use esbgk_core::entropy::{certify_lemma21, certify_lemma31, h_closed_form, h_functional, GaussianKind};
use esbgk_core::gaussians::{ellipsoidal_gaussian, gaussian_theta, maxwellian_00, maxwellian_01};
use esbgk_core::moments::{compute_moments, corrected_tensor};
use esbgk_core::params::ModelParams;
use esbgk_core::phase_grid::{build_grid, DistSnapshot, GridSpec};
use esbgk_core::sampling::random_state;
use esbgk_core::solver::{run_homogeneous, run_transport, Trajectory};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use esbgk_cli::scenario::Scenario;
use esbgk_cli::snapshot;

const USAGE: &str = "usage:
  esbgk run <scenario.json>
  esbgk certify --regime theta-pos|theta-zero [--samples N] [--seed S] [--d D] [--delta X]
  esbgk refine <scenario.json>
  esbgk snapshot-diff <a.snap> <b.snap>

environment:
  ESBGK_OUT_DIR  overrides the output directory of `run`";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match args.first().map(|s| s.as_str()) {
        Some("run") => cmd_run(&args[1..]),
        Some("certify") => cmd_certify(&args[1..]),
        Some("refine") => cmd_refine(&args[1..]),
        Some("snapshot-diff") => cmd_snapshot_diff(&args[1..]),
        _ => {
            eprintln!("{USAGE}");
            Ok(2)
        }
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(path: &str) -> Result<Scenario, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read scenario `{path}`: {e}"))?;
    Scenario::parse(&text)
}

fn out_dir(spec_dir: &Option<String>) -> PathBuf {
    if let Ok(dir) = std::env::var("ESBGK_OUT_DIR") {
        return PathBuf::from(dir);
    }
    PathBuf::from(spec_dir.clone().unwrap_or_else(|| ".".to_string()))
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory, d: usize, theta: f64) -> Result<(), String> {
    let mut file =
        fs::File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let u_cols: Vec<String> = (1..=d).map(|a| format!("u{a}")).collect();
    writeln!(
        file,
        "t,rho,{},t_tr,t_int,t_delta,h_f,production,collision_freq,rel_h_target,theorem_gap,l1_to_target,kullback_bound,mass_drift,momentum_drift,energy_drift",
        u_cols.join(",")
    )
    .map_err(|e| e.to_string())?;
    for pt in &traj.points {
        let rel_target = if theta > 0.0 {
            pt.report.rel_h01
        } else {
            pt.report.rel_h00
        };
        let u: Vec<String> = (0..d).map(|a| format!("{}", pt.state.u[a])).collect();
        writeln!(
            file,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            pt.t,
            pt.state.rho,
            u.join(","),
            pt.state.t_tr,
            pt.state.t_int,
            pt.state.t_delta,
            pt.report.h_f,
            pt.report.production,
            pt.report.collision_freq,
            rel_target,
            pt.report.theorem_gap,
            pt.report.l1_to_target,
            pt.report.kullback_bound,
            pt.mass_drift,
            pt.momentum_drift,
            pt.energy_drift
        )
        .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_run(args: &[String]) -> Result<u8, String> {
    let path = args.first().ok_or_else(|| USAGE.to_string())?;
    let sc = load_scenario(path)?;
    let prepared = sc.prepare()?;
    let dir = out_dir(&sc.output.dir);
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;

    if let Some(field) = &prepared.transport_field {
        let traj = run_transport(field, &prepared.cfg).map_err(|e| e.to_string())?;
        let csv = dir.join(&sc.output.trajectory_csv);
        let mut file =
            fs::File::create(&csv).map_err(|e| format!("cannot create {}: {e}", csv.display()))?;
        writeln!(file, "t,total_mass,h_min,h_max").map_err(|e| e.to_string())?;
        let mut all_finite = true;
        for pt in &traj.points {
            let h_min = pt.cell_h.iter().cloned().fold(f64::INFINITY, f64::min);
            let h_max = pt.cell_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            all_finite &= pt.cell_h.iter().all(|h| h.is_finite());
            writeln!(file, "{},{},{},{}", pt.t, pt.total_mass, h_min, h_max)
                .map_err(|e| e.to_string())?;
        }
        let report = serde_json::json!({
            "kind": "transport",
            "stamps": traj.points.len(),
            "failure": traj.failure,
            "mass_initial": traj.points.first().map(|p| p.total_mass),
            "mass_final": traj.points.last().map(|p| p.total_mass),
            "cell_h_finite": all_finite,
        });
        fs::write(
            dir.join(&sc.output.report_json),
            serde_json::to_string_pretty(&report).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        if let Some(name) = &sc.output.final_snapshot {
            snapshot::write_file(&dir.join(name), &traj.final_f, &prepared.params)
                .map_err(|e| e.to_string())?;
        }
        let ok = traj.failure.is_none() && all_finite;
        if !ok {
            eprintln!("transport run failed: {:?}", traj.failure);
        }
        return Ok(if ok { 0 } else { 1 });
    }

    let traj = run_homogeneous(&prepared.grid, &prepared.f0, &prepared.cfg)
        .map_err(|e| e.to_string())?;
    write_trajectory_csv(
        &dir.join(&sc.output.trajectory_csv),
        &traj,
        prepared.params.d,
        prepared.params.theta,
    )?;

    let all_passed = traj.all_certificates_passed();
    let final_report = serde_json::json!({
        "kind": "homogeneous",
        "stamps": traj.points.len(),
        "failure": traj.failure,
        "all_certificates_passed": all_passed,
        "final": traj.points.last(),
    });
    fs::write(
        dir.join(&sc.output.report_json),
        serde_json::to_string_pretty(&final_report).unwrap(),
    )
    .map_err(|e| e.to_string())?;

    if let Some(name) = &sc.output.final_snapshot {
        let snap = DistSnapshot::homogeneous(prepared.grid.clone(), traj.final_f.clone())
            .map_err(|e| e.to_string())?;
        snapshot::write_file(&dir.join(name), &snap, &prepared.params)
            .map_err(|e| e.to_string())?;
    }

    if let Some(failure) = &traj.failure {
        eprintln!("run truncated: {failure}");
        return Ok(1);
    }
    if !all_passed {
        let failed: Vec<&str> = traj
            .points
            .iter()
            .flat_map(|p| p.report.certificates.iter())
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        eprintln!("certificates failed: {failed:?}");
        return Ok(1);
    }
    Ok(0)
}

fn flag_value<'a>(args: &'a [String], name: &str) -> Option<&'a str> {
    args.iter()
        .position(|a| a == name)
        .and_then(|i| args.get(i + 1))
        .map(|s| s.as_str())
}

fn cmd_certify(args: &[String]) -> Result<u8, String> {
    let regime = flag_value(args, "--regime").ok_or("certify: --regime is required")?;
    let samples: usize = flag_value(args, "--samples")
        .unwrap_or("1000")
        .parse()
        .map_err(|_| "certify: bad --samples")?;
    let seed: u64 = flag_value(args, "--seed")
        .unwrap_or("0")
        .parse()
        .map_err(|_| "certify: bad --seed")?;
    let d: usize = flag_value(args, "--d")
        .unwrap_or("3")
        .parse()
        .map_err(|_| "certify: bad --d")?;
    let delta: f64 = flag_value(args, "--delta")
        .unwrap_or("2.0")
        .parse()
        .map_err(|_| "certify: bad --delta")?;
    if !(1..=3).contains(&d) || !(delta > 0.0) {
        return Err("certify: need d in 1..=3 and delta > 0".to_string());
    }

    let theta_zero = match regime {
        "theta-pos" => false,
        "theta-zero" => true,
        other => return Err(format!("certify: unknown regime `{other}`")),
    };

    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut failures = 0usize;
    let mut min_gap = f64::INFINITY;
    let mut max_formula_mismatch = 0.0f64;
    for _ in 0..samples {
        let st = random_state(d, delta, &mut rng);
        let nu = rng.random_range(-0.49..0.99);
        if theta_zero {
            let p = ModelParams {
                d,
                delta,
                nu,
                theta: 0.0,
                mu: 1.0,
            };
            let cert = certify_lemma31(&st, &p).map_err(|e| e.to_string())?;
            if !cert.passed || cert.formula_consistency > cert.tolerance {
                failures += 1;
            }
            min_gap = min_gap.min(cert.gap);
            max_formula_mismatch = max_formula_mismatch.max(cert.formula_consistency);
        } else {
            let theta = 1.0 - rng.random::<f64>() * 0.999;
            let p = ModelParams {
                d,
                delta,
                nu,
                theta,
                mu: 1.0,
            };
            let cert = certify_lemma21(&st, &p).map_err(|e| e.to_string())?;
            if !cert.passed {
                failures += 1;
            }
            min_gap = min_gap.min(cert.gap);
        }
    }
    let summary = serde_json::json!({
        "regime": regime,
        "samples": samples,
        "seed": seed,
        "d": d,
        "delta": delta,
        "failures": failures,
        "min_gap": min_gap,
        "max_formula_mismatch": if theta_zero { Some(max_formula_mismatch) } else { None },
        "elapsed_s": started.elapsed().as_secs_f64(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(if failures == 0 { 0 } else { 1 })
}

fn cmd_refine(args: &[String]) -> Result<u8, String> {
    let path = args.first().ok_or_else(|| USAGE.to_string())?;
    let sc = load_scenario(path)?;
    let prepared = sc.prepare()?;
    let params = prepared.params;
    let st = prepared.initial_state.clone();
    let ct = corrected_tensor(&st, &params).map_err(|e| e.to_string())?;

    let base_spec = *prepared.grid.spec();
    let fine_spec = GridSpec {
        n_v: base_spec.n_v * 2,
        n_i: base_spec.n_i * 2,
        ..base_spec
    };

    let kinds = [
        ("maxwellian_01", GaussianKind::Maxwellian01),
        ("maxwellian_00", GaussianKind::Maxwellian00),
        ("gaussian_theta", GaussianKind::GaussianTheta),
        ("ellipsoidal", GaussianKind::EllipsoidalNuTheta),
    ];
    let h_errors = |spec: &GridSpec| -> Result<(Vec<f64>, f64, f64), String> {
        let grid = build_grid(spec, &params).map_err(|e| e.to_string())?;
        let mut errs = Vec::new();
        for (_, kind) in &kinds {
            let values = match kind {
                GaussianKind::Maxwellian01 => maxwellian_01(&st, &params, &grid),
                GaussianKind::Maxwellian00 => maxwellian_00(&st, &params, &grid),
                GaussianKind::GaussianTheta => gaussian_theta(&st, &params, &grid),
                GaussianKind::EllipsoidalNuTheta => {
                    ellipsoidal_gaussian(&st, &ct, &params, &grid)
                }
            }
            .map_err(|e| e.to_string())?;
            let closed = h_closed_form(*kind, &st, Some(&ct), &params).map_err(|e| e.to_string())?;
            let disc = h_functional(&grid, &values).map_err(|e| e.to_string())?;
            errs.push((disc - closed).abs());
        }
        let m01 = maxwellian_01(&st, &params, &grid).map_err(|e| e.to_string())?;
        let measured = compute_moments(&grid, &m01, &params).map_err(|e| e.to_string())?;
        Ok((
            errs,
            ((measured.rho - st.rho) / st.rho).abs(),
            ((measured.t_delta - st.t_delta) / st.t_delta).abs(),
        ))
    };

    let (base_errs, base_mass, base_t) = h_errors(&base_spec)?;
    let (fine_errs, fine_mass, fine_t) = h_errors(&fine_spec)?;
    let entries: Vec<serde_json::Value> = kinds
        .iter()
        .enumerate()
        .map(|(i, (name, kind))| {
            serde_json::json!({
                "kind": name,
                "h_closed": h_closed_form(*kind, &st, Some(&ct), &params).unwrap(),
                "h_error_base": base_errs[i],
                "h_error_refined": fine_errs[i],
                "richardson_ratio": base_errs[i] / fine_errs[i],
            })
        })
        .collect();
    let suggested = base_errs
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(base_mass)
        * 2.0;
    let summary = serde_json::json!({
        "grid_base": { "n_v": base_spec.n_v, "n_i": base_spec.n_i },
        "grid_refined": { "n_v": fine_spec.n_v, "n_i": fine_spec.n_i },
        "kinds": entries,
        "mass_error_base": base_mass,
        "mass_error_refined": fine_mass,
        "t_delta_error_base": base_t,
        "t_delta_error_refined": fine_t,
        "suggested_tol_quad_absolute": suggested,
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(0)
}

fn cmd_snapshot_diff(args: &[String]) -> Result<u8, String> {
    let (a_path, b_path) = match args {
        [a, b] => (a, b),
        _ => return Err(USAGE.to_string()),
    };
    let (a, pa) = snapshot::read_file(Path::new(a_path)).map_err(|e| e.to_string())?;
    let (b, pb) = snapshot::read_file(Path::new(b_path)).map_err(|e| e.to_string())?;

    let header_equal = pa == pb
        && a.grid().spec() == b.grid().spec()
        && a.n_x() == b.n_x()
        && a.dx().to_bits() == b.dx().to_bits();
    let mut identical = header_equal && a.values().len() == b.values().len();
    let mut max_abs_diff = 0.0f64;
    let mut first_diff: Option<usize> = None;
    if a.values().len() == b.values().len() {
        for (i, (x, y)) in a.values().iter().zip(b.values().iter()).enumerate() {
            if x.to_bits() != y.to_bits() {
                identical = false;
                if first_diff.is_none() {
                    first_diff = Some(i);
                }
                max_abs_diff = max_abs_diff.max((x - y).abs());
            }
        }
    } else {
        identical = false;
    }
    let summary = serde_json::json!({
        "identical": identical,
        "header_equal": header_equal,
        "n_values_a": a.values().len(),
        "n_values_b": b.values().len(),
        "max_abs_diff": max_abs_diff,
        "first_diff_node": first_diff,
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    Ok(if identical { 0 } else { 1 })
}
