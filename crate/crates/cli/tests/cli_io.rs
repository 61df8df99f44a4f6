//! Snapshot format round trips, scenario validation, and bit-identical
//! reruns of the binary on the same scenario.

use std::process::Command;
use std::sync::Arc;

use esbgk_cli::scenario::Scenario;
use esbgk_cli::snapshot::{decode, encode, SnapshotError};
use esbgk_core::gaussians::GaussianSpec;
use esbgk_core::linalg::SymMat;
use esbgk_core::params::ModelParams;
use esbgk_core::phase_grid::{build_grid, DistSnapshot, GridSpec};

fn sample_snapshot() -> (DistSnapshot, ModelParams) {
    let params = ModelParams::new(2, 2.0, 0.3, 0.5, 1.0).unwrap();
    let grid = Arc::new(
        build_grid(
            &GridSpec {
                n_v: 12,
                half_width: 5.0,
                center: [0.1, -0.2, 0.0],
                n_i: 16,
                i_max: 20.0,
            },
            &params,
        )
        .unwrap(),
    );
    let spec = GaussianSpec {
        d: 2,
        delta: 2.0,
        rho: 1.3,
        u: [0.1, -0.2, 0.0],
        cov: SymMat::from_upper(2, |i, j| if i == j { 0.9 + 0.2 * i as f64 } else { 0.05 }),
        t_i: 0.8,
    };
    let values = spec.evaluate(&grid).unwrap();
    (DistSnapshot::homogeneous(grid, values).unwrap(), params)
}

#[test]
fn snapshot_round_trip_is_bitwise() {
    let (snap, params) = sample_snapshot();
    let bytes = encode(&snap, &params);
    let (back, back_params) = decode(&bytes).unwrap();
    assert_eq!(params, back_params);
    assert_eq!(snap.n_x(), back.n_x());
    assert_eq!(snap.values().len(), back.values().len());
    for (a, b) in snap.values().iter().zip(back.values().iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    // Re-encoding reproduces the same bytes.
    assert_eq!(bytes, encode(&back, &back_params));
}

#[test]
fn snapshot_rejects_corruption() {
    let (snap, params) = sample_snapshot();
    let bytes = encode(&snap, &params);

    // Truncation.
    let truncated = &bytes[..bytes.len() - 17];
    assert!(matches!(
        decode(truncated),
        Err(SnapshotError::ChecksumMismatch) | Err(SnapshotError::SizeMismatch { .. })
    ));

    // Version bump.
    let mut versioned = bytes.clone();
    versioned[8] = 2;
    assert!(matches!(
        decode(&versioned),
        Err(SnapshotError::BadVersion { found: 2 })
    ));

    // Magic corruption.
    let mut magicked = bytes.clone();
    magicked[0] = b'X';
    assert!(matches!(decode(&magicked), Err(SnapshotError::BadMagic)));

    // Payload bit flip breaks the checksum.
    let mut flipped = bytes.clone();
    let mid = 16 + (flipped.len() - 24) / 2;
    flipped[mid] ^= 0x40;
    assert!(matches!(
        decode(&flipped),
        Err(SnapshotError::ChecksumMismatch)
    ));
}

fn scenario_json(nu: f64) -> String {
    format!(
        r#"{{
            "params": {{ "d": 1, "delta": 2.0, "nu": {nu}, "theta": 0.5, "mu": 1.0 }},
            "grid": "auto",
            "initial": {{ "family": "maxwellian01", "rho": 1.0, "u": [0.0], "t_delta": 1.0 }},
            "solver": {{ "dt": 0.01, "t_end": 0.1 }}
        }}"#
    )
}

#[test]
fn scenario_validates_parameter_ranges() {
    let ok = Scenario::parse(&scenario_json(0.5)).unwrap();
    assert!(ok.prepare().is_ok());

    let bad = Scenario::parse(&scenario_json(1.2)).unwrap();
    let err = match bad.prepare() {
        Err(e) => e,
        Ok(_) => panic!("nu = 1.2 must be rejected"),
    };
    assert!(err.contains("nu"), "error should name the nu bound: {err}");
}

#[test]
fn scenario_rejects_malformed_inputs() {
    // Unknown family.
    let text = scenario_json(0.5).replace("maxwellian01", "warp_core");
    assert!(Scenario::parse(&text).is_err());

    // Wrong-dimension mean vector.
    let text = scenario_json(0.5).replace("\"u\": [0.0]", "\"u\": [0.0, 1.0]");
    let sc = Scenario::parse(&text).unwrap();
    assert!(sc.prepare().is_err());

    // Asymmetric stress tensor.
    let text = r#"{
        "params": { "d": 2, "delta": 2.0, "nu": 0.0, "theta": 0.0, "mu": 1.0 },
        "initial": {
            "family": "gaussian_theta",
            "rho": 1.0,
            "u": [0.0, 0.0],
            "theta_tensor": [[1.0, 0.5], [0.2, 1.0]],
            "t_int": 1.0
        },
        "solver": { "dt": 0.01, "t_end": 0.1 }
    }"#;
    let sc = Scenario::parse(text).unwrap();
    let err = match sc.prepare() {
        Err(e) => e,
        Ok(_) => panic!("asymmetric tensor must be rejected"),
    };
    assert!(err.contains("symmetric"), "{err}");
}

#[test]
fn same_seed_reruns_are_bit_identical() {
    let bin = env!("CARGO_BIN_EXE_esbgk");
    let tmp = std::env::temp_dir().join(format!("esbgk-determinism-{}", std::process::id()));
    let scenario_path = {
        let mut root = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
        root.pop();
        root.pop();
        root.join("scenarios/quick_d1.json")
    };

    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = tmp.join(format!("run{run}"));
        std::fs::create_dir_all(&dir).unwrap();
        let status = Command::new(bin)
            .arg("run")
            .arg(&scenario_path)
            .env("ESBGK_OUT_DIR", &dir)
            .status()
            .expect("binary runs");
        assert!(status.success(), "run {run} exited with {status}");
        let csv = std::fs::read(dir.join("trajectory.csv")).unwrap();
        let snap = std::fs::read(dir.join("final.snap")).unwrap();
        outputs.push((csv, snap));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "trajectory CSVs differ");
    assert_eq!(outputs[0].1, outputs[1].1, "snapshots differ");
    let _ = std::fs::remove_dir_all(&tmp);
}

#[test]
fn snapshot_diff_distinguishes_files() {
    let bin = env!("CARGO_BIN_EXE_esbgk");
    let tmp = std::env::temp_dir().join(format!("esbgk-diff-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let (snap, params) = sample_snapshot();
    let a = tmp.join("a.snap");
    let b = tmp.join("b.snap");
    std::fs::write(&a, encode(&snap, &params)).unwrap();
    std::fs::write(&b, encode(&snap, &params)).unwrap();

    let same = Command::new(bin)
        .args(["snapshot-diff"])
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap();
    assert!(same.status.success());

    // Perturb one value and re-encode; diff must flag it and exit nonzero.
    let mut perturbed = snap.clone();
    perturbed.values_mut()[7] += 1e-13;
    std::fs::write(&b, encode(&perturbed, &params)).unwrap();
    let diff = Command::new(bin)
        .args(["snapshot-diff"])
        .arg(&a)
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(diff.status.code(), Some(1));
    let _ = std::fs::remove_dir_all(&tmp);
}
