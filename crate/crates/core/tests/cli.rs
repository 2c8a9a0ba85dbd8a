use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use subgeom::numerics::C64;
use subgeom::phases::wrap_phase;

fn runspec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("runspecs")
        .join(name)
}

fn subgeom(spec: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subgeom"))
        .arg("--model")
        .arg(spec)
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn phases_recomputed_from_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    for spec in ["two_level_ramp.toml", "random_four_level.toml"] {
        let out = subgeom(&runspec(spec), dir.path(), &["simulate"]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        let energies: Vec<f64> = report["basis_energies"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let (header, rows) = csv(&dir.path().join("trajectory.csv"));
        let (t, e) = (column(&header, "t"), column(&header, "energy"));
        let amp = |row: &[f64], k: usize| {
            C64::new(
                row[column(&header, &format!("re_c{k}"))],
                row[column(&header, &format!("im_c{k}"))],
            )
        };

        let (first, last) = (&rows[0], rows.last().unwrap());
        let s = last[t] - first[t];
        let overlap: C64 = (0..energies.len())
            .map(|k| amp(first, k).conj() * amp(last, k) * C64::from_polar(1.0, -energies[k] * s))
            .sum();
        let phi = overlap.arg();
        let alpha = -rows
            .windows(2)
            .map(|w| 0.5 * (w[1][t] - w[0][t]) * (w[0][e] + w[1][e]))
            .sum::<f64>();
        let beta = wrap_phase(phi - alpha);

        let phases = &report["phases"];
        assert!(
            (phi - phases["total_phi"].as_f64().unwrap()).abs() <= 1e-9,
            "{spec}: φ"
        );
        assert!(
            (alpha - phases["dynamical_alpha"].as_f64().unwrap()).abs() <= 1e-9,
            "{spec}: α"
        );
        assert!(
            (beta - phases["aa_beta"].as_f64().unwrap()).abs() <= 1e-9,
            "{spec}: β"
        );
    }
}

#[test]
fn stationary_model_has_no_sub_geometric_phase() {
    let dir = tempfile::tempdir().unwrap();
    let out = subgeom(&runspec("stationary.toml"), dir.path(), &["simulate"]);
    assert!(out.status.success());
    let (header, rows) = csv(&dir.path().join("trajectory.csv"));
    let gammas: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with("gamma"))
        .collect();
    assert_eq!(gammas.len(), 3);
    assert!(rows.iter().all(|r| gammas.iter().all(|&i| r[i] == 0.0)));
}

#[test]
fn verify_passes_on_shipped_specs() {
    let dir = tempfile::tempdir().unwrap();
    for spec in [
        "two_level_ramp.toml",
        "two_level_loop.toml",
        "random_four_level.toml",
        "stationary.toml",
        "tabulated.toml",
    ] {
        let out = subgeom(&runspec(spec), dir.path(), &["verify"]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(out.status.code(), Some(0), "{spec}:\n{stdout}");
        assert!(!stdout.contains("FAIL"));
    }
}

#[test]
fn coarse_grid_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = subgeom(
        &runspec("two_level_ramp.toml"),
        dir.path(),
        &["--steps", "10", "verify"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL norm_drift"));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn step_sweep_shows_fourth_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = subgeom(
        &runspec("exponential.toml"),
        dir.path(),
        &["sweep", "--param", "n_steps", "--values", "500,1000,2000"],
    );
    assert!(out.status.success());
    let (header, rows) = csv(&dir.path().join("sweep.csv"));
    let r = column(&header, "step_residual");
    for w in rows.windows(2) {
        let ratio = w[0][r] / w[1][r];
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn rate_sweep_approaches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = subgeom(
        &runspec("equator_loop.toml"),
        dir.path(),
        &[
            "--steps",
            "2000",
            "--tmax",
            "10",
            "sweep",
            "--param",
            "rate",
            "--values",
            "0.1,0.05,0.025",
        ],
    );
    assert!(out.status.success());
    let (header, rows) = csv(&dir.path().join("sweep.csv"));
    let gap = column(&header, "berry_gap");
    assert!(rows.windows(2).all(|w| w[1][gap] < w[0][gap]));
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--param", "amplitude", "--values", "1.5,0.5,1.0"];
    let a = subgeom(&runspec("two_level_ramp.toml"), dir.path(), &args);
    let b = subgeom(&runspec("two_level_ramp.toml"), dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let (header, rows) = csv(&dir.path().join("sweep.csv"));
    let v = column(&header, "value");
    assert_eq!(
        rows.iter().map(|r| r[v]).collect::<Vec<_>>(),
        vec![1.5, 0.5, 1.0]
    );
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = subgeom(
        &runspec("two_level_ramp.toml"),
        dir.path(),
        &["sweep", "--param", "rate", "--values", ""],
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("value,"));
}

#[test]
fn bad_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = runspec("two_level_ramp.toml");
    let out = subgeom(
        &spec,
        dir.path(),
        &["sweep", "--param", "temperature", "--values", "1"],
    );
    assert_eq!(out.status.code(), Some(1));

    let broken = dir.path().join("broken.toml");
    std::fs::write(
        &broken,
        "schema_version = 1\n[model]\nkind = \"two_level\"\ndelta = -1.0\n",
    )
    .unwrap();
    let out = subgeom(&broken, dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let out = subgeom(&spec, dir.path(), &["--steps", "0", "simulate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn density_and_mixture_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = subgeom(&runspec("mixture.toml"), dir.path(), &["density"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("density.json")).unwrap())
            .unwrap();
    let mixed = report["mixture"]["snapshots"].as_array().unwrap();
    assert_eq!(mixed.len(), 3);
    assert!(mixed
        .iter()
        .all(|s| s["purity"].as_f64().unwrap() < 1.0 - 1e-6));
    for e in report["entries"].as_array().unwrap() {
        assert!((e["snapshot"]["purity"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    }
}
