use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bragg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bragg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_str(&stdout(o)).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small lattice for Monte-Carlo runs.
const SMALL: &[&str] = &[
    "--n-layers",
    "8",
    "--sigma-r-um",
    "1.5",
    "--sigma-z-nm",
    "30",
    "--n-atoms",
    "300",
    "--n-seeds",
    "100",
    "--n-angles",
    "15",
];

#[test]
fn bragg_angle_exit_codes() {
    let v = json(&bragg(&["bragg-angle"]));
    assert!((v["beta_bragg_deg"].as_f64().unwrap() - 15.9).abs() < 0.05);

    let v = json(&bragg(&[
        "bragg-angle",
        "--lambda-brg-nm",
        "811",
        "--lambda-dip-nm",
        "811",
    ]));
    assert_eq!(v["beta_bragg_deg"].as_f64().unwrap(), 0.0);

    let o = bragg(&[
        "bragg-angle",
        "--lambda-brg-nm",
        "811",
        "--lambda-dip-nm",
        "780",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no Bragg angle"));
}

#[test]
fn init_template_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.jsonc");
    let second = dir.path().join("b.jsonc");
    assert!(bragg(&["init", "--out", path(&first)]).status.success());
    let text = std::fs::read_to_string(&first).unwrap();
    assert!(text.contains("//"));
    assert!(
        bragg(&["init", "--config", path(&first), "--out", path(&second)])
            .status
            .success()
    );
    assert_eq!(text, std::fs::read_to_string(&second).unwrap());
}

#[test]
fn config_parse_failure_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.jsonc");
    std::fs::write(
        &cfg,
        "{\n  // probe\n  \"probe\": {\"lambda_brg_nm\": 780,\n   \"lambda_dip_nm\": x}\n}\n",
    )
    .unwrap();
    let o = bragg(&["solve-angle", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn synth_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    assert!(bragg(&["synth", "--zeta", "0.01", "--out", path(&scan)])
        .status
        .success());
    let text = std::fs::read_to_string(&scan).unwrap();
    assert!(text.starts_with("lambda_dip_nm,beta_s_deg\n810.0,"));
    assert_eq!(text.lines().count(), 32);

    let v = json(&bragg(&["fit", path(&scan)]));
    assert!((v["zeta_hat"].as_f64().unwrap() / 0.01 - 1.0).abs() < 1e-4);
    for key in [
        "zeta_stderr",
        "lattice_length_m",
        "n_layers_hat",
        "residual_rms_deg",
    ] {
        assert!(v[key].is_number(), "{key}");
    }
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 101);
    assert_eq!(curve[0][0].as_f64().unwrap(), 810.0);
}

#[test]
fn fit_rejects_short_and_malformed_scans() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "lambda_dip_nm,beta_s_deg\n810,15.5\n812,16.3\n").unwrap();
    let o = bragg(&["fit", path(&short)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient data"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "lambda_dip_nm,beta_s_deg\n810,15.5\n811,15.9\n812,sixteen\n",
    )
    .unwrap();
    let o = bragg(&["fit", path(&bad)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn specular_scan_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("flat.csv");
    let beta = (780.0f64 / 811.0).acos().to_degrees();
    let rows: String = (0..7)
        .map(|i| format!("{},{beta}\n", 809.0 + i as f64))
        .collect();
    std::fs::write(&scan, format!("lambda_dip_nm,beta_s_deg\n{rows}")).unwrap();
    let o = bragg(&["fit", path(&scan)]);
    match o.status.code() {
        Some(3) => {}
        Some(0) => assert!(json(&o)["zeta_hat"].as_f64().unwrap() >= 1e10),
        other => panic!("exit {other:?}: {}", String::from_utf8_lossy(&o.stderr)),
    }
}

#[test]
fn scan_limits_and_empty_cells() {
    let out = stdout(&bragg(&["scan", "--zeta", "1e8", "--format", "csv"]));
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("lambda_dip_nm,specular_deg,small_aspect_deg,generalized_deg")
    );
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        let spec: f64 = cols[1].parse().unwrap();
        let gen: f64 = cols[3].parse().unwrap();
        assert!((spec - gen).abs() < 1e-4, "{l}");
    }
    let out = stdout(&bragg(&[
        "scan",
        "--format",
        "csv",
        "--lambda-min-nm",
        "785",
        "--lambda-max-nm",
        "790",
        "--n-points",
        "2",
    ]));
    let last = out.lines().nth(2).unwrap();
    assert!(last.starts_with("790.0,") && last.contains(",,"), "{last}");
}

#[test]
fn divergence_reports_regimes() {
    let v = json(&bragg(&["divergence"]));
    assert_eq!(v["regime"], "radial_limited");
    assert!((v["omega_sr"].as_f64().unwrap() / 6.6e-6 - 1.0).abs() < 0.03);

    let v = json(&bragg(&[
        "divergence",
        "--n-layers",
        "100",
        "--sigma-r-um",
        "5000",
        "--beta-s-deg",
        "20",
    ]));
    assert_eq!(v["regime"], "axial_limited");

    let v = json(&bragg(&["divergence", "--beta-s-deg", "1e-9"]));
    assert!(
        (v["two_phi2_deg"].as_f64().unwrap() - v["two_phi2_unprojected_deg"].as_f64().unwrap())
            .abs()
            < 1e-12
    );
}

#[test]
fn oracle_validation_passes_on_a_small_lattice() {
    let mut args = vec!["oracle", "--validate", "--seed", "5"];
    args.extend_from_slice(SMALL);
    let v = json(&bragg(&args));
    assert!(v["max_abs_z"].as_f64().unwrap() <= 5.0);
    assert_eq!(v["rng_algorithm"], bragg_core::RNG_ALGORITHM);
    assert_eq!(v["rows"].as_array().unwrap().len(), 15);
}

#[test]
fn underpowered_oracle_validation_exits_five() {
    // two seeds leave one degree of freedom for the standard error, so the
    // z-scores are heavy-tailed and some of 2001 points land beyond |z| = 5
    let o = bragg(&[
        "oracle",
        "--validate",
        "--n-layers",
        "8",
        "--sigma-r-um",
        "1.5",
        "--sigma-z-nm",
        "30",
        "--n-atoms",
        "300",
        "--n-seeds",
        "2",
        "--n-angles",
        "2001",
        "--beta-min-deg",
        "1",
        "--beta-max-deg",
        "89",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("validation failed"));
    assert!(!o.stdout.is_empty(), "report is still written");
}

#[test]
fn single_atom_oracle_is_flat() {
    let o = bragg(&[
        "oracle",
        "--format",
        "csv",
        "--n-layers",
        "4",
        "--sigma-r-um",
        "1",
        "--sigma-z-nm",
        "20",
        "--n-atoms",
        "1",
        "--n-seeds",
        "10",
        "--n-angles",
        "7",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&c| c == "oracle_mean").unwrap();
    for l in lines {
        assert_eq!(l.split(',').nth(col), Some("1.0"));
    }
}

#[test]
fn cloud_export_has_unit_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    let mut args = vec!["oracle", "--cloud-out", path(&cloud)];
    args.extend_from_slice(SMALL);
    assert!(bragg(&args).status.success());
    let text = std::fs::read_to_string(&cloud).unwrap();
    assert!(text.starts_with("x_m,y_m,z_m\n"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        let mut args = vec!["oracle", "--format", "csv"];
        args.extend_from_slice(SMALL);
        Command::new(env!("CARGO_BIN_EXE_bragg"))
            .args(&args)
            .env("BRAGG_NUM_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
    assert_eq!(one, run("0"));
}

#[test]
fn structure_factor_table_peaks_at_resonance() {
    let v = json(&bragg(&["structure-factor", "--n-angles", "201"]));
    let rows = v.as_array().unwrap();
    let best = rows
        .iter()
        .max_by(|a, b| {
            a["s_norm"]
                .as_f64()
                .unwrap()
                .total_cmp(&b["s_norm"].as_f64().unwrap())
        })
        .unwrap();
    assert!((best["beta_s_deg"].as_f64().unwrap() - 15.8928).abs() < 0.011);
    assert!(rows[0].get("qx_per_m").is_some());
}
