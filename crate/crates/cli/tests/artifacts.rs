use std::path::{Path, PathBuf};
use std::process::Command;

use menr_cli::csvio::{read_series, read_sweep, write_series, write_sweep};
use menr_cli::record::{schema_file, EtaInput};
use menr_cli::svg::{eta_plot, sweep_plot};
use menr_core::analysis::weighted_linear_fit;
use menr_core::experiment::{MeasurementPoint, MeasurementSeries, RunSeries};
use serde_json::Value;
use tempfile::TempDir;

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn menr(out: &Path, args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_menr"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn validate(path: &Path) {
    let record: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let kind = record["meta"]["kind"].as_str().unwrap();
    let schema_path = manifest().join("schemas").join(schema_file(kind).unwrap());
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&record)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{}: {errors:#?}", path.display());
}

#[test]
fn every_record_matches_its_schema() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let quick = manifest().join("../../configs/quick.toml");
    let q = quick.to_str().unwrap();
    menr(&d.join("a"), &["run", q, "--seed", "1"]);
    menr(&d.join("b"), &["run", q, "--no-noise"]);
    menr(d, &["sweep", q, "--e-values", "-3e5,0,3e5"]);
    menr(d, &["campaign", q, "--standard", "--no-noise"]);
    menr(d, &["calibrate", q]);
    menr(d, &["calibrate", q, "--no-noise"]);
    menr(d, &["project-vacuum"]);
    let runs = [d.join("a/run.json"), d.join("b/run.json")];
    let mut args = vec!["analyze", runs[0].to_str().unwrap(), "--final-eta"];
    let sweep = d.join("sweep.json");
    args.push(sweep.to_str().unwrap());
    menr(&d.join("eta"), &args);

    let records: Vec<PathBuf> = vec![
        runs[0].clone(),
        runs[1].clone(),
        d.join("sweep.json"),
        d.join("campaign.json"),
        d.join("calibration.json"),
        d.join("projection.json"),
        d.join("eta/eta.json"),
    ];
    for r in &records {
        validate(r);
    }
}

#[test]
fn schemas_reject_a_wrong_version() {
    let dir = TempDir::new().unwrap();
    menr(dir.path(), &["project-vacuum"]);
    let path = dir.path().join("projection.json");
    let mut record: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    record["meta"]["schema_version"] = 2.into();
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(manifest().join("schemas/projection.schema.json")).unwrap(),
    )
    .unwrap();
    assert!(!jsonschema::validator_for(&schema)
        .unwrap()
        .is_valid(&record));
}

#[test]
fn series_csv_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let series = RunSeries {
        sample_rate: 200.0,
        e_field: (0..50).map(|k| 5e5 * (0.3 * k as f64).sin()).collect(),
        detuning_ccw: (0..50).map(|k| 1.0 / 3.0 + 1e-17 * k as f64).collect(),
        error_signal: (0..50).map(|k| -(k as f64).sqrt() * 1e-300).collect(),
    };
    let path = dir.path().join("s.csv");
    write_series(&path, &series).unwrap();
    let back = read_series(&path).unwrap();
    assert_eq!(back.e_field, series.e_field);
    assert_eq!(back.detuning_ccw, series.detuning_ccw);
    assert_eq!(back.error_signal, series.error_signal);
    assert!((back.sample_rate - 200.0).abs() < 1e-9);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_csv_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let series = MeasurementSeries {
        points: (0..6)
            .map(|k| MeasurementPoint {
                e_field: -5e5 + 2e5 * k as f64,
                delta_nu: 0.1 + f64::EPSILON * k as f64,
                sigma: 2.0e-4 / 7.0,
                calibration_rel_sigma: 0.023,
            })
            .collect(),
        config_label: "E++++/B++++".into(),
    };
    let path = dir.path().join("w.csv");
    write_sweep(&path, &series).unwrap();
    assert_eq!(read_sweep(&path, "E++++/B++++").unwrap(), series);
}

#[test]
fn malformed_csv_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "e,dnu\n1,2\n").unwrap();
    assert!(read_sweep(&path, "x").is_err());
    std::fs::write(
        &path,
        "e_field_V_per_m,delta_nu_Hz,sigma_Hz,calibration_rel_sigma\n1,two,3,4\n",
    )
    .unwrap();
    let err = read_sweep(&path, "x").unwrap_err().to_string();
    assert!(err.contains("row 2"), "{err}");
}

fn golden(name: &str, actual: &str) {
    let path = manifest().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing {}; rerun with UPDATE_GOLDEN=1", path.display()));
    assert!(
        expected == actual,
        "{name} differs from golden file; rerun with UPDATE_GOLDEN=1 if intended"
    );
}

#[test]
fn sweep_plot_matches_golden() {
    let series = MeasurementSeries {
        points: [-5e5, -2.5e5, 0.0, 2.5e5, 5e5]
            .iter()
            .zip([-2.9e-3, -1.3e-3, 0.1e-4, 1.5e-3, 2.7e-3])
            .map(|(&e, dnu)| MeasurementPoint {
                e_field: e,
                delta_nu: dnu,
                sigma: 2.5e-4,
                calibration_rel_sigma: 0.0,
            })
            .collect(),
        config_label: "E++++/B++++".into(),
    };
    let fit = weighted_linear_fit(&series).unwrap();
    golden("sweep.svg", &sweep_plot(&series, &fit));
}

#[test]
fn eta_plot_matches_golden() {
    let inputs: Vec<EtaInput> = [4.1e-23, 5.3e-23, 4.8e-23, 4.4e-23]
        .iter()
        .enumerate()
        .map(|(i, &v)| EtaInput {
            source: format!("run{i}.json"),
            kind: "run".into(),
            config_label: "E++++/B++++".into(),
            value: v,
            sigma: 0.9e-23,
        })
        .collect();
    golden("eta.svg", &eta_plot(&inputs, 4.65e-23, 0.45e-23));
}
