use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn quick() -> PathBuf {
    configs().join("quick.toml")
}

fn menr(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_menr"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = menr(out, args);
    assert!(
        o.status.success(),
        "menr {args:?} failed:\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn fails(out: &Path, args: &[&str]) -> String {
    let o = menr(out, args);
    assert!(!o.status.success(), "menr {args:?} unexpectedly succeeded");
    String::from_utf8(o.stderr).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn q() -> String {
    quick().display().to_string()
}

#[test]
fn noiseless_default_run_gives_forward_split() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["run", &q(), "--no-noise"]);
    let r = json(&dir.path().join("run.json"));
    let dnu = r["delta_nu_fE_Hz"].as_f64().unwrap();
    assert!((dnu / 2.8141e-3 - 1.0).abs() < 5e-3, "{dnu}");
    assert_eq!(r["sigma_stat_Hz"].as_f64(), Some(0.0));
    assert_eq!(r["meta"]["timestamp"], "2023-11-14T22:13:20Z");
    let eta = r["eta"]["value"].as_f64().unwrap();
    assert!((eta / 4.7e-23 - 1.0).abs() < 5e-3);
}

#[test]
fn nominal_run_without_config() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["run", "--seed", "11"]);
    let r = json(&dir.path().join("run.json"));
    let sigma = r["sigma_stat_Hz"].as_f64().unwrap();
    assert!((100e-6..=400e-6).contains(&sigma), "{sigma}");
    assert_eq!(r["config"]["duration"].as_f64(), Some(2000.0));
}

#[test]
fn repeated_seed_is_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(a.path(), &["run", &q(), "--seed", "42", "--series"]);
    ok(b.path(), &["run", &q(), "--seed", "42", "--series"]);
    for name in ["run.json", "series.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let c = TempDir::new().unwrap();
    ok(c.path(), &["run", &q(), "--seed", "43"]);
    assert_ne!(
        json(&a.path().join("run.json"))["delta_nu_fE_Hz"],
        json(&c.path().join("run.json"))["delta_nu_fE_Hz"]
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(a.path(), &["sweep", &q(), "--jobs", "1"]);
    ok(b.path(), &["sweep", &q(), "--jobs", "4"]);
    assert_eq!(
        std::fs::read(a.path().join("sweep.json")).unwrap(),
        std::fs::read(b.path().join("sweep.json")).unwrap()
    );
}

#[test]
fn five_rods_are_rejected_with_section_and_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "five.toml",
        "[run]\nduration_s = 100.0\n\n[[rods]]\n[[rods]]\n[[rods]]\n[[rods]]\n[[rods]]\n",
    );
    let err = fails(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert!(err.contains("[rods]"), "{err}");
    assert!(err.contains("five.toml:8:"), "{err}");
    assert!(!dir.path().join("run.json").exists());
}

#[test]
fn unknown_key_is_reported_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "typo.toml",
        "[cavity]\nfinesse = 20000.0\n\n[lockin]\ntime_constant = 3.0\n",
    );
    let err = fails(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert!(err.contains("typo.toml:5:"), "{err}");
    assert!(err.contains("time_constant"), "{err}");
}

#[test]
fn out_of_range_value_names_its_section() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[gas]\npressure_Pa = -1.0\n");
    let err = fails(dir.path(), &["calibrate", cfg.to_str().unwrap()]);
    assert!(err.contains("bad.toml:1: [gas]"), "{err}");
}

#[test]
fn sweep_slope_agrees_with_forward_model() {
    let dir = TempDir::new().unwrap();
    let cfg = configs().join("alternating-signs.toml");
    ok(dir.path(), &["sweep", cfg.to_str().unwrap(), "--seed", "5"]);
    let s = json(&dir.path().join("sweep.json"));
    let pull = s["slope_pull"].as_f64().unwrap();
    assert!(pull.abs() <= 2.0, "pull {pull}");
    assert_eq!(s["config_label"], "E--++/B++--");
    assert_eq!(s["eta"]["relative_sign"], 1);
    for name in ["sweep.csv", "sweep.svg"] {
        assert!(dir.path().join(name).exists());
    }
}

#[test]
fn one_point_sweep_fails_cleanly() {
    let dir = TempDir::new().unwrap();
    let err = fails(dir.path(), &["sweep", &q(), "--e-values", "5e5"]);
    assert!(err.contains("at least two"), "{err}");
    assert!(!err.contains("panicked"));
}

#[test]
fn noiseless_sweep_is_exactly_linear() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "sweep",
            &q(),
            "--no-noise",
            "--e-values",
            "-2e5,0,1e5,3e5,5e5",
        ],
    );
    let s = json(&dir.path().join("sweep.json"));
    assert_eq!(s["fit"]["chi2_per_dof"].as_f64(), Some(0.0));
    let slope = s["fit"]["slope"].as_f64().unwrap();
    let analytic = s["analytic_slope"].as_f64().unwrap();
    assert!((slope / analytic - 1.0).abs() < 1e-3);
    for p in s["points"].as_array().unwrap() {
        let (e, dnu) = (
            p["e_field"].as_f64().unwrap(),
            p["delta_nu"].as_f64().unwrap(),
        );
        assert!((dnu - analytic * e).abs() <= 1e-3 * analytic.abs() * 5e5);
    }
}

#[test]
fn campaign_expected_column_and_noiseless_closure() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(dir.path(), &["campaign", &q(), "--standard", "--no-noise"]);
    assert!(stdout.contains("E++-0/B++--"));
    let c = json(&dir.path().join("campaign.json"));
    let rows = c["rows"].as_array().unwrap();
    let expected: Vec<f64> = rows
        .iter()
        .map(|r| r["expected"].as_f64().unwrap())
        .collect();
    assert_eq!(
        expected,
        vec![1.0, -1.0, 1.0, 0.75, -0.5, 0.5, 0.25, 0.0, 0.0]
    );
    for r in rows {
        let m = r["measured"].as_f64().unwrap();
        assert!((m - r["expected"].as_f64().unwrap()).abs() <= 1e-3, "{r}");
    }
    let text = std::fs::read_to_string(dir.path().join("campaign.txt")).unwrap();
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn noisy_campaign_rows_are_within_three_sigma() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["campaign", &q(), "--seed", "2024"]);
    let c = json(&dir.path().join("campaign.json"));
    let max_pull = c["max_pull"].as_f64().unwrap();
    assert!(max_pull <= 3.0, "max pull {max_pull}");
}

#[test]
fn custom_patterns_need_the_reference_first() {
    let dir = TempDir::new().unwrap();
    let err = fails(
        dir.path(),
        &["campaign", &q(), "--patterns", "----/++++,++++/++++"],
    );
    assert!(err.contains("reference"), "{err}");
    ok(
        dir.path(),
        &["campaign", &q(), "--patterns", "E++++/B++++,E+-+-/B++++"],
    );
    let c = json(&dir.path().join("campaign.json"));
    assert_eq!(c["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn analysis_recovers_truth_from_ten_runs() {
    let dir = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for seed in 0..10 {
        let sub = dir.path().join(format!("run{seed}"));
        ok(&sub, &["run", &q(), "--seed", &seed.to_string()]);
        inputs.push(sub.join("run.json").display().to_string());
    }
    let mut args = vec!["analyze"];
    args.extend(inputs.iter().map(String::as_str));
    args.push("--final-eta");
    ok(dir.path(), &args);
    let e = json(&dir.path().join("eta.json"));
    let mean = e["weighted_mean"].as_f64().unwrap();
    let sigma = e["sigma"].as_f64().unwrap();
    assert!((mean - 4.7e-23).abs() <= 2.0 * sigma, "{mean} ± {sigma}");
    let fin = &e["final_estimate"];
    assert!(fin["sigma_total"].as_f64().unwrap() > sigma);
    assert!(dir.path().join("eta.svg").exists());
}

#[test]
fn single_input_analysis_returns_the_input() {
    let dir = TempDir::new().unwrap();
    let run_dir = dir.path().join("r");
    ok(&run_dir, &["run", &q(), "--seed", "8"]);
    let run = json(&run_dir.join("run.json"));
    let path = run_dir.join("run.json");
    ok(dir.path(), &["analyze", path.to_str().unwrap()]);
    let e = json(&dir.path().join("eta.json"));
    assert_eq!(e["weighted_mean"], run["eta"]["value"]);
    assert!(e["final_estimate"].is_null());
}

#[test]
fn mixed_configurations_need_opt_in() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&a, &["run", &q(), "--seed", "1"]);
    let alt = configs().join("alternating-signs.toml");
    ok(&b, &["run", alt.to_str().unwrap(), "--seed", "2"]);
    let (ra, rb) = (a.join("run.json"), b.join("run.json"));
    let args = ["analyze", ra.to_str().unwrap(), rb.to_str().unwrap()];
    let err = fails(dir.path(), &args);
    assert!(err.contains("--allow-mixed"), "{err}");
    let mut allowed = args.to_vec();
    allowed.push("--allow-mixed");
    ok(dir.path(), &allowed);
    assert_eq!(
        json(&dir.path().join("eta.json"))["mixed_configurations"],
        true
    );
}

#[test]
fn analysis_rejects_records_without_eta() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["calibrate", &q()]);
    let cal = dir.path().join("calibration.json");
    let err = fails(dir.path(), &["analyze", cal.to_str().unwrap()]);
    assert!(err.contains("calibration.json"), "{err}");
}

#[test]
fn calibration_is_precise_enough() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["calibrate", &q(), "--amplitude", "0.01"]);
    let c = json(&dir.path().join("calibration.json"));
    let rel = c["calibration"]["rel_sigma"].as_f64().unwrap();
    assert!(rel > 0.0 && rel <= 0.1, "{rel}");
    let err = fails(dir.path(), &["calibrate", &q(), "--amplitude", "1e-6"]);
    assert!(err.contains("SNR"), "{err}");
}

#[test]
fn vacuum_projection_defaults() {
    let dir = TempDir::new().unwrap();
    let stdout = ok(dir.path(), &["project-vacuum"]);
    assert!(stdout.contains("default: fill_factor 0.5"), "{stdout}");
    let p = json(&dir.path().join("projection.json"));
    let dn = p["target_delta_n"].as_f64().unwrap();
    assert!((dn / 2.86e-26 - 1.0).abs() < 0.02, "{dn}");
    assert!(!p["defaults_used"].as_array().unwrap().is_empty());
}

#[test]
fn unit_suppression_is_identity() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "project-vacuum",
            "--suppression",
            "1",
            "--measured-delta-n",
            "2e-17",
        ],
    );
    let p = json(&dir.path().join("projection.json"));
    assert_eq!(p["target_delta_n"].as_f64(), Some(2e-17));
}

#[test]
fn vacuum_projection_reads_target_file() {
    let dir = TempDir::new().unwrap();
    let t = write(
        dir.path(),
        "target.toml",
        "[cavity]\narm_m = 1.0\nfinesse = 1e6\n\n[target]\nfill_factor = 0.8\nlaser_power_W = 1.0\n",
    );
    ok(
        dir.path(),
        &[
            "project-vacuum",
            "--target-config",
            t.to_str().unwrap(),
            "--noise-asd",
            "1e-8",
        ],
    );
    let p = json(&dir.path().join("projection.json"));
    assert_eq!(p["target"]["fill_factor"].as_f64(), Some(0.8));
    assert_eq!(p["target"]["cavity"]["perimeter"].as_f64(), Some(4.0));
    assert!(p["defaults_used"]
        .as_array()
        .unwrap()
        .iter()
        .all(|d| !d.as_str().unwrap().contains("fill_factor")));

    let bad = write(dir.path(), "bad.toml", "[target]\nfill = 0.8\n");
    let err = fails(
        dir.path(),
        &["project-vacuum", "--target-config", bad.to_str().unwrap()],
    );
    assert!(err.contains("bad.toml:2:"), "{err}");
}

#[test]
fn default_config_round_trips_through_the_binary() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_menr"))
        .arg("default-config")
        .output()
        .unwrap();
    let cfg = write(
        dir.path(),
        "d.toml",
        &String::from_utf8(out.stdout).unwrap(),
    );
    let shipped = std::fs::read_to_string(configs().join("nominal.toml")).unwrap();
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), shipped);
}
