//! Subcommand implementations. Each writes its artefacts into the output
//! directory and returns a short human-readable summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use menr_core::analysis::{
    extract_eta, shot_noise_asd, vacuum_projection, weighted_linear_fit, EtaEstimate, FitResult,
    VacuumTarget, DEFAULT_FIELDS_REL_SIGMA,
};
use menr_core::experiment::{calibrate, run_campaign, standard_sign_configs, sweep_e, SignConfig};
use menr_core::optics::{rod_delta_n, split_per_field, RingCavity, Sign};
use menr_core::signal::pdh_discriminant;
use menr_core::{simulate_run, smallest_resolvable_delta_n, weighted_mean, RunConfig};
use serde::Deserialize;
use serde_json::Value;

use crate::config::{self, CavitySection};
use crate::csvio;
use crate::hash::config_hash;
use crate::record::{
    self, CalibrationRecord, CampaignRecord, CampaignRowOut, EtaInput, EtaRecord, Meta,
    ProjectionRecord, RunRecord, SweepRecord, SCHEMA_VERSION,
};
use crate::svg;

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Experiment configuration (TOML); nominal defaults when omitted.
    pub config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disables all stochastic noise.
    #[arg(long)]
    pub no_noise: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut run = config::load(self.config.as_deref())?.run;
        if let Some(seed) = self.seed {
            run.seed = seed;
        }
        if self.no_noise {
            run = run.noiseless();
            run.servo.laser_random_walk = 0.0;
        }
        Ok(run)
    }
}

fn out_path(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

/// `2η∥` from a single run, treating `Δν / E` as a slope through the origin.
fn single_run_eta(
    config: &RunConfig,
    delta_nu: f64,
    sigma: f64,
    calib_rel: f64,
) -> Option<EtaEstimate> {
    let e = config.e_amplitude;
    if e == 0.0 {
        return None;
    }
    let fit = FitResult {
        slope: delta_nu / e,
        slope_sigma: sigma / e.abs(),
        intercept: 0.0,
        intercept_sigma: 0.0,
        chi2_per_dof: 0.0,
    };
    extract_eta(&fit, &config.cavity, &config.assembly, calib_rel, 0.0).ok()
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Also write the sampled time series as CSV.
    #[arg(long)]
    pub series: bool,
}

pub fn run(args: &RunArgs, out: &Path) -> anyhow::Result<String> {
    let mut cfg = args.config.resolve()?;
    cfg.store_series |= args.series;
    let r = simulate_run(&cfg)?;
    let (delta_n, delta_n_sigma) = match smallest_resolvable_delta_n(&r, &cfg.cavity, &cfg.assembly)
    {
        Ok((dn, s)) => (Some(dn), Some(s)),
        Err(_) => (None, None),
    };
    let record = RunRecord {
        meta: Meta::new("run", Some(config_hash(&cfg)), Some(cfg.seed)),
        config_label: r.config_label.clone(),
        e_amplitude_V_per_m: r.e_amplitude,
        delta_nu_fE_Hz: r.delta_nu_fe,
        sigma_stat_Hz: r.sigma_stat,
        sigma_total_Hz: r.sigma_total(),
        calibration: r.calibration.into(),
        delta_n,
        delta_n_sigma,
        eta: single_run_eta(&cfg, r.delta_nu_fe, r.sigma_stat, r.calibration.rel_sigma),
        diagnostics: r.diagnostics,
        config: RunConfig {
            store_series: false,
            ..cfg.clone()
        },
    };
    let json = out_path(out, "run.json");
    record::write_json(&json, &record)?;
    let mut summary = format!(
        "{}: Δν(f_E) = {:.4e} ± {:.2e} Hz (stat), calibration {:.4e} Hz/V ± {:.1}%\nwrote {}",
        record.config_label,
        record.delta_nu_fE_Hz,
        record.sigma_stat_Hz,
        record.calibration.factor_Hz_per_V,
        100.0 * record.calibration.rel_sigma,
        json.display()
    );
    if let Some(series) = &r.series {
        let csv = out_path(out, "series.csv");
        csvio::write_series(&csv, series)?;
        let _ = write!(summary, "\nwrote {}", csv.display());
    }
    Ok(summary)
}

/// Eight points spread symmetrically over the rated field range.
pub fn default_e_values() -> Vec<f64> {
    (0..8).map(|i| -5e5 + i as f64 * 1e6 / 7.0).collect()
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Field amplitudes in V/m, comma separated. Defaults to eight points
    /// evenly spaced on [-5e5, 5e5].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub e_values: Option<Vec<f64>>,
}

pub fn sweep(args: &SweepArgs, out: &Path) -> anyhow::Result<String> {
    let cfg = args.config.resolve()?;
    let e_values = args.e_values.clone().unwrap_or_else(default_e_values);
    let series = sweep_e(&cfg, &e_values)?;
    let fit = weighted_linear_fit(&series).context("fitting the sweep")?;
    let analytic = split_per_field(&cfg.cavity, &cfg.assembly, &cfg.gas)?;
    let calib = series.calibration_rel_sigma();
    let eta = extract_eta(&fit, &cfg.cavity, &cfg.assembly, calib, 0.0).ok();
    let record = SweepRecord {
        meta: Meta::new("sweep", Some(config_hash(&cfg)), Some(cfg.seed)),
        config_label: series.config_label.clone(),
        points: series.points.clone(),
        fit,
        analytic_slope: analytic,
        slope_pull: (fit.slope_sigma > 0.0).then(|| (fit.slope - analytic) / fit.slope_sigma),
        calibration_rel_sigma: calib,
        eta,
        config: cfg.clone(),
    };
    let (csv, json, plot) = (
        out_path(out, "sweep.csv"),
        out_path(out, "sweep.json"),
        out_path(out, "sweep.svg"),
    );
    csvio::write_sweep(&csv, &series)?;
    record::write_json(&json, &record)?;
    std::fs::write(&plot, svg::sweep_plot(&series, &fit))
        .with_context(|| format!("cannot write {}", plot.display()))?;
    let mut summary = format!(
        "{}: slope = {:.4e} ± {:.2e} Hz·m/V (analytic {:.4e}), χ²/dof = {:.2}",
        record.config_label, fit.slope, fit.slope_sigma, analytic, fit.chi2_per_dof
    );
    if let Some(eta) = eta {
        let _ = write!(
            summary,
            "\n2η∥ = {:.3e} ± {:.2e} (stat+calib), sign {}",
            eta.value,
            eta.sigma_stat_calib(),
            eta.relative_sign.symbol()
        );
    }
    let _ = write!(
        summary,
        "\nwrote {}, {}, {}",
        csv.display(),
        json.display(),
        plot.display()
    );
    Ok(summary)
}

#[derive(Debug, Clone, Args)]
pub struct CampaignArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Run the nine reference sign patterns (the default).
    #[arg(long, conflicts_with = "patterns")]
    pub standard: bool,
    /// Sign patterns as `E/B`, e.g. `++++/++++,++-0/++--`; the first must be
    /// the all-`+` reference.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub patterns: Option<Vec<String>>,
}

fn parse_pattern(s: &str) -> anyhow::Result<SignConfig> {
    let s = s.trim();
    let (e, b) = s
        .split_once('/')
        .ok_or_else(|| anyhow!("pattern {s:?} must look like ++-0/++--"))?;
    let strip = |p: &str, tag: char| p.strip_prefix(tag).unwrap_or(p).to_string();
    SignConfig::parse(&strip(e, 'E'), &strip(b, 'B'))
        .ok_or_else(|| anyhow!("pattern {s:?}: each side needs four of + - 0"))
}

pub fn campaign_table(record: &CampaignRecord) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<14} {:>4} {:>22} {:>16} {:>8} {:>6}",
        "configuration", "rods", "delta_nu (mHz)", "measured", "expected", "pull"
    );
    for r in &record.rows {
        let _ = writeln!(
            t,
            "{:<14} {:>4} {:>22} {:>16} {:>8.2} {:>6}",
            r.label,
            r.connected_rods,
            format!("{:.4} ± {:.4}", r.delta_nu_Hz * 1e3, r.sigma_Hz * 1e3),
            format!("{:+.3} ± {:.3}", r.measured, r.measured_sigma),
            r.expected,
            r.pull.map_or("-".to_string(), |p| format!("{p:.2}"))
        );
    }
    t
}

pub fn campaign(args: &CampaignArgs, out: &Path) -> anyhow::Result<String> {
    let cfg = args.config.resolve()?;
    let configs = match &args.patterns {
        Some(p) => p
            .iter()
            .map(|s| parse_pattern(s))
            .collect::<anyhow::Result<Vec<_>>>()?,
        None => standard_sign_configs(),
    };
    let rows = run_campaign(&cfg, &configs)?;
    let rows: Vec<CampaignRowOut> = rows
        .iter()
        .map(|r| CampaignRowOut {
            label: r.config.label(),
            connected_rods: r.connected_rods,
            delta_nu_Hz: r.delta_nu,
            sigma_Hz: r.sigma,
            measured: r.measured,
            measured_sigma: r.measured_sigma,
            expected: r.expected,
            pull: (r.measured_sigma > 0.0).then(|| r.pull()),
        })
        .collect();
    let record = CampaignRecord {
        meta: Meta::new("campaign", Some(config_hash(&cfg)), Some(cfg.seed)),
        max_pull: rows.iter().filter_map(|r| r.pull).reduce(f64::max),
        rows,
        config: cfg.clone(),
    };
    let table = campaign_table(&record);
    let (txt, json) = (
        out_path(out, "campaign.txt"),
        out_path(out, "campaign.json"),
    );
    std::fs::write(&txt, &table).with_context(|| format!("cannot write {}", txt.display()))?;
    record::write_json(&json, &record)?;
    Ok(format!(
        "{table}wrote {}, {}",
        txt.display(),
        json.display()
    ))
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Run or sweep result records (JSON).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Accept inputs taken with different sign configurations.
    #[arg(long)]
    pub allow_mixed: bool,
    /// Add the field-determination uncertainty to the combined value.
    #[arg(long)]
    pub final_eta: bool,
    /// Relative uncertainty of the applied fields used by `--final-eta`.
    #[arg(long, default_value_t = DEFAULT_FIELDS_REL_SIGMA)]
    pub fields_rel_sigma: f64,
}

#[derive(Deserialize)]
struct AnyRecord {
    meta: Meta,
    config_label: String,
    eta: Option<EtaEstimate>,
}

fn read_eta_input(path: &Path) -> anyhow::Result<EtaInput> {
    let value: Value = record::read_json(path)?;
    let rec: AnyRecord = serde_json::from_value(value)
        .with_context(|| format!("{}: not a run or sweep record", path.display()))?;
    if rec.meta.schema_version != SCHEMA_VERSION {
        bail!(
            "{}: schema version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            rec.meta.schema_version
        );
    }
    if rec.meta.kind != "run" && rec.meta.kind != "sweep" {
        bail!(
            "{}: a {} record carries no 2η∥ estimate",
            path.display(),
            rec.meta.kind
        );
    }
    let eta = rec.eta.ok_or_else(|| {
        anyhow!(
            "{}: no 2η∥ estimate (zero field or insensitive configuration)",
            path.display()
        )
    })?;
    Ok(EtaInput {
        source: path.display().to_string(),
        kind: rec.meta.kind,
        config_label: rec.config_label,
        value: eta.relative_sign.value() * eta.value,
        sigma: eta.sigma_stat_calib(),
    })
}

pub fn analyze(args: &AnalyzeArgs, out: &Path) -> anyhow::Result<String> {
    let inputs = args
        .inputs
        .iter()
        .map(|p| read_eta_input(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mixed = inputs
        .iter()
        .any(|i| i.config_label != inputs[0].config_label);
    if mixed && !args.allow_mixed {
        let labels: Vec<&str> = inputs.iter().map(|i| i.config_label.as_str()).collect();
        bail!("inputs mix configurations {labels:?}; pass --allow-mixed to combine them");
    }

    let (mean, sigma) = if inputs.iter().all(|i| i.sigma == 0.0) {
        let n = inputs.len() as f64;
        (inputs.iter().map(|i| i.value).sum::<f64>() / n, 0.0)
    } else {
        let pairs: Vec<(f64, f64)> = inputs.iter().map(|i| (i.value, i.sigma)).collect();
        weighted_mean(&pairs)?
    };
    let chi2_per_dof = (inputs.len() > 1 && sigma > 0.0).then(|| {
        inputs
            .iter()
            .map(|i| ((i.value - mean) / i.sigma).powi(2))
            .sum::<f64>()
            / (inputs.len() - 1) as f64
    });
    let final_estimate = args.final_eta.then(|| {
        let sign = if mean < 0.0 { Sign::Minus } else { Sign::Plus };
        // Each run carries its own calibration, so those errors average
        // down with the statistics and are already inside `sigma`.
        EtaEstimate::from_components(
            mean.abs(),
            sign,
            sigma,
            0.0,
            args.fields_rel_sigma * mean.abs(),
        )
    });

    let record = EtaRecord {
        meta: Meta::new("eta", None, None),
        inputs,
        weighted_mean: mean,
        sigma,
        chi2_per_dof,
        mixed_configurations: mixed,
        final_estimate,
    };
    let (json, plot) = (out_path(out, "eta.json"), out_path(out, "eta.svg"));
    record::write_json(&json, &record)?;
    std::fs::write(&plot, svg::eta_plot(&record.inputs, mean, sigma))
        .with_context(|| format!("cannot write {}", plot.display()))?;
    let mut summary = format!(
        "2η∥ = {:.3e} ± {:.2e} from {} input(s)",
        mean,
        sigma,
        record.inputs.len()
    );
    if let Some(f) = final_estimate {
        let _ = write!(
            summary,
            "\nfinal: ({:.2} ± {:.2})e-23 including fields",
            f.value * 1e23,
            f.sigma_total * 1e23
        );
    }
    let _ = write!(summary, "\nwrote {}, {}", json.display(), plot.display());
    Ok(summary)
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Injected EOM modulation amplitude (Hz); defaults to the configured one.
    #[arg(long)]
    pub amplitude: Option<f64>,
}

pub fn calibrate_cmd(args: &CalibrateArgs, out: &Path) -> anyhow::Result<String> {
    let cfg = args.config.resolve()?;
    let amplitude = args.amplitude.unwrap_or(cfg.calibration_amplitude);
    let c = calibrate(&cfg, amplitude)?;
    let record = CalibrationRecord {
        meta: Meta::new("calibration", Some(config_hash(&cfg)), Some(cfg.seed)),
        injected_amplitude_Hz: amplitude,
        calibration: c.into(),
        discriminant_V_per_Hz: pdh_discriminant(&cfg.cavity, &cfg.pdh)?,
        config: cfg,
    };
    let json = out_path(out, "calibration.json");
    record::write_json(&json, &record)?;
    Ok(format!(
        "calibration factor {:.5e} Hz/V ± {:.2}% (SNR {})\nwrote {}",
        c.factor,
        100.0 * c.rel_sigma,
        record
            .calibration
            .snr
            .map_or("∞".to_string(), |s| format!("{s:.1}")),
        json.display()
    ))
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    /// Ratio between the measured index difference and the target.
    #[arg(long, default_value_t = 7e8)]
    pub suppression: f64,
    /// TOML with an optional `[cavity]` section and a `[target]` section
    /// (`fill_factor`, `laser_power_W`).
    #[arg(long)]
    pub target_config: Option<PathBuf>,
    /// Measured in-rod index difference; defaults to the nominal gas and
    /// fields.
    #[arg(long)]
    pub measured_delta_n: Option<f64>,
    /// Frequency-noise floor (Hz/√Hz); defaults to the shot-noise limit.
    #[arg(long)]
    pub noise_asd: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    cavity: Option<CavitySection>,
    #[serde(default)]
    target: TargetSection,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    fill_factor: Option<f64>,
    laser_power_W: Option<f64>,
}

pub const DEFAULT_LASER_POWER: f64 = 0.05;

pub fn project_vacuum(args: &ProjectArgs, out: &Path) -> anyhow::Result<String> {
    let mut defaults = Vec::new();
    let file: TargetFile = match &args.target_config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            toml::from_str(&text).map_err(|e| {
                let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
                anyhow!(
                    "{}:{}: {}",
                    p.display(),
                    line.map_or("?".into(), |l| l.to_string()),
                    e.message()
                )
            })?
        }
        None => {
            defaults.push("no target configuration given".to_string());
            TargetFile::default()
        }
    };
    let nominal = VacuumTarget::nominal();
    let cavity = match file.cavity {
        Some(c) => RingCavity {
            perimeter: 4.0 * c.arm_m,
            arm: c.arm_m,
            finesse: c.finesse,
            wavelength: c.wavelength_m,
        },
        None => {
            defaults.push(format!(
                "target cavity: perimeter {} m, finesse {}, wavelength {} m",
                nominal.cavity.perimeter, nominal.cavity.finesse, nominal.cavity.wavelength
            ));
            nominal.cavity
        }
    };
    let fill_factor = file.target.fill_factor.unwrap_or_else(|| {
        defaults.push(format!("fill_factor {}", nominal.fill_factor));
        nominal.fill_factor
    });
    let power = file.target.laser_power_W.unwrap_or_else(|| {
        defaults.push(format!("laser_power_W {DEFAULT_LASER_POWER}"));
        DEFAULT_LASER_POWER
    });
    let target = VacuumTarget {
        cavity,
        fill_factor,
    };
    let measured = match args.measured_delta_n {
        Some(dn) => dn,
        None => {
            let n = RunConfig::nominal();
            let rod = n.assembly.rods[0];
            defaults.push("measured_delta_n from nominal gas, E and B".to_string());
            rod_delta_n(&rod, &n.gas)
        }
    };
    let noise = match args.noise_asd {
        Some(a) => a,
        None => {
            defaults.push("noise floor: shot-noise limit of the target cavity".to_string());
            shot_noise_asd(&target.cavity, power)?
        }
    };
    let p = vacuum_projection(measured, args.suppression, &target, noise)?;
    let record = ProjectionRecord {
        meta: Meta::new("projection", None, None),
        measured_delta_n: measured,
        suppression: args.suppression,
        target,
        laser_power_W: power,
        noise_floor_asd_Hz_per_rtHz: noise,
        target_delta_n: p.target_delta_n,
        target_delta_nu_Hz: p.target_delta_nu,
        required_time_s: p.required_time.is_finite().then_some(p.required_time),
        resolvable: p.resolvable,
        defaults_used: defaults,
    };
    let json = out_path(out, "projection.json");
    record::write_json(&json, &record)?;
    let mut summary = format!(
        "target Δn = {:.3e}, split {:.3e} Hz, noise {:.3e} Hz/√Hz, time for SNR 1: {}",
        p.target_delta_n,
        p.target_delta_nu,
        noise,
        record
            .required_time_s
            .map_or("unbounded".to_string(), |t| format!("{t:.3e} s"))
    );
    for d in &record.defaults_used {
        let _ = write!(summary, "\ndefault: {d}");
    }
    let _ = write!(summary, "\nwrote {}", json.display());
    Ok(summary)
}
