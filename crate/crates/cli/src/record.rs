//! JSON result records. Every record starts with a [`Meta`] block carrying
//! the schema version; the matching JSON Schemas live in `schemas/`.

// Field names carry unit symbols such as `_Hz` and `_W`.
#![allow(non_snake_case)]

use std::path::Path;

use anyhow::Context;
use menr_core::analysis::{EtaEstimate, FitResult, VacuumTarget};
use menr_core::experiment::{Calibration, MeasurementPoint, RunDiagnostics};
use menr_core::RunConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub schema_version: u32,
    pub kind: String,
    pub generator: String,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    /// RFC 3339, UTC. Honours `SOURCE_DATE_EPOCH`.
    pub timestamp: String,
}

impl Meta {
    pub fn new(kind: &str, config_hash: Option<String>, seed: Option<u64>) -> Self {
        Meta {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            generator: format!("menr {}", env!("CARGO_PKG_VERSION")),
            config_hash,
            seed,
            timestamp: timestamp(),
        }
    }
}

fn timestamp() -> String {
    use chrono::{DateTime, SecondsFormat, Utc};
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOut {
    pub factor_Hz_per_V: f64,
    pub sigma_Hz_per_V: f64,
    pub rel_sigma: f64,
    pub snr: Option<f64>,
}

impl From<Calibration> for CalibrationOut {
    fn from(c: Calibration) -> Self {
        CalibrationOut {
            factor_Hz_per_V: c.factor,
            sigma_Hz_per_V: c.sigma,
            rel_sigma: c.rel_sigma,
            // Infinite for noiseless runs, which JSON cannot carry.
            snr: c.snr.is_finite().then_some(c.snr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub meta: Meta,
    pub config_label: String,
    pub e_amplitude_V_per_m: f64,
    pub delta_nu_fE_Hz: f64,
    pub sigma_stat_Hz: f64,
    pub sigma_total_Hz: f64,
    pub calibration: CalibrationOut,
    /// In-rod index difference.
    pub delta_n: Option<f64>,
    pub delta_n_sigma: Option<f64>,
    /// Single-run `2η∥`, from the split over the field amplitude.
    pub eta: Option<EtaEstimate>,
    pub diagnostics: RunDiagnostics,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub meta: Meta,
    pub config_label: String,
    pub points: Vec<MeasurementPoint>,
    pub fit: FitResult,
    /// Forward-model slope for the configured gas (Hz per V/m).
    pub analytic_slope: f64,
    /// `(fit − analytic) / σ_fit`; absent for exact data.
    pub slope_pull: Option<f64>,
    pub calibration_rel_sigma: f64,
    pub eta: Option<EtaEstimate>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRowOut {
    pub label: String,
    pub connected_rods: usize,
    pub delta_nu_Hz: f64,
    pub sigma_Hz: f64,
    pub measured: f64,
    pub measured_sigma: f64,
    pub expected: f64,
    /// `|measured − expected| / σ`; absent when σ is zero.
    pub pull: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub meta: Meta,
    pub rows: Vec<CampaignRowOut>,
    pub max_pull: Option<f64>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub meta: Meta,
    pub injected_amplitude_Hz: f64,
    pub calibration: CalibrationOut,
    pub discriminant_V_per_Hz: f64,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaInput {
    pub source: String,
    pub kind: String,
    pub config_label: String,
    /// Signed `2η∥` relative to the all-`+` assembly.
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRecord {
    pub meta: Meta,
    pub inputs: Vec<EtaInput>,
    pub weighted_mean: f64,
    pub sigma: f64,
    pub chi2_per_dof: Option<f64>,
    pub mixed_configurations: bool,
    /// Present with `--final-eta`: the field-determination term added.
    pub final_estimate: Option<EtaEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub meta: Meta,
    pub measured_delta_n: f64,
    pub suppression: f64,
    pub target: VacuumTarget,
    pub laser_power_W: f64,
    pub noise_floor_asd_Hz_per_rtHz: f64,
    pub target_delta_n: f64,
    pub target_delta_nu_Hz: f64,
    /// Averaging time for unit SNR; absent when the target split is zero.
    pub required_time_s: Option<f64>,
    pub resolvable: bool,
    /// Inputs that fell back to their documented defaults.
    pub defaults_used: Vec<String>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(record: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, record: &T) -> anyhow::Result<()> {
    std::fs::write(path, to_json(record)?)
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Names of the schemas shipped in `schemas/`, by record kind.
pub fn schema_file(kind: &str) -> Option<&'static str> {
    Some(match kind {
        "run" => "run.schema.json",
        "sweep" => "sweep.schema.json",
        "campaign" => "campaign.schema.json",
        "calibration" => "calibration.schema.json",
        "eta" => "eta.schema.json",
        "projection" => "projection.schema.json",
        _ => return None,
    })
}
