//! Experiment configuration files.
//!
//! A TOML document with the sections `[cavity]`, `[[rods]]` (exactly four),
//! `[gas]`, `[pdh]`, `[lockin]`, `[noise]`, `[servo]` and `[run]`. Every key
//! carries its SI unit as a suffix. Unknown keys are rejected and missing
//! sections or keys take the nominal defaults.

// Key names carry unit symbols such as `_T` and `_Hz`.
#![allow(non_snake_case)]

use std::fmt;
use std::path::{Path, PathBuf};

use menr_core::optics::{GasState, RingCavity, Rod, RodAssembly, SagnacContext, Sign};
use menr_core::signal::pdh::mirror_amplitude_for_finesse;
use menr_core::signal::{LockInParams, NoiseModel, PdhParams, ServoMode, ServoParams};
use menr_core::{GasMedium, RunConfig};
use serde::{Deserialize, Serialize};

/// A configuration error pointing at a line of the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub section: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self
            .path
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<config>".into());
        match self.line {
            Some(line) => write!(f, "{path}:{line}: ")?,
            None => write!(f, "{path}: ")?,
        }
        if let Some(section) = &self.section {
            write!(f, "{section}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub rods: Option<Vec<RodSection>>,
    #[serde(default)]
    pub gas: GasSection,
    #[serde(default)]
    pub pdh: PdhSection,
    #[serde(default)]
    pub lockin: LockInSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub servo: ServoSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub arm_m: f64,
    pub finesse: f64,
    pub wavelength_m: f64,
    pub latitude_deg: f64,
    pub earth_rate_rad_per_s: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        let c = RingCavity::nominal();
        let s = SagnacContext::default();
        CavitySection {
            arm_m: c.arm,
            finesse: c.finesse,
            wavelength_m: c.wavelength,
            latitude_deg: s.latitude.to_degrees(),
            earth_rate_rad_per_s: s.earth_rate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RodSection {
    pub length_m: f64,
    pub b_field_T: f64,
    pub gap_m: f64,
    /// `"+"`, `"-"` or `"0"`.
    pub sign_b: String,
    pub sign_e: String,
}

impl Default for RodSection {
    fn default() -> Self {
        let r = Rod::nominal();
        RodSection {
            length_m: r.length,
            b_field_T: r.b_field,
            gap_m: r.gap,
            sign_b: "+".into(),
            sign_e: "+".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasSection {
    pub name: String,
    pub two_eta_parallel_m_per_V_T: f64,
    pub two_eta_perp_m_per_V_T: Option<f64>,
    pub pressure_Pa: f64,
    pub temperature_K: f64,
}

impl Default for GasSection {
    fn default() -> Self {
        let g = GasMedium::nitrogen();
        GasSection {
            name: g.name,
            two_eta_parallel_m_per_V_T: g.two_eta_parallel,
            two_eta_perp_m_per_V_T: g.two_eta_perp,
            pressure_Pa: g.state.pressure,
            temperature_K: g.state.temperature,
        }
    }
}

/// Mirror amplitudes default to `r = a` matched to the cavity finesse.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdhSection {
    pub modulation_freq_Hz: f64,
    pub modulation_depth_rad: f64,
    pub input_coupler_reflectivity: Option<f64>,
    pub round_trip_amplitude: Option<f64>,
    pub detector_gain_V: f64,
}

impl Default for PdhSection {
    fn default() -> Self {
        let p = PdhParams::for_cavity(&RingCavity::nominal());
        PdhSection {
            modulation_freq_Hz: p.mod_angular_freq / std::f64::consts::TAU,
            modulation_depth_rad: p.mod_depth,
            input_coupler_reflectivity: None,
            round_trip_amplitude: None,
            detector_gain_V: p.detector_gain,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LockInSection {
    pub reference_freq_Hz: f64,
    pub time_constant_s: f64,
    pub filter_order: u8,
    pub reference_phase_rad: f64,
}

impl Default for LockInSection {
    fn default() -> Self {
        let l = LockInParams::default();
        LockInSection {
            reference_freq_Hz: l.reference_freq,
            time_constant_s: l.time_constant,
            filter_order: l.filter_order,
            reference_phase_rad: l.reference_phase,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub white_split_noise_asd_Hz_per_rtHz: f64,
    pub drift_rate_Hz_per_s: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseModel::default();
        NoiseSection {
            white_split_noise_asd_Hz_per_rtHz: n.white_split_noise_asd,
            drift_rate_Hz_per_s: n.drift_rate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoSection {
    pub mode: ServoMode,
    pub proportional_gain: f64,
    pub integral_gain_per_s: f64,
    pub actuator_bandwidth_Hz: f64,
    pub sample_rate_Hz: f64,
    pub laser_random_walk_Hz_per_rts: f64,
}

impl Default for ServoSection {
    fn default() -> Self {
        let s = ServoParams::default();
        ServoSection {
            mode: s.mode,
            proportional_gain: s.proportional_gain,
            integral_gain_per_s: s.integral_gain,
            actuator_bandwidth_Hz: s.actuator_bandwidth,
            sample_rate_Hz: s.sample_rate,
            laser_random_walk_Hz_per_rts: s.laser_random_walk,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub duration_s: f64,
    pub e_amplitude_V_per_m: f64,
    pub seed: u64,
    pub calibration_amplitude_Hz: f64,
    /// Write the sampled time series next to the result record.
    pub write_series: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        let r = RunConfig::nominal();
        RunSection {
            duration_s: r.duration,
            e_amplitude_V_per_m: r.e_amplitude,
            seed: r.seed,
            calibration_amplitude_Hz: r.calibration_amplitude,
            write_series: false,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            path: None,
            line: e.span().map(|span| line_of(text, span.start)),
            section: None,
            message: e.message().to_string(),
        })
    }

    /// Resolves the file into a run configuration, applying defaults.
    pub fn to_run_config(&self) -> Result<RunConfig, SectionError> {
        let c = &self.cavity;
        let cavity = RingCavity {
            perimeter: 4.0 * c.arm_m,
            arm: c.arm_m,
            finesse: c.finesse,
            wavelength: c.wavelength_m,
        };
        let sagnac = SagnacContext {
            earth_rate: c.earth_rate_rad_per_s,
            latitude: c.latitude_deg.to_radians(),
        };

        let rods = match &self.rods {
            None => vec![RodSection::default(); 4],
            Some(rods) => rods.clone(),
        };
        if rods.len() != 4 {
            return Err(SectionError::new(
                "rods",
                format!("exactly 4 rods are required, found {}", rods.len()),
            ));
        }
        let e = self.run.e_amplitude_V_per_m;
        let mut built = [Rod::nominal(); 4];
        for (i, (slot, r)) in built.iter_mut().zip(&rods).enumerate() {
            let sign = |s: &str, key: &str| {
                let mut chars = s.chars();
                match (chars.next().and_then(Sign::from_symbol), chars.next()) {
                    (Some(sign), None) => Ok(sign),
                    _ => Err(SectionError::new(
                        "rods",
                        format!(
                            "rod {}: `{key}` must be \"+\", \"-\" or \"0\", got {s:?}",
                            i + 1
                        ),
                    )),
                }
            };
            *slot = Rod {
                length: r.length_m,
                b_field: r.b_field_T,
                gap: r.gap_m,
                voltage: e.abs() * r.gap_m,
                sign_b: sign(&r.sign_b, "sign_b")?,
                sign_e: sign(&r.sign_e, "sign_e")?,
            };
        }

        let g = &self.gas;
        let gas = GasMedium {
            name: g.name.clone(),
            two_eta_parallel: g.two_eta_parallel_m_per_V_T,
            two_eta_perp: g.two_eta_perp_m_per_V_T,
            state: GasState::new(g.pressure_Pa, g.temperature_K),
        };

        let p = &self.pdh;
        let matched = mirror_amplitude_for_finesse(cavity.finesse);
        let pdh = PdhParams {
            mod_angular_freq: std::f64::consts::TAU * p.modulation_freq_Hz,
            mod_depth: p.modulation_depth_rad,
            input_coupler_reflectivity: p.input_coupler_reflectivity.unwrap_or(matched),
            round_trip_amplitude: p.round_trip_amplitude.unwrap_or(matched),
            detector_gain: p.detector_gain_V,
        };

        let l = &self.lockin;
        let n = &self.noise;
        let s = &self.servo;
        let r = &self.run;
        Ok(RunConfig {
            cavity,
            assembly: RodAssembly { rods: built },
            gas,
            sagnac,
            e_amplitude: e,
            pdh,
            lockin: LockInParams {
                reference_freq: l.reference_freq_Hz,
                time_constant: l.time_constant_s,
                filter_order: l.filter_order,
                reference_phase: l.reference_phase_rad,
            },
            noise: NoiseModel {
                white_split_noise_asd: n.white_split_noise_asd_Hz_per_rtHz,
                drift_rate: n.drift_rate_Hz_per_s,
                seed: r.seed,
            },
            servo: ServoParams {
                mode: s.mode,
                proportional_gain: s.proportional_gain,
                integral_gain: s.integral_gain_per_s,
                actuator_bandwidth: s.actuator_bandwidth_Hz,
                sample_rate: s.sample_rate_Hz,
                laser_random_walk: s.laser_random_walk_Hz_per_rts,
            },
            duration: r.duration_s,
            seed: r.seed,
            calibration_amplitude: r.calibration_amplitude_Hz,
            store_series: r.write_series,
        })
    }
}

/// A semantic error attributed to one section of the file.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionError {
    pub section: String,
    pub message: String,
}

impl SectionError {
    fn new(section: &str, message: impl Into<String>) -> Self {
        SectionError {
            section: section.into(),
            message: message.into(),
        }
    }
}

/// 1-based line containing byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the header of `section`, or of its `nth` occurrence for arrays
/// of tables.
fn header_line(text: &str, section: &str, nth: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            l == format!("[{section}]") || l == format!("[[{section}]]")
        })
        .nth(nth)
        .map(|(i, _)| i + 1)
}

/// Maps a validation context such as `[sagnac]` to the file section that
/// holds its keys.
fn file_section(context: &str) -> Option<&'static str> {
    Some(match context {
        "[cavity]" | "[sagnac]" => "cavity",
        "[rods]" => "rods",
        "[gas]" => "gas",
        "[pdh]" => "pdh",
        "[lockin]" => "lockin",
        "[noise]" => "noise",
        "[servo]" => "servo",
        "[run]" => "run",
        _ => return None,
    })
}

/// A parsed configuration together with its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: Option<PathBuf>,
    pub file: ConfigFile,
    pub run: RunConfig,
}

/// Parses and validates `text`; errors name the section and line.
pub fn load_str(text: &str, path: Option<&Path>) -> Result<LoadedConfig, ConfigError> {
    let with_path = |mut e: ConfigError| {
        e.path = path.map(Path::to_path_buf);
        e
    };
    let file = ConfigFile::parse(text).map_err(with_path)?;
    let run = file.to_run_config().map_err(|e| {
        let nth = match (&file.rods, e.section.as_str()) {
            (Some(rods), "rods") if rods.len() > 4 => 4,
            _ => 0,
        };
        with_path(ConfigError {
            path: None,
            line: header_line(text, &e.section, nth),
            section: Some(format!("[{}]", e.section)),
            message: e.message,
        })
    })?;
    run.validate().map_err(|err| {
        let (section, message) = match &err {
            menr_core::Error::Context { context, source } => match file_section(context) {
                Some(s) => (Some(s), source.to_string()),
                None => (None, err.to_string()),
            },
            _ => (None, err.to_string()),
        };
        with_path(ConfigError {
            path: None,
            line: section.and_then(|s| header_line(text, s, 0)),
            section: section.map(|s| format!("[{s}]")),
            message,
        })
    })?;
    Ok(LoadedConfig {
        path: path.map(Path::to_path_buf),
        file,
        run,
    })
}

/// Reads a configuration file; `None` gives the nominal defaults.
pub fn load(path: Option<&Path>) -> anyhow::Result<LoadedConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", p.display()))?,
        None => String::new(),
    };
    Ok(load_str(&text, path)?)
}

/// Default configuration written out as a commented template.
pub fn default_toml() -> String {
    let mut file = ConfigFile {
        rods: Some(vec![RodSection::default(); 4]),
        ..ConfigFile::default()
    };
    file.gas.two_eta_perp_m_per_V_T = None;
    toml::to_string(&file).expect("default config serialises")
}
