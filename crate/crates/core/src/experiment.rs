//! Synthetic experiments: single runs, field sweeps, the sign-configuration
//! campaign and EOM calibration runs.
//!
//! Every stochastic draw is a pure function of the run seed. A run uses the
//! sub-streams [`MEASUREMENT_STREAM`], [`CALIBRATION_STREAM`] and
//! [`LASER_STREAM`] of its seed; sweep point `i` and campaign row `i` run
//! with `derive_seed(base_seed, i)`.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::relative_effect;
use crate::error::{ensure_positive, Error, Result, ResultExt};
use crate::optics::{
    sagnac_split, split_per_field, GasMedium, RingCavity, RodAssembly, SagnacContext, Sign,
};
use crate::series::{sample_count, TimeSeries};
use crate::signal::{
    derive_seed, eom_calibration_signal, generate_noise, lock_in_demodulate, pdh_discriminant,
    LockInParams, NoiseModel, PdhDetector, PdhParams, ServoLoop, ServoMode, ServoParams,
};

pub const MEASUREMENT_STREAM: u64 = 0;
pub const CALIBRATION_STREAM: u64 = 1;
pub const LASER_STREAM: u64 = 2;

/// Largest field amplitude the electrodes are rated for (V/m).
pub const MAX_RATED_FIELD: f64 = 0.5e6;

/// Calibration SNR below which the calibration is rejected.
pub const MIN_CALIBRATION_SNR: f64 = 3.0;

/// Nominal run length (s).
pub const NOMINAL_DURATION: f64 = 2_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cavity: RingCavity,
    pub assembly: RodAssembly,
    pub gas: GasMedium,
    pub sagnac: SagnacContext,
    /// Amplitude of the sinusoidal field at `f_E` (V/m). A negative value
    /// inverts the drive polarity of every rod.
    pub e_amplitude: f64,
    pub pdh: PdhParams,
    pub lockin: LockInParams,
    /// Split noise; its `seed` field is ignored in favour of [`RunConfig::seed`].
    pub noise: NoiseModel,
    pub servo: ServoParams,
    /// s.
    pub duration: f64,
    pub seed: u64,
    /// EOM injection used for the per-run calibration (Hz).
    pub calibration_amplitude: f64,
    /// Keep the sampled series in the result.
    pub store_series: bool,
}

impl RunConfig {
    /// Nominal hardware, nitrogen, default noise and a 2000 s run at full field.
    pub fn nominal() -> Self {
        let cavity = RingCavity::nominal();
        RunConfig {
            cavity,
            assembly: RodAssembly::nominal(),
            gas: GasMedium::nitrogen(),
            sagnac: SagnacContext::default(),
            e_amplitude: MAX_RATED_FIELD,
            pdh: PdhParams::for_cavity(&cavity),
            lockin: LockInParams::default(),
            noise: NoiseModel::default(),
            servo: ServoParams::default(),
            duration: NOMINAL_DURATION,
            seed: 0,
            calibration_amplitude: 0.01,
            store_series: false,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise = NoiseModel::silent();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_e_amplitude(mut self, e: f64) -> Self {
        self.e_amplitude = e;
        self
    }

    /// Shortens the run while keeping the statistical uncertainty of the
    /// nominal run: the lock-in time constant and sample rate are replaced
    /// and the white-noise level is scaled by `√(T_settled / T_settled,0)`.
    pub fn compressed(mut self, duration: f64, time_constant: f64, sample_rate: f64) -> Self {
        let settled_before = self.duration - self.lockin.settling_time();
        self.lockin.time_constant = time_constant;
        self.servo.sample_rate = sample_rate;
        self.duration = duration;
        let settled_after = duration - self.lockin.settling_time();
        self.noise.white_split_noise_asd *= (settled_after / settled_before).sqrt();
        self
    }

    /// True when no stochastic input reaches the differential measurement.
    pub fn is_noiseless(&self) -> bool {
        self.noise.is_silent()
            && (self.servo.mode == ServoMode::IdealLock || self.servo.laser_random_walk == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate().context("[cavity]")?;
        self.assembly.validate().context("[rods]")?;
        self.assembly.common_length().context("[rods]")?;
        self.gas.validate().context("[gas]")?;
        self.sagnac.validate().context("[sagnac]")?;
        self.pdh.validate(&self.cavity).context("[pdh]")?;
        self.lockin.validate().context("[lockin]")?;
        self.noise.validate().context("[noise]")?;
        self.servo
            .validate(self.lockin.reference_freq)
            .context("[servo]")?;
        ensure_positive("duration", self.duration).context("[run]")?;
        ensure_positive("calibration_amplitude", self.calibration_amplitude).context("[run]")?;
        if self.duration < self.lockin.settling_time() {
            return Err(Error::invalid(
                "duration",
                format!(
                    "{} s is shorter than the lock-in settling time {} s",
                    self.duration,
                    self.lockin.settling_time()
                ),
            )
            .context("[run]"));
        }
        if !self.e_amplitude.is_finite() {
            return Err(Error::invalid("e_amplitude", "must be finite").context("[run]"));
        }
        if self.e_amplitude.abs() > MAX_RATED_FIELD {
            log::warn!(
                "field amplitude {:.3e} V/m exceeds the rated {:.1e} V/m",
                self.e_amplitude,
                MAX_RATED_FIELD
            );
        }
        Ok(())
    }

    fn noise_for(&self, stream: u64) -> NoiseModel {
        self.noise.with_seed(derive_seed(self.seed, stream))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Hz of split per volt of demodulated error signal.
    pub factor: f64,
    pub sigma: f64,
    pub rel_sigma: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// Earth-rotation split carried through the chain (Hz).
    pub sagnac_split: f64,
    /// Mean ccw error signal (V); non-zero because of the Sagnac offset.
    pub dc_error_signal: f64,
    /// `dc_error_signal / discriminant` (Hz).
    pub dc_detuning: f64,
    /// V/Hz.
    pub discriminant: f64,
    /// Demodulated quadrature converted to Hz.
    pub quadrature: f64,
}

/// Sampled signals of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub sample_rate: f64,
    /// V/m.
    pub e_field: Vec<f64>,
    /// Hz.
    pub detuning_ccw: Vec<f64>,
    /// V.
    pub error_signal: Vec<f64>,
}

impl RunSeries {
    pub fn time(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Demodulated cw−ccw split amplitude at `f_E` (Hz).
    pub delta_nu_fe: f64,
    /// Statistical standard error of `delta_nu_fe` (Hz).
    pub sigma_stat: f64,
    pub calibration: Calibration,
    pub e_amplitude: f64,
    pub config_label: String,
    pub diagnostics: RunDiagnostics,
    pub series: Option<RunSeries>,
}

impl RunResult {
    /// Statistical and calibration uncertainties in quadrature.
    pub fn sigma_total(&self) -> f64 {
        self.sigma_stat
            .hypot(self.calibration.rel_sigma * self.delta_nu_fe)
    }
}

/// Calibrates the error signal by injecting a known cw modulation of
/// `injected_amplitude` Hz at `f_E` with the calibration EOM.
pub fn calibrate(config: &RunConfig, injected_amplitude: f64) -> Result<Calibration> {
    config.validate()?;
    ensure_positive("injected_amplitude", injected_amplitude)?;
    let discriminant = pdh_discriminant(&config.cavity, &config.pdh)?;
    let noise = config.noise_for(CALIBRATION_STREAM);
    let noisy = !config.noise.is_silent();
    let signal = eom_calibration_signal(
        injected_amplitude,
        config.lockin.reference_freq,
        discriminant,
        config.duration,
        config.servo.sample_rate,
        noisy.then_some(&noise),
    )?;
    let out = lock_in_demodulate(&signal, &config.lockin).context("calibration demodulation")?;
    let sigma_v = if noisy { out.sigma } else { 0.0 };
    let snr = if sigma_v > 0.0 {
        out.in_phase.abs() / sigma_v
    } else {
        f64::INFINITY
    };
    if snr.is_nan() || snr < MIN_CALIBRATION_SNR {
        return Err(Error::CalibrationFailed {
            snr,
            threshold: MIN_CALIBRATION_SNR,
        });
    }
    let factor = injected_amplitude / out.in_phase;
    let rel_sigma = sigma_v / out.in_phase.abs();
    Ok(Calibration {
        factor,
        sigma: factor.abs() * rel_sigma,
        rel_sigma,
        snr,
    })
}

struct ChainOutput {
    signal: TimeSeries,
    series: Option<RunSeries>,
}

/// Samples the ccw error signal (differential in full-loop mode).
fn run_chain(config: &RunConfig, detector: &PdhDetector, discriminant: f64) -> Result<ChainOutput> {
    let fs = config.servo.sample_rate;
    let n = sample_count(config.duration, fs);
    let dt = fs.recip();
    let slope = split_per_field(&config.cavity, &config.assembly, &config.gas)?;
    let sagnac = sagnac_split(&config.cavity, &config.sagnac)?;
    let noise = if config.noise.is_silent() {
        vec![0.0; n]
    } else {
        generate_noise(&config.noise_for(MEASUREMENT_STREAM), n, fs)?
    };
    let omega = TAU * config.lockin.reference_freq;

    let mut e_field = Vec::with_capacity(if config.store_series { n } else { 0 });
    let mut detuning_ccw = Vec::with_capacity(e_field.capacity());
    let mut signal = Vec::with_capacity(n);

    let mut servo = ServoLoop::new(&config.servo);
    let mut laser_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, LASER_STREAM));
    let laser_step = config.servo.laser_random_walk * dt.sqrt();
    let mut laser_offset = 0.0;

    for (k, noise_k) in noise.iter().enumerate() {
        let e = config.e_amplitude * (omega * k as f64 * dt).sin();
        let split = sagnac + slope * e + noise_k;
        let (ccw_detuning, value) = match config.servo.mode {
            ServoMode::IdealLock => (split, detector.error(split)),
            ServoMode::FullLoop => {
                let z: f64 = StandardNormal.sample(&mut laser_rng);
                laser_offset += laser_step * z;
                let cw_detuning = laser_offset - servo.correction();
                let cw_error = detector.error(cw_detuning);
                servo.update(cw_error / discriminant);
                let ccw_detuning = cw_detuning + split;
                (ccw_detuning, detector.error(ccw_detuning) - cw_error)
            }
        };
        signal.push(value);
        if config.store_series {
            e_field.push(e);
            detuning_ccw.push(ccw_detuning);
        }
    }

    let series = config.store_series.then(|| RunSeries {
        sample_rate: fs,
        e_field,
        detuning_ccw,
        error_signal: signal.clone(),
    });
    Ok(ChainOutput {
        signal: TimeSeries::new(fs, signal)?,
        series,
    })
}

/// Simulates one modulated-field run and returns the calibrated split at `f_E`.
pub fn simulate_run(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let detector = PdhDetector::new(&config.cavity, &config.pdh)?;
    let discriminant = pdh_discriminant(&config.cavity, &config.pdh)?;

    let (calibration, chain) = rayon::join(
        || calibrate(config, config.calibration_amplitude),
        || run_chain(config, &detector, discriminant),
    );
    let calibration = calibration?;
    let chain = chain?;

    let out = lock_in_demodulate(&chain.signal, &config.lockin).context("run demodulation")?;
    let sigma_stat = if config.is_noiseless() {
        0.0
    } else {
        out.sigma * calibration.factor.abs()
    };
    let dc_error_signal = chain.signal.mean();

    Ok(RunResult {
        delta_nu_fe: out.in_phase * calibration.factor,
        sigma_stat,
        calibration,
        e_amplitude: config.e_amplitude,
        config_label: config.assembly.label(),
        diagnostics: RunDiagnostics {
            sagnac_split: sagnac_split(&config.cavity, &config.sagnac)?,
            dc_error_signal,
            dc_detuning: dc_error_signal / discriminant,
            discriminant,
            quadrature: out.quadrature * calibration.factor,
        },
        series: chain.series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPoint {
    /// V/m.
    pub e_field: f64,
    /// Hz.
    pub delta_nu: f64,
    /// Statistical σ (Hz).
    pub sigma: f64,
    pub calibration_rel_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub points: Vec<MeasurementPoint>,
    pub config_label: String,
}

impl MeasurementSeries {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .points
            .first()
            .ok_or_else(|| Error::InsufficientData("empty measurement series".into()))?;
        if self.points.iter().all(|p| p.e_field == first.e_field) {
            return Err(Error::InsufficientData(
                "at least two distinct field values are required".into(),
            ));
        }
        Ok(())
    }

    /// Mean per-point calibration uncertainty, treated as fully correlated
    /// across the sweep.
    pub fn calibration_rel_sigma(&self) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points
            .iter()
            .map(|p| p.calibration_rel_sigma)
            .sum::<f64>()
            / self.points.len() as f64
    }
}

/// Runs one simulation per field value; point `i` uses `derive_seed(seed, i)`.
pub fn sweep_e(config: &RunConfig, e_values: &[f64]) -> Result<MeasurementSeries> {
    if e_values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a sweep needs at least two field values, got {}",
            e_values.len()
        )));
    }
    if e_values.iter().all(|&e| e == e_values[0]) {
        return Err(Error::InsufficientData(
            "sweep field values are all identical".into(),
        ));
    }
    config.validate()?;
    let points = e_values
        .par_iter()
        .enumerate()
        .map(|(i, &e)| {
            let run_config = RunConfig {
                e_amplitude: e,
                seed: derive_seed(config.seed, i as u64),
                store_series: false,
                ..config.clone()
            };
            simulate_run(&run_config)
                .context(format!("sweep point {i} (E = {e:e} V/m)"))
                .map(|r| MeasurementPoint {
                    e_field: e,
                    delta_nu: r.delta_nu_fe,
                    sigma: r.sigma_stat,
                    calibration_rel_sigma: r.calibration.rel_sigma,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementSeries {
        points,
        config_label: config.assembly.label(),
    })
}

/// Electric and magnetic sign pattern of the four rods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignConfig {
    pub sign_e: [Sign; 4],
    pub sign_b: [Sign; 4],
}

impl SignConfig {
    /// Parses patterns such as `("++-0", "++--")`.
    pub fn parse(e: &str, b: &str) -> Option<SignConfig> {
        fn four(s: &str) -> Option<[Sign; 4]> {
            let signs: Vec<Sign> = s.chars().map(Sign::from_symbol).collect::<Option<_>>()?;
            signs.try_into().ok()
        }
        Some(SignConfig {
            sign_e: four(e)?,
            sign_b: four(b)?,
        })
    }

    pub fn reference() -> SignConfig {
        SignConfig {
            sign_e: [Sign::Plus; 4],
            sign_b: [Sign::Plus; 4],
        }
    }

    pub fn label(&self) -> String {
        let e: String = self.sign_e.iter().map(|s| s.symbol()).collect();
        let b: String = self.sign_b.iter().map(|s| s.symbol()).collect();
        format!("E{e}/B{b}")
    }

    pub fn expected_relative_effect(&self) -> f64 {
        relative_effect(self.sign_e, self.sign_b)
    }
}

/// The nine sign patterns of the reference test campaign; the first row is
/// the all-`+` reference.
pub fn standard_sign_configs() -> Vec<SignConfig> {
    [
        ("++++", "++++"),
        ("----", "++++"),
        ("++--", "++--"),
        ("++-0", "++--"),
        ("--00", "++++"),
        ("0+0-", "++--"),
        ("+000", "++++"),
        ("+-00", "++++"),
        ("++++", "++--"),
    ]
    .iter()
    .map(|(e, b)| SignConfig::parse(e, b).expect("static pattern"))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub config: SignConfig,
    pub connected_rods: usize,
    /// Hz.
    pub delta_nu: f64,
    /// Statistical ⊕ calibration σ of `delta_nu` (Hz).
    pub sigma: f64,
    /// `delta_nu / delta_nu_reference`.
    pub measured: f64,
    pub measured_sigma: f64,
    pub expected: f64,
}

impl CampaignRow {
    /// `|measured − expected| / σ`; infinite when σ is zero and they differ.
    pub fn pull(&self) -> f64 {
        let diff = (self.measured - self.expected).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.measured_sigma
        }
    }
}

/// Runs every sign configuration at the base field amplitude and reports each
/// split relative to the reference (first) configuration.
pub fn run_campaign(base: &RunConfig, configs: &[SignConfig]) -> Result<Vec<CampaignRow>> {
    match configs.first() {
        Some(first) if *first == SignConfig::reference() => {}
        _ => {
            return Err(Error::invalid(
                "configs",
                "the first configuration must be the all-+ reference",
            ))
        }
    }
    base.validate()?;
    let results = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let cfg = RunConfig {
                assembly: base.assembly.with_signs(c.sign_e, c.sign_b),
                seed: derive_seed(base.seed, i as u64),
                store_series: false,
                ..base.clone()
            };
            simulate_run(&cfg).context(format!("configuration {}", c.label()))
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = &results[0];
    let ref_value = reference.delta_nu_fe;
    let ref_sigma = reference.sigma_total();
    let ref_predicted = split_per_field(
        &base.cavity,
        &base.assembly.with_signs([Sign::Plus; 4], [Sign::Plus; 4]),
        &base.gas,
    )? * base.e_amplitude;
    if ref_predicted == 0.0
        || ref_value == 0.0
        || ref_value.abs() <= MIN_CALIBRATION_SNR * ref_sigma
    {
        return Err(Error::CampaignAborted(format!(
            "reference split {ref_value:e} ± {ref_sigma:e} Hz is not significant"
        )));
    }

    Ok(configs
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(i, (config, r))| {
            let sigma = r.sigma_total();
            let (measured, measured_sigma) = if i == 0 {
                (1.0, 0.0)
            } else {
                let ratio = r.delta_nu_fe / ref_value;
                (ratio, sigma.hypot(ratio * ref_sigma) / ref_value.abs())
            };
            CampaignRow {
                config: *config,
                connected_rods: base
                    .assembly
                    .with_signs(config.sign_e, config.sign_b)
                    .connected_count(),
                delta_nu: r.delta_nu_fe,
                sigma,
                measured,
                measured_sigma,
                expected: config.expected_relative_effect(),
            }
        })
        .collect())
}
