use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServoMode {
    /// The laser sits exactly on the cw resonance.
    IdealLock,
    /// Discrete PI loop on the cw error signal with a first-order actuator.
    FullLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoParams {
    pub mode: ServoMode,
    /// Hz of correction per Hz of measured detuning.
    pub proportional_gain: f64,
    /// Integral gain (1/s).
    pub integral_gain: f64,
    /// Actuator bandwidth (Hz).
    pub actuator_bandwidth: f64,
    /// Slow-dynamics sample rate (Hz).
    pub sample_rate: f64,
    /// Free-running laser frequency random walk (Hz/√s); only used in
    /// full-loop mode.
    pub laser_random_walk: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        ServoParams {
            mode: ServoMode::IdealLock,
            proportional_gain: 0.2,
            integral_gain: 50.0,
            actuator_bandwidth: 100.0,
            sample_rate: 2_000.0,
            laser_random_walk: 10.0,
        }
    }
}

impl ServoParams {
    pub fn validate(&self, reference_freq: f64) -> Result<()> {
        ensure_non_negative("proportional_gain", self.proportional_gain)?;
        ensure_non_negative("integral_gain", self.integral_gain)?;
        ensure_positive("actuator_bandwidth", self.actuator_bandwidth)?;
        ensure_positive("sample_rate", self.sample_rate)?;
        ensure_non_negative("laser_random_walk", self.laser_random_walk)?;
        if self.sample_rate <= 2.0 * reference_freq {
            return Err(Error::invalid(
                "sample_rate",
                format!(
                    "{} Hz does not exceed twice the reference frequency {} Hz",
                    self.sample_rate, reference_freq
                ),
            ));
        }
        Ok(())
    }
}

/// PI controller driving a first-order actuator.
#[derive(Debug, Clone)]
pub struct ServoLoop {
    kp: f64,
    ki_dt: f64,
    beta: f64,
    integrator: f64,
    actuator: f64,
}

impl ServoLoop {
    pub fn new(params: &ServoParams) -> Self {
        let dt = params.sample_rate.recip();
        ServoLoop {
            kp: params.proportional_gain,
            ki_dt: params.integral_gain * dt,
            beta: -(-std::f64::consts::TAU * params.actuator_bandwidth * dt).exp_m1(),
            integrator: 0.0,
            actuator: 0.0,
        }
    }

    /// Current frequency correction (Hz).
    pub fn correction(&self) -> f64 {
        self.actuator
    }

    /// Feeds one measured detuning (Hz) and returns the updated correction.
    pub fn update(&mut self, detuning: f64) -> f64 {
        self.integrator += self.ki_dt * detuning;
        let command = self.kp * detuning + self.integrator;
        self.actuator += self.beta * (command - self.actuator);
        self.actuator
    }
}
