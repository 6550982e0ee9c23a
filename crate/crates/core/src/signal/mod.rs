//! Measurement chain: cavity reflection, PDH error signal, EOM calibration
//! injection, lock-in detection, noise and the frequency servo.
//!
//! Only the slow dynamics (the field modulation at `f_E` and below) are time
//! sampled. Everything at the RF modulation frequency is folded into the
//! analytic error-signal response of [`pdh`].

pub mod lockin;
pub mod noise;
pub mod pdh;
pub mod servo;

use std::f64::consts::TAU;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::series::{sample_count, TimeSeries};

pub use lockin::{lock_in_demodulate, CascadedLowPass, LockInOutput, LockInParams};
pub use noise::{derive_seed, generate_noise, NoiseModel};
pub use pdh::{pdh_discriminant, pdh_error, reflection_coefficient, PdhDetector, PdhParams};
pub use servo::{ServoLoop, ServoMode, ServoParams};

/// Error signal produced when the calibration EOM frequency-modulates the cw
/// beam by `amplitude` Hz at `f_e`: `D·(A sin(2π f_E t) + noise)`.
pub fn eom_calibration_signal(
    amplitude: f64,
    f_e: f64,
    discriminant: f64,
    duration: f64,
    sample_rate: f64,
    noise: Option<&NoiseModel>,
) -> Result<TimeSeries> {
    ensure_non_negative("amplitude", amplitude)?;
    ensure_positive("f_e", f_e)?;
    ensure_positive("duration", duration)?;
    if !discriminant.is_finite() {
        return Err(Error::invalid("discriminant", "must be finite"));
    }
    let n = sample_count(duration, sample_rate);
    let omega = TAU * f_e;
    let noise = match noise {
        Some(model) => generate_noise(model, n, sample_rate)?,
        None => vec![0.0; n],
    };
    TimeSeries::from_fn(sample_rate, n, |t| amplitude * (omega * t).sin()).map(|tone| {
        let samples = tone
            .samples()
            .iter()
            .zip(&noise)
            .map(|(s, n)| discriminant * (s + n))
            .collect();
        TimeSeries::new(sample_rate, samples).expect("sample rate already validated")
    })
}
