//! Digital lock-in amplifier.
//!
//! The input is mixed with `sin` and `cos` references at `f_E`, each product is
//! passed through `order` cascaded single-pole low-pass stages, and the first
//! ten time constants are discarded as settling. The reported value is the
//! mean of the settled output, scaled so that `A sin(2π f_E t + φ_ref)` gives
//! an in-phase value of `A`.
//!
//! The input is AC-coupled (its mean is removed first); otherwise a DC offset
//! leaks into the average through the filter turn-on transient.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::series::TimeSeries;

/// Number of time constants discarded before averaging.
pub const SETTLING_TIME_CONSTANTS: f64 = 10.0;

pub const MAX_FILTER_ORDER: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockInParams {
    /// Hz.
    pub reference_freq: f64,
    /// s.
    pub time_constant: f64,
    pub filter_order: u8,
    /// rad.
    pub reference_phase: f64,
}

impl Default for LockInParams {
    /// 18.5 Hz, τ = 10 s, fourth order, zero phase.
    fn default() -> Self {
        LockInParams {
            reference_freq: 18.5,
            time_constant: 10.0,
            filter_order: 4,
            reference_phase: 0.0,
        }
    }
}

impl LockInParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("reference_freq", self.reference_freq)?;
        ensure_positive("time_constant", self.time_constant)?;
        if !(1..=MAX_FILTER_ORDER).contains(&self.filter_order) {
            return Err(Error::invalid(
                "filter_order",
                format!(
                    "must be in 1..={MAX_FILTER_ORDER}, got {}",
                    self.filter_order
                ),
            ));
        }
        if !self.reference_phase.is_finite() {
            return Err(Error::invalid("reference_phase", "must be finite"));
        }
        Ok(())
    }

    pub fn settling_time(&self) -> f64 {
        SETTLING_TIME_CONSTANTS * self.time_constant
    }

    /// Two-sided equivalent noise bandwidth `∫|H(f)|² df` of the cascade (Hz).
    pub fn noise_bandwidth(&self) -> f64 {
        // Γ(n − ½)/Γ(n) = √π ∏_{k=1}^{n−1} (k − ½)/k
        let ratio: f64 = (1..self.filter_order)
            .map(|k| (k as f64 - 0.5) / k as f64)
            .product::<f64>()
            * PI.sqrt();
        ratio / (2.0 * PI.sqrt() * self.time_constant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockInOutput {
    pub in_phase: f64,
    pub quadrature: f64,
    /// Standard error of `in_phase` (and of `quadrature`).
    pub sigma: f64,
    /// Length of the averaged window (s).
    pub settled_duration: f64,
}

impl LockInOutput {
    pub fn magnitude(&self) -> f64 {
        self.in_phase.hypot(self.quadrature)
    }
}

/// Cascade of identical single-pole low-pass stages with unit DC gain.
#[derive(Debug, Clone)]
pub struct CascadedLowPass {
    alpha: f64,
    state: Vec<f64>,
}

impl CascadedLowPass {
    pub fn new(time_constant: f64, dt: f64, order: u8) -> Self {
        CascadedLowPass {
            alpha: -(-dt / time_constant).exp_m1(),
            state: vec![0.0; order as usize],
        }
    }

    pub fn update(&mut self, x: f64) -> f64 {
        let alpha = self.alpha;
        self.state.iter_mut().fold(x, |input, y| {
            *y += alpha * (input - *y);
            *y
        })
    }
}

/// Demodulates `series` at the reference frequency.
pub fn lock_in_demodulate(series: &TimeSeries, params: &LockInParams) -> Result<LockInOutput> {
    params.validate()?;
    let fs = series.sample_rate();
    if params.reference_freq >= fs / 2.0 {
        return Err(Error::invalid(
            "reference_freq",
            format!(
                "{} Hz is at or above the Nyquist frequency {} Hz",
                params.reference_freq,
                fs / 2.0
            ),
        ));
    }
    let settle = (params.settling_time() * fs).ceil() as usize;
    if series.duration() < params.settling_time() || series.len() < settle + 2 {
        return Err(Error::InsufficientData(format!(
            "{:.3} s of data; at least {:.3} s of settling plus two samples are required",
            series.duration(),
            params.settling_time()
        )));
    }

    let dt = series.dt();
    let dc = series.mean();
    let omega = TAU * params.reference_freq;
    let mut lp_i = CascadedLowPass::new(params.time_constant, dt, params.filter_order);
    let mut lp_q = CascadedLowPass::new(params.time_constant, dt, params.filter_order);

    // Welford accumulators over the settled window.
    let (mut n, mut mean_i, mut mean_q, mut m2_i, mut m2_q) = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for (k, &x) in series.samples().iter().enumerate() {
        let x = x - dc;
        let (s, c) = (omega * k as f64 * dt + params.reference_phase).sin_cos();
        let i = lp_i.update(2.0 * x * s);
        let q = lp_q.update(2.0 * x * c);
        if k >= settle {
            n += 1.0;
            let di = i - mean_i;
            mean_i += di / n;
            m2_i += di * (i - mean_i);
            let dq = q - mean_q;
            mean_q += dq / n;
            m2_q += dq * (q - mean_q);
        }
    }

    let settled_duration = n * dt;
    // Mean of a filtered stationary process: var(mean) = var(out) / (T · B_n).
    // The spread about the window mean is low by (1 − 1/N_eff) with
    // N_eff = T · B_n independent samples; undo that bias.
    let effective_samples = settled_duration * params.noise_bandwidth();
    let mut output_var = 0.5 * (m2_i + m2_q) / (n - 1.0);
    if effective_samples > 1.0 {
        output_var *= effective_samples / (effective_samples - 1.0);
    }
    let sigma = (output_var / effective_samples).sqrt();

    Ok(LockInOutput {
        in_phase: mean_i,
        quadrature: mean_q,
        sigma,
        settled_duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::noise::{generate_noise, NoiseModel};
    use approx::assert_relative_eq;

    fn tone(amplitude: f64, freq: f64, phase: f64, fs: f64, duration: f64) -> TimeSeries {
        TimeSeries::from_fn(fs, (duration * fs) as usize, |t| {
            amplitude * (TAU * freq * t + phase).sin()
        })
        .unwrap()
    }

    #[test]
    fn recovers_matched_tone() {
        let params = LockInParams::default();
        let out = lock_in_demodulate(&tone(3.0, 18.5, 0.0, 2_000.0, 400.0), &params).unwrap();
        assert_relative_eq!(out.in_phase, 3.0, max_relative = 1e-3);
        assert!(out.quadrature.abs() < 3e-3);
    }

    #[test]
    fn quadrature_tracks_reference_phase() {
        let params = LockInParams {
            time_constant: 1.0,
            ..Default::default()
        };
        let out = lock_in_demodulate(&tone(2.0, 18.5, PI / 2.0, 500.0, 60.0), &params).unwrap();
        assert!(out.in_phase.abs() < 2e-3);
        assert_relative_eq!(out.quadrature, 2.0, max_relative = 1e-3);
    }

    #[test]
    fn rejects_second_harmonic() {
        let params = LockInParams {
            time_constant: 2.0,
            ..Default::default()
        };
        let out = lock_in_demodulate(&tone(1.0, 37.0, 0.3, 1_000.0, 100.0), &params).unwrap();
        assert!(out.in_phase.abs() < 1e-3);
        assert!(out.quadrature.abs() < 1e-3);
    }

    #[test]
    fn too_short_is_rejected() {
        let params = LockInParams::default();
        let err = lock_in_demodulate(&tone(1.0, 18.5, 0.0, 1_000.0, 50.0), &params).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn above_nyquist_is_rejected() {
        let params = LockInParams {
            reference_freq: 600.0,
            time_constant: 0.1,
            ..Default::default()
        };
        let err = lock_in_demodulate(&tone(1.0, 10.0, 0.0, 1_000.0, 10.0), &params).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidParameter {
                name: "reference_freq",
                ..
            }
        ));
    }

    #[test]
    fn bad_filter_order_is_rejected() {
        let params = LockInParams {
            filter_order: 9,
            ..Default::default()
        };
        assert!(params.validate().is_err());
    }

    #[test]
    fn first_order_noise_bandwidth() {
        let p = LockInParams {
            filter_order: 1,
            time_constant: 0.5,
            ..Default::default()
        };
        assert_relative_eq!(p.noise_bandwidth(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn noise_bandwidth_matches_quadrature() {
        // Midpoint-rule integral of (1 + (2π f τ)²)^{-n} over f.
        for order in 1..=MAX_FILTER_ORDER {
            let p = LockInParams {
                filter_order: order,
                time_constant: 1.0,
                ..Default::default()
            };
            let df = 1e-4;
            let integral: f64 = (0..2_000_000)
                .map(|k| {
                    let f = (k as f64 + 0.5) * df;
                    2.0 * df * (1.0 + (TAU * f).powi(2)).powi(-(order as i32))
                })
                .sum();
            assert_relative_eq!(p.noise_bandwidth(), integral, max_relative = 1e-3);
        }
    }

    #[test]
    fn reported_sigma_tracks_white_noise() {
        let params = LockInParams {
            time_constant: 1.0,
            ..Default::default()
        };
        let asd = 0.5;
        let model = NoiseModel {
            white_split_noise_asd: asd,
            drift_rate: 0.0,
            seed: 11,
        };
        let fs = 200.0;
        let samples = generate_noise(&model, 40_000, fs).unwrap();
        let out = lock_in_demodulate(&TimeSeries::new(fs, samples).unwrap(), &params).unwrap();
        let expected = asd / out.settled_duration.sqrt();
        assert!(out.sigma > expected / 1.3 && out.sigma < expected * 1.3);
    }
}
