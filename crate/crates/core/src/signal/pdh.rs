//! Cavity reflection and the Pound-Drever-Hall error signal.
//!
//! The RF modulation at `Ω` is never time-sampled: the error signal is
//! evaluated analytically from the carrier and first sideband pair reflected
//! off the cavity, as a function of the instantaneous detuning.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::optics::{free_spectral_range, linewidth_fwhm, RingCavity};

/// Sideband offset must exceed this many linewidths before a warning is logged.
pub const SIDEBAND_SEPARATION_WARN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdhParams {
    /// Phase-modulation angular frequency `Ω` (rad/s).
    pub mod_angular_freq: f64,
    /// Modulation depth β (rad).
    pub mod_depth: f64,
    /// Input-coupler amplitude reflectivity `r`.
    pub input_coupler_reflectivity: f64,
    /// Round-trip amplitude `a` of the remaining mirrors and losses.
    pub round_trip_amplitude: f64,
    /// Detector gain, arbitrary units per unit of reflected power.
    pub detector_gain: f64,
}

impl PdhParams {
    /// Parameters for a cavity of the given finesse: `r = a` with
    /// `π r / (1 − r²) = F`, 20 MHz modulation at depth 1.08 rad.
    pub fn for_cavity(cavity: &RingCavity) -> Self {
        let r = mirror_amplitude_for_finesse(cavity.finesse);
        PdhParams {
            mod_angular_freq: TAU * 20e6,
            mod_depth: 1.08,
            input_coupler_reflectivity: r,
            round_trip_amplitude: r,
            detector_gain: 1.0,
        }
    }

    pub fn validate(&self, cavity: &RingCavity) -> Result<()> {
        ensure_positive("mod_angular_freq", self.mod_angular_freq)?;
        ensure_non_negative("mod_depth", self.mod_depth)?;
        let r = self.input_coupler_reflectivity;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid(
                "input_coupler_reflectivity",
                format!("must lie in (0, 1), got {r}"),
            ));
        }
        let a = self.round_trip_amplitude;
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::invalid(
                "round_trip_amplitude",
                format!("must lie in (0, 1], got {a}"),
            ));
        }
        if !self.detector_gain.is_finite() {
            return Err(Error::invalid("detector_gain", "must be finite"));
        }
        let linewidth = linewidth_fwhm(cavity)?;
        let sideband = self.mod_angular_freq / TAU;
        if sideband < SIDEBAND_SEPARATION_WARN * linewidth {
            log::warn!(
                "modulation frequency {sideband:.3e} Hz is not much larger than the cavity linewidth {linewidth:.3e} Hz"
            );
        }
        Ok(())
    }
}

/// Mirror amplitude `r` solving `π r / (1 − r²) = F`.
pub fn mirror_amplitude_for_finesse(finesse: f64) -> f64 {
    (-PI + (PI * PI + 4.0 * finesse * finesse).sqrt()) / (2.0 * finesse)
}

/// Reflected-field amplitude `(r − a e^{iφ}) / (1 − r a e^{iφ})` with
/// round-trip phase `φ = 2π δ / FSR`.
pub fn reflection_coefficient(
    cavity: &RingCavity,
    pdh: &PdhParams,
    detuning: f64,
) -> Result<Complex64> {
    let fsr = free_spectral_range(cavity)?;
    Ok(reflection_at(fsr, pdh, detuning))
}

fn reflection_at(fsr: f64, pdh: &PdhParams, detuning: f64) -> Complex64 {
    let r = pdh.input_coupler_reflectivity;
    let a = pdh.round_trip_amplitude;
    let phasor = Complex64::from_polar(1.0, TAU * detuning / fsr);
    (r - a * phasor) / (1.0 - r * a * phasor)
}

/// Precomputed error-signal evaluator; avoids re-deriving the constants for
/// every sample of a long run.
#[derive(Debug, Clone, Copy)]
pub struct PdhDetector {
    fsr: f64,
    sideband: f64,
    scale: f64,
    params: PdhParams,
}

impl PdhDetector {
    pub fn new(cavity: &RingCavity, pdh: &PdhParams) -> Result<Self> {
        cavity.validate()?;
        pdh.validate(cavity)?;
        let beta = pdh.mod_depth;
        Ok(PdhDetector {
            fsr: free_spectral_range(cavity)?,
            sideband: pdh.mod_angular_freq / TAU,
            scale: 2.0 * libm::j0(beta) * libm::j1(beta) * pdh.detector_gain,
            params: *pdh,
        })
    }

    /// Error signal at the given carrier detuning (Hz).
    pub fn error(&self, detuning: f64) -> f64 {
        let carrier = reflection_at(self.fsr, &self.params, detuning);
        let upper = reflection_at(self.fsr, &self.params, detuning + self.sideband);
        let lower = reflection_at(self.fsr, &self.params, detuning - self.sideband);
        let beat = carrier * upper.conj() - carrier.conj() * lower;
        self.scale * beat.im
    }
}

/// Error signal demodulated at `Ω` for a carrier detuned by `detuning` Hz.
/// Zero on resonance and odd in the detuning.
pub fn pdh_error(cavity: &RingCavity, pdh: &PdhParams, detuning: f64) -> Result<f64> {
    Ok(PdhDetector::new(cavity, pdh)?.error(detuning))
}

/// Slope of the error signal at resonance (V/Hz), by central difference with
/// step `linewidth / 1000`.
pub fn pdh_discriminant(cavity: &RingCavity, pdh: &PdhParams) -> Result<f64> {
    let detector = PdhDetector::new(cavity, pdh)?;
    let h = linewidth_fwhm(cavity)? / 1000.0;
    let d = (detector.error(h) - detector.error(-h)) / (2.0 * h);
    if d == 0.0 || !d.is_finite() {
        return Err(Error::DegenerateDiscriminant { discriminant: d });
    }
    Ok(d)
}
