//! Statistics and physics cross-checks on top of the simulated measurements:
//! fits, inverse-variance averaging, `2η∥` extraction with its uncertainty
//! budget, the fine-structure scaling check and the vacuum projection.

mod fit;
mod scaling;

pub use fit::{weighted_fit_through_origin, weighted_linear_fit, FitResult};
pub use scaling::{
    alpha_ratio_check, shot_noise_asd, vacuum_projection, AlphaRatio, ConstantsTable, Source,
    TabulatedConstant, VacuumProjection, VacuumTarget, FINE_STRUCTURE_CONSTANT,
};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Error, Result};
use crate::experiment::RunResult;
use crate::optics::{eta_from_slope, RingCavity, RodAssembly, Sign};

/// Relative uncertainty from the field determination, back-computed so that
/// a ±0.4 statistical-plus-calibration spread on 4.7 becomes ±1 in
/// quadrature. Not a measured quantity.
pub const DEFAULT_FIELDS_REL_SIGMA: f64 = 0.195;

/// Inverse-variance weighted mean; returns `(mean, σ)`.
pub fn weighted_mean(values: &[(f64, f64)]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InsufficientData("weighted mean of no values".into()));
    }
    if let Some(&(_, bad)) = values.iter().find(|(_, s)| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::invalid(
            "sigma",
            format!("weighted mean needs positive uncertainties, found {bad}"),
        ));
    }
    // Weights relative to the first σ keep them near unity, and make a
    // single value come back bit-for-bit.
    let s0 = values[0].1;
    let (sum_w, sum_wx) = values.iter().fold((0.0, 0.0), |(sw, swx), &(x, s)| {
        let w = (s0 / s).powi(2);
        (sw + w, swx + w * x)
    });
    Ok((sum_wx / sum_w, s0 / sum_w.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    /// `|2η∥|` (m·V⁻¹·T⁻¹).
    pub value: f64,
    pub relative_sign: Sign,
    pub sigma_stat: f64,
    pub sigma_calib: f64,
    pub sigma_fields: f64,
    pub sigma_total: f64,
}

impl EtaEstimate {
    pub fn from_components(
        value: f64,
        relative_sign: Sign,
        sigma_stat: f64,
        sigma_calib: f64,
        sigma_fields: f64,
    ) -> Self {
        EtaEstimate {
            value,
            relative_sign,
            sigma_stat,
            sigma_calib,
            sigma_fields,
            sigma_total: (sigma_stat.powi(2) + sigma_calib.powi(2) + sigma_fields.powi(2)).sqrt(),
        }
    }

    /// Statistical and calibration uncertainty only.
    pub fn sigma_stat_calib(&self) -> f64 {
        self.sigma_stat.hypot(self.sigma_calib)
    }
}

/// Converts a fitted slope into `2η∥` with its uncertainty budget.
pub fn extract_eta(
    fit: &FitResult,
    cavity: &RingCavity,
    assembly: &RodAssembly,
    calib_rel_sigma: f64,
    fields_rel_sigma: f64,
) -> Result<EtaEstimate> {
    ensure_non_negative("calib_rel_sigma", calib_rel_sigma)?;
    ensure_non_negative("fields_rel_sigma", fields_rel_sigma)?;
    let inv = eta_from_slope(fit.slope, cavity, assembly)?;
    let per_slope = if fit.slope != 0.0 {
        inv.magnitude / fit.slope.abs()
    } else {
        eta_from_slope(1.0, cavity, assembly)?.magnitude
    };
    Ok(EtaEstimate::from_components(
        inv.magnitude,
        inv.relative_sign,
        fit.slope_sigma * per_slope,
        calib_rel_sigma * inv.magnitude,
        fields_rel_sigma * inv.magnitude,
    ))
}

/// Expected effect of a sign pattern relative to the all-`+` reference,
/// `(1/4) Σ s_E,i · s_B,i`.
pub fn relative_effect(sign_e: [Sign; 4], sign_b: [Sign; 4]) -> f64 {
    sign_e
        .iter()
        .zip(&sign_b)
        .map(|(e, b)| e.value() * b.value())
        .sum::<f64>()
        / 4.0
}

/// In-rod index difference `Δn = (Δν/ν) · L / (N_connected · L_EB)`, with σ.
pub fn smallest_resolvable_delta_n(
    run: &RunResult,
    cavity: &RingCavity,
    assembly: &RodAssembly,
) -> Result<(f64, f64)> {
    cavity.validate()?;
    let connected = assembly.connected_count();
    if connected == 0 {
        return Err(Error::UnsupportedConfiguration(
            "no rod is connected".into(),
        ));
    }
    let length = assembly.common_length()?;
    let scale = cavity.perimeter / (connected as f64 * length) / cavity.optical_frequency();
    Ok((run.delta_nu_fe * scale, run.sigma_total() * scale))
}
