use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::MeasurementSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Hz per V/m.
    pub slope: f64,
    pub slope_sigma: f64,
    /// Hz.
    pub intercept: f64,
    pub intercept_sigma: f64,
    pub chi2_per_dof: f64,
}

/// Per-point weights. All σ zero means exact data: equal weights and zero
/// parameter uncertainty.
fn weights(series: &MeasurementSeries) -> Result<Option<Vec<f64>>> {
    series.validate().map_err(|e| match e {
        Error::InsufficientData(msg) => Error::SingularFit(msg),
        other => other,
    })?;
    let sigmas: Vec<f64> = series.points.iter().map(|p| p.sigma).collect();
    if sigmas.iter().all(|&s| s == 0.0) {
        return Ok(None);
    }
    if let Some(bad) = sigmas.iter().find(|&&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::invalid(
            "sigma",
            format!("every point needs a positive uncertainty, found {bad}"),
        ));
    }
    Ok(Some(sigmas.iter().map(|s| s.powi(-2)).collect()))
}

/// Weighted least squares `y = slope·x + intercept` with weights `1/σ²`.
pub fn weighted_linear_fit(series: &MeasurementSeries) -> Result<FitResult> {
    let w = weights(series)?;
    let exact = w.is_none();
    let w = w.unwrap_or_else(|| vec![1.0; series.points.len()]);
    let pts = &series.points;

    let s: f64 = w.iter().sum();
    let x_mean = pts.iter().zip(&w).map(|(p, w)| w * p.e_field).sum::<f64>() / s;
    let y_mean = pts.iter().zip(&w).map(|(p, w)| w * p.delta_nu).sum::<f64>() / s;
    let stt: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.e_field - x_mean).powi(2))
        .sum();
    if stt == 0.0 {
        return Err(Error::SingularFit("all field values are identical".into()));
    }
    let slope = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.e_field - x_mean) * p.delta_nu)
        .sum::<f64>()
        / stt;
    let intercept = y_mean - slope * x_mean;

    let dof = pts.len() as f64 - 2.0;
    let chi2_per_dof = if exact || dof <= 0.0 {
        0.0
    } else {
        pts.iter()
            .zip(&w)
            .map(|(p, w)| w * (p.delta_nu - slope * p.e_field - intercept).powi(2))
            .sum::<f64>()
            / dof
    };
    let (slope_sigma, intercept_sigma) = if exact {
        (0.0, 0.0)
    } else {
        (
            stt.recip().sqrt(),
            (s.recip() + x_mean * x_mean / stt).sqrt(),
        )
    };
    Ok(FitResult {
        slope,
        slope_sigma,
        intercept,
        intercept_sigma,
        chi2_per_dof,
    })
}

/// Weighted least squares `y = slope·x` (intercept fixed at zero).
pub fn weighted_fit_through_origin(series: &MeasurementSeries) -> Result<FitResult> {
    let w = weights(series)?;
    let exact = w.is_none();
    let w = w.unwrap_or_else(|| vec![1.0; series.points.len()]);
    let pts = &series.points;
    let sxx: f64 = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * p.e_field * p.e_field)
        .sum();
    if sxx == 0.0 {
        return Err(Error::SingularFit("all field values are zero".into()));
    }
    let slope = pts
        .iter()
        .zip(&w)
        .map(|(p, w)| w * p.e_field * p.delta_nu)
        .sum::<f64>()
        / sxx;
    let dof = pts.len() as f64 - 1.0;
    let chi2_per_dof = if exact || dof <= 0.0 {
        0.0
    } else {
        pts.iter()
            .zip(&w)
            .map(|(p, w)| w * (p.delta_nu - slope * p.e_field).powi(2))
            .sum::<f64>()
            / dof
    };
    Ok(FitResult {
        slope,
        slope_sigma: if exact { 0.0 } else { sxx.recip().sqrt() },
        intercept: 0.0,
        intercept_sigma: 0.0,
        chi2_per_dof,
    })
}
