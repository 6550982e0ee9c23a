//! CSV emitters. Numbers are written with 17 significant digits so a
//! write/read cycle reproduces every value exactly.

use std::path::Path;

use anyhow::{bail, Context};
use menr_core::experiment::{MeasurementPoint, MeasurementSeries, RunSeries};

pub const SERIES_HEADER: [&str; 4] = [
    "time_s",
    "e_field_V_per_m",
    "detuning_ccw_Hz",
    "error_signal_V",
];

pub const SWEEP_HEADER: [&str; 4] = [
    "e_field_V_per_m",
    "delta_nu_Hz",
    "sigma_Hz",
    "calibration_rel_sigma",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
}

fn rows(path: &Path, header: &[&str]) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != header {
        bail!(
            "{}: expected columns {header:?}, found {found:?}",
            path.display()
        );
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            rec.iter()
                .map(|f| {
                    f.parse::<f64>().with_context(|| {
                        format!("{}: row {}: bad number {f:?}", path.display(), i + 2)
                    })
                })
                .collect()
        })
        .collect()
}

pub fn write_series(path: &Path, series: &RunSeries) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(SERIES_HEADER)?;
    for (k, ((e, d), v)) in series
        .e_field
        .iter()
        .zip(&series.detuning_ccw)
        .zip(&series.error_signal)
        .enumerate()
    {
        w.write_record([num(series.time(k)), num(*e), num(*d), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a series back; the sample rate is taken from the time column.
pub fn read_series(path: &Path) -> anyhow::Result<RunSeries> {
    let data = rows(path, &SERIES_HEADER)?;
    if data.len() < 2 {
        bail!("{}: need at least two samples", path.display());
    }
    let dt = data[1][0] - data[0][0];
    Ok(RunSeries {
        sample_rate: dt.recip(),
        e_field: data.iter().map(|r| r[1]).collect(),
        detuning_ccw: data.iter().map(|r| r[2]).collect(),
        error_signal: data.iter().map(|r| r[3]).collect(),
    })
}

pub fn write_sweep(path: &Path, series: &MeasurementSeries) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER)?;
    for p in &series.points {
        w.write_record([
            num(p.e_field),
            num(p.delta_nu),
            num(p.sigma),
            num(p.calibration_rel_sigma),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep(path: &Path, config_label: &str) -> anyhow::Result<MeasurementSeries> {
    Ok(MeasurementSeries {
        points: rows(path, &SWEEP_HEADER)?
            .into_iter()
            .map(|r| MeasurementPoint {
                e_field: r[0],
                delta_nu: r[1],
                sigma: r[2],
                calibration_rel_sigma: r[3],
            })
            .collect(),
        config_label: config_label.to_string(),
    })
}
