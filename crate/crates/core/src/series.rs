use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};

/// Uniformly sampled real signal starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    sample_rate: f64,
    samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        ensure_positive("sample_rate", sample_rate)?;
        Ok(TimeSeries {
            sample_rate,
            samples,
        })
    }

    /// Samples `f(t)` at `n` points.
    pub fn from_fn(sample_rate: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        ensure_positive("sample_rate", sample_rate)?;
        let dt = sample_rate.recip();
        let samples = (0..n).map(|k| f(k as f64 * dt)).collect();
        Ok(TimeSeries {
            sample_rate,
            samples,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        self.sample_rate.recip()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let dt = self.dt();
        self.samples
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k as f64 * dt, v))
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// Number of samples covering `duration` at `sample_rate`.
pub fn sample_count(duration: f64, sample_rate: f64) -> usize {
    (duration * sample_rate).round() as usize
}
