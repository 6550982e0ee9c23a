//! Digital twin of a ring-cavity measurement of magneto-electric
//! non-reciprocity: a refractive-index difference between counter-propagating
//! beams induced by crossed static electric and magnetic fields.
//!
//! The crate is layered bottom-up:
//!
//! * [`optics`]: cavity spectral quantities, Sagnac split, the `Δn = 2ηEB`
//!   index model and its conversion to and from a resonance splitting.
//! * [`signal`]: PDH error signal, lock-in detection, EOM calibration, noise
//!   and the frequency servo.
//! * [`experiment`]: complete synthetic runs, field sweeps, the sign
//!   configuration campaign and calibration runs.
//! * [`analysis`]: weighted fits and means, `2η∥` extraction and the physics
//!   cross-checks.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod optics;
pub mod series;
pub mod signal;

pub use analysis::{
    extract_eta, relative_effect, smallest_resolvable_delta_n, weighted_linear_fit, weighted_mean,
    EtaEstimate, FitResult,
};
pub use error::{Error, Result};
pub use experiment::{
    calibrate, run_campaign, simulate_run, sweep_e, CampaignRow, MeasurementPoint,
    MeasurementSeries, RunConfig, RunResult, SignConfig,
};
pub use optics::{GasMedium, GasState, RingCavity, Rod, RodAssembly, SagnacContext, Sign};
pub use series::TimeSeries;
