use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::optics::{RingCavity, SPEED_OF_LIGHT};

/// CODATA 2018 fine-structure constant.
pub const FINE_STRUCTURE_CONSTANT: f64 = 7.297_352_569_3e-3;

const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Experimental,
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabulatedConstant {
    pub value: f64,
    pub source: Source,
}

/// Magneto- and electro-optical constants of a gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    /// m²·V⁻².
    pub kerr: TabulatedConstant,
    /// T⁻².
    pub cotton_mouton: TabulatedConstant,
    /// Jones birefringence, m·V⁻¹·T⁻¹.
    pub mejb: TabulatedConstant,
    /// Non-reciprocity `2η∥`, m·V⁻¹·T⁻¹.
    pub menr_parallel: TabulatedConstant,
}

impl ConstantsTable {
    /// N2 at atmospheric pressure and ambient temperature.
    pub fn nitrogen() -> Self {
        ConstantsTable {
            kerr: TabulatedConstant {
                value: 1.4e-25,
                source: Source::Experimental,
            },
            cotton_mouton: TabulatedConstant {
                value: -2.1e-13,
                source: Source::Experimental,
            },
            mejb: TabulatedConstant {
                value: 9.0e-23,
                source: Source::Computed,
            },
            menr_parallel: TabulatedConstant {
                value: 4.7e-23,
                source: Source::Experimental,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [
            ("kerr", self.kerr),
            ("cotton_mouton", self.cotton_mouton),
            ("mejb", self.mejb),
            ("menr_parallel", self.menr_parallel),
        ] {
            if !c.value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRatio {
    /// `α √(K · |C_CM|)` (m·V⁻¹·T⁻¹).
    pub predicted: f64,
    /// `predicted / menr_parallel`.
    pub suppression_factor: f64,
}

/// Compares the measured non-reciprocity with the fine-structure scaling
/// estimate built from the Kerr and Cotton-Mouton constants.
pub fn alpha_ratio_check(constants: &ConstantsTable, alpha: f64) -> Result<AlphaRatio> {
    constants.validate()?;
    ensure_non_negative("kerr", constants.kerr.value)?;
    if constants.cotton_mouton.value == 0.0 {
        return Err(Error::invalid("cotton_mouton", "must be non-zero"));
    }
    if constants.menr_parallel.value == 0.0 {
        return Err(Error::UndefinedRatio(
            "non-reciprocity constant is zero".into(),
        ));
    }
    let predicted = alpha * (constants.kerr.value * constants.cotton_mouton.value.abs()).sqrt();
    Ok(AlphaRatio {
        predicted,
        suppression_factor: predicted / constants.menr_parallel.value,
    })
}

/// Shot-noise-limited frequency noise of one PDH-locked beam (Hz/√Hz),
/// `√(h c³ / (λ P)) / (8 F L)`.
pub fn shot_noise_asd(cavity: &RingCavity, power: f64) -> Result<f64> {
    cavity.validate()?;
    ensure_positive("power", power)?;
    Ok(
        (PLANCK * SPEED_OF_LIGHT.powi(3) / (cavity.wavelength * power)).sqrt()
            / (8.0 * cavity.finesse * cavity.perimeter),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VacuumTarget {
    pub cavity: RingCavity,
    /// Fraction of the round trip immersed in the crossed fields.
    pub fill_factor: f64,
}

impl VacuumTarget {
    /// Present geometry (fill factor 0.5) with a finesse of 200 000.
    pub fn nominal() -> Self {
        VacuumTarget {
            cavity: RingCavity::nominal().with_finesse(200_000.0),
            fill_factor: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        ensure_positive("fill_factor", self.fill_factor)?;
        if self.fill_factor > 1.0 {
            return Err(Error::invalid("fill_factor", "must be <= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VacuumProjection {
    pub target_delta_n: f64,
    /// Hz.
    pub target_delta_nu: f64,
    /// Averaging time for SNR 1 (s); infinite when the split is zero.
    pub required_time: f64,
    pub resolvable: bool,
}

/// Projects a measured index difference onto a `suppression`-times smaller
/// target and estimates the averaging time needed to resolve it.
pub fn vacuum_projection(
    measured_delta_n: f64,
    suppression: f64,
    target: &VacuumTarget,
    noise_floor_asd: f64,
) -> Result<VacuumProjection> {
    ensure_positive("suppression", suppression)?;
    ensure_non_negative("noise_floor_asd", noise_floor_asd)?;
    target.validate()?;
    if !measured_delta_n.is_finite() {
        return Err(Error::invalid("measured_delta_n", "must be finite"));
    }
    let target_delta_n = measured_delta_n / suppression;
    let target_delta_nu = target.cavity.optical_frequency() * target_delta_n * target.fill_factor;
    let (required_time, resolvable) = if target_delta_nu == 0.0 {
        (f64::INFINITY, false)
    } else {
        ((noise_floor_asd / target_delta_nu).powi(2), true)
    };
    Ok(VacuumProjection {
        target_delta_n,
        target_delta_nu,
        required_time,
        resolvable,
    })
}
