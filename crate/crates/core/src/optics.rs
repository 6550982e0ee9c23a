//! Closed-form optics of the ring cavity and the crossed-field rods.
//!
//! Covers the cavity spectral quantities, the Earth-rotation Sagnac split,
//! the bilinear index difference `Δn = 2η E B` between counter-propagating
//! beams, and the forward and inverse maps between that index difference and
//! the cw/ccw resonance splitting.
//!
//! Sign convention: the clockwise direction is the reference propagation
//! direction; `+` on a magnetic field means "upward", `+` on an electric field
//! means the inner electrode is grounded. Only signs relative to the all-`+`
//! reference assembly are meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sidereal rotation rate of the Earth (rad/s).
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_9e-5;

/// Latitude of the laboratory (degrees).
pub const DEFAULT_LATITUDE_DEG: f64 = 43.0;

/// Relative tolerance on `perimeter = 4 × arm`.
const SQUARE_GEOMETRY_RTOL: f64 = 1e-9;

/// Connection state of one field: `+1`, `-1`, or `0` for disconnected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
    Off,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
            Sign::Off => 0.0,
        }
    }

    pub fn is_connected(self) -> bool {
        self != Sign::Off
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
            Sign::Off => Sign::Off,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
            Sign::Off => '0',
        }
    }

    /// Parses `+`, `-` or `0`.
    pub fn from_symbol(c: char) -> Option<Sign> {
        match c {
            '+' => Some(Sign::Plus),
            '-' | '−' => Some(Sign::Minus),
            '0' => Some(Sign::Off),
            _ => None,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            0 => Ok(Sign::Off),
            other => Err(format!("sign must be -1, 0 or +1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
            Sign::Off => 0,
        }
    }
}

/// Square ring resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingCavity {
    /// Round-trip length `L` (m).
    pub perimeter: f64,
    /// Side length `L0` (m); `L = 4 L0`.
    pub arm: f64,
    pub finesse: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
}

impl RingCavity {
    pub fn square(arm: f64, finesse: f64, wavelength: f64) -> Result<Self> {
        let cavity = RingCavity {
            perimeter: 4.0 * arm,
            arm,
            finesse,
            wavelength,
        };
        cavity.validate()?;
        Ok(cavity)
    }

    /// 1.6 m perimeter, 1064 nm, finesse 30 000 (mid-range of 15 000..50 000).
    pub fn nominal() -> Self {
        RingCavity {
            perimeter: 1.6,
            arm: 0.4,
            finesse: 30_000.0,
            wavelength: 1.064e-6,
        }
    }

    pub fn with_finesse(mut self, finesse: f64) -> Self {
        self.finesse = finesse;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("perimeter", self.perimeter)?;
        ensure_positive("arm", self.arm)?;
        ensure_positive("wavelength", self.wavelength)?;
        if !(self.finesse.is_finite() && self.finesse >= 1.0) {
            return Err(Error::invalid(
                "finesse",
                format!("must be >= 1, got {}", self.finesse),
            ));
        }
        let mismatch = (self.perimeter - 4.0 * self.arm).abs() / self.perimeter;
        if mismatch > SQUARE_GEOMETRY_RTOL {
            return Err(Error::invalid(
                "perimeter",
                format!(
                    "square cavity requires perimeter = 4 x arm ({} != 4 x {})",
                    self.perimeter, self.arm
                ),
            ));
        }
        Ok(())
    }

    /// Optical frequency `ν = c/λ` (vacuum).
    pub fn optical_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength
    }
}

/// One crossed-field rod: permanent magnet plus a pair of electrodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rod {
    /// Length of the field region along the beam (m).
    pub length: f64,
    /// Magnetic field magnitude (T).
    pub b_field: f64,
    /// Electrode gap (m).
    pub gap: f64,
    /// Electrode voltage magnitude (V).
    pub voltage: f64,
    pub sign_b: Sign,
    pub sign_e: Sign,
}

impl Rod {
    /// 20 cm, 0.85 T, 4 mm gap, 2 kV (0.5 MV/m), both signs `+`.
    pub fn nominal() -> Self {
        Rod {
            length: 0.20,
            b_field: 0.85,
            gap: 4e-3,
            voltage: 2_000.0,
            sign_b: Sign::Plus,
            sign_e: Sign::Plus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("rod.length", self.length)?;
        ensure_non_negative("rod.b_field", self.b_field)?;
        ensure_positive("rod.gap", self.gap)?;
        ensure_non_negative("rod.voltage", self.voltage)?;
        Ok(())
    }

    /// Field between the electrodes, `V / gap` (V/m).
    pub fn e_field(&self) -> f64 {
        self.voltage / self.gap
    }

    /// `sign_B · sign_E`.
    pub fn sign_product(&self) -> f64 {
        self.sign_b.value() * self.sign_e.value()
    }

    pub fn is_connected(&self) -> bool {
        self.sign_b.is_connected() && self.sign_e.is_connected()
    }
}

/// The four rods placed on the cavity arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodAssembly {
    pub rods: [Rod; 4],
}

impl RodAssembly {
    pub fn uniform(rod: Rod) -> Self {
        RodAssembly { rods: [rod; 4] }
    }

    pub fn nominal() -> Self {
        Self::uniform(Rod::nominal())
    }

    /// Replaces the field signs of every rod.
    pub fn with_signs(mut self, sign_e: [Sign; 4], sign_b: [Sign; 4]) -> Self {
        for (rod, (e, b)) in self.rods.iter_mut().zip(sign_e.into_iter().zip(sign_b)) {
            rod.sign_e = e;
            rod.sign_b = b;
        }
        self
    }

    /// Sets every rod's voltage so that its field magnitude is `e_field`.
    pub fn with_e_field(mut self, e_field: f64) -> Self {
        for rod in &mut self.rods {
            rod.voltage = e_field.abs() * rod.gap;
        }
        self
    }

    /// Flips the electric-field sign of every rod.
    pub fn with_e_flipped(mut self) -> Self {
        for rod in &mut self.rods {
            rod.sign_e = rod.sign_e.flipped();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.rods.iter().try_for_each(Rod::validate)
    }

    pub fn sign_e(&self) -> [Sign; 4] {
        self.rods.map(|r| r.sign_e)
    }

    pub fn sign_b(&self) -> [Sign; 4] {
        self.rods.map(|r| r.sign_b)
    }

    /// Shared rod length; errors if the rods differ.
    pub fn common_length(&self) -> Result<f64> {
        let first = self.rods[0].length;
        if self
            .rods
            .iter()
            .any(|r| (r.length - first).abs() > 1e-12 * first)
        {
            return Err(Error::UnsupportedConfiguration(format!(
                "rods must share a single length, got {:?}",
                self.rods.map(|r| r.length)
            )));
        }
        Ok(first)
    }

    /// `Σ sign_B,i · sign_E,i`, in `[-4, 4]`.
    pub fn signed_sum(&self) -> f64 {
        self.rods.iter().map(Rod::sign_product).sum()
    }

    /// `Σ sign_B,i · sign_E,i · B_i` (T).
    pub fn signed_b_sum(&self) -> f64 {
        self.rods.iter().map(|r| r.sign_product() * r.b_field).sum()
    }

    pub fn connected_count(&self) -> usize {
        self.rods.iter().filter(|r| r.is_connected()).count()
    }

    /// Compact label such as `E++-0/B++--`.
    pub fn label(&self) -> String {
        let e: String = self.rods.iter().map(|r| r.sign_e.symbol()).collect();
        let b: String = self.rods.iter().map(|r| r.sign_b.symbol()).collect();
        format!("E{e}/B{b}")
    }
}

/// Pressure/temperature state of an ideal gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasState {
    /// Pa.
    pub pressure: f64,
    /// K.
    pub temperature: f64,
}

impl GasState {
    pub const fn new(pressure: f64, temperature: f64) -> Self {
        GasState {
            pressure,
            temperature,
        }
    }

    /// 101 325 Pa, 293.15 K.
    pub const fn ambient() -> Self {
        GasState::new(101_325.0, 293.15)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("pressure", self.pressure)?;
        ensure_positive("temperature", self.temperature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasMedium {
    pub name: String,
    /// `2η∥` (m·V⁻¹·T⁻¹).
    pub two_eta_parallel: f64,
    /// `2η⊥`; never measured, carried for completeness.
    pub two_eta_perp: Option<f64>,
    pub state: GasState,
}

impl GasMedium {
    /// Molecular nitrogen at ambient conditions with `2η∥ = 4.7e-23`.
    pub fn nitrogen() -> Self {
        GasMedium {
            name: "N2".to_string(),
            two_eta_parallel: 4.7e-23,
            two_eta_perp: None,
            state: GasState::ambient(),
        }
    }

    pub fn with_two_eta(mut self, two_eta: f64) -> Self {
        self.two_eta_parallel = two_eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.two_eta_parallel.is_finite() {
            return Err(Error::invalid("two_eta_parallel", "must be finite"));
        }
        self.state.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SagnacContext {
    /// rad/s.
    pub earth_rate: f64,
    /// rad.
    pub latitude: f64,
}

impl Default for SagnacContext {
    fn default() -> Self {
        SagnacContext {
            earth_rate: EARTH_ROTATION_RATE,
            latitude: DEFAULT_LATITUDE_DEG.to_radians(),
        }
    }
}

impl SagnacContext {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("earth_rate", self.earth_rate)?;
        if !self.latitude.is_finite() || self.latitude.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid(
                "latitude",
                format!("|latitude| must be <= pi/2, got {}", self.latitude),
            ));
        }
        Ok(())
    }
}

/// `c / L` (Hz).
pub fn free_spectral_range(cavity: &RingCavity) -> Result<f64> {
    ensure_positive("perimeter", cavity.perimeter)?;
    Ok(SPEED_OF_LIGHT / cavity.perimeter)
}

/// Full width at half maximum, `FSR / F` (Hz).
pub fn linewidth_fwhm(cavity: &RingCavity) -> Result<f64> {
    if !(cavity.finesse.is_finite() && cavity.finesse >= 1.0) {
        return Err(Error::invalid(
            "finesse",
            format!("must be >= 1, got {}", cavity.finesse),
        ));
    }
    Ok(free_spectral_range(cavity)? / cavity.finesse)
}

/// DC cw/ccw resonance split from the Earth's rotation, `(L0/λ) Ω cos θ` (Hz).
pub fn sagnac_split(cavity: &RingCavity, ctx: &SagnacContext) -> Result<f64> {
    cavity.validate()?;
    ctx.validate()?;
    Ok(cavity.arm / cavity.wavelength * ctx.earth_rate * ctx.latitude.cos())
}

/// cw − ccw index difference inside one rod, `s_B s_E · 2η · E · B`.
pub fn rod_delta_n(rod: &Rod, gas: &GasMedium) -> f64 {
    rod.sign_product() * gas.two_eta_parallel * rod.e_field() * rod.b_field
}

/// cw − ccw resonance split produced by the rods at their present fields (Hz).
pub fn cavity_split(cavity: &RingCavity, assembly: &RodAssembly, gas: &GasMedium) -> Result<f64> {
    cavity.validate()?;
    let length = assembly.common_length()?;
    let delta_n: f64 = assembly.rods.iter().map(|r| rod_delta_n(r, gas)).sum();
    Ok(cavity.optical_frequency() * (length / cavity.perimeter) * delta_n)
}

/// Split per unit electric field amplitude, `ν (L_EB/L) 2η Σ s_i B_i`
/// (Hz per V/m).
pub fn split_per_field(
    cavity: &RingCavity,
    assembly: &RodAssembly,
    gas: &GasMedium,
) -> Result<f64> {
    cavity_split(cavity, &assembly.with_e_field(1.0), gas)
}

/// Result of inverting a measured slope into `2η∥`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaInversion {
    /// `|2η∥|` (m·V⁻¹·T⁻¹).
    pub magnitude: f64,
    /// Sign of `2η∥` relative to the all-`+` reference assembly.
    pub relative_sign: Sign,
}

impl EtaInversion {
    pub fn signed(&self) -> f64 {
        self.relative_sign.value() * self.magnitude
    }
}

/// Inverts a split-vs-field slope (Hz per V/m) into `2η∥`.
pub fn eta_from_slope(
    slope: f64,
    cavity: &RingCavity,
    assembly: &RodAssembly,
) -> Result<EtaInversion> {
    cavity.validate()?;
    let length = assembly.common_length()?;
    let b_sum = assembly.signed_b_sum();
    if b_sum == 0.0 {
        return Err(Error::InsensitiveConfiguration);
    }
    let signed = slope / cavity.optical_frequency() * (cavity.perimeter / length) / b_sum;
    let relative_sign = if signed > 0.0 {
        Sign::Plus
    } else if signed < 0.0 {
        Sign::Minus
    } else {
        Sign::Off
    };
    Ok(EtaInversion {
        magnitude: signed.abs(),
        relative_sign,
    })
}

/// Rescales a density-proportional optical constant between two ideal-gas
/// states: `k · (P_to/P_from) · (T_from/T_to)`.
pub fn ideal_gas_rescale(constant: f64, from: GasState, to: GasState) -> Result<f64> {
    from.validate()?;
    to.validate()?;
    Ok(constant * (to.pressure / from.pressure) * (from.temperature / to.temperature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rod_at(e_field: f64) -> Rod {
        Rod {
            voltage: e_field * 4e-3,
            ..Rod::nominal()
        }
    }

    #[test]
    fn fsr_examples() {
        let c = RingCavity::nominal();
        // c / 1.6 m
        assert_relative_eq!(
            free_spectral_range(&c).unwrap(),
            187_370_286.25,
            max_relative = 1e-12
        );
        let one_second = RingCavity {
            perimeter: SPEED_OF_LIGHT,
            arm: SPEED_OF_LIGHT / 4.0,
            ..c
        };
        assert_relative_eq!(
            free_spectral_range(&one_second).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        let half = RingCavity::square(0.2, 30_000.0, 1.064e-6).unwrap();
        assert_relative_eq!(
            free_spectral_range(&half).unwrap(),
            2.0 * free_spectral_range(&c).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn fsr_rejects_non_positive_perimeter() {
        let c = RingCavity {
            perimeter: 0.0,
            ..RingCavity::nominal()
        };
        assert!(matches!(
            free_spectral_range(&c),
            Err(Error::InvalidParameter {
                name: "perimeter",
                ..
            })
        ));
    }

    #[test]
    fn linewidth_examples() {
        let lw15 = linewidth_fwhm(&RingCavity::nominal().with_finesse(15_000.0)).unwrap();
        let lw50 = linewidth_fwhm(&RingCavity::nominal().with_finesse(50_000.0)).unwrap();
        assert_relative_eq!(lw15, 12_491.352_416_666_667, max_relative = 1e-12);
        assert_relative_eq!(lw50, 3_747.405_725, max_relative = 1e-12);
        let fsr = free_spectral_range(&RingCavity::nominal()).unwrap();
        let unity = RingCavity::nominal().with_finesse(fsr);
        assert_relative_eq!(linewidth_fwhm(&unity).unwrap(), 1.0, max_relative = 1e-12);
        assert!(linewidth_fwhm(&RingCavity::nominal().with_finesse(0.5)).is_err());
    }

    #[test]
    fn sagnac_examples() {
        let c = RingCavity::nominal();
        let split = sagnac_split(&c, &SagnacContext::default()).unwrap();
        assert_relative_eq!(split, 20.049, max_relative = 1e-4);
        let pole = SagnacContext {
            latitude: std::f64::consts::FRAC_PI_2,
            ..Default::default()
        };
        assert!(sagnac_split(&c, &pole).unwrap().abs() < 1e-12);
        let still = SagnacContext {
            earth_rate: 0.0,
            ..Default::default()
        };
        assert_eq!(sagnac_split(&c, &still).unwrap(), 0.0);
    }

    #[test]
    fn rod_delta_n_examples() {
        let gas = GasMedium::nitrogen();
        let rod = rod_at(5e5);
        assert_relative_eq!(rod.e_field(), 5e5, max_relative = 1e-15);
        // 4.7e-23 * 5e5 * 0.85
        assert_relative_eq!(rod_delta_n(&rod, &gas), 1.9975e-17, max_relative = 1e-12);
        let off = Rod {
            sign_e: Sign::Off,
            ..rod
        };
        assert_eq!(rod_delta_n(&off, &gas), 0.0);
        let pm = Rod {
            sign_e: Sign::Minus,
            ..rod
        };
        let mp = Rod {
            sign_b: Sign::Minus,
            ..rod
        };
        assert_eq!(rod_delta_n(&pm, &gas), rod_delta_n(&mp, &gas));
    }

    #[test]
    fn cavity_split_examples() {
        let cavity = RingCavity::nominal();
        let gas = GasMedium::nitrogen();
        let all = RodAssembly::nominal().with_e_field(5e5);
        let split = cavity_split(&cavity, &all, &gas).unwrap();
        // 2.8176e14 * 0.125 * 4 * 1.9975e-17
        let expected = SPEED_OF_LIGHT / 1.064e-6 * 0.125 * 4.0 * 1.9975e-17;
        assert_relative_eq!(split, expected, max_relative = 1e-12);
        assert_relative_eq!(split, 2.814e-3, max_relative = 1e-3);

        use Sign::{Minus as M, Off as O, Plus as P};
        let row8 = all.with_signs([P, M, O, O], [P, P, P, P]);
        let row9 = all.with_signs([P, P, P, P], [P, P, M, M]);
        assert_eq!(cavity_split(&cavity, &row8, &gas).unwrap(), 0.0);
        assert_eq!(cavity_split(&cavity, &row9, &gas).unwrap(), 0.0);

        let one = all.with_signs([P, O, O, O], [P, P, P, P]);
        assert_relative_eq!(
            cavity_split(&cavity, &one, &gas).unwrap(),
            split / 4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn cavity_split_rejects_mixed_lengths() {
        let mut assembly = RodAssembly::nominal();
        assembly.rods[2].length = 0.25;
        let err =
            cavity_split(&RingCavity::nominal(), &assembly, &GasMedium::nitrogen()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedConfiguration(_)));
    }

    #[test]
    fn eta_from_slope_examples() {
        let cavity = RingCavity::nominal();
        let assembly = RodAssembly::nominal();
        let inv = eta_from_slope(-5.27e-9, &cavity, &assembly).unwrap();
        // 5.27e-9 / 2.8176e14 * 8 / 3.4
        assert_relative_eq!(inv.magnitude, 4.4010e-23, max_relative = 1e-3);
        assert_eq!(inv.relative_sign, Sign::Minus);
        assert_eq!(
            eta_from_slope(0.0, &cavity, &assembly).unwrap().magnitude,
            0.0
        );

        let gas = GasMedium::nitrogen().with_two_eta(3.3e-23);
        let slope = split_per_field(&cavity, &assembly, &gas).unwrap();
        let back = eta_from_slope(slope, &cavity, &assembly).unwrap();
        assert_relative_eq!(back.signed(), 3.3e-23, max_relative = 1e-12);
    }

    #[test]
    fn eta_from_slope_guards_canceling_configuration() {
        use Sign::{Minus as M, Plus as P};
        let assembly = RodAssembly::nominal().with_signs([P, P, P, P], [P, P, M, M]);
        assert_eq!(
            eta_from_slope(1e-9, &RingCavity::nominal(), &assembly),
            Err(Error::InsensitiveConfiguration)
        );
    }

    #[test]
    fn ideal_gas_examples() {
        let a = GasState::ambient();
        assert_eq!(ideal_gas_rescale(9.0e-23, a, a).unwrap(), 9.0e-23);
        let doubled = GasState::new(2.0 * a.pressure, a.temperature);
        assert_relative_eq!(
            ideal_gas_rescale(1.5, a, doubled).unwrap(),
            3.0,
            max_relative = 1e-15
        );
        // 1 bar, 300 K -> 1 atm, 293.15 K
        let jones = ideal_gas_rescale(9.0e-23, GasState::new(1e5, 300.0), a).unwrap();
        assert_relative_eq!(
            jones,
            9.0e-23 * 1.01325 * 300.0 / 293.15,
            max_relative = 1e-12
        );
        assert!(ideal_gas_rescale(1.0, GasState::new(-1.0, 300.0), a).is_err());
        assert!(ideal_gas_rescale(1.0, a, GasState::new(1e5, 0.0)).is_err());
    }

    #[test]
    fn cavity_requires_square_geometry() {
        let bad = RingCavity {
            arm: 0.5,
            ..RingCavity::nominal()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn sign_serde_roundtrip_rejects_out_of_range() {
        assert_eq!(Sign::try_from(-1i8), Ok(Sign::Minus));
        assert!(Sign::try_from(2i8).is_err());
    }
}
