//! Physical parameters and closed-form derived quantities.
//!
//! Every rate and frequency is an angular frequency in rad/s.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::consts::{C_LIGHT, HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};

/// Ratio below which `omega_b` no longer counts as sideband resolved.
const SIDEBAND_FACTOR: f64 = 10.0;
/// `tan^2(theta)` above which the two-photon truncation of the pulse
/// expansion becomes questionable.
pub const WEAK_PULSE_WARN_TAN2: f64 = 0.05;
/// `tan^2(theta)` above which the weak-pulse treatment is rejected outright.
pub const WEAK_PULSE_LIMIT_TAN2: f64 = 0.2;

/// Non-fatal validity diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `omega_b < 10 * max(kappa_m, kappa_c)`.
    SidebandUnresolved { omega_b: f64, max_kappa: f64 },
    /// The rotating-wave approximation needs `kappa_b, kappa_m, G± << omega_b`.
    RotatingWaveMarginal { largest_rate: f64, omega_b: f64 },
    /// `tan^2(theta)` large enough that higher photon orders matter.
    StrongPulse { tan2_theta: f64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::SidebandUnresolved { omega_b, max_kappa } => write!(
                f,
                "sideband resolution marginal: omega_b = {omega_b:e} rad/s < {SIDEBAND_FACTOR} x {max_kappa:e} rad/s"
            ),
            Warning::RotatingWaveMarginal {
                largest_rate,
                omega_b,
            } => write!(
                f,
                "rotating-wave approximation marginal: rate {largest_rate:e} rad/s vs omega_b = {omega_b:e} rad/s"
            ),
            Warning::StrongPulse { tan2_theta } => write!(
                f,
                "pulse not weak: tan^2(theta) = {tan2_theta:.4} > {WEAK_PULSE_WARN_TAN2}"
            ),
        }
    }
}

/// Constants of the three-mode magnon / phonon / photon system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega_m: f64,
    pub omega_b: f64,
    /// Cavity resonance; when absent the pulse carrier follows from the
    /// wavelength alone.
    pub omega_c: Option<f64>,
    pub kappa_m: f64,
    pub kappa_b: f64,
    pub kappa_c: f64,
    /// Bare magnomechanical coupling.
    pub magnomechanical_g0: f64,
    /// Bare optomechanical coupling.
    pub optomechanical_g0: f64,
    /// Bath temperature in kelvin.
    pub temperature: f64,
}

impl SystemParams {
    /// YIG micro-bridge with an attached mirror pad: magnon at 10 GHz,
    /// mechanics at 30 MHz, 10 mK bath.
    pub fn reference_device() -> Self {
        Self {
            omega_m: TWO_PI * 10e9,
            omega_b: TWO_PI * 30e6,
            omega_c: None,
            kappa_m: TWO_PI * 1e6,
            kappa_b: TWO_PI * 100.0,
            kappa_c: TWO_PI * 3e6,
            magnomechanical_g0: TWO_PI * 10.0,
            optomechanical_g0: TWO_PI * 2e3,
            temperature: 0.01,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// Thermal magnon occupation `N_m`.
    pub fn magnon_occupation(&self) -> f64 {
        thermal_occupation(self.omega_m, self.temperature)
    }

    /// Thermal phonon occupation `N_b`.
    pub fn phonon_occupation(&self) -> f64 {
        thermal_occupation(self.omega_b, self.temperature)
    }

    /// Rejects non-positive rates and negative temperature. Returns the
    /// soft warnings otherwise.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let positive = [
            ("omega_m", self.omega_m),
            ("omega_b", self.omega_b),
            ("kappa_m", self.kappa_m),
            ("kappa_b", self.kappa_b),
            ("kappa_c", self.kappa_c),
            ("G0", self.magnomechanical_g0),
            ("g0", self.optomechanical_g0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, alloc::format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(wc) = self.omega_c {
            if !(wc.is_finite() && wc > self.omega_b) {
                return Err(Error::invalid("omega_c", "must exceed omega_b"));
            }
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::invalid("T", "must be finite and >= 0"));
        }

        let mut warnings = Vec::new();
        let max_kappa = self.kappa_m.max(self.kappa_c);
        if self.omega_b < SIDEBAND_FACTOR * max_kappa {
            warnings.push(Warning::SidebandUnresolved {
                omega_b: self.omega_b,
                max_kappa,
            });
        }
        Ok(warnings)
    }
}

/// Enhanced magnomechanical couplings of the two-tone drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Stokes (parametric) coupling `G+`.
    pub g_plus: f64,
    /// Anti-Stokes (beamsplitter) coupling `G-`.
    pub g_minus: f64,
    pub rabi_plus: Option<f64>,
    pub rabi_minus: Option<f64>,
}

impl DriveParams {
    pub fn new(g_plus: f64, g_minus: f64) -> Self {
        Self {
            g_plus,
            g_minus,
            rabi_plus: None,
            rabi_minus: None,
        }
    }

    /// `G+ = ratio * G-`.
    pub fn from_ratio(g_minus: f64, ratio: f64) -> Self {
        Self::new(ratio * g_minus, g_minus)
    }

    /// Derives `G± = G0 |m±|` from the drive Rabi frequencies. The drive
    /// phases are assumed chosen so that `m±` are real.
    pub fn from_rabi(rabi_plus: f64, rabi_minus: f64, system: &SystemParams) -> Self {
        let (mp, mm) = classical_amplitudes(
            Complex64::new(rabi_plus, 0.0),
            Complex64::new(rabi_minus, 0.0),
            system.omega_b,
            system.kappa_m,
        );
        Self {
            g_plus: system.magnomechanical_g0 * mp.norm(),
            g_minus: system.magnomechanical_g0 * mm.norm(),
            rabi_plus: Some(rabi_plus),
            rabi_minus: Some(rabi_minus),
        }
    }

    pub fn ratio(&self) -> f64 {
        self.g_plus / self.g_minus
    }

    pub fn validate(&self, system: &SystemParams) -> Result<Vec<Warning>> {
        for (name, v) in [("G_plus", self.g_plus), ("G_minus", self.g_minus)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be real, finite and >= 0"));
            }
        }
        let mut warnings = Vec::new();
        let largest = self
            .g_plus
            .max(self.g_minus)
            .max(system.kappa_m)
            .max(system.kappa_b);
        if largest * SIDEBAND_FACTOR > system.omega_b {
            warnings.push(Warning::RotatingWaveMarginal {
                largest_rate: largest,
                omega_b: system.omega_b,
            });
        }
        Ok(warnings)
    }
}

/// Effective beamsplitter angle of the readout pulse, `cos(theta) = exp(-G t)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InteractionAngle(f64);

impl InteractionAngle {
    pub const ZERO: Self = Self(0.0);

    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && (0.0..core::f64::consts::FRAC_PI_2).contains(&theta)) {
            return Err(Error::invalid("theta", alloc::format!("must lie in [0, pi/2), got {theta}")));
        }
        Ok(Self(theta))
    }

    pub fn from_tan(tan_theta: f64) -> Result<Self> {
        if !(tan_theta.is_finite() && tan_theta >= 0.0) {
            return Err(Error::invalid("tan_theta", "must be finite and >= 0"));
        }
        Self::new(libm::atan(tan_theta))
    }

    /// Angle reached after interacting for `duration` at readout rate `rate`.
    pub fn from_rate(rate: f64, duration: f64) -> Result<Self> {
        Self::new(libm::acos(libm::exp(-rate * duration)))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn cos(self) -> f64 {
        libm::cos(self.0)
    }

    pub fn tan(self) -> f64 {
        libm::tan(self.0)
    }

    pub fn tan2(self) -> f64 {
        let t = self.tan();
        t * t
    }

    pub fn validate(self) -> Result<Vec<Warning>> {
        let tan2_theta = self.tan2();
        let mut warnings = Vec::new();
        if tan2_theta > WEAK_PULSE_WARN_TAN2 {
            warnings.push(Warning::StrongPulse { tan2_theta });
        }
        Ok(warnings)
    }
}

/// Red-detuned flat-top readout pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    /// Carrier wavelength (m).
    pub wavelength: f64,
    /// Pulse power (W).
    pub power: f64,
    /// Pulse duration (s).
    pub duration: f64,
    /// Overrides the power chain when set.
    pub theta: Option<InteractionAngle>,
}

impl PulseParams {
    pub fn reference_pulse() -> Self {
        Self {
            wavelength: 1550e-9,
            power: 50e-12,
            duration: 30e-9,
            theta: None,
        }
    }
}

/// Quantities derived from a pulse and the optomechanical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseInteraction {
    /// Drive amplitude `E = sqrt(kappa_c P0 / (hbar omega_0))` (s^-1).
    pub drive_amplitude: f64,
    /// Linearized optomechanical coupling `G_c = g0 E / omega_b`.
    pub coupling: f64,
    /// Readout rate `G = 2 G_c^2 / kappa_c`.
    pub readout_rate: f64,
    /// Angle implied by the power chain.
    pub theta_from_power: InteractionAngle,
    /// Angle actually used downstream (override if given).
    pub theta: InteractionAngle,
}

/// Bose-Einstein occupation `1 / (exp(hbar omega / k_B T) - 1)`; exactly 0
/// at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * temperature);
    1.0 / libm::expm1(x)
}

/// Steady-state magnon amplitudes at the two drive tones `omega_m ± omega_b`.
pub fn classical_amplitudes(
    rabi_plus: Complex64,
    rabi_minus: Complex64,
    omega_b: f64,
    kappa_m: f64,
) -> (Complex64, Complex64) {
    let half = 0.5 * kappa_m;
    let m_plus = rabi_plus / Complex64::new(omega_b, half);
    let m_minus = rabi_minus / Complex64::new(-omega_b, half);
    (m_plus, m_minus)
}

/// Evaluates the pulse power chain `E -> G_c -> G -> theta`.
pub fn pulse_interaction(system: &SystemParams, pulse: &PulseParams) -> Result<PulseInteraction> {
    if !(pulse.power.is_finite() && pulse.power >= 0.0) {
        return Err(Error::invalid("P0", "pulse power must be >= 0"));
    }
    if !(pulse.duration.is_finite() && pulse.duration >= 0.0) {
        return Err(Error::invalid("t", "pulse duration must be >= 0"));
    }
    if !(pulse.wavelength.is_finite() && pulse.wavelength > 0.0) {
        return Err(Error::invalid("lambda_0", "wavelength must be > 0"));
    }
    let carrier = match system.omega_c {
        Some(wc) => wc - system.omega_b,
        None => TWO_PI * C_LIGHT / pulse.wavelength,
    };
    let drive_amplitude = libm::sqrt(system.kappa_c * pulse.power / (HBAR * carrier));
    let coupling = system.optomechanical_g0 * drive_amplitude / system.omega_b;
    let readout_rate = 2.0 * coupling * coupling / system.kappa_c;
    let theta_from_power = InteractionAngle::from_rate(readout_rate, pulse.duration)?;
    Ok(PulseInteraction {
        drive_amplitude,
        coupling,
        readout_rate,
        theta_from_power,
        theta: pulse.theta.unwrap_or(theta_from_power),
    })
}
