use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionMode {
    Fundamental,
    Clang,
}

/// In-plane tuning-fork oscillation of the tip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TipMotion {
    pub mode: MotionMode,
    /// Mechanical frequency (MHz).
    pub frequency: f64,
    /// Displacement amplitude (um).
    pub amplitude: f64,
    /// Motion direction in the sample plane, from the x axis (rad).
    pub direction_angle: f64,
    /// NV-axis rotation coefficient.
    pub beta: f64,
}

impl TipMotion {
    pub fn fundamental() -> Self {
        TipMotion {
            mode: MotionMode::Fundamental,
            frequency: 0.032,
            amplitude: 0.0,
            direction_angle: 30f64.to_radians(),
            beta: 0.0,
        }
    }

    pub fn clang() -> Self {
        TipMotion {
            mode: MotionMode::Clang,
            frequency: 0.19,
            amplitude: 0.013,
            direction_angle: 30f64.to_radians(),
            beta: -0.03,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude", "must be non-negative"));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(invalid("frequency", "must be positive"));
        }
        if !(self.direction_angle.is_finite() && self.beta.is_finite()) {
            return Err(invalid("motion", "direction and beta must be finite"));
        }
        Ok(())
    }

    /// Amplitude of the displacement projected on the cross-section axis.
    pub fn amplitude_x(&self) -> f64 {
        self.amplitude * self.direction_angle.cos()
    }
}

impl Default for TipMotion {
    fn default() -> Self {
        TipMotion::clang()
    }
}

/// Pixels whose linear and Fourier amplitudes differ by more than this
/// fraction are flagged.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

/// First-order motion signal E' A + beta E, with `de_along_motion` the
/// field gradient along the motion direction.
pub fn motion_upconverted_amplitude(e: f64, de_along_motion: f64, motion: &TipMotion) -> f64 {
    de_along_motion * motion.amplitude + motion.beta * e
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpconversionCheck {
    pub linear: f64,
    pub fourier: f64,
    /// |fourier - linear| / |fourier|.
    pub discrepancy: f64,
    pub flagged: bool,
}

/// First cos-harmonic of E(x0 + A_x cos wt) (1 + beta cos wt) over one
/// period, by the trapezoid rule on `samples` points (spectrally accurate
/// for smooth periodic integrands).
pub fn fourier_first_harmonic<F>(field: F, x0: f64, motion: &TipMotion, samples: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = samples.max(8);
    let ax = motion.amplitude_x();
    let mut sum = 0.0;
    for k in 0..m {
        let c = (TAU * k as f64 / m as f64).cos();
        sum += field(x0 + ax * c)? * (1.0 + motion.beta * c) * c;
    }
    Ok(2.0 * sum / m as f64)
}

/// Linear model against the Fourier oracle at one position.
pub fn check_upconversion<F>(
    field: F,
    e: f64,
    de_dx: f64,
    x0: f64,
    motion: &TipMotion,
) -> Result<UpconversionCheck>
where
    F: Fn(f64) -> Result<f64>,
{
    let linear = motion_upconverted_amplitude(e, de_dx * motion.direction_angle.cos(), motion);
    let fourier = fourier_first_harmonic(field, x0, motion, 64)?;
    let diff = (fourier - linear).abs();
    let discrepancy = if fourier == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / fourier.abs()
    };
    Ok(UpconversionCheck {
        linear,
        fourier,
        discrepancy,
        flagged: discrepancy > VALIDITY_THRESHOLD,
    })
}
