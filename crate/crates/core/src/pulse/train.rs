use serde::{Deserialize, Serialize};

use super::phase::accumulated_phase_at;
use super::sequence::{build_sequence, SequenceKind};
use super::waveform::Waveform;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    /// Window midpoint (us after the trigger).
    pub time: f64,
    pub phase: f64,
}

fn check(spacing: f64, tau: f64, count: usize) -> Result<()> {
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be positive"));
    }
    if !(spacing >= tau) {
        return Err(invalid("spacing", "Ramsey windows must not overlap"));
    }
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    Ok(())
}

/// Repeated Ramsey windows starting `trigger_offset + k * spacing` after the
/// trigger, each integrating the waveform exactly over its own window.
pub fn ramsey_train(
    trigger_offset: f64,
    spacing: f64,
    count: usize,
    tau: f64,
    w: &Waveform,
    d_perp: f64,
) -> Result<Vec<TrainSample>> {
    check(spacing, tau, count)?;
    let seq = build_sequence(SequenceKind::Ramsey, tau, 0.0)?;
    (0..count)
        .map(|k| {
            let start = trigger_offset + k as f64 * spacing;
            Ok(TrainSample {
                time: start + 0.5 * tau,
                phase: accumulated_phase_at(&seq, w, d_perp, start)?,
            })
        })
        .collect()
}

/// Same layout, but each window takes the field at its midpoint as constant.
pub fn ramsey_train_midpoint(
    trigger_offset: f64,
    spacing: f64,
    count: usize,
    tau: f64,
    w: &Waveform,
    d_perp: f64,
) -> Result<Vec<TrainSample>> {
    check(spacing, tau, count)?;
    (0..count)
        .map(|k| {
            let time = trigger_offset + k as f64 * spacing + 0.5 * tau;
            Ok(TrainSample {
                time,
                phase: std::f64::consts::TAU * d_perp * tau * w.value(time)?,
            })
        })
        .collect()
}

/// Amplitude of the exact train for a sinusoid of `amplitude` at `freq`:
/// 2 pi d tau E0 sinc(pi f tau).
pub fn ramsey_sinusoid_amplitude(amplitude: f64, freq: f64, tau: f64, d_perp: f64) -> f64 {
    let x = std::f64::consts::PI * freq * tau;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    std::f64::consts::TAU * d_perp * tau * amplitude * sinc
}
