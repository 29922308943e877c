//! Surface-charge screening of the diamond tip (first-order high-pass) and
//! the static dielectric reduction of the field at the NV.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pulse::Waveform;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreeningModel {
    /// Cut-off frequency (kHz).
    pub f_c: f64,
    /// Field at the NV over field in air.
    pub dielectric_factor: f64,
}

impl Default for ScreeningModel {
    fn default() -> Self {
        ScreeningModel {
            f_c: 35.4,
            dielectric_factor: 0.41,
        }
    }
}

impl ScreeningModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_c > 0.0 && self.f_c.is_finite()) {
            return Err(invalid("f_c", format!("must be positive, got {}", self.f_c)));
        }
        let k = self.dielectric_factor;
        if !(k > 0.0 && k <= 1.0) {
            return Err(invalid("dielectric_factor", format!("must lie in (0, 1], got {k}")));
        }
        Ok(())
    }

    /// Filter time constant 1/(2 pi f_c) in us; the one used in computation.
    pub fn filter_time_constant(&self) -> f64 {
        1e3 / (TAU * self.f_c)
    }

    /// 1/f_c in us, the convention under which the cut-off is quoted as an
    /// "RC time". Informational only.
    pub fn rc_time(&self) -> f64 {
        1e3 / self.f_c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    /// kHz.
    pub frequency: f64,
    pub amplitude_ratio: f64,
    /// Degrees.
    pub phase_lead: f64,
}

/// |H(f)| of the high-pass; `f` in kHz.
pub fn attenuation(f: f64, m: &ScreeningModel) -> Result<f64> {
    m.validate()?;
    if !(f > 0.0) {
        return Err(invalid("frequency", format!("must be positive, got {f} kHz")));
    }
    let x = f / m.f_c;
    Ok(x / (1.0 + x * x).sqrt())
}

/// arg H(f) in degrees; `f` in kHz.
pub fn phase_lead(f: f64, m: &ScreeningModel) -> Result<f64> {
    m.validate()?;
    if !(f > 0.0) {
        return Err(invalid("frequency", format!("must be positive, got {f} kHz")));
    }
    Ok((m.f_c / f).atan().to_degrees())
}

pub fn frequency_response(f: f64, m: &ScreeningModel) -> Result<FrequencyResponse> {
    Ok(FrequencyResponse {
        frequency: f,
        amplitude_ratio: attenuation(f, m)?,
        phase_lead: phase_lead(f, m)?,
    })
}

/// Waveform as seen by the spin. Only constructible through
/// [`apply_screening`], so the dielectric factor is applied exactly once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenedWaveform {
    pub waveform: Waveform,
    /// Static level before screening, for DC inputs.
    pub unscreened_dc: Option<f64>,
    pub model: ScreeningModel,
}

pub fn apply_screening(w: &Waveform, m: &ScreeningModel) -> Result<ScreenedWaveform> {
    m.validate()?;
    let k = m.dielectric_factor;
    let (waveform, unscreened_dc) = match w {
        Waveform::Dc { level } => (Waveform::dc(0.0), Some(*level)),
        Waveform::Sinusoid {
            amplitude,
            frequency,
            phase,
        } => {
            if *frequency == 0.0 {
                (Waveform::dc(0.0), Some(amplitude * phase.cos()))
            } else {
                // cos(-wt + p) = cos(wt - p)
                let (f, p) = if *frequency < 0.0 {
                    (-frequency, -phase)
                } else {
                    (*frequency, *phase)
                };
                let r = frequency_response(f * 1e3, m)?;
                let screened = Waveform::sinusoid(
                    amplitude * r.amplitude_ratio * k,
                    f,
                    p + r.phase_lead.to_radians(),
                );
                (screened, None)
            }
        }
        Waveform::Sampled { times, values } => {
            let filtered = high_pass(times, values, m.filter_time_constant());
            let scaled = filtered.into_iter().map(|v| v * k).collect();
            (Waveform::sampled(times.clone(), scaled)?, None)
        }
    };
    Ok(ScreenedWaveform {
        waveform,
        unscreened_dc,
        model: *m,
    })
}

/// First-order high-pass of a piecewise-linear signal, y = x - lowpass(x),
/// with the low-pass state starting at zero at the first sample. The update
/// is the exact solution of the filter ODE across each linear segment.
fn high_pass(times: &[f64], values: &[f64], t_rc: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut low = 0.0;
    out.push(values[0] - low);
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let slope = (values[i] - values[i - 1]) / h;
        let decay = (-h / t_rc).exp();
        low = values[i] - slope * t_rc + (low - values[i - 1] + slope * t_rc) * decay;
        out.push(values[i] - low);
    }
    out
}
