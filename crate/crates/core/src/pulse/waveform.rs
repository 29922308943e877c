use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Time series of E_zeta, the field along the maximum-coupling axis (V/um).
/// Time in us, frequency in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Waveform {
    Dc {
        level: f64,
    },
    /// `amplitude * cos(2 pi frequency t + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    /// Linear interpolation between samples; undefined outside them.
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Waveform {
    pub fn dc(level: f64) -> Self {
        Waveform::Dc { level }
    }

    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Waveform::Sinusoid {
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(invalid("sampled waveform", "need >= 2 (time, value) pairs"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(invalid("sampled waveform", "times must be strictly increasing"));
        }
        if !times.iter().chain(&values).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("sampled waveform"));
        }
        Ok(Waveform::Sampled { times, values })
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Waveform::Sampled { times, .. } => (times[0], times[times.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        match self {
            Waveform::Dc { level } => Ok(*level),
            Waveform::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => Ok(amplitude * (TAU * frequency * t + phase).cos()),
            Waveform::Sampled { times, values } => {
                let (start, end) = self.domain();
                if !(t >= start && t <= end) {
                    return Err(Error::WaveformDomain { t, start, end });
                }
                let k = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
                let (t0, t1) = (times[k - 1], times[k]);
                let w = (t - t0) / (t1 - t0);
                Ok(values[k - 1] * (1.0 - w) + values[k] * w)
            }
        }
    }

    /// Multiplies every value by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        match self {
            Waveform::Dc { level } => Waveform::Dc { level: level * k },
            Waveform::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => Waveform::Sinusoid {
                amplitude: amplitude * k,
                frequency: *frequency,
                phase: *phase,
            },
            Waveform::Sampled { times, values } => Waveform::Sampled {
                times: times.clone(),
                values: values.iter().map(|v| v * k).collect(),
            },
        }
    }

    /// Exact integral over [a, b] (closed form; piecewise-linear for
    /// sampled waveforms).
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Waveform::Dc { level } => Ok(level * (b - a)),
            Waveform::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let w = TAU * frequency;
                if w == 0.0 {
                    Ok(amplitude * phase.cos() * (b - a))
                } else {
                    Ok(amplitude * ((w * b + phase).sin() - (w * a + phase).sin()) / w)
                }
            }
            Waveform::Sampled { times, .. } => {
                let (start, end) = self.domain();
                for t in [a, b] {
                    if !(t >= start && t <= end) {
                        return Err(Error::WaveformDomain { t, start, end });
                    }
                }
                let mut knots = vec![a];
                knots.extend(times.iter().copied().filter(|&t| t > a && t < b));
                knots.push(b);
                let mut sum = 0.0;
                for w in knots.windows(2) {
                    sum += 0.5 * (self.value(w[0])? + self.value(w[1])?) * (w[1] - w[0]);
                }
                Ok(sum)
            }
        }
    }

    /// Sample times inside (a, b) where the waveform has a kink.
    pub(crate) fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Waveform::Sampled { times, .. } => {
                times.iter().copied().filter(|&t| t > a && t < b).collect()
            }
            _ => Vec::new(),
        }
    }
}
