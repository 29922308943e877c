use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_cycles, sine_fit, SineFit};
use crate::error::{invalid, Result};
use crate::pulse::{
    accumulated_phase, apply_coherence, build_sequence, extract_phase, ramsey_sinusoid_amplitude,
    ramsey_train, simulate_four_block, SequenceKind, Waveform,
};
use crate::rng::stream;
use crate::scan::Sensor;
use crate::screening::{apply_screening, attenuation, phase_lead};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LockinMethod {
    /// Repeated short Ramsey windows sampling the waveform in time.
    RamseyTrain,
    /// One matched XY4 sequence per drive phase offset.
    Decoupling,
}

impl LockinMethod {
    pub fn name(self) -> &'static str {
        match self {
            LockinMethod::RamseyTrain => "ramsey-train",
            LockinMethod::Decoupling => "decoupling",
        }
    }
}

/// Lock-in sweep settings. Times in us, amplitudes in V/um in air.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockinSettings {
    /// Frequencies below this (kHz) use the Ramsey train.
    pub crossover_khz: f64,
    pub ramsey_tau: f64,
    pub ramsey_offset: f64,
    pub ramsey_spacing: f64,
    pub ramsey_count: usize,
    pub ramsey_amplitude: f64,
    pub dd_tau: f64,
    pub dd_phase_steps: usize,
    pub dd_amplitude: f64,
    pub n_avg: u64,
}

impl Default for LockinSettings {
    fn default() -> Self {
        LockinSettings {
            crossover_khz: 50.0,
            ramsey_tau: 0.8,
            ramsey_offset: 4.0,
            ramsey_spacing: 4.0,
            ramsey_count: 60,
            ramsey_amplitude: 5.0,
            dd_tau: 8.0,
            dd_phase_steps: 16,
            dd_amplitude: 1.0,
            n_avg: 10_000,
        }
    }
}

impl LockinSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.crossover_khz > 0.0) {
            return Err(invalid("crossover_khz", "must be positive"));
        }
        if self.dd_phase_steps < 4 {
            return Err(invalid("dd_phase_steps", "need at least 4"));
        }
        if self.n_avg == 0 {
            return Err(invalid("n_avg", "must be at least 1"));
        }
        for (name, v) in [
            ("ramsey_amplitude", self.ramsey_amplitude),
            ("dd_amplitude", self.dd_amplitude),
            ("dd_tau", self.dd_tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn method_for(&self, f_khz: f64) -> LockinMethod {
        if f_khz < self.crossover_khz {
            LockinMethod::RamseyTrain
        } else {
            LockinMethod::Decoupling
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockinPoint {
    pub frequency_khz: f64,
    pub method: LockinMethod,
    pub sequence: String,
    pub tau: f64,
    /// Fitted amplitude over the unscreened expectation, dielectric factor
    /// divided out.
    pub amplitude_ratio: f64,
    pub amplitude_ratio_se: f64,
    pub phase_lead_deg: f64,
    pub phase_lead_se_deg: f64,
    pub expected_ratio: f64,
    pub expected_lead_deg: f64,
    pub fit: SineFit,
    /// (abscissa, phase): time in us for the Ramsey train, drive phase
    /// offset in rad for decoupling.
    pub trace: Vec<(f64, f64)>,
}

/// Phase read out through one four-block measurement.
fn read_phase(phi: f64, env: f64, sensor: &Sensor, n_avg: u64, seed: u64, stream_id: u64, k: u64) -> Result<f64> {
    let mut rng = stream(seed, stream_id, k);
    let block = simulate_four_block(phi, env, &sensor.readout, n_avg, &mut rng)?;
    let [f1, f2, f3, f4] = if sensor.readout.shot_noise {
        block.measured_rates(&sensor.readout, n_avg)
    } else {
        block.rates()
    };
    extract_phase(f1, f2, f3, f4)
}

/// Ramsey-train trace of a screened sinusoid driven with zero phase at the
/// trigger: (window midpoint, measured phase).
pub fn ramsey_trace(
    f_khz: f64,
    s: &LockinSettings,
    sensor: &Sensor,
    seed: u64,
    stream_id: u64,
) -> Result<Vec<(f64, f64)>> {
    let drive = Waveform::sinusoid(s.ramsey_amplitude, f_khz * 1e-3, 0.0);
    let at_spin = apply_screening(&drive, &sensor.screening)?;
    let samples = ramsey_train(
        s.ramsey_offset,
        s.ramsey_spacing,
        s.ramsey_count,
        s.ramsey_tau,
        &at_spin.waveform,
        sensor.d_perp,
    )?;
    let env = apply_coherence(&build_sequence(SequenceKind::Ramsey, s.ramsey_tau, 0.0)?, &sensor.coherence);
    samples
        .iter()
        .enumerate()
        .map(|(k, x)| Ok((x.time, read_phase(x.phase, env, sensor, s.n_avg, seed, stream_id, k as u64)?)))
        .collect()
}

/// Measures the screening response at one frequency.
pub fn lockin_point(f_khz: f64, s: &LockinSettings, sensor: &Sensor, seed: u64, stream_id: u64) -> Result<LockinPoint> {
    s.validate()?;
    sensor.screening.validate()?;
    if !(f_khz > 0.0 && f_khz.is_finite()) {
        return Err(invalid("frequency", format!("must be positive, got {f_khz}")));
    }
    let f_mhz = f_khz * 1e-3;
    let kappa = sensor.screening.dielectric_factor;
    let method = s.method_for(f_khz);
    let (trace, fit, reference, sequence, tau) = match method {
        LockinMethod::RamseyTrain => {
            let trace = ramsey_trace(f_khz, s, sensor, seed, stream_id)?;
            let fit = sine_fit(&trace, f_khz)?;
            let unscreened = ramsey_sinusoid_amplitude(s.ramsey_amplitude, f_mhz, s.ramsey_tau, sensor.d_perp);
            (trace, fit, kappa * unscreened, "ramsey".to_string(), s.ramsey_tau)
        }
        LockinMethod::Decoupling => {
            let (kind, tau) = SequenceKind::xy4_for_frequency(f_mhz, s.dd_tau);
            let seq = build_sequence(kind, tau, 0.0)?;
            let env = apply_coherence(&seq, &sensor.coherence);
            let m = s.dd_phase_steps;
            let trace = (0..m)
                .map(|k| {
                    let offset = TAU * k as f64 / m as f64;
                    let drive = Waveform::sinusoid(s.dd_amplitude, f_mhz, offset);
                    let at_spin = apply_screening(&drive, &sensor.screening)?;
                    let phi = accumulated_phase(&seq, &at_spin.waveform, sensor.d_perp)?;
                    Ok((offset, read_phase(phi, env, sensor, s.n_avg, seed, stream_id, k as u64)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let cycles: Vec<(f64, f64)> = trace.iter().map(|&(o, p)| (o / TAU, p)).collect();
            let fit = fit_cycles(&cycles, 1.0)?;
            let unscreened = 4.0 * sensor.d_perp * tau * s.dd_amplitude;
            (trace, fit, kappa * unscreened, kind.to_string(), tau)
        }
    };
    Ok(LockinPoint {
        frequency_khz: f_khz,
        method,
        sequence,
        tau,
        amplitude_ratio: fit.amplitude / reference,
        amplitude_ratio_se: fit.amplitude_se / reference,
        phase_lead_deg: fit.phase.to_degrees(),
        phase_lead_se_deg: fit.phase_se.to_degrees(),
        expected_ratio: attenuation(f_khz, &sensor.screening)?,
        expected_lead_deg: phase_lead(f_khz, &sensor.screening)?,
        fit,
        trace,
    })
}

/// Frequency sweep; point `k` draws its noise from stream `k`.
pub fn lockin_sweep(freqs_khz: &[f64], s: &LockinSettings, sensor: &Sensor, seed: u64) -> Result<Vec<LockinPoint>> {
    freqs_khz
        .par_iter()
        .enumerate()
        .map(|(k, &f)| lockin_point(f, s, sensor, seed, k as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_sweep_matches_high_pass() {
        let sensor = Sensor::default();
        let pts = lockin_sweep(&[4.0, 30.0, 200.0, 1200.0], &LockinSettings::default(), &sensor, 1).unwrap();
        for p in &pts {
            assert!((p.amplitude_ratio - p.expected_ratio).abs() < 1e-9, "{p:?}");
            assert!((p.phase_lead_deg - p.expected_lead_deg).abs() < 1e-7);
        }
        assert_eq!(pts[0].method, LockinMethod::RamseyTrain);
        assert_eq!(pts[2].method, LockinMethod::Decoupling);
    }
}
