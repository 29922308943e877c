use serde::{Deserialize, Serialize};

use super::sequence::PulseSequence;
use crate::error::{invalid, Result};

/// Decay envelopes: Gaussian for Ramsey, stretched exponential with a
/// pulse-number-dependent T2 for echo and dynamical decoupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceModel {
    pub t2_star: f64,
    pub t2_base: f64,
    pub stretch_p: f64,
    pub pulse_scaling_s: f64,
}

impl Default for CoherenceModel {
    fn default() -> Self {
        CoherenceModel {
            t2_star: 1.5,
            t2_base: 10.0,
            stretch_p: 1.5,
            pulse_scaling_s: 2.0 / 3.0,
        }
    }
}

impl CoherenceModel {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        check("t2_star", self.t2_star)?;
        check("t2_base", self.t2_base)?;
        check("stretch_p", self.stretch_p)?;
        check("pulse_scaling_s", self.pulse_scaling_s)
    }

    /// T2 under `n` pi pulses.
    pub fn t2(&self, n: usize) -> f64 {
        self.t2_base * (n.max(1) as f64).powf(self.pulse_scaling_s)
    }

    /// Envelope for `n` pi pulses over total free time `tau`; `n == 0` is Ramsey.
    pub fn envelope(&self, n: usize, tau: f64) -> f64 {
        let tau = tau.max(0.0);
        if n == 0 {
            (-(tau / self.t2_star).powi(2)).exp()
        } else {
            (-(tau / self.t2(n)).powf(self.stretch_p)).exp()
        }
    }
}

/// Contrast multiplier in (0, 1] for a sequence.
pub fn apply_coherence(seq: &PulseSequence, model: &CoherenceModel) -> f64 {
    model.envelope(seq.pi_pulse_count(), seq.tau)
}
