use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inputs of the shot-noise sensitivity estimate. Rates in counts/s, times
/// in us, coupling in MHz um/V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityParams {
    pub f: f64,
    pub c: f64,
    pub t_r: f64,
    pub t_ini: f64,
    pub tau: f64,
    pub d_perp: f64,
}

impl Default for SensitivityParams {
    fn default() -> Self {
        SensitivityParams {
            f: 1e5,
            c: 0.2,
            t_r: 0.2,
            t_ini: 2.0,
            tau: 8.0,
            d_perp: 0.17,
        }
    }
}

impl SensitivityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f", self.f),
            ("t_r", self.t_r),
            ("t_ini", self.t_ini),
            ("tau", self.tau),
            ("d_perp", self.d_perp),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(invalid("c", format!("must lie in (0, 1), got {}", self.c)));
        }
        Ok(())
    }

    /// Photons per sequence repetition at rate F, F T_r (T_r in seconds).
    pub fn photons_per_shot(&self) -> f64 {
        self.f * self.t_r * 1e-6
    }

    /// Repetitions per second, 1 / (t_ini + tau).
    pub fn shots_per_second(&self) -> f64 {
        1e6 / (self.t_ini + self.tau)
    }
}

/// Signal-to-noise ratio for a field step `delta_e` (V/um) after
/// `t_total` seconds: pi d tau dE C sqrt(F T_r N_avg).
pub fn snr(p: &SensitivityParams, delta_e: f64, t_total: f64) -> Result<f64> {
    p.validate()?;
    if !(t_total > 0.0) {
        return Err(invalid("t_total", "must be positive"));
    }
    let n_avg = p.shots_per_second() * t_total;
    Ok(PI * p.d_perp * p.tau * delta_e * p.c * (p.photons_per_shot() * n_avg).sqrt())
}

/// Minimum field detectable at unit SNR in one second (V/um/sqrt(Hz)).
pub fn sensitivity_ac(p: &SensitivityParams) -> Result<f64> {
    p.validate()?;
    let root = ((p.t_ini + p.tau) / (p.f * p.t_r)).sqrt();
    Ok(root / (PI * p.d_perp * p.tau * p.c))
}

/// Gradient sensitivity (V/um^2/sqrt(Hz)) for oscillation amplitude `a` (um).
pub fn sensitivity_gradient(eta_e: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid("amplitude", format!("must be positive, got {a}")));
    }
    Ok(eta_e / a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameter_set() {
        let p = SensitivityParams::default();
        let eta = sensitivity_ac(&p).unwrap();
        assert!((eta - 0.026).abs() / 0.026 < 0.01);
        assert!((sensitivity_gradient(eta, 0.013).unwrap() - 2.0).abs() / 2.0 < 0.01);
        assert!((snr(&p, eta, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((snr(&p, 0.1, 1.0).unwrap() - 3.82).abs() < 0.01);
    }

    #[test]
    fn zero_amplitude_is_undefined() {
        assert!(sensitivity_gradient(0.026, 0.0).is_err());
    }

    #[test]
    fn long_tau_limit() {
        let p = SensitivityParams {
            t_ini: 1e-9,
            ..Default::default()
        };
        let q = SensitivityParams { tau: 16.0, ..p };
        let r = sensitivity_ac(&q).unwrap() / sensitivity_ac(&p).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-9);
    }
}
