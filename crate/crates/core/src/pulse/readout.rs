use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Final pi/2 phases of the four-sequence block. F1/F2 form the cosine pair,
/// F3/F4 the sine pair; F3 is the plain y projection.
pub const FOUR_BLOCK_PHASES: [f64; 4] = [PI, 0.0, FRAC_PI_2, 3.0 * FRAC_PI_2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutModel {
    /// Bright-state count rate (counts/s).
    pub f0: f64,
    pub contrast: f64,
    /// Readout window (us).
    pub t_r: f64,
    /// Initialization time (us).
    pub t_ini: f64,
    pub shot_noise: bool,
    pub seed: u64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        ReadoutModel {
            f0: 100_000.0,
            contrast: 0.2,
            t_r: 0.2,
            t_ini: 2.0,
            shot_noise: false,
            seed: 0,
        }
    }
}

impl ReadoutModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast > 0.0 && self.contrast < 1.0) {
            return Err(invalid("contrast", format!("must lie in (0, 1), got {}", self.contrast)));
        }
        for (name, v) in [("f0", self.f0), ("t_r", self.t_r), ("t_ini", self.t_ini)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Expected counts per (counts/s) of rate for `n_avg` repetitions.
    pub fn exposure(&self, n_avg: u64) -> f64 {
        self.t_r * 1e-6 * n_avg as f64
    }
}

/// Probability of |0> after the final pi/2 pulse of phase `final_phase`.
pub fn population(phi: f64, final_phase: f64, env_mult: f64) -> f64 {
    0.5 * (1.0 - env_mult * (phi + final_phase - FRAC_PI_2).sin())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutSample {
    /// Mean fluorescence rate (counts/s).
    pub rate: f64,
    pub counts: u64,
}

/// One fluorescence measurement summed over `n_avg` repetitions. `rng` is
/// only consumed when the model has shot noise enabled.
pub fn simulate_readout<R: Rng + ?Sized>(
    phi: f64,
    final_phase: f64,
    env_mult: f64,
    rm: &ReadoutModel,
    n_avg: u64,
    rng: &mut R,
) -> Result<ReadoutSample> {
    if n_avg == 0 {
        return Err(invalid("n_avg", "must be at least 1"));
    }
    if !(phi.is_finite() && final_phase.is_finite() && env_mult.is_finite()) {
        return Err(Error::NonFinite("readout phase"));
    }
    rm.validate()?;
    let p = population(phi, final_phase, env_mult);
    let rate = rm.f0 * (1.0 - rm.contrast * (1.0 - p));
    let mean = rate * rm.exposure(n_avg);
    let counts = if rm.shot_noise {
        poisson(mean, rng)
    } else {
        mean.round() as u64
    };
    Ok(ReadoutSample { rate, counts })
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// The four measurements of one phase-readout block, in F1..F4 order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourBlock {
    pub samples: [ReadoutSample; 4],
}

impl FourBlock {
    pub fn rates(&self) -> [f64; 4] {
        self.samples.map(|s| s.rate)
    }

    /// Rates estimated from counts, as an experiment would see them.
    pub fn measured_rates(&self, rm: &ReadoutModel, n_avg: u64) -> [f64; 4] {
        let exposure = rm.exposure(n_avg);
        self.samples.map(|s| s.counts as f64 / exposure)
    }
}

pub fn simulate_four_block<R: Rng + ?Sized>(
    phi: f64,
    env_mult: f64,
    rm: &ReadoutModel,
    n_avg: u64,
    rng: &mut R,
) -> Result<FourBlock> {
    let mut samples = [ReadoutSample { rate: 0.0, counts: 0 }; 4];
    for (slot, chi) in samples.iter_mut().zip(FOUR_BLOCK_PHASES) {
        *slot = simulate_readout(phi, chi, env_mult, rm, n_avg, rng)?;
    }
    Ok(FourBlock { samples })
}

/// Raw quadratures 2(F2-F1)/(F2+F1) and 2(F4-F3)/(F4+F3).
pub fn phase_quadratures(f: [f64; 4]) -> Result<(f64, f64)> {
    let [f1, f2, f3, f4] = f;
    let (c, s) = (f2 + f1, f4 + f3);
    if !(c > 0.0 && s > 0.0) {
        return Err(Error::DeadReadout);
    }
    Ok((2.0 * (f2 - f1) / c, 2.0 * (f4 - f3) / s))
}

/// Raw quadratures divided by the fringe visibility 2 C env / (2 - C), so
/// that the noiseless pair lies on the unit circle.
pub fn normalized_quadratures(f: [f64; 4], contrast: f64, env_mult: f64) -> Result<(f64, f64)> {
    let (c, s) = phase_quadratures(f)?;
    let v = 2.0 * contrast * env_mult / (2.0 - contrast);
    if !(v > 0.0) {
        return Err(invalid("contrast", "visibility must be positive"));
    }
    Ok((c / v, s / v))
}

/// Phase from the four-block rates, on (-pi, pi].
pub fn extract_phase(f1: f64, f2: f64, f3: f64, f4: f64) -> Result<f64> {
    let (c, s) = phase_quadratures([f1, f2, f3, f4])?;
    let phi = s.atan2(c);
    Ok(if phi <= -PI { PI } else { phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn noiseless(phi: f64, chi: f64) -> f64 {
        let rm = ReadoutModel::default();
        simulate_readout(phi, chi, 1.0, &rm, 1, &mut stream(0, 0, 0)).unwrap().rate
    }

    #[test]
    fn y_projection_levels() {
        let f0 = ReadoutModel::default().f0;
        assert!((noiseless(0.0, FRAC_PI_2) - f0 * 0.9).abs() < 1e-9);
        assert!((noiseless(FRAC_PI_2, FRAC_PI_2) - f0 * 0.8).abs() < 1e-9);
    }

    #[test]
    fn equal_cos_pair_gives_quarter_turn() {
        assert!((extract_phase(1.0, 1.0, 0.9, 1.1).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(extract_phase(1.0, 0.9, 1.0, 1.0).unwrap(), PI);
    }

    #[test]
    fn dead_readout_is_flagged() {
        assert!(matches!(extract_phase(0.0, 0.0, 1.0, 1.0), Err(Error::DeadReadout)));
    }

    #[test]
    fn four_block_round_trip() {
        let rm = ReadoutModel::default();
        let b = simulate_four_block(0.3, 1.0, &rm, 1, &mut stream(0, 0, 0)).unwrap();
        let [f1, f2, f3, f4] = b.rates();
        assert!((extract_phase(f1, f2, f3, f4).unwrap() - 0.3).abs() < 1e-12);
        let (c, s) = normalized_quadratures(b.rates(), rm.contrast, 1.0).unwrap();
        assert!((c * c + s * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_averages_rejected() {
        let rm = ReadoutModel::default();
        assert!(simulate_readout(0.0, 0.0, 1.0, &rm, 0, &mut stream(0, 0, 0)).is_err());
    }
}
