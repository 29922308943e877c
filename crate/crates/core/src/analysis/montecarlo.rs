use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sensitivity::SensitivityParams;
use crate::error::{invalid, Result};
use crate::pulse::{simulate_readout, ReadoutModel};
use crate::rng::stream;

/// Phase step (rad) used to probe the slope around E = 0.
const PROBE_PHASE: f64 = 0.05;
const BOOTSTRAP_ROUNDS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    /// V/um/sqrt(Hz).
    pub eta: f64,
    /// Bootstrap standard error of `eta` (zero without shot noise).
    pub error: f64,
    pub trials: usize,
    /// Photon-count noise over one second.
    pub noise_counts: f64,
    /// Counts per V/um over one second.
    pub slope: f64,
}

/// Monte Carlo check of the shot-noise sensitivity. Each trial is one second
/// of repeated Ramsey measurements read out on the y projection at
/// E = +dE and E = -dE; the SNR = 1 field is the count noise divided by the
/// count slope.
///
/// Rates, contrast and timings come from `p`; `readout` supplies the shot
/// noise switch and the seed. Without shot noise the noise is the Poisson
/// width of the bright-state counts.
pub fn monte_carlo_sensitivity(
    p: &SensitivityParams,
    readout: &ReadoutModel,
    trials: usize,
) -> Result<MonteCarloEstimate> {
    p.validate()?;
    if trials < 100 {
        return Err(invalid("trials", format!("need at least 100, got {trials}")));
    }
    let rm = ReadoutModel {
        f0: p.f,
        contrast: p.c,
        t_r: p.t_r,
        t_ini: p.t_ini,
        ..*readout
    };
    rm.validate()?;
    let n_avg = p.shots_per_second().floor() as u64;
    if n_avg == 0 {
        return Err(invalid("tau", "sequence longer than the one-second budget"));
    }
    let delta_e = PROBE_PHASE / (TAU * p.d_perp * p.tau);

    let run = |sign: f64, branch: u64| -> Result<Vec<f64>> {
        (0..trials)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream(rm.seed, k as u64, branch);
                let phi = TAU * p.d_perp * p.tau * sign * delta_e;
                let s = simulate_readout(phi, FRAC_PI_2, 1.0, &rm, n_avg, &mut rng)?;
                Ok(if rm.shot_noise {
                    s.counts as f64
                } else {
                    s.rate * rm.exposure(n_avg)
                })
            })
            .collect()
    };
    let plus = run(1.0, 0)?;
    let minus = run(-1.0, 1)?;

    if !rm.shot_noise {
        let slope = (plus[0] - minus[0]) / (2.0 * delta_e);
        let noise = (rm.f0 * rm.exposure(n_avg)).sqrt();
        return Ok(MonteCarloEstimate {
            eta: noise / slope.abs(),
            error: 0.0,
            trials,
            noise_counts: noise,
            slope,
        });
    }

    let (eta, noise, slope) = estimate(&plus, &minus, delta_e);
    let mut rng = stream(rm.seed, u64::MAX, 2);
    let mut boot = Vec::with_capacity(BOOTSTRAP_ROUNDS);
    let mut bp = vec![0.0; trials];
    let mut bm = vec![0.0; trials];
    for _ in 0..BOOTSTRAP_ROUNDS {
        for slot in bp.iter_mut() {
            *slot = plus[rng.random_range(0..trials)];
        }
        for slot in bm.iter_mut() {
            *slot = minus[rng.random_range(0..trials)];
        }
        boot.push(estimate(&bp, &bm, delta_e).0);
    }
    let mean = boot.iter().sum::<f64>() / boot.len() as f64;
    let var = boot.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64;
    Ok(MonteCarloEstimate {
        eta,
        error: var.sqrt(),
        trials,
        noise_counts: noise,
        slope,
    })
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var)
}

/// (eta, pooled noise, slope).
fn estimate(plus: &[f64], minus: &[f64], delta_e: f64) -> (f64, f64, f64) {
    let (mp, vp) = mean_var(plus);
    let (mm, vm) = mean_var(minus);
    let noise = (0.5 * (vp + vm)).sqrt();
    let slope = (mp - mm) / (2.0 * delta_e);
    (noise / slope.abs(), noise, slope)
}
