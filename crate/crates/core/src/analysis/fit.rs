use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// y = amplitude cos(2 pi f t + phase) + offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    pub amplitude: f64,
    /// On (-pi, pi].
    pub phase: f64,
    pub offset: f64,
    pub amplitude_se: f64,
    pub phase_se: f64,
    pub offset_se: f64,
    pub residual_rms: f64,
}

/// Known-frequency fit with `t` in us and `f_khz` in kHz.
pub fn sine_fit(samples: &[(f64, f64)], f_khz: f64) -> Result<SineFit> {
    fit_cycles(samples, f_khz * 1e-3)
}

/// Known-frequency fit with `frequency` in cycles per unit of the abscissa.
/// Linear least squares on {cos, sin, 1} via the 3x3 normal equations.
pub fn fit_cycles(samples: &[(f64, f64)], frequency: f64) -> Result<SineFit> {
    if samples.len() < 4 {
        return Err(invalid("samples", "need at least 4 points"));
    }
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(invalid("frequency", "must be positive"));
    }
    if samples.iter().any(|(t, y)| !(t.is_finite() && y.is_finite())) {
        return Err(Error::NonFinite("fit samples"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(t, _)| (a.min(t), b.max(t)));
    if (hi - lo) * frequency < 0.5 - 1e-12 {
        return Err(invalid("samples", "must span at least half a period"));
    }

    let w = TAU * frequency;
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for &(t, y) in samples {
        let row = Vector3::new((w * t).cos(), (w * t).sin(), 1.0);
        xtx += row * row.transpose();
        xty += row * y;
    }
    let sv = xtx.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient);
    }
    let inv = xtx.try_inverse().ok_or(Error::RankDeficient)?;
    let beta = inv * xty;
    let (a, b, c) = (beta[0], beta[1], beta[2]);

    let n = samples.len();
    let rss: f64 = samples
        .iter()
        .map(|&(t, y)| {
            let r = y - (a * (w * t).cos() + b * (w * t).sin() + c);
            r * r
        })
        .sum();
    let sigma2 = if n > 3 { rss / (n - 3) as f64 } else { 0.0 };
    let cov = inv * sigma2;

    let amplitude = a.hypot(b);
    let mut phase = (-b).atan2(a);
    if phase <= -PI {
        phase = PI;
    }
    let (amplitude_se, phase_se) = if amplitude > 0.0 {
        let ga = [a / amplitude, b / amplitude];
        let a2 = amplitude * amplitude;
        let gp = [b / a2, -a / a2];
        let quad = |g: [f64; 2]| {
            (g[0] * g[0] * cov[(0, 0)] + 2.0 * g[0] * g[1] * cov[(0, 1)] + g[1] * g[1] * cov[(1, 1)])
                .max(0.0)
                .sqrt()
        };
        (quad(ga), quad(gp))
    } else {
        (cov[(0, 0)].max(cov[(1, 1)]).max(0.0).sqrt(), f64::INFINITY)
    };
    Ok(SineFit {
        amplitude,
        phase,
        offset: c,
        amplitude_se,
        phase_se,
        offset_se: cov[(2, 2)].max(0.0).sqrt(),
        residual_rms: (rss / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f_khz: f64, amp: f64, phase: f64, offset: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let t = 4.0 * k as f64;
                (t, amp * (TAU * f_khz * 1e-3 * t + phase).cos() + offset)
            })
            .collect()
    }

    #[test]
    fn exact_on_noiseless_data() {
        let f = sine_fit(&synth(12.0, 2.0, 0.0, 1.0, 60), 12.0).unwrap();
        assert!((f.amplitude - 2.0).abs() < 1e-12);
        assert!(f.phase.abs() < 1e-12);
        assert!((f.offset - 1.0).abs() < 1e-12);
        let g = sine_fit(&synth(30.0, 0.7, -2.5, -0.2, 60), 30.0).unwrap();
        assert!((g.amplitude - 0.7).abs() < 1e-12);
        assert!((g.phase + 2.5).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_amplitude() {
        let s: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, 3.0)).collect();
        let f = fit_cycles(&s, 0.1).unwrap();
        assert!(f.amplitude < 1e-12);
        assert!((f.offset - 3.0).abs() < 1e-12);
    }

    #[test]
    fn equivalent_phases_are_rank_deficient() {
        let s: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 1.0 + k as f64)).collect();
        assert!(matches!(fit_cycles(&s, 1.0), Err(Error::RankDeficient)));
    }

    #[test]
    fn too_few_or_too_short() {
        assert!(fit_cycles(&[(0.0, 1.0), (0.1, 1.0), (0.2, 0.0)], 1.0).is_err());
        let s: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 0.01, k as f64)).collect();
        assert!(fit_cycles(&s, 1.0).is_err());
    }
}
