use std::f64::consts::TAU;

use super::sequence::PulseSequence;
use super::waveform::Waveform;
use crate::error::Result;

/// Absolute tolerance (rad) of the adaptive quadrature route.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Phase (rad) picked up by the |0>/|+> superposition, 2 pi d_perp times the
/// integral of s(t) E(t) over the sensing window, for a sequence whose first
/// pi/2 pulse is centered at `t_start` on the waveform's clock.
///
/// Uses the exact per-segment integral of the waveform.
pub fn accumulated_phase_at(
    seq: &PulseSequence,
    w: &Waveform,
    d_perp: f64,
    t_start: f64,
) -> Result<f64> {
    let mut sum = 0.0;
    for (a, b, sign) in seq.segments() {
        sum += sign * w.integral(t_start + a, t_start + b)?;
    }
    Ok(TAU * d_perp * sum)
}

pub fn accumulated_phase(seq: &PulseSequence, w: &Waveform, d_perp: f64) -> Result<f64> {
    accumulated_phase_at(seq, w, d_perp, 0.0)
}

/// Same quantity as [`accumulated_phase_at`] by adaptive Gauss-Kronrod
/// quadrature of s(t) E(t), to `abs_tol` in radians.
pub fn accumulated_phase_quadrature(
    seq: &PulseSequence,
    w: &Waveform,
    d_perp: f64,
    t_start: f64,
    abs_tol: f64,
) -> Result<f64> {
    let scale = TAU * d_perp.abs().max(f64::MIN_POSITIVE);
    let segments = seq.segments();
    let mut pieces = Vec::new();
    for (a, b, sign) in segments {
        let (a, b) = (t_start + a, t_start + b);
        let mut knots = vec![a];
        knots.extend(w.breakpoints(a, b));
        knots.push(b);
        for k in knots.windows(2) {
            pieces.push((k[0], k[1], sign));
        }
    }
    // Validate the domain once up front so the integrand can be infallible.
    for &(a, b, _) in &pieces {
        w.value(a)?;
        w.value(b)?;
    }
    let tol = abs_tol / scale / pieces.len() as f64;
    let mut sum = 0.0;
    for (a, b, sign) in pieces {
        let f = |t: f64| w.value(t).unwrap_or(0.0);
        sum += sign * adaptive_gk15(&f, a, b, tol, 40);
    }
    Ok(TAU * d_perp * sum)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss 7-point weights, paired with XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate on [a, b] and its difference to the
/// embedded 7-point Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Recursive bisection until the Kronrod-Gauss difference drops below `tol`.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth == 0 || (b - a).abs() < 1e-14 {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive_gk15(f, a, m, 0.5 * tol, depth - 1) + adaptive_gk15(f, m, b, 0.5 * tol, depth - 1)
}

/// (t, s(t), E(t)) over the sensing window, `n` evenly spaced points.
pub fn trace(seq: &PulseSequence, w: &Waveform, t_start: f64, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            let t = seq.tau * k as f64 / (n - 1) as f64;
            Ok((t_start + t, seq.sign_at(t), w.value(t_start + t)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{build_sequence, SequenceKind};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn gk15_integrates_smooth_functions() {
        let v = adaptive_gk15(&|x: f64| x.sin(), 0.0, PI, 1e-13, 30);
        assert!((v - 2.0).abs() < 1e-13);
        let p = adaptive_gk15(&|x: f64| x.powi(9) - 3.0 * x, -1.0, 2.0, 1e-13, 30);
        assert!((p - (102.3 - 4.5)).abs() < 1e-10);
    }

    #[test]
    fn ramsey_dc_phase() {
        let s = build_sequence(SequenceKind::Ramsey, 0.8, 0.0).unwrap();
        let w = Waveform::dc(1.0);
        let closed = accumulated_phase(&s, &w, 0.17).unwrap();
        let quad = accumulated_phase_quadrature(&s, &w, 0.17, 0.0, QUADRATURE_TOL).unwrap();
        assert!((closed - 2.0 * PI * 0.17 * 0.8).abs() < 1e-15);
        assert!((closed - 0.8545).abs() < 1e-4);
        assert!((closed - quad).abs() < 1e-9);
    }

    #[test]
    fn xy4_matched_sinusoid() {
        let s = build_sequence(SequenceKind::Xy4(1), 8.0, 0.0).unwrap();
        let e0 = 0.7;
        let inphase = Waveform::sinusoid(e0, 0.25, 0.0);
        let phi = accumulated_phase(&s, &inphase, 0.17).unwrap();
        assert!((phi - 4.0 * 0.17 * e0 * 8.0).abs() < 1e-12);
        let quad = accumulated_phase_quadrature(&s, &inphase, 0.17, 0.0, QUADRATURE_TOL).unwrap();
        assert!((phi - quad).abs() < 1e-9);

        let quadrature_signal = Waveform::sinusoid(e0, 0.25, FRAC_PI_2);
        assert!(accumulated_phase(&s, &quadrature_signal, 0.17).unwrap().abs() < 1e-12);
    }

    #[test]
    fn sampled_waveform_outside_span_is_an_error() {
        let s = build_sequence(SequenceKind::Ramsey, 1.0, 0.0).unwrap();
        let w = Waveform::sampled(vec![0.0, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(accumulated_phase(&s, &w, 0.17).is_err());
        assert!(accumulated_phase_quadrature(&s, &w, 0.17, 0.0, 1e-9).is_err());
    }

    #[test]
    fn trace_reports_sign_and_field() {
        let s = build_sequence(SequenceKind::SpinEcho, 2.0, 0.0).unwrap();
        let tr = trace(&s, &Waveform::dc(3.0), 5.0, 5).unwrap();
        assert_eq!(tr[0], (5.0, 1.0, 3.0));
        assert_eq!(tr[4].1, -1.0);
    }
}
