use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::motion::{check_upconversion, TipMotion};
use crate::error::{invalid, Error, Result};
use crate::field::{
    field_at_height, project_zeta, solve_laplace, ElectrodeGeometry2D, Grid2D, ProjectionAxis,
    ZetaProfile,
};
use crate::pulse::{
    accumulated_phase, apply_coherence, build_sequence, extract_phase, simulate_four_block,
    CoherenceModel, PulseSequence, ReadoutModel, SequenceKind, Waveform,
};
use crate::rng::stream;
use crate::screening::{apply_screening, attenuation, phase_lead, ScreeningModel};

pub const ENGINE_VERSION: &str = concat!("nvelectro-core ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ScanAxis {
    pub fn positions(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invalid("step", format!("must be positive, got {}", self.step)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start) {
            return Err(invalid("stop", "must be finite and not below start"));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

/// Raster of pixels, row-major in (y, x). A missing `y` axis is a line scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPlan {
    pub x: ScanAxis,
    pub y: Option<ScanAxis>,
    pub sequence: SequenceKind,
    pub tau: f64,
    pub n_avg: u64,
    pub seed: u64,
}

/// E_zeta per volt of the reference conductor at the NV height, with its x
/// derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldContext {
    pub profile: ZetaProfile,
    pub gradient: ZetaProfile,
    pub height: f64,
    pub spacing: f64,
    pub residual: f64,
    pub axis: ProjectionAxis,
}

impl FieldContext {
    pub fn from_grid(g: &Grid2D, reference_bias: f64, height: f64, axis: ProjectionAxis) -> Result<Self> {
        if !(reference_bias != 0.0 && reference_bias.is_finite()) {
            return Err(invalid("bias", "reference conductor potential must be non-zero"));
        }
        let p = field_at_height(g, height)?;
        let profile = project_zeta(&p, &axis).scaled(1.0 / reference_bias);
        let gradient = profile.gradient(1)?;
        Ok(FieldContext {
            profile,
            gradient,
            height,
            spacing: g.spacing,
            residual: g.residual,
            axis,
        })
    }

    /// Solves the geometry and normalizes by its largest conductor potential.
    pub fn solve(
        geom: &ElectrodeGeometry2D,
        spacing: f64,
        tol: f64,
        height: f64,
        axis: ProjectionAxis,
    ) -> Result<Self> {
        let bias = geom
            .conductors
            .iter()
            .map(|c| c.potential)
            .fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
        let g = solve_laplace(geom, spacing, tol)?;
        Self::from_grid(&g, bias, height, axis)
    }

    pub fn e_zeta(&self, x: f64) -> Result<f64> {
        self.profile.interpolate(x)
    }

    pub fn de_dx(&self, x: f64) -> Result<f64> {
        self.gradient.interpolate(x)
    }
}

/// Everything between the field at the tip and the extracted phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub d_perp: f64,
    pub screening: ScreeningModel,
    pub readout: ReadoutModel,
    pub coherence: CoherenceModel,
}

impl Default for Sensor {
    fn default() -> Self {
        Sensor {
            d_perp: 0.17,
            screening: ScreeningModel::default(),
            readout: ReadoutModel::default(),
            coherence: CoherenceModel::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcDrive {
    /// Peak voltage on the biased electrode (half of V_pp).
    pub amplitude: f64,
    /// MHz.
    pub frequency: f64,
}

impl Default for AcDrive {
    fn default() -> Self {
        AcDrive {
            amplitude: 0.48,
            frequency: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcDrive {
    pub voltage: f64,
}

impl Default for DcDrive {
    fn default() -> Self {
        DcDrive { voltage: 16.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Ac,
    Dc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub kind: ScanKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Pixel pitch along x and y as planned (zero for a single row).
    pub x_step: f64,
    pub y_step: f64,
    /// Extracted phi_NV (rad), unwrapped along each row.
    pub phase: Vec<f64>,
    /// Field amplitude in air recovered from the phase (V/um): E_zeta for AC
    /// scans, E_amp for DC scans.
    pub field: Vec<f64>,
    /// The same quantity straight from the field model.
    pub truth: Vec<f64>,
    /// Linear-vs-Fourier motion discrepancy (zero for AC scans).
    pub discrepancy: Vec<f64>,
    pub flagged: Vec<bool>,
    pub metadata: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl ScanResult {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Phase per unit field amplitude in air for a matched, in-phase drive:
/// 2 pi d (2/pi) tau kappa |H(f)|.
pub fn phase_gain(seq: &PulseSequence, frequency: f64, sensor: &Sensor) -> Result<f64> {
    let att = attenuation(frequency * 1e3, &sensor.screening)?;
    Ok(4.0 * sensor.d_perp * seq.tau * sensor.screening.dielectric_factor * att)
}

fn matched_sequence(plan: &ScanPlan, frequency: f64) -> Result<PulseSequence> {
    let seq = build_sequence(plan.sequence, plan.tau, 0.0)?;
    match seq.matched_frequency() {
        Some(fm) if (frequency - fm).abs() <= 1e-9 * fm => Ok(seq),
        Some(fm) => Err(Error::UnmatchedFrequency {
            signal_mhz: frequency,
            matched_mhz: fm,
        }),
        None => Err(Error::UnmatchedFrequency {
            signal_mhz: frequency,
            matched_mhz: 0.0,
        }),
    }
}

/// One pixel: drive at `frequency` with its phase advanced against the
/// screening lead, so the field at the spin is in phase with the sequence.
fn measure(
    seq: &PulseSequence,
    amplitude: f64,
    frequency: f64,
    sensor: &Sensor,
    n_avg: u64,
    seed: u64,
    pixel: u64,
) -> Result<f64> {
    let lead = phase_lead(frequency * 1e3, &sensor.screening)?.to_radians();
    let drive = Waveform::sinusoid(amplitude, frequency, -lead);
    let at_spin = apply_screening(&drive, &sensor.screening)?;
    let phi = accumulated_phase(seq, &at_spin.waveform, sensor.d_perp)?;
    let env = apply_coherence(seq, &sensor.coherence);
    let mut rng = stream(seed, pixel, 0);
    let block = simulate_four_block(phi, env, &sensor.readout, n_avg, &mut rng)?;
    let [f1, f2, f3, f4] = if sensor.readout.shot_noise {
        block.measured_rates(&sensor.readout, n_avg)
    } else {
        block.rates()
    };
    extract_phase(f1, f2, f3, f4)
}

/// Removes 2 pi jumps between neighbours, in place.
pub fn unwrap_phase(row: &mut [f64]) {
    let tau = std::f64::consts::TAU;
    let mut offset = 0.0;
    for i in 1..row.len() {
        let raw = row[i] + offset;
        let d = raw - row[i - 1];
        offset -= tau * (d / tau).round();
        row[i] += offset;
    }
}

struct Pixels {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn pixels(plan: &ScanPlan) -> Result<Pixels> {
    if plan.n_avg == 0 {
        return Err(invalid("n_avg", "must be at least 1"));
    }
    let x = plan.x.positions()?;
    let y = match &plan.y {
        Some(a) => a.positions()?,
        None => vec![0.0],
    };
    Ok(Pixels { x, y })
}

fn finish_phase(phase: &mut [f64], nx: usize) {
    for row in phase.chunks_mut(nx) {
        unwrap_phase(row);
    }
}

fn common_metadata(plan: &ScanPlan, field: &FieldContext, sensor: &Sensor, kind: &str) -> Vec<(String, String)> {
    let mut m: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| m.push((k.to_string(), v));
    put("engine_version", ENGINE_VERSION.to_string());
    put("scan", kind.to_string());
    put("height", field.height.to_string());
    put("grid_spacing", field.spacing.to_string());
    put("solver_residual", field.residual.to_string());
    put("axis_phi", field.axis.phi.to_string());
    put("axis_theta", field.axis.theta.to_string());
    put("d_perp", sensor.d_perp.to_string());
    put("f_c", sensor.screening.f_c.to_string());
    put("dielectric_factor", sensor.screening.dielectric_factor.to_string());
    put("sequence", plan.sequence.to_string());
    put("tau", plan.tau.to_string());
    put("n_avg", plan.n_avg.to_string());
    put("seed", plan.seed.to_string());
    put("shot_noise", sensor.readout.shot_noise.to_string());
    m
}

/// Line or raster scan of an AC-driven device with the tip at rest.
pub fn run_ac_scan(plan: &ScanPlan, field: &FieldContext, drive: &AcDrive, sensor: &Sensor) -> Result<ScanResult> {
    let px = pixels(plan)?;
    let seq = matched_sequence(plan, drive.frequency)?;
    let gain = phase_gain(&seq, drive.frequency, sensor)?;
    let nx = px.x.len();
    let n = nx * px.y.len();
    let truth: Vec<f64> = px
        .x
        .iter()
        .map(|&x| Ok(drive.amplitude * field.e_zeta(x)?))
        .collect::<Result<_>>()?;
    let mut phase: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|p| measure(&seq, truth[p % nx], drive.frequency, sensor, plan.n_avg, plan.seed, p as u64))
        .collect::<Result<_>>()?;
    finish_phase(&mut phase, nx);
    let mut metadata = common_metadata(plan, field, sensor, "ac");
    let lead = phase_lead(drive.frequency * 1e3, &sensor.screening)?;
    metadata.push(("signal_frequency".into(), drive.frequency.to_string()));
    metadata.push(("drive_amplitude".into(), drive.amplitude.to_string()));
    metadata.push(("delay_compensation_deg".into(), lead.to_string()));
    metadata.push(("phase_gain".into(), gain.to_string()));
    metadata.push(("flagged_pixels".into(), "0".into()));
    Ok(ScanResult {
        kind: ScanKind::Ac,
        field: phase.iter().map(|p| p / gain).collect(),
        truth: (0..n).map(|p| truth[p % nx]).collect(),
        discrepancy: vec![0.0; n],
        flagged: vec![false; n],
        x: px.x,
        y: px.y,
        x_step: plan.x.step,
        y_step: plan.y.as_ref().map_or(0.0, |a| a.step),
        phase,
        metadata,
        warnings: Vec::new(),
    })
}

/// Motion-enabled scan of a DC-biased device: the tip oscillation turns the
/// static field pattern into a signal at the mechanical frequency.
pub fn run_dc_scan(
    plan: &ScanPlan,
    field: &FieldContext,
    drive: &DcDrive,
    motion: &TipMotion,
    sensor: &Sensor,
) -> Result<ScanResult> {
    motion.validate()?;
    let px = pixels(plan)?;
    let f = motion.frequency;
    let seq = matched_sequence(plan, f)?;
    let gain = phase_gain(&seq, f, sensor)?;
    let nx = px.x.len();
    let n = nx * px.y.len();
    let v = drive.voltage;
    let checks = px
        .x
        .iter()
        .map(|&x| {
            let e = v * field.e_zeta(x)?;
            let de = v * field.de_dx(x)?;
            check_upconversion(|s| Ok(v * field.e_zeta(s)?), e, de, x, motion)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut phase: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|p| measure(&seq, checks[p % nx].linear, f, sensor, plan.n_avg, plan.seed, p as u64))
        .collect::<Result<_>>()?;
    finish_phase(&mut phase, nx);
    let mut warnings = Vec::new();
    if motion.amplitude == 0.0 && motion.beta == 0.0 {
        warnings.push("motion amplitude and beta are both zero: null experiment".to_string());
    }
    let flagged: Vec<bool> = (0..n).map(|p| checks[p % nx].flagged).collect();
    let mut metadata = common_metadata(plan, field, sensor, "dc");
    metadata.push(("dc_voltage".into(), v.to_string()));
    metadata.push(("motion_frequency".into(), f.to_string()));
    metadata.push(("motion_amplitude".into(), motion.amplitude.to_string()));
    metadata.push(("motion_direction".into(), motion.direction_angle.to_string()));
    metadata.push(("beta".into(), motion.beta.to_string()));
    metadata.push((
        "delay_compensation_deg".into(),
        phase_lead(f * 1e3, &sensor.screening)?.to_string(),
    ));
    metadata.push(("phase_gain".into(), gain.to_string()));
    metadata.push((
        "flagged_pixels".into(),
        flagged.iter().filter(|&&b| b).count().to_string(),
    ));
    Ok(ScanResult {
        kind: ScanKind::Dc,
        field: phase.iter().map(|p| p / gain).collect(),
        truth: (0..n).map(|p| checks[p % nx].linear).collect(),
        discrepancy: (0..n).map(|p| checks[p % nx].discrepancy).collect(),
        flagged,
        x: px.x,
        y: px.y,
        x_step: plan.x.step,
        y_step: plan.y.as_ref().map_or(0.0, |a| a.step),
        phase,
        metadata,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_include_stop() {
        let a = ScanAxis {
            start: -0.5,
            stop: 0.5,
            step: 0.25,
        };
        assert_eq!(a.positions().unwrap(), vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
        let bad = ScanAxis { step: 0.0, ..a };
        assert!(bad.positions().is_err());
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut r = vec![3.0, -3.1, -2.9, 3.1];
        unwrap_phase(&mut r);
        let tau = std::f64::consts::TAU;
        assert_eq!(r, vec![3.0, -3.1 + tau, -2.9 + tau, 3.1]);
    }
}
