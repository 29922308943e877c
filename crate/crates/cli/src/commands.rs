//! One function per subcommand. Each writes its files into `out` and returns
//! the paths plus a short human-readable summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nvelectro::analysis::{
    lockin_sweep, monte_carlo_sensitivity, ramsey_trace, sensitivity_ac, sensitivity_gradient,
    sine_fit, snr, LockinSettings,
};
use nvelectro::field::{
    field_at_height, grid_sidecar, project_zeta, solve_laplace_with, write_profile, Grid2D,
    SolverOptions,
};
use nvelectro::pulse::{build_sequence, ramsey_sinusoid_amplitude, ramsey_train, SequenceKind, Waveform};
use nvelectro::scan::{
    run_ac_scan, run_dc_scan, write_scan, AcDrive, DcDrive, FieldContext, MapQuantity, ScanPlan,
    ENGINE_VERSION,
};
use nvelectro::screening::{apply_screening, attenuation, phase_lead};
use nvelectro::spin::{odmr_dips, odmr_spectrum};

use crate::config::{ExperimentConfig, Resolved, CONFIG_MARKER};
use crate::CliError;

pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Text appended to every sidecar: the command, the engine version and the
/// resolved config.
pub fn provenance(command: &str, cfg: &ExperimentConfig) -> String {
    format!("engine_version={ENGINE_VERSION}\n{}", config_tail(command, cfg))
}

/// [`provenance`] without the version line, for sidecars that carry it
/// already.
fn config_tail(command: &str, cfg: &ExperimentConfig) -> String {
    format!("command={command}\n{CONFIG_MARKER}\n{}", cfg.to_toml())
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn sweep(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + k as f64 * step).collect()
}

pub fn odmr(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let o = &cfg.odmr;
    let freqs = sweep(o.start, o.stop, o.step);
    let spectrum = odmr_spectrum(&r.species, &r.environment, r.model, o.mw_direction, o.line_width, &freqs)?;
    let peak = spectrum.iter().map(|p| p.contrast).fold(0.0, f64::max);
    let dips = odmr_dips(&spectrum, o.min_dip * peak);

    let mut table = String::from("frequency_mhz\tcontrast\n");
    for p in &spectrum {
        let _ = writeln!(table, "{}\t{}", p.frequency, p.contrast);
    }
    let mut side = format!("format=tsv\ntable=odmr.tsv\nrows={}\ndips={}\n", spectrum.len(), dips.len());
    let mut summary = format!("{} dips\n", dips.len());
    for (k, d) in dips.iter().enumerate() {
        let _ = writeln!(side, "dip_{k}={} {}", d.frequency, d.contrast);
        let _ = writeln!(summary, "  {:.3} MHz  depth {:.4}", d.frequency, d.contrast);
    }
    side.push_str(&provenance("odmr", cfg));
    let mut files = Vec::new();
    write(out.join("odmr.tsv"), &table, &mut files)?;
    write(out.join("odmr.txt"), &side, &mut files)?;
    Ok(Outcome { files, summary })
}

pub fn ramsey(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let ra = &cfg.ramsey;
    let sensor = &r.sensor;
    let settings = LockinSettings {
        n_avg: ra.n_avg,
        ..r.lockin
    };
    let f_mhz = ra.frequency_khz * 1e-3;
    let drive = Waveform::sinusoid(ra.amplitude, f_mhz, 0.0);
    let at_spin = apply_screening(&drive, &sensor.screening)?;
    let truth = ramsey_train(ra.offset, ra.spacing, ra.count, ra.tau, &at_spin.waveform, sensor.d_perp)?;
    let measured = ramsey_trace(ra.frequency_khz, &settings, sensor, cfg.run.seed, 0)?;
    let fit = sine_fit(&measured, ra.frequency_khz)?;
    let expected = sensor.screening.dielectric_factor
        * attenuation(ra.frequency_khz, &sensor.screening)?
        * ramsey_sinusoid_amplitude(ra.amplitude, f_mhz, ra.tau, sensor.d_perp);
    let lead = phase_lead(ra.frequency_khz, &sensor.screening)?;

    let mut table = String::from("time_us\tphase_true\tphase_measured\n");
    for (t, m) in truth.iter().zip(&measured) {
        let _ = writeln!(table, "{}\t{}\t{}", t.time, t.phase, m.1);
    }
    let mut side = format!("format=tsv\ntable=ramsey.tsv\nrows={}\n", truth.len());
    let _ = writeln!(side, "fit_amplitude={}", fit.amplitude);
    let _ = writeln!(side, "fit_amplitude_se={}", fit.amplitude_se);
    let _ = writeln!(side, "fit_phase={}", fit.phase);
    let _ = writeln!(side, "fit_phase_se={}", fit.phase_se);
    let _ = writeln!(side, "fit_offset={}", fit.offset);
    let _ = writeln!(side, "fit_residual_rms={}", fit.residual_rms);
    let _ = writeln!(side, "expected_amplitude={expected}");
    let _ = writeln!(side, "expected_phase={}", lead.to_radians());
    side.push_str(&provenance("ramsey", cfg));
    let summary = format!(
        "amplitude {:.6} +- {:.6} rad (expected {:.6}), phase {:.3} +- {:.3} deg (expected {:.3})\n",
        fit.amplitude,
        fit.amplitude_se,
        expected,
        fit.phase.to_degrees(),
        fit.phase_se.to_degrees(),
        lead
    );
    let mut files = Vec::new();
    write(out.join("ramsey.tsv"), &table, &mut files)?;
    write(out.join("ramsey.txt"), &side, &mut files)?;
    Ok(Outcome { files, summary })
}

pub fn lockin(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let points = lockin_sweep(&cfg.lockin.frequencies_khz, &r.lockin, &r.sensor, cfg.run.seed)?;
    let mut table = String::from(
        "frequency_khz\tmethod\tsequence\ttau\tamplitude_ratio\tamplitude_ratio_se\tphase_deg\tphase_se_deg\texpected_ratio\texpected_phase_deg\n",
    );
    let mut summary = String::from("f_kHz     ratio    expected  lead_deg  expected\n");
    for p in &points {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.frequency_khz,
            p.method.name(),
            p.sequence,
            p.tau,
            p.amplitude_ratio,
            p.amplitude_ratio_se,
            p.phase_lead_deg,
            p.phase_lead_se_deg,
            p.expected_ratio,
            p.expected_lead_deg
        );
        let _ = writeln!(
            summary,
            "{:<8}  {:.4}   {:.4}    {:7.3}   {:7.3}",
            p.frequency_khz, p.amplitude_ratio, p.expected_ratio, p.phase_lead_deg, p.expected_lead_deg
        );
    }
    let mut side = format!("format=tsv\ntable=lockin.tsv\nrows={}\n", points.len());
    side.push_str(&provenance("lockin-sweep", cfg));
    let mut files = Vec::new();
    write(out.join("lockin.tsv"), &table, &mut files)?;
    write(out.join("lockin.txt"), &side, &mut files)?;
    Ok(Outcome { files, summary })
}

pub fn sensitivity(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let p = &r.sensitivity;
    let a = cfg.sensitivity.amplitude;
    let eta = sensitivity_ac(p)?;
    let grad = sensitivity_gradient(eta, a)?;
    let mut table = String::from("set\teta_e\teta_e_error\teta_gradient\tsnr_at_0.1\n");
    let _ = writeln!(table, "closed-form\t{eta}\t0\t{grad}\t{}", snr(p, 0.1, 1.0)?);
    let mut summary = format!(
        "eta_E = {:.3} mV/um/sqrt(Hz), eta_gradient = {:.4} V/um^2/sqrt(Hz) (A = {} um)\n",
        eta * 1e3,
        grad,
        a
    );
    if cfg.sensitivity.trials > 0 {
        let rm = nvelectro::pulse::ReadoutModel {
            shot_noise: true,
            ..r.sensor.readout
        };
        let mc = monte_carlo_sensitivity(p, &rm, cfg.sensitivity.trials)?;
        let mc_grad = sensitivity_gradient(mc.eta, a)?;
        let _ = writeln!(table, "monte-carlo\t{}\t{}\t{mc_grad}\t{}", mc.eta, mc.error, 0.1 / mc.eta);
        let _ = writeln!(
            summary,
            "Monte Carlo ({} trials): {:.3} +- {:.3} mV/um/sqrt(Hz)",
            mc.trials,
            mc.eta * 1e3,
            mc.error * 1e3
        );
    }
    let mut side = String::from("format=tsv\ntable=sensitivity.tsv\n");
    side.push_str(&provenance("sensitivity", cfg));
    let mut files = Vec::new();
    write(out.join("sensitivity.tsv"), &table, &mut files)?;
    write(out.join("sensitivity.txt"), &side, &mut files)?;
    Ok(Outcome { files, summary })
}

fn solve(cfg: &ExperimentConfig, r: &Resolved) -> Result<Grid2D, CliError> {
    let geom = r.layout.geometry()?;
    let opts = SolverOptions {
        max_iterations: cfg.solver.max_iterations,
        ..SolverOptions::default()
    };
    Ok(solve_laplace_with(&geom, cfg.solver.spacing, cfg.solver.tolerance, &opts)?)
}

pub fn solve_field(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let g = solve(cfg, r)?;
    let h = cfg.height(r)?;
    let profile = field_at_height(&g, h)?;
    let zeta = project_zeta(&profile, &r.axis);

    let mut files = Vec::new();
    let bin = out.join("field.bin");
    let mut bytes = Vec::with_capacity(g.potential.len() * 8);
    for v in &g.potential {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(|e| CliError::io(&bin, e))?;
    files.push(bin);
    let side = grid_sidecar(&g) + &provenance("solve-field", cfg);
    write(out.join("field.txt"), &side, &mut files)?;
    let prof = out.join("profile.tsv");
    write_profile(&profile, Some(&zeta), &prof)?;
    files.push(prof);
    let peak = zeta.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let summary = format!(
        "{} x {} nodes, {} iterations, residual {:.3e}; max |E_zeta| at h = {} um: {:.5} V/um\n",
        g.nx + 1,
        g.nz + 1,
        g.iterations,
        g.residual,
        h,
        peak
    );
    Ok(Outcome { files, summary })
}

fn field_context(cfg: &ExperimentConfig, r: &Resolved) -> Result<FieldContext, CliError> {
    let g = solve(cfg, r)?;
    let h = cfg.height(r)?;
    Ok(FieldContext::from_grid(&g, r.layout.bias, h, r.axis)?)
}

fn plan(cfg: &ExperimentConfig, r: &Resolved, signal_mhz: f64) -> ScanPlan {
    let (sequence, tau) = if cfg.sequence.match_signal {
        SequenceKind::xy4_for_frequency(signal_mhz, cfg.sequence.tau)
    } else {
        (r.sequence, cfg.sequence.tau)
    };
    ScanPlan {
        x: r.x_axis,
        y: r.y_axis,
        sequence,
        tau,
        n_avg: cfg.scan.n_avg,
        seed: cfg.run.seed,
    }
}

fn scan_summary(r: &nvelectro::scan::ScanResult) -> String {
    let peak = r.phase.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut s = format!(
        "{} x {} pixels, max |phi| {:.4} rad, {} flagged\n",
        r.nx(),
        r.ny(),
        peak,
        r.flagged.iter().filter(|&&b| b).count()
    );
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn ac_scan(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let field = field_context(cfg, r)?;
    let drive = AcDrive {
        amplitude: cfg.drive.ac_amplitude,
        frequency: cfg.drive.ac_frequency,
    };
    let p = plan(cfg, r, drive.frequency);
    build_sequence(p.sequence, p.tau, 0.0)?;
    let result = run_ac_scan(&p, &field, &drive, &r.sensor)?;
    let q: MapQuantity = cfg.scan.quantity.parse()?;
    let files = write_scan(&result, q, out, "ac_scan", &config_tail("ac-scan", cfg))?;
    Ok(Outcome {
        files,
        summary: scan_summary(&result),
    })
}

pub fn dc_scan(cfg: &ExperimentConfig, r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let field = field_context(cfg, r)?;
    let drive = DcDrive {
        voltage: cfg.drive.dc_voltage,
    };
    let p = plan(cfg, r, r.motion.frequency);
    let result = run_dc_scan(&p, &field, &drive, &r.motion, &r.sensor)?;
    let q: MapQuantity = cfg.scan.quantity.parse()?;
    let files = write_scan(&result, q, out, "dc_scan", &config_tail("dc-scan", cfg))?;
    Ok(Outcome {
        files,
        summary: scan_summary(&result),
    })
}
