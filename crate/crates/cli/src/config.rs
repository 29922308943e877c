//! Sectioned `key = value` experiment configuration.
//!
//! The format is TOML. Every section and key is optional; missing values take
//! the defaults below. Unknown sections or keys are rejected.

use std::fmt;
use std::path::Path;

use nvelectro::analysis::{LockinSettings, SensitivityParams};
use nvelectro::field::{DeviceLayout, ProjectionAxis, SolverOptions};
use nvelectro::pulse::{CoherenceModel, ReadoutModel, SequenceKind};
use nvelectro::scan::{AcDrive, DcDrive, MotionMode, ProbeConfig, ScanAxis, Sensor, TipMotion};
use nvelectro::screening::ScreeningModel;
use nvelectro::spin::{FieldEnvironment, Isotope, NvSpecies, SpinModel};
use serde::{Deserialize, Serialize};

/// Line that separates a sidecar's own keys from the embedded config.
pub const CONFIG_MARKER: &str = "# ---- resolved config ----";

#[derive(Debug)]
pub struct ConfigError {
    /// Dotted `section.key` path of the offending entry, when known.
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn key(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: Some(key.into()),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "config key `{k}`: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub species: SpeciesSection,
    pub environment: EnvironmentSection,
    pub odmr: OdmrSection,
    pub sequence: SequenceSection,
    pub ramsey: RamseySection,
    pub lockin: LockinSection,
    pub screening: ScreeningSection,
    pub readout: ReadoutSection,
    pub coherence: CoherenceSection,
    pub geometry: GeometrySection,
    pub solver: SolverSection,
    pub probe: ProbeSection,
    pub motion: MotionSection,
    pub drive: DriveSection,
    pub scan: ScanSection,
    pub sensitivity: SensitivitySection,
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunSection {
    pub seed: u64,
}


/// Isotope plus optional overrides of its tabulated constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesSection {
    pub isotope: String,
    /// "with-nucleus" or "electron-only".
    pub model: String,
    pub zero_field_splitting: Option<f64>,
    pub gamma_e: Option<f64>,
    pub gamma_n: Option<f64>,
    pub a_par: Option<f64>,
    pub a_perp: Option<f64>,
    pub quadrupole: Option<f64>,
    pub d_perp: Option<f64>,
    pub d_par: Option<f64>,
}

impl Default for SpeciesSection {
    fn default() -> Self {
        SpeciesSection {
            isotope: "N15".into(),
            model: "with-nucleus".into(),
            zero_field_splitting: None,
            gamma_e: None,
            gamma_n: None,
            a_par: None,
            a_perp: None,
            quadrupole: None,
            d_perp: None,
            d_par: None,
        }
    }
}

/// Static fields in the NV frame: B in G, E in V/um.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub b: [f64; 3],
    pub e: [f64; 3],
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        EnvironmentSection {
            b: [73.0, 0.0, 0.0],
            e: [0.0; 3],
        }
    }
}

/// Frequencies in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdmrSection {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub line_width: f64,
    pub mw_direction: [f64; 3],
    /// Dips shallower than this fraction of the strongest are not listed.
    pub min_dip: f64,
}

impl Default for OdmrSection {
    fn default() -> Self {
        OdmrSection {
            start: 2850.0,
            stop: 2910.0,
            step: 0.05,
            line_width: 1.5,
            mw_direction: [1.0, 1.0, 0.0],
            min_dip: 0.1,
        }
    }
}

/// Sensing sequence of the scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    /// "ramsey", "spin-echo", "cpmg:N", "xy4:R" or "xy8:R".
    pub kind: String,
    pub tau: f64,
    /// Replace `kind` by the XY4 sequence matched to the scan's signal
    /// frequency, with total time nearest `tau`.
    pub match_signal: bool,
}

impl Default for SequenceSection {
    fn default() -> Self {
        SequenceSection {
            kind: "xy4:1".into(),
            tau: 8.0,
            match_signal: true,
        }
    }
}

/// Ramsey train against a sinusoidal test signal (times in us).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseySection {
    pub frequency_khz: f64,
    /// Drive amplitude in air (V/um).
    pub amplitude: f64,
    pub tau: f64,
    pub offset: f64,
    pub spacing: f64,
    pub count: usize,
    pub n_avg: u64,
}

impl Default for RamseySection {
    fn default() -> Self {
        RamseySection {
            frequency_khz: 12.0,
            amplitude: 5.0,
            tau: 0.8,
            offset: 4.0,
            spacing: 4.0,
            count: 60,
            n_avg: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockinSection {
    pub frequencies_khz: Vec<f64>,
    pub crossover_khz: f64,
    pub dd_tau: f64,
    pub dd_phase_steps: usize,
    pub dd_amplitude: f64,
    pub n_avg: u64,
}

impl Default for LockinSection {
    fn default() -> Self {
        let s = LockinSettings::default();
        LockinSection {
            frequencies_khz: vec![4.0, 12.0, 30.0, 200.0, 800.0, 1200.0],
            crossover_khz: s.crossover_khz,
            dd_tau: s.dd_tau,
            dd_phase_steps: s.dd_phase_steps,
            dd_amplitude: s.dd_amplitude,
            n_avg: s.n_avg,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningSection {
    pub f_c: f64,
    pub dielectric_factor: f64,
}

impl Default for ScreeningSection {
    fn default() -> Self {
        let m = ScreeningModel::default();
        ScreeningSection {
            f_c: m.f_c,
            dielectric_factor: m.dielectric_factor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub f0: f64,
    pub contrast: f64,
    pub t_r: f64,
    pub t_ini: f64,
    pub shot_noise: bool,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        let m = ReadoutModel::default();
        ReadoutSection {
            f0: m.f0,
            contrast: m.contrast,
            t_r: m.t_r,
            t_ini: m.t_ini,
            shot_noise: m.shot_noise,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSection {
    pub t2_star: f64,
    pub t2_base: f64,
    pub stretch_p: f64,
    pub pulse_scaling_s: f64,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        let m = CoherenceModel::default();
        CoherenceSection {
            t2_star: m.t2_star,
            t2_base: m.t2_base,
            stretch_p: m.stretch_p,
            pulse_scaling_s: m.pulse_scaling_s,
        }
    }
}

/// Three-electrode device cross-section (um, V).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub center_width: f64,
    pub outer_width: f64,
    pub gap: f64,
    pub thickness: f64,
    pub bias: f64,
    pub substrate_permittivity: f64,
    pub padding: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let d = DeviceLayout::default();
        GeometrySection {
            center_width: d.center_width,
            outer_width: d.outer_width,
            gap: d.gap,
            thickness: d.thickness,
            bias: d.bias,
            substrate_permittivity: d.substrate_permittivity,
            padding: d.padding,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Grid spacing (um).
    pub spacing: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// NV height above the electrode tops (um); ignored when
    /// `height_from_probe` is set.
    pub height: f64,
    pub height_from_probe: bool,
    /// Coupling axis azimuth and zenith (degrees).
    pub axis_phi_deg: f64,
    pub axis_theta_deg: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            spacing: 0.025,
            tolerance: 1e-9,
            max_iterations: SolverOptions::default().max_iterations,
            height: 0.09,
            height_from_probe: false,
            axis_phi_deg: 20.0,
            axis_theta_deg: 45.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub pillar_spacing: f64,
    pub pillar_diameters: Vec<f64>,
    pub nv_depth: f64,
    pub tilt_deg: f64,
    pub contact_pillar: usize,
    pub sensing_pillar: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let p = ProbeConfig::default();
        ProbeSection {
            pillar_spacing: p.pillar_spacing,
            pillar_diameters: p.pillar_diameters,
            nv_depth: p.nv_depth,
            tilt_deg: p.tilt_angle.to_degrees(),
            contact_pillar: p.contact_pillar,
            sensing_pillar: p.sensing_pillar,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSection {
    /// "clang" or "fundamental".
    pub mode: String,
    /// MHz.
    pub frequency: f64,
    /// um.
    pub amplitude: f64,
    pub direction_deg: f64,
    pub beta: f64,
}

impl Default for MotionSection {
    fn default() -> Self {
        let m = TipMotion::clang();
        MotionSection {
            mode: "clang".into(),
            frequency: m.frequency,
            amplitude: m.amplitude,
            direction_deg: 30.0,
            beta: m.beta,
        }
    }
}

/// Electrode drive: AC peak voltage and frequency (MHz), DC bias (V).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub ac_amplitude: f64,
    pub ac_frequency: f64,
    pub dc_voltage: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        let (ac, dc) = (AcDrive::default(), DcDrive::default());
        DriveSection {
            ac_amplitude: ac.amplitude,
            ac_frequency: ac.frequency,
            dc_voltage: dc.voltage,
        }
    }
}

/// Scan grid (um). A raster needs all three y keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub x_start: f64,
    pub x_stop: f64,
    pub x_step: f64,
    pub y_start: Option<f64>,
    pub y_stop: Option<f64>,
    pub y_step: Option<f64>,
    pub n_avg: u64,
    /// Map written to the binary file: phase, field, truth, discrepancy or flag.
    pub quantity: String,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            x_start: -3.0,
            x_stop: 3.0,
            x_step: 0.025,
            y_start: None,
            y_stop: None,
            y_step: None,
            n_avg: 100_000,
            quantity: "field".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivitySection {
    pub f: f64,
    pub c: f64,
    pub t_r: f64,
    pub t_ini: f64,
    pub tau: f64,
    pub d_perp: f64,
    /// Tip oscillation amplitude for the gradient sensitivity (um).
    pub amplitude: f64,
    /// Monte Carlo trials; 0 skips the simulation.
    pub trials: usize,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        let p = SensitivityParams::default();
        SensitivitySection {
            f: p.f,
            c: p.c,
            t_r: p.t_r,
            t_ini: p.t_ini,
            tau: p.tau,
            d_perp: p.d_perp,
            amplitude: 0.013,
            trials: 10_000,
        }
    }
}

/// Fully typed view of a resolved config.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub species: NvSpecies,
    pub model: SpinModel,
    pub environment: FieldEnvironment,
    pub sequence: SequenceKind,
    pub sensor: Sensor,
    pub layout: DeviceLayout,
    pub axis: ProjectionAxis,
    pub probe: ProbeConfig,
    pub motion: TipMotion,
    pub lockin: LockinSettings,
    pub sensitivity: SensitivityParams,
    pub x_axis: ScanAxis,
    pub y_axis: Option<ScanAxis>,
}

fn check(key: &str, r: nvelectro::Result<()>) -> Result<(), ConfigError> {
    r.map_err(|e| match e {
        nvelectro::Error::InvalidParameter { name, reason } => {
            let section = key.split('.').next().unwrap_or(key);
            ConfigError::key(format!("{section}.{name}"), reason)
        }
        other => ConfigError::key(key, other.to_string()),
    })
}

impl ExperimentConfig {
    /// Parses config text. A sidecar is accepted too: only the part after
    /// [`CONFIG_MARKER`] is read.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let body = match text.find(CONFIG_MARKER) {
            Some(i) => &text[i + CONFIG_MARKER.len()..],
            None => text,
        };
        let mut cfg: ExperimentConfig = toml::from_str(body).map_err(|e| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"));
            ConfigError {
                key,
                message: e.to_string().trim_end().to_string(),
            }
        })?;
        cfg.fill_species()?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Replaces unset species constants with the isotope's tabulated values.
    fn fill_species(&mut self) -> Result<(), ConfigError> {
        let base = NvSpecies::for_isotope(parse_isotope(&self.species.isotope)?);
        let s = &mut self.species;
        s.zero_field_splitting.get_or_insert(base.zero_field_splitting);
        s.gamma_e.get_or_insert(base.gamma_e);
        s.gamma_n.get_or_insert(base.gamma_n);
        s.a_par.get_or_insert(base.a_par);
        s.a_perp.get_or_insert(base.a_perp);
        s.quadrupole.get_or_insert(base.quadrupole);
        s.d_perp.get_or_insert(base.d_perp);
        s.d_par.get_or_insert(base.d_par);
        Ok(())
    }

    /// Converts every section to engine types, validating along the way.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let sp = &self.species;
        let species = NvSpecies {
            isotope: parse_isotope(&sp.isotope)?,
            zero_field_splitting: sp.zero_field_splitting.unwrap_or(NvSpecies::D_GS),
            gamma_e: sp.gamma_e.unwrap_or(NvSpecies::GAMMA_E),
            gamma_n: sp.gamma_n.unwrap_or(0.0),
            a_par: sp.a_par.unwrap_or(0.0),
            a_perp: sp.a_perp.unwrap_or(0.0),
            quadrupole: sp.quadrupole.unwrap_or(0.0),
            d_perp: sp.d_perp.unwrap_or(NvSpecies::D_PERP),
            d_par: sp.d_par.unwrap_or(NvSpecies::D_PAR),
        };
        check("species", species.validate())?;
        let model = match sp.model.as_str() {
            "with-nucleus" => SpinModel::WithNucleus,
            "electron-only" => SpinModel::ElectronOnly,
            other => {
                return Err(ConfigError::key(
                    "species.model",
                    format!("expected with-nucleus or electron-only, got {other:?}"),
                ))
            }
        };
        let environment = FieldEnvironment::new(self.environment.b, self.environment.e);
        check("environment", environment.validate())?;

        let o = &self.odmr;
        if !(o.step > 0.0 && o.stop >= o.start) {
            return Err(ConfigError::key("odmr.step", "need step > 0 and stop >= start"));
        }
        if !(o.line_width > 0.0) {
            return Err(ConfigError::key("odmr.line_width", "must be positive"));
        }

        let sequence: SequenceKind = self
            .sequence
            .kind
            .parse()
            .map_err(|e: nvelectro::Error| ConfigError::key("sequence.kind", e.to_string()))?;
        if !(self.sequence.tau > 0.0) {
            return Err(ConfigError::key("sequence.tau", "must be positive"));
        }

        let screening = ScreeningModel {
            f_c: self.screening.f_c,
            dielectric_factor: self.screening.dielectric_factor,
        };
        check("screening", screening.validate())?;
        let r = &self.readout;
        let readout = ReadoutModel {
            f0: r.f0,
            contrast: r.contrast,
            t_r: r.t_r,
            t_ini: r.t_ini,
            shot_noise: r.shot_noise,
            seed: self.run.seed,
        };
        check("readout", readout.validate())?;
        let c = &self.coherence;
        let coherence = CoherenceModel {
            t2_star: c.t2_star,
            t2_base: c.t2_base,
            stretch_p: c.stretch_p,
            pulse_scaling_s: c.pulse_scaling_s,
        };
        check("coherence", coherence.validate())?;
        let d_perp = species.d_perp;
        if !(d_perp > 0.0) {
            return Err(ConfigError::key("species.d_perp", "must be positive"));
        }
        let sensor = Sensor {
            d_perp,
            screening,
            readout,
            coherence,
        };

        let g = &self.geometry;
        let layout = DeviceLayout {
            center_width: g.center_width,
            outer_width: g.outer_width,
            gap: g.gap,
            thickness: g.thickness,
            bias: g.bias,
            substrate_permittivity: g.substrate_permittivity,
            padding: g.padding,
        };
        check("geometry", layout.validate())?;
        let s = &self.solver;
        if !(s.spacing > 0.0) {
            return Err(ConfigError::key("solver.spacing", "must be positive"));
        }
        if !(s.tolerance >= nvelectro::field::MIN_TOLERANCE && s.tolerance < 1.0) {
            return Err(ConfigError::key(
                "solver.tolerance",
                format!("must lie in [{}, 1)", nvelectro::field::MIN_TOLERANCE),
            ));
        }
        if s.max_iterations == 0 {
            return Err(ConfigError::key("solver.max_iterations", "must be at least 1"));
        }
        if !(s.height > 0.0) {
            return Err(ConfigError::key("solver.height", "must be positive"));
        }
        let axis = ProjectionAxis {
            phi: s.axis_phi_deg.to_radians(),
            theta: s.axis_theta_deg.to_radians(),
        };

        let p = &self.probe;
        let probe = ProbeConfig {
            pillar_spacing: p.pillar_spacing,
            pillar_diameters: p.pillar_diameters.clone(),
            nv_depth: p.nv_depth,
            tilt_angle: p.tilt_deg.to_radians(),
            contact_pillar: p.contact_pillar,
            sensing_pillar: p.sensing_pillar,
        };
        if s.height_from_probe {
            nvelectro::scan::nv_sample_distance(&probe, probe.sensing_pillar)
                .map_err(|e| ConfigError::key("probe", e.to_string()))?;
        }

        let m = &self.motion;
        let mode = match m.mode.as_str() {
            "clang" => MotionMode::Clang,
            "fundamental" => MotionMode::Fundamental,
            other => {
                return Err(ConfigError::key(
                    "motion.mode",
                    format!("expected clang or fundamental, got {other:?}"),
                ))
            }
        };
        let motion = TipMotion {
            mode,
            frequency: m.frequency,
            amplitude: m.amplitude,
            direction_angle: m.direction_deg.to_radians(),
            beta: m.beta,
        };
        check("motion", motion.validate())?;

        let l = &self.lockin;
        let ra = &self.ramsey;
        let lockin = LockinSettings {
            crossover_khz: l.crossover_khz,
            ramsey_tau: ra.tau,
            ramsey_offset: ra.offset,
            ramsey_spacing: ra.spacing,
            ramsey_count: ra.count,
            ramsey_amplitude: ra.amplitude,
            dd_tau: l.dd_tau,
            dd_phase_steps: l.dd_phase_steps,
            dd_amplitude: l.dd_amplitude,
            n_avg: l.n_avg,
        };
        check("lockin", lockin.validate())?;
        if l.frequencies_khz.is_empty() || l.frequencies_khz.iter().any(|f| !(*f > 0.0)) {
            return Err(ConfigError::key("lockin.frequencies_khz", "need positive frequencies"));
        }
        if !(ra.frequency_khz > 0.0) {
            return Err(ConfigError::key("ramsey.frequency_khz", "must be positive"));
        }
        if ra.count == 0 || !(ra.tau > 0.0) || !(ra.spacing >= ra.tau) {
            return Err(ConfigError::key("ramsey.spacing", "need count >= 1 and spacing >= tau > 0"));
        }
        if ra.n_avg == 0 {
            return Err(ConfigError::key("ramsey.n_avg", "must be at least 1"));
        }

        let se = &self.sensitivity;
        let sensitivity = SensitivityParams {
            f: se.f,
            c: se.c,
            t_r: se.t_r,
            t_ini: se.t_ini,
            tau: se.tau,
            d_perp: se.d_perp,
        };
        check("sensitivity", sensitivity.validate())?;
        if !(se.amplitude > 0.0) {
            return Err(ConfigError::key("sensitivity.amplitude", "must be positive"));
        }
        if se.trials != 0 && se.trials < 100 {
            return Err(ConfigError::key("sensitivity.trials", "need 0 or at least 100"));
        }

        let sc = &self.scan;
        let x_axis = ScanAxis {
            start: sc.x_start,
            stop: sc.x_stop,
            step: sc.x_step,
        };
        x_axis
            .positions()
            .map_err(|e| ConfigError::key("scan.x_step", e.to_string()))?;
        let y_axis = match (sc.y_start, sc.y_stop, sc.y_step) {
            (None, None, None) => None,
            (Some(start), Some(stop), Some(step)) => {
                let a = ScanAxis { start, stop, step };
                a.positions()
                    .map_err(|e| ConfigError::key("scan.y_step", e.to_string()))?;
                Some(a)
            }
            _ => {
                return Err(ConfigError::key(
                    "scan.y_start",
                    "y_start, y_stop and y_step must be given together",
                ))
            }
        };
        if sc.n_avg == 0 {
            return Err(ConfigError::key("scan.n_avg", "must be at least 1"));
        }
        sc.quantity
            .parse::<nvelectro::scan::MapQuantity>()
            .map_err(|e| ConfigError::key("scan.quantity", e.to_string()))?;

        Ok(Resolved {
            species,
            model,
            environment,
            sequence,
            sensor,
            layout,
            axis,
            probe,
            motion,
            lockin,
            sensitivity,
            x_axis,
            y_axis,
        })
    }

    /// Fully expanded TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// NV height above the electrode tops (um).
    pub fn height(&self, r: &Resolved) -> Result<f64, ConfigError> {
        if self.solver.height_from_probe {
            nvelectro::scan::nv_sample_distance(&r.probe, r.probe.sensing_pillar)
                .map_err(|e| ConfigError::key("probe", e.to_string()))
        } else {
            Ok(self.solver.height)
        }
    }
}

fn parse_isotope(s: &str) -> Result<Isotope, ConfigError> {
    match s {
        "N15" | "n15" | "15N" => Ok(Isotope::N15),
        "N14" | "n14" | "14N" => Ok(Isotope::N14),
        other => Err(ConfigError::key(
            "species.isotope",
            format!("expected N14 or N15, got {other:?}"),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default_config() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.species.a_par, Some(3.65));
        assert_eq!(c.scan.n_avg, 100_000);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::parse("[scan]\nx_stepp = 0.1\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("x_stepp"));
        let e = ExperimentConfig::parse("[bogus]\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("bogus"));
    }

    #[test]
    fn invalid_value_names_section_and_key() {
        let e = ExperimentConfig::parse("[readout]\ncontrast = 1.5\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("readout.contrast"));
    }

    #[test]
    fn resolved_text_round_trips() {
        let c = ExperimentConfig::parse("[run]\nseed = 9\n[species]\nisotope = \"N14\"\n").unwrap();
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.species.quadrupole, Some(-5.01));
    }
}
