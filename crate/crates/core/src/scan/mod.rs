//! Scanning measurements: probe geometry, tip motion and the per-pixel
//! field -> screening -> spin -> readout pipeline.

mod engine;
mod motion;
mod output;
mod probe;

pub use engine::{
    phase_gain, run_ac_scan, run_dc_scan, unwrap_phase, AcDrive, DcDrive, FieldContext, ScanAxis,
    ScanKind, ScanPlan, ScanResult, Sensor, ENGINE_VERSION,
};
pub use motion::{
    check_upconversion, fourier_first_harmonic, motion_upconverted_amplitude, MotionMode,
    TipMotion, UpconversionCheck, VALIDITY_THRESHOLD,
};
pub use output::{render_map, scan_sidecar, scan_table, write_scan, Map2D, MapQuantity};
pub use probe::{nv_sample_distance, ProbeConfig};
