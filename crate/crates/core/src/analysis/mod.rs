//! Demodulation fits, lock-in frequency sweeps and shot-noise sensitivity.

mod fit;
mod lockin;
mod montecarlo;
mod sensitivity;

pub use fit::{fit_cycles, sine_fit, SineFit};
pub use lockin::{lockin_point, lockin_sweep, ramsey_trace, LockinMethod, LockinPoint, LockinSettings};
pub use montecarlo::{monte_carlo_sensitivity, MonteCarloEstimate};
pub use sensitivity::{sensitivity_ac, sensitivity_gradient, snr, SensitivityParams};
