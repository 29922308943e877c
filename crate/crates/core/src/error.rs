use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigen decomposition did not meet residual bound ({residual:.3e})")]
    EigenResidual { residual: f64 },

    #[error("waveform undefined at t = {t} us (defined on [{start}, {end}])")]
    WaveformDomain { t: f64, start: f64, end: f64 },

    #[error("dead readout: zero fluorescence in a quadrature pair")]
    DeadReadout,

    #[error("rank-deficient sine-fit design matrix")]
    RankDeficient,

    #[error("solver did not converge after {iterations} iterations (last residual {last:.3e})")]
    NotConverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("height {h} um is outside the usable domain [{min}, {max}]")]
    HeightOutOfDomain { h: f64, min: f64, max: f64 },

    #[error("probe geometry: {0}")]
    ProbeGeometry(String),

    #[error("signal frequency {signal_mhz} MHz does not match the sequence ({matched_mhz} MHz)")]
    UnmatchedFrequency { signal_mhz: f64, matched_mhz: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(name: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}
