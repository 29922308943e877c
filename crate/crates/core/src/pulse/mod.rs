//! Pulse sequences, phase accumulation against field waveforms, coherence
//! envelopes and fluorescence readout.

mod coherence;
mod phase;
mod readout;
mod sequence;
mod train;
mod waveform;

pub use coherence::{apply_coherence, CoherenceModel};
pub use phase::{
    accumulated_phase, accumulated_phase_at, accumulated_phase_quadrature, adaptive_gk15, trace,
    QUADRATURE_TOL,
};
pub use readout::{
    extract_phase, normalized_quadratures, phase_quadratures, population, simulate_four_block,
    simulate_readout, FourBlock, ReadoutModel, ReadoutSample, FOUR_BLOCK_PHASES,
};
pub use sequence::{
    build_sequence, build_sequence_with, Element, PulseSequence, SequenceKind, SequenceTiming,
};
pub use train::{ramsey_sinusoid_amplitude, ramsey_train, ramsey_train_midpoint, TrainSample};
pub use waveform::Waveform;
