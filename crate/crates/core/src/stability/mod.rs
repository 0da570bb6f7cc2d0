//! Stability assessment of assembled admittances.

pub mod eigs;
pub mod grid;
pub mod linalg;
pub mod nyquist;
pub mod step;
pub mod sweep;
pub mod trace;

pub use eigs::{damping_ratio, freq_hz, EigenReport, Verdict, TOL_RHP};
pub use grid::FrequencyGrid;
pub use nyquist::{nyquist_loci, NyquistOptions, NyquistResult};
pub use step::{closed_loop_step, zero_crossing_frequency, StepFrame};
pub use sweep::{rma_from_matrices, rma_sweep, sigma_sweep, Peak, RmaSweep, SigmaSweep};
pub use trace::{mode_trace, ModeTrace, PAIRING_RADIUS};
