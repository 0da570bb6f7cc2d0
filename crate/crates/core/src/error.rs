use num_complex::Complex64;
use thiserror::Error;

use crate::poly::DEGREE_CAP;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("constant polynomial has no roots")]
    ConstantPolynomial,

    #[error("polynomial degree {0} exceeds the cap of {DEGREE_CAP}")]
    DegreeCap(usize),

    #[error("denominator is identically zero")]
    ZeroDenominator,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pole hit evaluating entry ({row},{col}) at s = {s}")]
    PoleHit { row: usize, col: usize, s: Complex64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("not an equilibrium: residual norm {0:e}")]
    NotEquilibrium(f64),

    #[error("equilibrium solve failed after {iterations} iterations: residual norm {residual:e}")]
    EquilibriumFailed { residual: f64, iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operating point mismatch: {0}")]
    OperatingPoint(String),

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("power flow diverged after {iterations} iterations (mismatch {mismatch:e})")]
    PowerFlowDiverged { iterations: usize, mismatch: f64 },

    #[error(
        "order {order} exceeds numerical rank (sigma_n/sigma_1 = {ratio:e}); try a lower order"
    )]
    RankDeficient { order: usize, ratio: f64 },

    #[error("imaginary-axis pole at s = {0} requires contour indentation")]
    AxisPole(Complex64),

    #[error("improper transfer function: {0}")]
    Improper(String),

    #[error("event records: {0}")]
    Events(String),

    #[error("case: {0}")]
    Case(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
