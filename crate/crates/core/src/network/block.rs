use std::fmt;

use crate::frames::FrameTag;
use crate::tfmatrix::TFMatrix;

/// How the minus sign between a device model and its admittance was handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    /// `Y = -(C (sI-A)^-1 B + D)` for a model whose outputs are injected
    /// currents; the block sums directly with the passive network.
    InjectionPositive,
    /// The raw voltage-to-injected-current transfer, not yet negated.
    Raw,
}

/// Terminal condition a block was derived at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub p: f64,
    pub q: f64,
    pub v: f64,
    /// Voltage angle in the system frame, rad.
    pub theta: f64,
}

impl Calibration {
    /// Largest of the four absolute deviations.
    pub fn deviation(&self, other: &Calibration) -> f64 {
        let dtheta = (self.theta - other.theta + std::f64::consts::PI)
            .rem_euclid(2.0 * std::f64::consts::PI)
            - std::f64::consts::PI;
        [
            (self.p - other.p).abs(),
            (self.q - other.q).abs(),
            (self.v - other.v).abs(),
            dtheta.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.6}, Q={:.6}, V={:.6}, theta={:.4} deg",
            self.p,
            self.q,
            self.v,
            self.theta.to_degrees()
        )
    }
}

/// A source or passive-element admittance attached to one bus.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmittanceBlock {
    /// 2x2 in a dq frame, 1x1 in the static frame.
    pub y: TFMatrix,
    pub bus: usize,
    pub frame: FrameTag,
    pub convention: SignConvention,
    pub calibration: Option<Calibration>,
}

impl AdmittanceBlock {
    pub fn dim(&self) -> usize {
        self.y.rows()
    }

    /// Relabels the frame without transforming the matrix. Used only to
    /// reproduce the error of assembling blocks from mixed frames.
    pub fn relabel_as_system(&self) -> Self {
        let mut b = self.clone();
        b.frame = FrameTag::system();
        b
    }
}
