//! Reference frames.
//!
//! A dq frame is described by the angle of its d-axis relative to the system
//! frame; q leads d by 90 degrees. Vectors map system -> local through
//! `T(angle)`, so a local admittance becomes `T^T Y T` in the system frame.
//! Static-frame (complex scalar) transfer functions are lifted to real 2x2
//! matrices, either in the stationary alpha-beta frame or in a dq frame
//! rotating at `omega0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::AdmittanceBlock;
use crate::rational::RationalFunction;
use crate::statespace::ComplexStateSpace;
use crate::tfmatrix::TFMatrix;

/// Default nominal angular frequency in rad/s.
pub const OMEGA0: f64 = 377.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    /// The common dq frame every block must be expressed in before assembly.
    System,
    /// A component's own dq frame, offset by `angle`.
    Local,
    /// Complex scalar in the stationary frame.
    Static,
    /// Real 2x2 stationary-frame lift.
    AlphaBeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameTag {
    /// Angle of the d-axis relative to the system frame, radians.
    pub angle: f64,
    pub kind: FrameKind,
}

impl FrameTag {
    pub fn system() -> Self {
        Self {
            angle: 0.0,
            kind: FrameKind::System,
        }
    }

    pub fn local(angle: f64) -> Self {
        Self {
            angle,
            kind: FrameKind::Local,
        }
    }

    pub fn static_frame() -> Self {
        Self {
            angle: 0.0,
            kind: FrameKind::Static,
        }
    }

    pub fn is_dq(&self) -> bool {
        matches!(self.kind, FrameKind::System | FrameKind::Local)
    }
}

/// `T = [[cos, sin], [-sin, cos]]`.
pub fn rotation(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

/// Re-expresses a dq block in another dq frame.
pub fn rotate_admittance(y: &AdmittanceBlock, to: FrameTag) -> Result<AdmittanceBlock> {
    if !y.frame.is_dq() || !to.is_dq() {
        return Err(Error::FrameMismatch(format!(
            "block at bus {} is in a {:?} frame; only dq blocks rotate",
            y.bus, y.frame.kind
        )));
    }
    if y.y.rows() != 2 || y.y.cols() != 2 {
        return Err(Error::Dimension(format!(
            "rotation needs a 2x2 block, bus {} has {}x{}",
            y.bus,
            y.y.rows(),
            y.y.cols()
        )));
    }
    let mut out = y.clone();
    let t = rotation(to.angle - y.frame.angle);
    out.y = y.y.congruence(&t, &t.transpose())?;
    out.frame = to;
    Ok(out)
}

/// Coefficient-wise real and imaginary parts of `F(s)` as rational functions
/// over the real denominator `D(s) conj(D)(s)`.
fn re_im(f: &RationalFunction) -> Result<(RationalFunction, RationalFunction)> {
    if f.den().is_real() {
        let den = f.den().re_part();
        return Ok((
            RationalFunction::new(f.num().re_part(), den.clone())?,
            RationalFunction::new(f.num().im_part(), den)?,
        ));
    }
    let dbar = f.den().conj();
    let num = f.num() * &dbar;
    let den = (f.den() * &dbar).re_part();
    Ok((
        RationalFunction::new(num.re_part(), den.clone())?,
        RationalFunction::new(num.im_part(), den)?,
    ))
}

/// `[[Re F, -Im F], [Im F, Re F]]`.
pub fn static_to_alphabeta(f: &RationalFunction) -> Result<TFMatrix> {
    let (re, im) = re_im(f)?;
    TFMatrix::from_entries(2, 2, vec![re.clone(), im.neg(), im, re])
}

/// Substitutes `s -> s + j omega0` and then lifts like [`static_to_alphabeta`].
pub fn static_to_dq(f: &RationalFunction, omega0: f64) -> Result<TFMatrix> {
    static_to_alphabeta(&f.shift(Complex64::new(0.0, omega0))?)
}

/// State-space counterpart of [`static_to_dq`] (or of
/// [`static_to_alphabeta`] when `omega0` is zero).
pub fn lift_state_space(ss: &ComplexStateSpace, omega0: f64) -> ComplexStateSpace {
    let n = ss.a.nrows();
    let mut shifted = ss.clone();
    shifted.a -= DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, omega0);
    shifted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(0.0), DMatrix::identity(2, 2));
        let t = rotation(std::f64::consts::FRAC_PI_2);
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((t.clone() - expect).norm() < 1e-15);
        let t = rotation(50.5f64.to_radians());
        assert!((t.transpose() * &t - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
        assert_eq!(t[(0, 0)], 50.5f64.to_radians().cos());
    }

    #[test]
    fn j_lifts_to_quarter_turn() {
        let f = RationalFunction::constant(c(0.0, 1.0));
        let m = static_to_alphabeta(&f).unwrap().eval(c(1.0, 1.0)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]).map(|x| c(x, 0.0));
        assert!((m - expect).norm() < 1e-15);
    }

    #[test]
    fn integrator_in_dq() {
        let w0 = OMEGA0;
        let f = RationalFunction::from_real(&[1.0], &[0.0, 1.0]).unwrap();
        let m = static_to_dq(&f, w0).unwrap();
        let s = c(0.7, 3.0);
        let d = s * s + w0 * w0;
        let v = m.eval(s).unwrap();
        assert!((v[(0, 0)] - s / d).norm() < 1e-15);
        assert!((v[(0, 1)] - w0 / d).norm() < 1e-15);
        assert!((v[(1, 0)] + w0 / d).norm() < 1e-15);
    }

    #[test]
    fn complex_den_lift_matches_pointwise() {
        let f = RationalFunction::new(
            Polynomial::new(vec![c(1.0, 0.5), c(0.2, 0.0)]),
            Polynomial::new(vec![c(3.0, -2.0), c(0.4, 1.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let m = static_to_alphabeta(&f).unwrap();
        // For real s the lift of a scalar equals its real 2x2 representation.
        let s = c(0.9, 0.0);
        let v = f.eval(s).unwrap();
        let got = m.eval(s).unwrap();
        assert!((got[(0, 0)] - v.re).norm() < 1e-13);
        assert!((got[(1, 0)] - v.im).norm() < 1e-13);
    }
}
