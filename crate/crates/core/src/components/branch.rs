//! Passive branch models.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::FrameTag;
use crate::network::{AdmittanceBlock, SignConvention};
use crate::poly::Polynomial;
use crate::rational::RationalFunction;
use crate::tfmatrix::TFMatrix;

/// `Z_dq = [[R + sL, -w0 L], [w0 L, R + sL]]`.
pub fn rl_impedance(r: f64, l: f64, omega0: f64) -> Result<TFMatrix> {
    check_rl(r, l)?;
    let diag = RationalFunction::from_poly(Polynomial::from_real(&[r, l]));
    let x = RationalFunction::real_constant(omega0 * l);
    TFMatrix::from_entries(2, 2, vec![diag.clone(), x.neg(), x, diag])
}

/// Inverse of [`rl_impedance`] as a block at `bus`.
pub fn rl_branch_admittance(r: f64, l: f64, omega0: f64, bus: usize) -> Result<AdmittanceBlock> {
    check_rl(r, l)?;
    // (R + sL)^2 + (w0 L)^2
    let den = Polynomial::from_real(&[r * r + (omega0 * l).powi(2), 2.0 * r * l, l * l]);
    let diag = RationalFunction::new(Polynomial::from_real(&[r, l]), den.clone())?;
    let x = RationalFunction::new(Polynomial::from_real(&[omega0 * l]), den)?;
    Ok(AdmittanceBlock {
        y: TFMatrix::from_entries(2, 2, vec![diag.clone(), x.clone(), x.neg(), diag])?,
        bus,
        frame: FrameTag::system(),
        convention: SignConvention::InjectionPositive,
        calibration: None,
    })
}

fn check_rl(r: f64, l: f64) -> Result<()> {
    if r < 0.0 || l < 0.0 {
        return Err(Error::InvalidParameter(format!("negative R or L ({r}, {l})")));
    }
    if r == 0.0 && l == 0.0 {
        return Err(Error::InvalidParameter(
            "R = 0 and L = 0: a short circuit has no admittance".into(),
        ));
    }
    Ok(())
}

/// Static-frame admittance `1 / (R + sL + 1/(sC))` of a series branch with
/// reactance `x` at `omega0` and series compensation `comp * x`.
pub fn series_branch_static(r: f64, x: f64, comp: f64, omega0: f64) -> Result<RationalFunction> {
    check_rl(r, x)?;
    let l = x / omega0;
    if comp == 0.0 {
        return RationalFunction::from_real(&[1.0], &[r, l]);
    }
    if !(comp > 0.0) {
        return Err(Error::InvalidParameter(format!("series compensation {comp} < 0")));
    }
    let c = 1.0 / (omega0 * comp * x);
    RationalFunction::from_real(&[0.0, c], &[1.0, r * c, l * c])
}

/// Static-frame admittance `sC` of a shunt susceptance `b` (pu at `omega0`).
pub fn shunt_capacitor_static(b: f64, omega0: f64) -> RationalFunction {
    RationalFunction::from_poly(Polynomial::new(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(b / omega0, 0.0),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn dc_limit_is_phasor_inverse() {
        let (r, x, w0) = (0.02, 0.3, 377.0);
        let y = rl_branch_admittance(r, x / w0, w0, 0).unwrap();
        let v = y.y.eval(Complex64::new(0.0, 0.0)).unwrap();
        let z = DMatrix::from_row_slice(2, 2, &[r, -x, x, r]).try_inverse().unwrap();
        assert!((v.map(|c| c.re) - z).norm() < 1e-12);
    }

    #[test]
    fn zero_speed_decouples() {
        let y = rl_branch_admittance(0.1, 0.01, 0.0, 0).unwrap();
        let s = Complex64::new(0.5, 2.0);
        let v = y.y.eval(s).unwrap();
        assert!((v[(0, 0)] - 1.0 / (0.1 + 0.01 * s)).norm() < 1e-12);
        assert!(v[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn short_circuit_rejected() {
        assert!(rl_branch_admittance(0.0, 0.0, 377.0, 0).is_err());
    }

    #[test]
    fn matches_static_lift() {
        let (r, x, w0) = (0.05, 0.4, 377.0);
        let f = series_branch_static(r, x, 0.0, w0).unwrap();
        let lifted = crate::frames::static_to_dq(&f, w0).unwrap();
        let direct = rl_branch_admittance(r, x / w0, w0, 0).unwrap();
        let s = Complex64::new(-0.3, 40.0);
        assert!((lifted.eval(s).unwrap() - direct.y.eval(s).unwrap()).norm() < 1e-12);
    }
}
