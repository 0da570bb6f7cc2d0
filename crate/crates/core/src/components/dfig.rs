//! Induction-generator-effect model of a DFIG on a series-compensated line.
//!
//! The magnetizing and grid-side-converter branches are treated as open and
//! the rotor-side converter impedance is ignored, leaving stator and rotor
//! leakage paths with `r_r / slip`, `slip = 1 - j w_m / s`. Everything is in
//! the static frame, so the coefficients are complex.

use num_complex::Complex64;

use crate::components::branch::series_branch_static;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::RationalFunction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DfigParams {
    pub rs: f64,
    pub xls: f64,
    pub rr: f64,
    pub xlr: f64,
    /// Rotor speed, pu of `omega0`.
    pub wm: f64,
    /// Line resistance and reactance, pu.
    pub r_line: f64,
    pub x_line: f64,
    /// Series compensation level, `Xc = comp * x_line`.
    pub comp: f64,
    pub omega0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DfigModels {
    pub y_dfig: RationalFunction,
    pub y_line: RationalFunction,
}

impl DfigModels {
    /// `Y_DFIG + Y_line`.
    pub fn total(&self) -> Result<RationalFunction> {
        self.y_dfig.add(&self.y_line)
    }

    /// Open-loop gain `Y_DFIG Z_line`.
    pub fn open_loop(&self) -> Result<RationalFunction> {
        self.y_dfig.mul(&self.y_line.recip()?)
    }

    /// Current response to grid voltage, `1 / (Z_DFIG + Z_line)`.
    pub fn closed_loop(&self) -> Result<RationalFunction> {
        self.y_dfig.recip()?.add(&self.y_line.recip()?)?.recip()
    }
}

impl DfigParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rs", self.rs),
            ("rr", self.rr),
            ("r_line", self.r_line),
            ("xls", self.xls),
            ("xlr", self.xlr),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!("DFIG {name} = {v} must be >= 0")));
            }
        }
        if !(self.x_line > 0.0 && self.omega0 > 0.0) {
            return Err(Error::InvalidParameter("DFIG line reactance and omega0 must be > 0".into()));
        }
        if !(self.xls + self.xlr > 0.0) {
            return Err(Error::InvalidParameter("DFIG leakage reactance must be > 0".into()));
        }
        if !(self.comp > 0.0 && self.comp < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "series compensation {} outside (0, 1)",
                self.comp
            )));
        }
        Ok(())
    }
}

/// `Y_DFIG = (s - j w_m) / (L s^2 + (rs + rr - j L w_m) s - j rs w_m)` with
/// `L = (Xls + Xlr) / omega0`, and the series RLC line admittance.
pub fn dfig_static_admittance(dp: &DfigParams) -> Result<DfigModels> {
    dp.validate()?;
    let y_dfig = dfig_machine_admittance(dp.rs, dp.xls, dp.rr, dp.xlr, dp.wm, dp.omega0)?;
    let y_line = series_branch_static(dp.r_line, dp.x_line, dp.comp, dp.omega0)?;
    Ok(DfigModels { y_dfig, y_line })
}

/// Machine part of [`dfig_static_admittance`] alone.
pub fn dfig_machine_admittance(
    rs: f64,
    xls: f64,
    rr: f64,
    xlr: f64,
    wm: f64,
    omega0: f64,
) -> Result<RationalFunction> {
    let dp = DfigParams {
        rs,
        xls,
        rr,
        xlr,
        wm,
        r_line: 0.0,
        x_line: 1.0,
        comp: 0.5,
        omega0,
    };
    dp.validate()?;
    let wm = dp.wm * dp.omega0;
    let l = (dp.xls + dp.xlr) / dp.omega0;
    let j = Complex64::new(0.0, 1.0);
    let num = Polynomial::new(vec![-j * wm, Complex64::new(1.0, 0.0)]);
    let den = Polynomial::new(vec![
        -j * dp.rs * wm,
        Complex64::new(dp.rs + dp.rr, -l * wm),
        Complex64::new(l, 0.0),
    ]);
    RationalFunction::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::CANCEL_TOL;

    fn params(comp: f64) -> DfigParams {
        DfigParams {
            rs: 0.00488,
            xls: 0.09231,
            rr: 0.00549,
            xlr: 0.09955,
            wm: 0.75,
            r_line: 0.03,
            x_line: 0.64,
            comp,
            omega0: 377.0,
        }
    }

    #[test]
    fn blocked_rotor_limit() {
        let mut p = params(0.5);
        p.wm = 0.0;
        let m = dfig_static_admittance(&p).unwrap();
        let (y, _) = m.y_dfig.simplify(CANCEL_TOL).unwrap();
        let l = (p.xls + p.xlr) / p.omega0;
        let s = Complex64::new(0.4, 60.0);
        let expect = 1.0 / (p.rr + p.rs + l * s);
        assert!((y.eval(s).unwrap() - expect).norm() < 1e-12 * expect.norm());
        assert_eq!(y.den().degree(), Some(1));
    }

    #[test]
    fn compensation_range_enforced() {
        assert!(dfig_static_admittance(&params(0.0)).is_err());
        assert!(dfig_static_admittance(&params(1.0)).is_err());
    }

    #[test]
    fn slip_form_matches_circuit() {
        let p = params(0.6);
        let m = dfig_static_admittance(&p).unwrap();
        let s = Complex64::new(-1.0, 200.0);
        let wm = p.wm * p.omega0;
        let slip = 1.0 - Complex64::new(0.0, wm) / s;
        let l = (p.xls + p.xlr) / p.omega0;
        let z = p.rr / slip + p.rs + l * s;
        assert!((m.y_dfig.eval(s).unwrap() - 1.0 / z).norm() < 1e-12);
    }
}
