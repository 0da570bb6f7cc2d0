//! Classical synchronous generator: constant voltage behind transient reactance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::FrameTag;
use crate::network::{AdmittanceBlock, Calibration, SignConvention};
use crate::statespace::{NonlinearModel, StateSpace};

/// Allowed mismatch between the dispatched current and `(E<d - V) / jXg`.
pub const CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorParams {
    /// Inertia constant, s.
    pub h: f64,
    /// Damping, pu torque per pu speed.
    pub d1: f64,
    /// Transient reactance, pu.
    pub xg: f64,
    /// Internal voltage magnitude, pu.
    pub e: f64,
    /// Nominal angular speed, rad/s.
    pub omega0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub vx: f64,
    pub vy: f64,
    /// Rotor angle, rad, in the same frame as `vx`, `vy`.
    pub delta: f64,
    /// Terminal voltage angle, rad.
    pub theta_v: f64,
    /// Injected active and reactive power, pu.
    pub p: f64,
    pub q: f64,
}

impl OperatingPoint {
    pub fn voltage(&self) -> Complex64 {
        Complex64::new(self.vx, self.vy)
    }

    /// Terminal current injected into the network.
    pub fn current(&self) -> Complex64 {
        (Complex64::new(self.p, self.q) / self.voltage()).conj()
    }

    /// Same point seen from a frame whose d-axis leads by `angle`.
    pub fn in_frame(&self, angle: f64) -> Self {
        let v = self.voltage() * Complex64::from_polar(1.0, -angle);
        Self {
            vx: v.re,
            vy: v.im,
            delta: self.delta - angle,
            theta_v: self.theta_v - angle,
            ..*self
        }
    }

    pub fn calibration(&self) -> Calibration {
        Calibration {
            p: self.p,
            q: self.q,
            v: self.voltage().norm(),
            theta: self.theta_v,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.xg > 0.0 && self.e > 0.0 && self.omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "generator needs H, Xg, E, omega0 > 0 (got H={}, Xg={}, E={}, omega0={})",
                self.h, self.xg, self.e, self.omega0
            )));
        }
        if self.d1 < 0.0 {
            return Err(Error::InvalidParameter(format!("negative damping {}", self.d1)));
        }
        Ok(())
    }

    /// Solves `E<delta = V + jXg I` for a terminal voltage and dispatch.
    pub fn calibrate(
        h: f64,
        d1: f64,
        xg: f64,
        omega0: f64,
        v: Complex64,
        p: f64,
        q: f64,
    ) -> Result<(Self, OperatingPoint)> {
        if v.norm() == 0.0 {
            return Err(Error::OperatingPoint("terminal voltage is zero".into()));
        }
        let i = (Complex64::new(p, q) / v).conj();
        let e = v + Complex64::new(0.0, xg) * i;
        let gp = Self {
            h,
            d1,
            xg,
            e: e.norm(),
            omega0,
        };
        gp.validate()?;
        let op = OperatingPoint {
            vx: v.re,
            vy: v.im,
            delta: e.arg(),
            theta_v: v.arg(),
            p,
            q,
        };
        Ok((gp, op))
    }

    /// `|(E<delta - V)/(jXg) - I_dispatch|`.
    pub fn current_mismatch(&self, op: &OperatingPoint) -> f64 {
        let e = Complex64::from_polar(self.e, op.delta);
        let i = (e - op.voltage()) / Complex64::new(0.0, self.xg);
        (i - op.current()).norm()
    }
}

/// Partial derivatives of the electrical power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorqueCoefficients {
    pub tx: f64,
    pub ty: f64,
    pub tdelta: f64,
}

/// `Pe = E (Vx sin d - Vy cos d) / Xg` differentiated at the operating point.
pub fn torque_coefficients(gp: &GeneratorParams, op: &OperatingPoint) -> TorqueCoefficients {
    let (s, c) = op.delta.sin_cos();
    TorqueCoefficients {
        tx: gp.e * s / gp.xg,
        ty: -gp.e * c / gp.xg,
        tdelta: gp.e * (op.vx * c + op.vy * s) / gp.xg,
    }
}

/// States `[delta, omega]`, inputs `[vx, vy]`, outputs injected `[ix, iy]`.
pub fn classical_state_space(gp: &GeneratorParams, op: &OperatingPoint) -> Result<StateSpace> {
    gp.validate()?;
    let t = torque_coefficients(gp, op);
    let m = 2.0 * gp.h;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, gp.omega0, -t.tdelta / m, -gp.d1 / m]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -t.tx / m, -t.ty / m]);
    let c = DMatrix::from_row_slice(2, 2, &[-t.ty, 0.0, t.tx, 0.0]);
    let d = DMatrix::from_row_slice(2, 2, &[0.0, -1.0 / gp.xg, 1.0 / gp.xg, 0.0]);
    StateSpace::new(a, b, c, d)
}

/// 2x2 dq admittance of a classical machine at `bus`, expressed in `frame`
/// (the frame the operating point is given in).
pub fn gen_classical_admittance(
    gp: &GeneratorParams,
    op: &OperatingPoint,
    bus: usize,
    frame: FrameTag,
) -> Result<AdmittanceBlock> {
    let mismatch = gp.current_mismatch(op);
    if !(mismatch <= CONSISTENCY_TOL) {
        return Err(Error::OperatingPoint(format!(
            "generator at bus {bus}: internal EMF inconsistent with dispatch, current mismatch {mismatch:e} pu"
        )));
    }
    let ss = classical_state_space(gp, op)?;
    Ok(AdmittanceBlock {
        y: ss.to_admittance()?,
        bus,
        frame,
        convention: SignConvention::InjectionPositive,
        calibration: Some(op.calibration()),
    })
}

/// Nonlinear swing model with terminal voltage as input, for linearization.
#[derive(Clone, Debug)]
pub struct ClassicalMachine {
    pub params: GeneratorParams,
    pub op: OperatingPoint,
    /// Mechanical power, set equal to the dispatched active power.
    pub pm: f64,
}

impl ClassicalMachine {
    pub fn new(params: GeneratorParams, op: OperatingPoint) -> Self {
        Self {
            params,
            op,
            pm: op.p,
        }
    }

    fn internal(&self, delta: f64) -> Complex64 {
        Complex64::from_polar(self.params.e, delta)
    }
}

impl NonlinearModel for ClassicalMachine {
    fn state_dim(&self) -> usize {
        2
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        2
    }

    fn f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let gp = &self.params;
        let pe = gp.e * (u[0] * x[0].sin() - u[1] * x[0].cos()) / gp.xg;
        let dw = x[1] - 1.0;
        DVector::from_vec(vec![
            gp.omega0 * dw,
            (self.pm - pe - gp.d1 * dw) / (2.0 * gp.h),
        ])
    }

    fn g(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let v = Complex64::new(u[0], u[1]);
        let i = (self.internal(x[0]) - v) / Complex64::new(0.0, self.params.xg);
        DVector::from_vec(vec![i.re, i.im])
    }

    fn seed(&self) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_vec(vec![self.op.delta, 1.0]),
            DVector::from_vec(vec![self.op.vx, self.op.vy]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::linearize;

    #[test]
    fn flat_point_coefficients() {
        let gp = GeneratorParams {
            h: 3.0,
            d1: 1.0,
            xg: 0.5,
            e: 1.0,
            omega0: 377.0,
        };
        let op = OperatingPoint {
            vx: 1.0,
            vy: 0.0,
            delta: 0.0,
            theta_v: 0.0,
            p: 0.0,
            q: 0.0,
        };
        let t = torque_coefficients(&gp, &op);
        assert_eq!((t.tx, t.ty, t.tdelta), (0.0, -2.0, 2.0));
        let ss = classical_state_space(&gp, &op).unwrap();
        assert_eq!(ss.d, DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]));
    }

    #[test]
    fn linearized_swing_matches_closed_form() {
        let (gp, op) = GeneratorParams::calibrate(
            4.0,
            2.0,
            0.3,
            377.0,
            Complex64::from_polar(1.02, 0.2),
            0.8,
            0.25,
        )
        .unwrap();
        let model = ClassicalMachine::new(gp, op);
        let (x, u) = model.seed();
        let lin = linearize(&model, &x, &u).unwrap();
        let ss = classical_state_space(&gp, &op).unwrap();
        for (got, want) in [(&lin.a, &ss.a), (&lin.b, &ss.b), (&lin.c, &ss.c), (&lin.d, &ss.d)] {
            assert!((got - want).norm() <= 1e-6 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn inconsistent_point_rejected() {
        let (gp, mut op) =
            GeneratorParams::calibrate(4.0, 2.0, 0.3, 377.0, Complex64::new(1.0, 0.0), 0.5, 0.1)
                .unwrap();
        op.q = 0.3;
        let err = gen_classical_admittance(&gp, &op, 1, FrameTag::system()).unwrap_err();
        assert!(matches!(err, Error::OperatingPoint(_)));
    }
}
