//! Generator with a multi-mass shaft.
//!
//! The masses form a chain coupled by shaft stiffnesses. The electrical power
//! acts on the generator mass only, through the same constant-EMF interface
//! as the classical machine, so a single mass reduces to the classical model.

use nalgebra::DMatrix;

use crate::components::generator::{torque_coefficients, GeneratorParams, OperatingPoint, CONSISTENCY_TOL};
use crate::error::{Error, Result};
use crate::frames::FrameTag;
use crate::network::{AdmittanceBlock, SignConvention};
use crate::statespace::StateSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct TorsionalParams {
    /// Inertia of each mass, s.
    pub h: Vec<f64>,
    /// Damping of each mass, pu.
    pub d: Vec<f64>,
    /// Stiffness between mass `i` and `i + 1`, pu torque per electrical rad.
    pub k: Vec<f64>,
    /// Index of the mass the electrical torque acts on.
    pub generator_mass: usize,
    pub xg: f64,
    pub e: f64,
    pub omega0: f64,
}

impl TorsionalParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.h.len();
        if n == 0 || self.d.len() != n || self.k.len() + 1 != n {
            return Err(Error::InvalidParameter(format!(
                "torsional chain needs len(K) = len(H) - 1 = len(D) - 1 (got {}, {}, {})",
                self.h.len(),
                self.d.len(),
                self.k.len()
            )));
        }
        if self.h.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidParameter("every mass needs H > 0".into()));
        }
        if self.generator_mass >= n {
            return Err(Error::InvalidParameter(format!(
                "generator mass {} outside chain of {n}",
                self.generator_mass
            )));
        }
        self.electrical().validate()
    }

    /// Electrical parameters with the generator mass as the single rotor.
    pub fn electrical(&self) -> GeneratorParams {
        let g = self.generator_mass.min(self.h.len().saturating_sub(1));
        GeneratorParams {
            h: self.h.get(g).copied().unwrap_or(0.0),
            d1: self.d.get(g).copied().unwrap_or(0.0),
            xg: self.xg,
            e: self.e,
            omega0: self.omega0,
        }
    }

    /// Moves mechanical data from the machine base to the system base and
    /// the reactance the other way.
    pub fn rebased(&self, machine_mva: f64, system_mva: f64) -> Self {
        let r = machine_mva / system_mva;
        Self {
            h: self.h.iter().map(|x| x * r).collect(),
            d: self.d.iter().map(|x| x * r).collect(),
            k: self.k.iter().map(|x| x * r).collect(),
            xg: self.xg / r,
            ..self.clone()
        }
    }
}

/// States `[delta_1..delta_n, omega_1..omega_n]`, inputs `[vx, vy]`,
/// outputs injected `[ix, iy]`.
pub fn torsional_state_space(tp: &TorsionalParams, op: &OperatingPoint) -> Result<StateSpace> {
    tp.validate()?;
    let n = tp.h.len();
    let g = tp.generator_mass;
    let t = torque_coefficients(&tp.electrical(), op);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = tp.omega0;
        a[(n + i, n + i)] = -tp.d[i] / (2.0 * tp.h[i]);
    }
    for (j, &kj) in tp.k.iter().enumerate() {
        for (p, q) in [(j, j + 1), (j + 1, j)] {
            a[(n + p, p)] -= kj / (2.0 * tp.h[p]);
            a[(n + p, q)] += kj / (2.0 * tp.h[p]);
        }
    }
    a[(n + g, g)] -= t.tdelta / (2.0 * tp.h[g]);
    let mut b = DMatrix::zeros(2 * n, 2);
    b[(n + g, 0)] = -t.tx / (2.0 * tp.h[g]);
    b[(n + g, 1)] = -t.ty / (2.0 * tp.h[g]);
    let mut c = DMatrix::zeros(2, 2 * n);
    c[(0, g)] = -t.ty;
    c[(1, g)] = t.tx;
    let d = DMatrix::from_row_slice(2, 2, &[0.0, -1.0 / tp.xg, 1.0 / tp.xg, 0.0]);
    StateSpace::new(a, b, c, d)
}

pub fn torsional_gen_admittance(
    tp: &TorsionalParams,
    op: &OperatingPoint,
    bus: usize,
    frame: FrameTag,
) -> Result<AdmittanceBlock> {
    let mismatch = tp.electrical().current_mismatch(op);
    if !(mismatch <= CONSISTENCY_TOL) {
        return Err(Error::OperatingPoint(format!(
            "torsional generator at bus {bus}: current mismatch {mismatch:e} pu"
        )));
    }
    let ss = torsional_state_space(tp, op)?;
    Ok(AdmittanceBlock {
        y: ss.to_admittance()?,
        bus,
        frame,
        convention: SignConvention::InjectionPositive,
        calibration: Some(op.calibration()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::generator::classical_state_space;
    use num_complex::Complex64;

    #[test]
    fn single_mass_is_classical() {
        let (gp, op) = GeneratorParams::calibrate(
            3.5,
            1.5,
            0.25,
            377.0,
            Complex64::from_polar(1.0, 0.1),
            0.6,
            0.2,
        )
        .unwrap();
        let tp = TorsionalParams {
            h: vec![gp.h],
            d: vec![gp.d1],
            k: vec![],
            generator_mass: 0,
            xg: gp.xg,
            e: gp.e,
            omega0: gp.omega0,
        };
        let a = torsional_state_space(&tp, &op).unwrap();
        let b = classical_state_space(&gp, &op).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_length_checked() {
        let tp = TorsionalParams {
            h: vec![1.0, 1.0],
            d: vec![0.0, 0.0],
            k: vec![],
            generator_mass: 0,
            xg: 0.2,
            e: 1.0,
            omega0: 377.0,
        };
        assert!(tp.validate().is_err());
    }
}
