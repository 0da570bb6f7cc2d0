//! Reference grid-following VSC for the linearization path.
//!
//! Structure (nine states, system dq frame):
//!
//! * `ix, iy`: current through the choke and the optional coupling branch.
//! * `theta, zeta`: PLL angle and integrator. The PLL drives the q-axis
//!   PCC voltage to zero, `theta' = Kp vq + zeta`, `zeta' = Ki vq`.
//! * `xi_d, xi_q`: inner current PI integrators in the PLL frame.
//! * `xi_dc, xi_v`: outer PI integrators. The dc-link loop commands `i_d`,
//!   the PCC voltage-magnitude loop commands `i_q`; both use the same gains.
//! * `vdc`: dc-link voltage, `tau vdc vdc' = P_ext - P_conv`.
//!
//! The converter voltage carries full feedforward of the PCC voltage and of
//! the choke cross-coupling, `e = v_pcc + j Xf i + e^{j theta} (Kpi err + xi)`.
//! The PCC voltage seen by the controls is rebuilt from the terminal voltage
//! and the steady-state drop across the coupling branch, which keeps the
//! model free of algebraic loops.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::components::generator::OperatingPoint;
use crate::error::{Error, Result};
use crate::frames::FrameTag;
use crate::network::{AdmittanceBlock, Calibration, SignConvention};
use crate::statespace::{linearize, solve_equilibrium, NonlinearModel, StateSpace};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VscParams {
    /// Choke resistance and reactance, pu.
    pub rg: f64,
    pub xg: f64,
    /// Coupling branch between the PCC and the terminal where the
    /// admittance is seen, pu. Zero when the network models the line.
    pub rl: f64,
    pub xl: f64,
    pub kpi: f64,
    pub kii: f64,
    pub kpo: f64,
    pub kio: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    /// Dc-link time constant, s.
    pub tau: f64,
    pub vdc_ref: f64,
    pub omega0: f64,
}

impl Default for VscParams {
    fn default() -> Self {
        Self {
            rg: 0.001,
            xg: 0.1,
            rl: 0.0,
            xl: 0.0,
            kpi: 0.3,
            kii: 5.0,
            kpo: 1.0,
            kio: 60.0,
            kp_pll: 60.0,
            ki_pll: 1400.0,
            tau: 0.0272,
            vdc_ref: 1.0,
            omega0: crate::frames::OMEGA0,
        }
    }
}

impl VscParams {
    pub fn validate(&self) -> Result<()> {
        let gains = [
            self.kpi,
            self.kii,
            self.kpo,
            self.kio,
            self.kp_pll,
            self.ki_pll,
            self.rg,
            self.rl,
            self.xl,
        ];
        if gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidParameter("VSC gains and resistances must be >= 0".into()));
        }
        if !(self.tau > 0.0 && self.xg > 0.0 && self.omega0 > 0.0 && self.vdc_ref > 0.0) {
            return Err(Error::InvalidParameter(
                "VSC needs tau, choke reactance, omega0 and vdc_ref > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VscModel {
    pub params: VscParams,
    pub op: OperatingPoint,
    /// Dc-side power, fixed at the equilibrium value.
    pub p_ext: f64,
    /// PCC voltage-magnitude reference.
    pub v_ref: f64,
    x0: DVector<f64>,
}

pub const VSC_STATES: [&str; 9] = ["ix", "iy", "theta", "zeta", "xi_d", "xi_q", "xi_dc", "xi_v", "vdc"];

fn rot(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

impl VscModel {
    fn pcc(&self, v: Complex64, i: Complex64) -> Complex64 {
        v + Complex64::new(self.params.rl, self.params.xl) * i
    }

    pub fn state_names() -> &'static [&'static str] {
        &VSC_STATES
    }

    /// Equilibrium state in closed form.
    pub fn equilibrium(&self) -> DVector<f64> {
        self.x0.clone()
    }
}

/// Builds the model and its closed-form equilibrium for a terminal voltage
/// and injected power given in `op`.
pub fn vsc_reference_model(vp: &VscParams, op: &OperatingPoint) -> Result<VscModel> {
    vp.validate()?;
    let v = op.voltage();
    if v.norm() == 0.0 {
        return Err(Error::OperatingPoint("VSC terminal voltage is zero".into()));
    }
    let i = op.current();
    let pcc = v + Complex64::new(vp.rl, vp.xl) * i;
    let theta = pcc.arg();
    let ip = i * rot(-theta);
    let e = pcc + Complex64::new(vp.rg, vp.xg) * i;
    let x0 = DVector::from_vec(vec![
        i.re,
        i.im,
        theta,
        0.0,
        vp.rg * ip.re,
        vp.rg * ip.im,
        ip.re,
        -ip.im,
        vp.vdc_ref,
    ]);
    Ok(VscModel {
        params: *vp,
        op: *op,
        p_ext: (e * i.conj()).re,
        v_ref: pcc.norm(),
        x0,
    })
}

impl NonlinearModel for VscModel {
    fn state_dim(&self) -> usize {
        9
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        2
    }

    fn f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let p = &self.params;
        let i = Complex64::new(x[0], x[1]);
        let (theta, zeta) = (x[2], x[3]);
        let xi = Complex64::new(x[4], x[5]);
        let (xi_dc, xi_v, vdc) = (x[6], x[7], x[8]);
        let v = Complex64::new(u[0], u[1]);
        let pcc = self.pcc(v, i);
        let vq = (pcc * rot(-theta)).im;
        let ip = i * rot(-theta);
        let e_dc = vdc - p.vdc_ref;
        let e_v = self.v_ref - pcc.norm();
        let id_ref = p.kpo * e_dc + xi_dc;
        let iq_ref = -(p.kpo * e_v + xi_v);
        let err = Complex64::new(id_ref, iq_ref) - ip;
        let ctrl = rot(theta) * (err * p.kpi + xi);
        let l_total = (p.xg + p.xl) / p.omega0;
        let di = (ctrl - i * p.rg) / l_total;
        let e = pcc + Complex64::new(0.0, p.xg) * i + ctrl;
        let p_conv = (e * i.conj()).re;
        DVector::from_vec(vec![
            di.re,
            di.im,
            p.kp_pll * vq + zeta,
            p.ki_pll * vq,
            p.kii * err.re,
            p.kii * err.im,
            p.kio * e_dc,
            p.kio * e_v,
            (self.p_ext - p_conv) / (p.tau * vdc),
        ])
    }

    fn g(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![x[0], x[1]])
    }

    fn seed(&self) -> (DVector<f64>, DVector<f64>) {
        (self.x0.clone(), DVector::from_vec(vec![self.op.vx, self.op.vy]))
    }
}

impl VscModel {
    /// Newton-polished equilibrium and the linearization there.
    pub fn linearized(&self) -> Result<StateSpace> {
        let (x0, u0) = self.seed();
        let x = solve_equilibrium(self, &x0, &u0, 1e-12, 50)?;
        linearize(self, &x, &u0)
    }

    pub fn admittance(&self, bus: usize, frame: FrameTag) -> Result<AdmittanceBlock> {
        let ss = self.linearized()?;
        Ok(AdmittanceBlock {
            y: ss.to_admittance()?,
            bus,
            frame,
            convention: SignConvention::InjectionPositive,
            calibration: Some(Calibration {
                p: self.op.p,
                q: self.op.q,
                v: self.op.voltage().norm(),
                theta: self.op.theta_v,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(p: f64, q: f64) -> OperatingPoint {
        OperatingPoint {
            vx: 1.0,
            vy: 0.0,
            delta: 0.0,
            theta_v: 0.0,
            p,
            q,
        }
    }

    #[test]
    fn closed_form_equilibrium_is_exact() {
        let mut vp = VscParams::default();
        vp.rl = 0.003;
        vp.xl = 0.15;
        let m = vsc_reference_model(&vp, &op(0.8, 0.2)).unwrap();
        let (x, u) = m.seed();
        assert!(m.f(&x, &u).norm() < 1e-12);
    }

    #[test]
    fn coupled_idle_converter_is_stable() {
        let mut vp = VscParams::default();
        vp.rl = 0.003;
        vp.xl = 0.15;
        let m = vsc_reference_model(&vp, &op(0.0, 0.0)).unwrap();
        let ss = m.linearized().unwrap();
        for e in ss.eigenvalues().unwrap() {
            assert!(e.re < 0.0, "{e}");
        }
        let y = ss.to_admittance().unwrap();
        assert!(y.is_proper());
        assert!(y.entries().iter().all(|e| e.den().degree().unwrap_or(0) <= 9));
    }

    // Without a coupling branch the PCC magnitude does not depend on the
    // current, so the voltage integrator is a pole at the origin.
    #[test]
    fn uncoupled_voltage_loop_is_an_integrator() {
        let m = vsc_reference_model(&VscParams::default(), &op(0.5, 0.0)).unwrap();
        let eig = m.linearized().unwrap().eigenvalues().unwrap();
        assert_eq!(eig.iter().filter(|e| e.norm() < 1e-6).count(), 1);
        assert!(eig.iter().all(|e| e.re < 1e-6));
    }
}
