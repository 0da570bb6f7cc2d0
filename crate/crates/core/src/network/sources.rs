//! Source admittance blocks derived at the power-flow operating point.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::components::{
    dfig_machine_admittance, gen_classical_admittance, torsional_gen_admittance,
    vsc_reference_model, GeneratorParams, OperatingPoint, TorsionalParams, VscParams,
};
use crate::error::{Error, Result};
use crate::frames::{rotate_admittance, FrameTag};
use crate::io::load_admittance;
use crate::network::block::{AdmittanceBlock, Calibration, SignConvention};
use crate::network::case::{CalibrationSpec, NetworkCase, SourceSpec, VscSpec};
use crate::network::powerflow::PowerFlow;

/// Frame a derived block is expressed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameChoice {
    #[default]
    System,
    /// d-axis on the terminal voltage.
    Local,
}

fn op_from(v: Complex64, p: f64, q: f64) -> OperatingPoint {
    OperatingPoint {
        vx: v.re,
        vy: v.im,
        delta: v.arg(),
        theta_v: v.arg(),
        p,
        q,
    }
}

fn calibration_op(c: &CalibrationSpec) -> OperatingPoint {
    op_from(Complex64::from_polar(c.v, c.theta_deg.to_radians()), c.p, c.q)
}

/// Terminal condition the power flow assigns to a source bus.
pub fn terminal_op(case: &NetworkCase, pf: &PowerFlow, bus: usize) -> Result<OperatingPoint> {
    let v = pf.voltage(case, bus)?;
    let s = pf.injection(case, bus)?;
    Ok(op_from(v, s.re, s.im))
}

pub fn terminal_calibration(case: &NetworkCase, pf: &PowerFlow, bus: usize) -> Result<Calibration> {
    let op = terminal_op(case, pf, bus)?;
    Ok(Calibration {
        p: op.p,
        q: op.q,
        v: op.voltage().norm(),
        theta: op.theta_v,
    })
}

fn vsc_params(s: &VscSpec, omega0: f64) -> VscParams {
    VscParams {
        rg: s.rg,
        xg: s.xg,
        rl: s.rl,
        xl: s.xl,
        kpi: s.kpi,
        kii: s.kii,
        kpo: s.kpo,
        kio: s.kio,
        kp_pll: s.kp_pll,
        ki_pll: s.ki_pll,
        tau: s.tau,
        vdc_ref: s.vdc_ref,
        omega0,
    }
}

fn frame_for(choice: FrameChoice, op: &OperatingPoint) -> FrameTag {
    match choice {
        FrameChoice::System => FrameTag::system(),
        FrameChoice::Local => FrameTag::local(op.theta_v),
    }
}

/// Block of one source, or `None` for an infinite bus. The calibration
/// stored on the block is always in the system frame.
pub fn source_block(
    case: &NetworkCase,
    pf: &PowerFlow,
    spec: &SourceSpec,
    choice: FrameChoice,
    base_dir: &Path,
) -> Result<Option<AdmittanceBlock>> {
    let omega0 = case.omega0();
    let bus = spec.bus();
    let op_for = |cal: &Option<CalibrationSpec>| -> Result<OperatingPoint> {
        match cal {
            Some(c) => Ok(calibration_op(c)),
            None => terminal_op(case, pf, bus),
        }
    };
    let block = match spec {
        SourceSpec::InfiniteBus { .. } => return Ok(None),
        SourceSpec::Generator {
            h, d, xg, calibrate_at, ..
        } => {
            let op = op_for(calibrate_at)?;
            let (gp, op) = GeneratorParams::calibrate(*h, *d, *xg, omega0, op.voltage(), op.p, op.q)?;
            let tag = frame_for(choice, &op);
            let mut b = gen_classical_admittance(&gp, &op.in_frame(tag.angle), bus, tag)?;
            b.calibration = Some(op.calibration());
            b
        }
        SourceSpec::TorsionalGenerator {
            h,
            d,
            k,
            xg,
            generator_mass,
            machine_mva,
            calibrate_at,
            ..
        } => {
            let mut tp = TorsionalParams {
                h: h.clone(),
                d: d.clone(),
                k: k.clone(),
                generator_mass: *generator_mass,
                xg: *xg,
                e: 1.0,
                omega0,
            };
            if let Some(mva) = machine_mva {
                tp = tp.rebased(*mva, case.system.base_mva);
            }
            tp.validate()?;
            let op = op_for(calibrate_at)?;
            let g = tp.electrical();
            let (gp, op) = GeneratorParams::calibrate(g.h, g.d1, g.xg, omega0, op.voltage(), op.p, op.q)?;
            tp.e = gp.e;
            let tag = frame_for(choice, &op);
            let mut b = torsional_gen_admittance(&tp, &op.in_frame(tag.angle), bus, tag)?;
            b.calibration = Some(op.calibration());
            b
        }
        SourceSpec::VscReference {
            params, calibrate_at, ..
        } => {
            let op = op_for(calibrate_at)?;
            let tag = frame_for(choice, &op);
            let model = vsc_reference_model(&vsc_params(params, omega0), &op.in_frame(tag.angle))?;
            let mut b = model.admittance(bus, tag)?;
            b.calibration = Some(op.calibration());
            b
        }
        SourceSpec::Dfig {
            rs, xls, rr, xlr, wm, ..
        } => AdmittanceBlock {
            y: crate::tfmatrix::TFMatrix::scalar(dfig_machine_admittance(*rs, *xls, *rr, *xlr, *wm, omega0)?),
            bus,
            frame: FrameTag::static_frame(),
            convention: SignConvention::InjectionPositive,
            calibration: None,
        },
        SourceSpec::MeasuredAdmittanceFile {
            path,
            frame_angle_deg,
            calibrate_at,
            ..
        } => {
            let p = Path::new(path);
            let full = if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
            let y = load_admittance(&full)?;
            let calibration = calibrate_at.as_ref().map(|c| calibration_op(c).calibration());
            if calibration.is_none() {
                log::warn!("{}: no calibrate_at, operating point cannot be checked", spec.name());
            }
            let (frame, dim) = match (y.rows(), y.cols()) {
                (1, 1) => (FrameTag::static_frame(), 1),
                (2, 2) if *frame_angle_deg == 0.0 => (FrameTag::system(), 2),
                (2, 2) => (FrameTag::local(frame_angle_deg.to_radians()), 2),
                (r, c) => {
                    return Err(Error::Dimension(format!(
                        "{}: measured admittance is {r}x{c}, expected 1x1 or 2x2",
                        full.display()
                    )))
                }
            };
            let b = AdmittanceBlock {
                y,
                bus,
                frame,
                convention: SignConvention::InjectionPositive,
                calibration,
            };
            match (dim, choice) {
                (2, FrameChoice::System) if frame.angle != 0.0 => rotate_admittance(&b, FrameTag::system())?,
                (2, FrameChoice::Local) => {
                    let theta = terminal_op(case, pf, bus)?.theta_v;
                    rotate_admittance(&b, FrameTag::local(theta))?
                }
                _ => b,
            }
        }
    };
    Ok(Some(block))
}

/// Blocks of every non-infinite source, in case order.
pub fn source_blocks(
    case: &NetworkCase,
    pf: &PowerFlow,
    choice: FrameChoice,
    base_dir: &Path,
) -> Result<Vec<AdmittanceBlock>> {
    let mut out = Vec::new();
    for spec in &case.sources {
        if let Some(b) = source_block(case, pf, spec, choice, base_dir)? {
            log::debug!("{}: {}x{} block, frame {:?}", spec.name(), b.dim(), b.dim(), b.frame.kind);
            out.push(b);
        }
    }
    Ok(out)
}
