//! Total admittance of network plus sources, and Thevenin views of it.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::rational::CANCEL_TOL;
use crate::components::{series_branch_static, shunt_capacitor_static};
use crate::error::{Error, Result};
use crate::frames::{static_to_dq, FrameKind};
use crate::network::block::{AdmittanceBlock, SignConvention};
use crate::network::case::{Mode, NetworkCase};
use crate::network::powerflow::PowerFlow;
use crate::network::sources::terminal_calibration;
use crate::network::ybus::{build_ybus, expand_dq, kron_reduce};
use crate::rational::RationalFunction;
use crate::tfmatrix::TFMatrix;

/// Largest tolerated gap between a block's calibration and the power flow.
pub const CALIBRATION_TOL: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct TotalAdmittance {
    pub y: TFMatrix,
    /// Bus ids in block order.
    pub buses: Vec<usize>,
    /// 2 for dq blocks, 1 for static-frame scalars.
    pub block_dim: usize,
    pub mode: Mode,
}

impl TotalAdmittance {
    pub fn position(&self, bus: usize) -> Result<usize> {
        self.buses
            .iter()
            .position(|&b| b == bus)
            .ok_or_else(|| Error::Case(format!("bus {bus} is not retained in the total admittance")))
    }

    /// Matrix rows belonging to `bus`.
    pub fn rows_of(&self, bus: usize) -> Result<Vec<usize>> {
        let p = self.position(bus)?;
        Ok((0..self.block_dim).map(|k| p * self.block_dim + k).collect())
    }

    pub fn det(&self) -> Result<RationalFunction> {
        self.y.det()
    }
}

fn check_block(case: &NetworkCase, pf: &PowerFlow, b: &AdmittanceBlock, static_repr: bool) -> Result<()> {
    if b.convention != SignConvention::InjectionPositive {
        return Err(Error::InvalidParameter(format!(
            "block at bus {} is in the raw sign convention; negate it before assembly",
            b.bus
        )));
    }
    if static_repr {
        if b.frame.kind != FrameKind::Static || b.dim() != 1 {
            return Err(Error::FrameMismatch(format!(
                "block at bus {} is {:?}, cannot mix with static-frame blocks",
                b.bus, b.frame.kind
            )));
        }
    } else {
        if b.y.rows() != 2 || b.y.cols() != 2 {
            return Err(Error::Dimension(format!("block at bus {} is not 2x2", b.bus)));
        }
        if b.frame.kind != FrameKind::System {
            return Err(Error::FrameMismatch(format!(
                "block at bus {} is in a {:?} frame at {:.4} deg; rotate it to the system frame first",
                b.bus,
                b.frame.kind,
                b.frame.angle.to_degrees()
            )));
        }
    }
    if let Some(cal) = &b.calibration {
        let flow = terminal_calibration(case, pf, b.bus)?;
        let dev = cal.deviation(&flow);
        if !(dev <= CALIBRATION_TOL) {
            return Err(Error::OperatingPoint(format!(
                "block at bus {} was derived at {cal} but the power flow gives {flow} (deviation {dev:.3e})",
                b.bus
            )));
        }
    }
    Ok(())
}

/// Static-frame admittance of a constant shunt `g + jb` at `omega0`: a
/// capacitor for `b > 0`, an inductor for `b < 0`.
fn shunt_static(g: f64, b: f64, omega0: f64) -> Result<Option<RationalFunction>> {
    if b > 0.0 {
        Ok(Some(shunt_capacitor_static(b, omega0).add(&RationalFunction::real_constant(g))?))
    } else if b < 0.0 {
        let l = -1.0 / (omega0 * b);
        Ok(Some(RationalFunction::from_real(&[1.0, g * l], &[0.0, l])?))
    } else if g != 0.0 {
        Ok(Some(RationalFunction::real_constant(g)))
    } else {
        Ok(None)
    }
}

fn add_block(m: &mut TFMatrix, d: usize, i: usize, j: usize, blk: &TFMatrix) -> Result<()> {
    let cur = m.block(d * i, d * j, d, d)?;
    m.set_block(d * i, d * j, &cur.add(blk)?)
}

/// Nodal matrix of the passive network with rational branch models.
fn nodal(case: &NetworkCase, nodes: &[usize], d: usize) -> Result<TFMatrix> {
    let omega0 = case.omega0();
    let lift = |f: &RationalFunction| -> Result<TFMatrix> {
        if d == 2 {
            static_to_dq(f, omega0)
        } else {
            Ok(TFMatrix::scalar(f.clone()))
        }
    };
    let pos = |bus: usize| nodes.iter().position(|&b| b == bus);
    let n = nodes.len();
    let mut m = TFMatrix::zeros(n * d, n * d);
    let shunt_at = |m: &mut TFMatrix, bus: usize, f: Option<RationalFunction>| -> Result<()> {
        if let (Some(p), Some(f)) = (pos(bus), f) {
            add_block(m, d, p, p, &lift(&f)?)?;
        }
        Ok(())
    };
    for br in &case.branches {
        let l = lift(&series_branch_static(br.r, br.x, br.comp, omega0)?)?;
        let (i, j) = (pos(br.from), pos(br.to));
        for p in [i, j].into_iter().flatten() {
            add_block(&mut m, d, p, p, &l)?;
        }
        if let (Some(i), Some(j)) = (i, j) {
            add_block(&mut m, d, i, j, &l.neg())?;
            add_block(&mut m, d, j, i, &l.neg())?;
        }
        if br.b != 0.0 {
            for bus in [br.from, br.to] {
                shunt_at(&mut m, bus, shunt_static(0.0, br.b / 2.0, omega0)?)?;
            }
        }
    }
    for ld in &case.loads {
        shunt_at(&mut m, ld.bus, shunt_static(ld.p, -ld.q, omega0)?)?;
    }
    for sh in &case.shunts {
        shunt_at(&mut m, sh.bus, shunt_static(sh.g, sh.b, omega0)?)?;
    }
    Ok(m)
}

/// Sum of the passive network and every source block.
///
/// Quasistatic mode keeps the buses hosting a block, dynamic-branches mode
/// keeps every bus. Infinite buses are grounded in both.
pub fn assemble_total(
    case: &NetworkCase,
    pf: &PowerFlow,
    blocks: &[AdmittanceBlock],
    mode: Mode,
) -> Result<TotalAdmittance> {
    assemble_with(case, pf, blocks, mode, &[], is_static(blocks))
}

fn is_static(blocks: &[AdmittanceBlock]) -> bool {
    blocks.iter().any(|b| b.frame.kind == FrameKind::Static)
}

/// `static_repr` comes from the full block set so a partial assembly uses
/// the same representation as the total.
fn assemble_with(
    case: &NetworkCase,
    pf: &PowerFlow,
    blocks: &[AdmittanceBlock],
    mode: Mode,
    extra_keep: &[usize],
    static_repr: bool,
) -> Result<TotalAdmittance> {
    let mut seen = BTreeSet::new();
    for b in blocks {
        check_block(case, pf, b, static_repr)?;
        if !seen.insert(b.bus) {
            return Err(Error::Case(format!("two blocks at bus {}", b.bus)));
        }
    }
    let grounded: BTreeSet<usize> = case
        .sources
        .iter()
        .filter(|s| s.is_infinite())
        .map(|s| s.bus())
        .collect();
    if let Some(b) = blocks.iter().find(|b| grounded.contains(&b.bus)) {
        return Err(Error::Case(format!("block at infinite bus {}", b.bus)));
    }
    let d = if static_repr { 1 } else { 2 };
    let (buses, mut y) = match mode {
        Mode::Quasistatic => {
            if static_repr {
                return Err(Error::Case(
                    "static-frame sources need mode = \"dynamic-branches\"".into(),
                ));
            }
            let active: Vec<usize> = (0..case.buses.len())
                .filter(|&i| !grounded.contains(&case.buses[i].id))
                .collect();
            let kept: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| {
                    let id = case.buses[i].id;
                    seen.contains(&id) || extra_keep.contains(&id)
                })
                .collect();
            if kept.is_empty() {
                return Err(Error::Case("no bus to retain: the case has no source blocks".into()));
            }
            let ybus = build_ybus(case)?;
            let y_act = ybus.select_rows(&active).select_columns(&active);
            let keep_pos: Vec<usize> = kept
                .iter()
                .map(|k| active.iter().position(|a| a == k).expect("kept bus is active"))
                .collect();
            let reduced = kron_reduce(&y_act, &keep_pos)?;
            let buses: Vec<usize> = kept.iter().map(|&i| case.buses[i].id).collect();
            (buses, expand_dq(&reduced))
        }
        Mode::DynamicBranches => {
            let buses: Vec<usize> = case
                .buses
                .iter()
                .map(|b| b.id)
                .filter(|id| !grounded.contains(id))
                .collect();
            if buses.is_empty() {
                return Err(Error::Case("every bus is grounded".into()));
            }
            let m = nodal(case, &buses, d)?;
            (buses, m)
        }
    };
    for b in blocks {
        let p = buses.iter().position(|&x| x == b.bus).expect("block bus retained");
        add_block(&mut y, d, p, p, &b.y)?;
    }
    Ok(TotalAdmittance {
        y,
        buses,
        block_dim: d,
        mode,
    })
}

/// Thevenin impedance block `Z_kk` of the assembled admittance at one
/// frequency point.
pub fn thevenin_at(total: &TotalAdmittance, bus: usize, s: Complex64) -> Result<DMatrix<Complex64>> {
    let rows = total.rows_of(bus)?;
    let y = total.y.eval(s)?;
    let z = y
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("total admittance at s = {s}")))?;
    Ok(z.select_rows(&rows).select_columns(&rows))
}

/// A source admittance with the rest of the system folded into its
/// terminal: `Y_g + Z_kk^-1`, where `Z_kk` is the Thevenin impedance of
/// everything else seen from the bus.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub bus: usize,
    pub y_source: TFMatrix,
    /// `Z_kk^-1`.
    pub y_rest: TFMatrix,
    pub y: TFMatrix,
}

impl Aggregate {
    pub fn thevenin_impedance(&self) -> Result<TFMatrix> {
        self.y_rest.inverse()
    }

    pub fn det(&self) -> Result<RationalFunction> {
        self.y.det()
    }
}

pub fn aggregate_at(
    case: &NetworkCase,
    pf: &PowerFlow,
    blocks: &[AdmittanceBlock],
    mode: Mode,
    bus: usize,
) -> Result<Aggregate> {
    let own = blocks
        .iter()
        .find(|b| b.bus == bus)
        .ok_or_else(|| Error::Case(format!("no source block at bus {bus}")))?;
    let rest: Vec<AdmittanceBlock> = blocks.iter().filter(|b| b.bus != bus).cloned().collect();
    let total = assemble_with(case, pf, &rest, mode, &[bus], is_static(blocks))?;
    let rows = total.rows_of(bus)?;
    // Elimination leaves the other sources' denominators in both halves of
    // every entry; they cancel here, explicitly.
    let y_rest = total.y.schur_complement(&rows)?.simplified(CANCEL_TOL)?;
    let y = own.y.add(&y_rest)?;
    Ok(Aggregate {
        bus,
        y_source: own.y.clone(),
        y_rest,
        y,
    })
}
