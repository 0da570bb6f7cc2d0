//! Newton-Raphson power flow in polar coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::case::{BusType, NetworkCase};
use crate::network::ybus::build_ybus;

pub const MAX_ITER: usize = 50;
/// Mismatch at which iterations stop.
pub const PF_TOL: f64 = 1e-12;
/// Residual a solved case must meet.
pub const PF_ACCEPT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlow {
    /// Bus voltages in case order.
    pub v: Vec<Complex64>,
    /// Net complex power injected at each bus.
    pub s: Vec<Complex64>,
    pub iterations: usize,
    pub mismatch: f64,
}

impl PowerFlow {
    pub fn voltage(&self, case: &NetworkCase, bus: usize) -> Result<Complex64> {
        Ok(self.v[case.bus_index(bus)?])
    }

    pub fn injection(&self, case: &NetworkCase, bus: usize) -> Result<Complex64> {
        Ok(self.s[case.bus_index(bus)?])
    }
}

fn injections(y: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut cur = Complex64::new(0.0, 0.0);
            for j in 0..n {
                cur += y[(i, j)] * v[j];
            }
            v[i] * cur.conj()
        })
        .collect()
}

pub fn power_flow(case: &NetworkCase) -> Result<PowerFlow> {
    let y = build_ybus(case)?;
    let n = case.buses.len();
    let slack_angle = case
        .buses
        .iter()
        .find(|b| b.kind == BusType::Slack)
        .map(|b| b.angle_deg.to_radians())
        .unwrap_or(0.0);
    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| if b.kind == BusType::Pq { 1.0 } else { b.v })
        .collect();
    let mut va: Vec<f64> = case
        .buses
        .iter()
        .map(|b| if b.kind == BusType::Slack { b.angle_deg.to_radians() } else { slack_angle })
        .collect();
    let ang: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind != BusType::Slack).collect();
    let mag: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusType::Pq).collect();
    let spec: Vec<Complex64> = case.buses.iter().map(|b| Complex64::new(b.p, b.q)).collect();
    let (g, b) = (y.map(|c| c.re), y.map(|c| c.im));
    let volts = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    };
    let mut mismatch = f64::INFINITY;
    for iter in 0..=MAX_ITER {
        let v = volts(&vm, &va);
        let s = injections(&y, &v);
        let mut f = DVector::zeros(ang.len() + mag.len());
        for (k, &i) in ang.iter().enumerate() {
            f[k] = spec[i].re - s[i].re;
        }
        for (k, &i) in mag.iter().enumerate() {
            f[ang.len() + k] = spec[i].im - s[i].im;
        }
        mismatch = f.amax();
        if mismatch <= PF_TOL || (iter == MAX_ITER && mismatch <= PF_ACCEPT) {
            return Ok(PowerFlow {
                v,
                s,
                iterations: iter,
                mismatch,
            });
        }
        if iter == MAX_ITER || !mismatch.is_finite() {
            break;
        }
        let m = ang.len() + mag.len();
        let mut jac = DMatrix::zeros(m, m);
        let dp_dth = |i: usize, j: usize| -> f64 {
            if i == j {
                -s[i].im - b[(i, i)] * vm[i] * vm[i]
            } else {
                let t = va[i] - va[j];
                vm[i] * vm[j] * (g[(i, j)] * t.sin() - b[(i, j)] * t.cos())
            }
        };
        let dp_dv = |i: usize, j: usize| -> f64 {
            if i == j {
                s[i].re / vm[i] + g[(i, i)] * vm[i]
            } else {
                let t = va[i] - va[j];
                vm[i] * (g[(i, j)] * t.cos() + b[(i, j)] * t.sin())
            }
        };
        let dq_dth = |i: usize, j: usize| -> f64 {
            if i == j {
                s[i].re - g[(i, i)] * vm[i] * vm[i]
            } else {
                let t = va[i] - va[j];
                -vm[i] * vm[j] * (g[(i, j)] * t.cos() + b[(i, j)] * t.sin())
            }
        };
        let dq_dv = |i: usize, j: usize| -> f64 {
            if i == j {
                s[i].im / vm[i] - b[(i, i)] * vm[i]
            } else {
                let t = va[i] - va[j];
                vm[i] * (g[(i, j)] * t.sin() - b[(i, j)] * t.cos())
            }
        };
        for (r, &i) in ang.iter().enumerate() {
            for (c, &j) in ang.iter().enumerate() {
                jac[(r, c)] = dp_dth(i, j);
            }
            for (c, &j) in mag.iter().enumerate() {
                jac[(r, ang.len() + c)] = dp_dv(i, j);
            }
        }
        for (r, &i) in mag.iter().enumerate() {
            for (c, &j) in ang.iter().enumerate() {
                jac[(ang.len() + r, c)] = dq_dth(i, j);
            }
            for (c, &j) in mag.iter().enumerate() {
                jac[(ang.len() + r, ang.len() + c)] = dq_dv(i, j);
            }
        }
        let dx = jac.lu().solve(&f).ok_or(Error::PowerFlowDiverged {
            iterations: iter,
            mismatch,
        })?;
        for (k, &i) in ang.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in mag.iter().enumerate() {
            vm[i] += dx[ang.len() + k];
        }
    }
    Err(Error::PowerFlowDiverged {
        iterations: MAX_ITER,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus(p: f64, x: f64, r: f64) -> NetworkCase {
        NetworkCase::from_toml_str(&format!(
            r#"
[system]
[[buses]]
id = 1
type = "pv"
v = 1.0
p = {p}
[[buses]]
id = 2
type = "slack"
[[branches]]
from = 1
to = 2
r = {r}
x = {x}
[[sources]]
kind = "generator"
bus = 1
h = 3.0
xg = 0.3
[[sources]]
kind = "infinite-bus"
bus = 2
"#
        ))
        .unwrap()
    }

    #[test]
    fn lossless_transfer_angle() {
        let case = two_bus(0.6, 0.5, 0.0);
        let pf = power_flow(&case).unwrap();
        let ang = pf.v[0].arg();
        assert!((ang - (0.6f64 * 0.5).asin()).abs() < 1e-12);
    }

    #[test]
    fn weak_grid_reactive_power() {
        let case = two_bus(1.0, 0.8, 0.08);
        let pf = power_flow(&case).unwrap();
        assert!((pf.v[0].arg().to_degrees() - 50.5).abs() < 0.05);
        assert!((pf.s[0].im - 0.355).abs() < 1e-3, "{}", pf.s[0].im);
    }

    #[test]
    fn single_bus() {
        let case = NetworkCase::from_toml_str(
            "[system]\n[[buses]]\nid = 1\ntype = \"slack\"\n[[sources]]\nkind = \"infinite-bus\"\nbus = 1\n",
        )
        .unwrap();
        let pf = power_flow(&case).unwrap();
        assert_eq!(pf.v, vec![Complex64::new(1.0, 0.0)]);
    }
}
