//! Step responses of static-frame closed loops and ringing frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::lift_state_space;
use crate::rational::RationalFunction;
use crate::statespace::{realize_scalar, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepFrame {
    AlphaBeta,
    Dq,
}

/// Response of `F` lifted to `frame` to a unit step on input `axis`.
/// Channels are `i_alpha, i_beta` or `i_d, i_q`.
pub fn closed_loop_step(
    f: &RationalFunction,
    frame: StepFrame,
    axis: usize,
    t_end: f64,
    fs: f64,
    omega0: f64,
) -> Result<TimeSeries> {
    if axis > 1 {
        return Err(Error::InvalidParameter(format!("step axis {axis} is not 0 or 1")));
    }
    let cs = realize_scalar(f)?;
    let (ss, names) = match frame {
        StepFrame::AlphaBeta => (cs.realify(), ["i_alpha", "i_beta"]),
        StepFrame::Dq => (lift_state_space(&cs, omega0).realify(), ["i_d", "i_q"]),
    };
    let mut ts = ss.step_response(axis, 1.0, t_end, fs)?;
    ts.names = names.iter().map(|s| s.to_string()).collect();
    Ok(ts)
}

/// Ringing frequency from zero crossings of `y` about its linear trend
/// within `[t0, t1]`, Hz.
pub fn zero_crossing_frequency(t: &[f64], y: &[f64], t0: f64, t1: f64) -> Option<f64> {
    let idx: Vec<usize> = (0..t.len()).filter(|&k| t[k] >= t0 && t[k] <= t1).collect();
    if idx.len() < 3 {
        return None;
    }
    let n = idx.len() as f64;
    let (mt, my) = (
        idx.iter().map(|&k| t[k]).sum::<f64>() / n,
        idx.iter().map(|&k| y[k]).sum::<f64>() / n,
    );
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &k in &idx {
        sxy += (t[k] - mt) * (y[k] - my);
        sxx += (t[k] - mt).powi(2);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r: Vec<f64> = idx.iter().map(|&k| y[k] - my - slope * (t[k] - mt)).collect();
    let mut crossings = Vec::new();
    for j in 1..r.len() {
        let (a, b) = (r[j - 1], r[j]);
        if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
            let (ta, tb) = (t[idx[j - 1]], t[idx[j]]);
            crossings.push(ta + (tb - ta) * a / (a - b));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some((crossings.len() - 1) as f64 / (2.0 * span))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_crossings() {
        let t: Vec<f64> = (0..10_000).map(|k| k as f64 / 10_000.0).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|t| 0.3 + 2.0 * t + (2.0 * std::f64::consts::PI * 37.0 * t).sin())
            .collect();
        let f = zero_crossing_frequency(&t, &y, 0.1, 0.9).unwrap();
        assert!((f - 37.0).abs() < 0.1, "{f}");
    }

    #[test]
    fn second_order_step_rings_at_damped_frequency() {
        // wn^2 / (s^2 + 2 z wn s + wn^2)
        let (wn, z) = (2.0 * std::f64::consts::PI * 20.0, 0.05);
        let f = RationalFunction::from_real(&[wn * wn], &[wn * wn, 2.0 * z * wn, 1.0]).unwrap();
        let ts = closed_loop_step(&f, StepFrame::AlphaBeta, 0, 0.5, 5000.0, 377.0).unwrap();
        let y = ts.channel("i_alpha").unwrap();
        assert!((y[y.len() - 1] - 1.0).abs() < 0.05);
        let fd = zero_crossing_frequency(&ts.t, y, 0.0, 0.3).unwrap();
        let expect = wn * (1.0 - z * z).sqrt() / (2.0 * std::f64::consts::PI);
        assert!((fd - expect).abs() < 0.5, "{fd} vs {expect}");
    }
}
