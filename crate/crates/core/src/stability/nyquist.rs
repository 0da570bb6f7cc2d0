//! Generalized Nyquist test on an open-loop transfer matrix `L(s)`.
//!
//! Encirclements of -1 by the eigen-loci of `L` equal encirclements of the
//! origin by `det(I + L)`, which is what is counted: the unwrapped phase of
//! `det(I + L(s))` along the imaginary axis, with adaptive bisection
//! wherever it turns quickly. Poles of `L` on the axis are bypassed by small
//! semicircles into the right half plane, so they count as stable.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stability::eigs::Verdict;
use crate::stability::grid::FrequencyGrid;
use crate::stability::linalg::complex_eigen;
use crate::tfmatrix::TFMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NyquistOptions {
    /// Bypass imaginary-axis poles; otherwise they are an error.
    pub indent: bool,
    /// Largest phase step of `det(I + L)` accepted between samples, rad.
    pub max_phase_step: f64,
    /// Seed samples per decade of |omega|.
    pub per_decade: usize,
}

impl Default for NyquistOptions {
    fn default() -> Self {
        Self {
            indent: true,
            max_phase_step: PI / 8.0,
            per_decade: 400,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NyquistResult {
    /// Signed frequencies of the plotted loci, Hz.
    pub freq_hz: Vec<f64>,
    /// `loci[k][i]`: eigenvalue `k` of `L(j 2 pi f_i)`.
    pub loci: Vec<Vec<Complex64>>,
    /// Clockwise encirclements of -1.
    pub encirclements_cw: i64,
    /// Open-loop poles strictly in the right half plane.
    pub open_loop_rhp: usize,
    /// Axis poles bypassed by indentation.
    pub indented: Vec<Complex64>,
    /// `encirclements_cw + open_loop_rhp`.
    pub closed_loop_rhp: i64,
    pub verdict: Verdict,
    /// Samples used for the winding count.
    pub samples: usize,
}

fn axis_tol(p: Complex64) -> f64 {
    1e-9 * p.norm().max(1.0)
}

fn loop_poles(l: &TFMatrix) -> Result<Vec<Complex64>> {
    let mut poles: Vec<Complex64> = Vec::new();
    for e in l.entries() {
        if e.is_zero() {
            continue;
        }
        for p in e.poles()? {
            if !poles.iter().any(|q| (q - p).norm() <= 1e-9 * p.norm().max(1.0)) {
                poles.push(p);
            }
        }
    }
    Ok(poles)
}

fn loop_zeros(l: &TFMatrix) -> Vec<Complex64> {
    l.entries()
        .iter()
        .filter(|e| !e.is_zero())
        .flat_map(|e| e.zeros().unwrap_or_default())
        .collect()
}

fn g_at(l: &TFMatrix, s: Complex64) -> Result<Complex64> {
    let m = l.eval(s)?;
    let n = m.nrows();
    Ok((DMatrix::<Complex64>::identity(n, n) + m).lu().determinant())
}

/// Unwrapped phase change of `g` along `s(t)`, `t` in the sorted `ts`,
/// bisecting steps larger than `max_step`.
fn phase_change<F>(l: &TFMatrix, path: F, ts: &[f64], max_step: f64, count: &mut usize) -> Result<f64>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let vals: Vec<Complex64> = ts
        .par_iter()
        .map(|&t| g_at(l, path(t)))
        .collect::<Result<_>>()?;
    *count += ts.len();
    let mut total = 0.0;
    for k in 1..ts.len() {
        total += refine(l, &path, ts[k - 1], ts[k], vals[k - 1], vals[k], max_step, 0, count)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    l: &TFMatrix,
    path: &F,
    t0: f64,
    t1: f64,
    g0: Complex64,
    g1: Complex64,
    max_step: f64,
    depth: usize,
    count: &mut usize,
) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let d = (g1 / g0).arg();
    if d.abs() <= max_step || depth >= 40 {
        if depth >= 40 {
            log::warn!("Nyquist refinement limit reached near s = {}", path(t0));
        }
        return Ok(d);
    }
    let tm = 0.5 * (t0 + t1);
    let gm = g_at(l, path(tm))?;
    *count += 1;
    if gm.norm() == 0.0 {
        return Err(Error::Singular(format!("det(I + L) vanishes on the contour at s = {}", path(tm))));
    }
    Ok(refine(l, path, t0, tm, g0, gm, max_step, depth + 1, count)?
        + refine(l, path, tm, t1, gm, g1, max_step, depth + 1, count)?)
}

/// Seed frequencies (rad/s) on `[a, b]`: log-spaced in |omega| plus the
/// imaginary parts of nearby poles and zeros.
fn seeds(a: f64, b: f64, wmin: f64, per_decade: usize, marks: &[f64]) -> Vec<f64> {
    let mut w = vec![a, b];
    let wmax = a.abs().max(b.abs());
    if wmax > wmin {
        let decades = (wmax / wmin).log10();
        let n = (decades * per_decade as f64).ceil() as usize + 1;
        for k in 0..n {
            let x = wmin * 10f64.powf(decades * k as f64 / (n - 1).max(1) as f64);
            for v in [x, -x] {
                if v > a && v < b {
                    w.push(v);
                }
            }
        }
    }
    if a < 0.0 && b > 0.0 {
        w.push(0.0);
    }
    for &m in marks {
        for v in [m, m * (1.0 - 1e-3), m * (1.0 + 1e-3)] {
            if v > a && v < b {
                w.push(v);
            }
        }
    }
    w.sort_by(f64::total_cmp);
    w.dedup();
    w
}

pub fn nyquist_loci(l: &TFMatrix, grid: &FrequencyGrid, opts: &NyquistOptions) -> Result<NyquistResult> {
    if !l.is_square() {
        return Err(Error::Dimension("open-loop gain must be square".into()));
    }
    if !l.is_proper() {
        return Err(Error::Improper("open-loop gain must be proper for the Nyquist test".into()));
    }
    let poles = loop_poles(l)?;
    let zeros = loop_zeros(l);
    let mut axis: Vec<Complex64> = poles.iter().copied().filter(|p| p.re.abs() <= axis_tol(*p)).collect();
    axis.sort_by(|a, b| a.im.total_cmp(&b.im));
    if !opts.indent {
        if let Some(p) = axis.first() {
            return Err(Error::AxisPole(*p));
        }
    }
    let open_loop_rhp = poles.iter().filter(|p| p.re > axis_tol(**p)).count();
    let scale = poles
        .iter()
        .chain(zeros.iter())
        .map(|p| p.norm())
        .fold(2.0 * PI * grid.hz.last().copied().unwrap_or(1.0), f64::max);
    let wmax = 1e4 * scale;
    let wmin = 1e-6 * scale;
    let marks: Vec<f64> = poles.iter().chain(zeros.iter()).map(|p| p.im).collect();
    let radius: Vec<f64> = axis
        .iter()
        .map(|p| {
            let others = poles
                .iter()
                .chain(zeros.iter())
                .filter(|q| (*q - p).norm() > axis_tol(*p))
                .map(|q| (q - p).norm())
                .fold(f64::INFINITY, f64::min);
            (1e-4 * p.norm().max(1.0)).min(0.1 * others)
        })
        .collect();
    let mut total = 0.0;
    let mut count = 0;
    let mut start = -wmax;
    let axis_path = |w: f64| Complex64::new(0.0, w);
    for (p, &eps) in axis.iter().zip(&radius) {
        let stop = p.im - eps;
        if stop > start {
            let ts = seeds(start, stop, wmin, opts.per_decade, &marks);
            total += phase_change(l, axis_path, &ts, opts.max_phase_step, &mut count)?;
        }
        let centre = Complex64::new(0.0, p.im);
        let arc = move |phi: f64| centre + Complex64::from_polar(eps, phi);
        let ts: Vec<f64> = (0..=64).map(|k| -PI / 2.0 + PI * k as f64 / 64.0).collect();
        total += phase_change(l, arc, &ts, opts.max_phase_step, &mut count)?;
        start = p.im + eps;
    }
    let ts = seeds(start, wmax, wmin, opts.per_decade, &marks);
    total += phase_change(l, axis_path, &ts, opts.max_phase_step, &mut count)?;
    // closing arc: L proper, so det(I + L) tends to a constant
    let g_lo = g_at(l, Complex64::new(0.0, wmax))?;
    let g_hi = g_at(l, Complex64::new(0.0, -wmax))?;
    total += (g_hi / g_lo).arg();
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 1e-3 {
        log::warn!("Nyquist winding {turns:.6} is not close to an integer");
    }
    let encirclements_cw = -(rounded as i64);
    let closed_loop_rhp = encirclements_cw + open_loop_rhp as i64;
    let verdict = if closed_loop_rhp == 0 {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    let (freq_hz, loci) = eigen_loci(l, grid)?;
    Ok(NyquistResult {
        freq_hz,
        loci,
        encirclements_cw,
        open_loop_rhp,
        indented: axis,
        closed_loop_rhp,
        verdict,
        samples: count,
    })
}

/// Eigenvalues of `L(j 2 pi f)` over `-f` and `+f`, paired by proximity.
fn eigen_loci(l: &TFMatrix, grid: &FrequencyGrid) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let mut freq: Vec<f64> = grid.hz.iter().rev().map(|f| -f).collect();
    freq.extend(grid.hz.iter().copied());
    let n = l.rows();
    let eig: Vec<Option<Vec<Complex64>>> = freq
        .par_iter()
        .map(|f| {
            let m = l.eval(Complex64::new(0.0, 2.0 * PI * f)).ok()?;
            complex_eigen(&m).ok().map(|(lam, _)| lam)
        })
        .collect();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut loci = vec![vec![nan; freq.len()]; n];
    let mut prev: Option<Vec<Complex64>> = None;
    for (i, e) in eig.into_iter().enumerate() {
        let Some(mut lam) = e else { continue };
        if let Some(pv) = &prev {
            let mut ordered = vec![nan; n];
            let mut used = vec![false; n];
            for (k, p) in pv.iter().enumerate() {
                let best = (0..n)
                    .filter(|j| !used[*j])
                    .min_by(|a, b| (lam[*a] - p).norm().total_cmp(&(lam[*b] - p).norm()));
                if let Some(j) = best {
                    used[j] = true;
                    ordered[k] = lam[j];
                }
            }
            lam = ordered;
        }
        for k in 0..n {
            loci[k][i] = lam[k];
        }
        prev = Some(lam);
    }
    Ok((freq, loci))
}

impl NyquistResult {
    /// `freq_hz` then `l<k>_re,l<k>_im` per eigen-locus.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "freq_hz")?;
        for k in 0..self.loci.len() {
            write!(w, ",l{0}_re,l{0}_im", k + 1)?;
        }
        writeln!(w)?;
        for (i, f) in self.freq_hz.iter().enumerate() {
            write!(w, "{f:?}")?;
            for lc in &self.loci {
                write!(w, ",{:?},{:?}", lc[i].re, lc[i].im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "encirclements_cw,{}", self.encirclements_cw)?;
        writeln!(w, "open_loop_rhp_poles,{}", self.open_loop_rhp)?;
        writeln!(w, "closed_loop_rhp_poles,{}", self.closed_loop_rhp)?;
        for p in &self.indented {
            writeln!(w, "indented_pole,{:?},{:?}", p.re, p.im)?;
        }
        writeln!(w, "verdict,{}", self.verdict.as_str())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalFunction;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::log_spaced(0.01, 100.0, 50).unwrap()
    }

    #[test]
    fn zero_gain_never_encircles() {
        let r = nyquist_loci(&TFMatrix::zeros(2, 2), &grid(), &NyquistOptions::default()).unwrap();
        assert_eq!(r.encirclements_cw, 0);
        assert_eq!(r.verdict, Verdict::Stable);
    }

    #[test]
    fn small_first_order_gain_is_stable() {
        let l = RationalFunction::from_real(&[0.5], &[1.0, 1.0]).unwrap();
        let r = nyquist_loci(&TFMatrix::scalar(l), &grid(), &NyquistOptions::default()).unwrap();
        assert_eq!(r.encirclements_cw, 0);
    }

    #[test]
    fn high_gain_third_order_encircles_twice() {
        // k / (s+1)^3 is unstable in closed loop for k > 8
        let l = RationalFunction::from_real(&[20.0], &[1.0, 3.0, 3.0, 1.0]).unwrap();
        let r = nyquist_loci(&TFMatrix::scalar(l), &grid(), &NyquistOptions::default()).unwrap();
        assert_eq!(r.encirclements_cw, 2);
        assert_eq!(r.verdict, Verdict::Unstable);
    }

    #[test]
    fn integrator_is_indented() {
        // k / (s (s + 1)): stable for every k > 0
        let l = RationalFunction::from_real(&[4.0], &[0.0, 1.0, 1.0]).unwrap();
        let y = TFMatrix::scalar(l);
        let r = nyquist_loci(&y, &grid(), &NyquistOptions::default()).unwrap();
        assert_eq!(r.indented.len(), 1);
        assert_eq!(r.verdict, Verdict::Stable);
        let strict = NyquistOptions {
            indent: false,
            ..Default::default()
        };
        assert!(matches!(nyquist_loci(&y, &grid(), &strict), Err(Error::AxisPole(_))));
    }

    #[test]
    fn unstable_open_loop_stabilized() {
        // L = 2 / (s - 1): closed loop pole at -1, one ccw encirclement
        let l = RationalFunction::from_real(&[2.0], &[-1.0, 1.0]).unwrap();
        let r = nyquist_loci(&TFMatrix::scalar(l), &grid(), &NyquistOptions::default()).unwrap();
        assert_eq!(r.open_loop_rhp, 1);
        assert_eq!(r.encirclements_cw, -1);
        assert_eq!(r.verdict, Verdict::Stable);
    }
}
