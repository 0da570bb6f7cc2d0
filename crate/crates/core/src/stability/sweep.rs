//! Resonance mode analysis and singular-value sweeps.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::stability::grid::FrequencyGrid;
use crate::stability::linalg::complex_eigen;
use crate::tfmatrix::TFMatrix;

/// Local maximum of one modal-impedance trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub freq_hz: f64,
    pub magnitude: f64,
    pub trace: usize,
}

#[derive(Clone, Debug)]
pub struct RmaSweep {
    pub freq_hz: Vec<f64>,
    /// `traces[k][i]`: modal impedance of trace `k` at grid point `i`;
    /// NaN at skipped points.
    pub traces: Vec<Vec<Complex64>>,
    /// Grid indices skipped because the matrix was singular or defective.
    pub skipped: Vec<usize>,
    /// Peaks sorted by magnitude, largest first.
    pub peaks: Vec<Peak>,
}

fn nan() -> Complex64 {
    Complex64::new(f64::NAN, f64::NAN)
}

/// Modal impedances from per-frequency admittance matrices.
pub fn rma_from_matrices(freq_hz: &[f64], mats: &[Option<DMatrix<Complex64>>]) -> RmaSweep {
    let n = mats.iter().flatten().map(|m| m.nrows()).next().unwrap_or(0);
    let decomposed: Vec<Option<(Vec<Complex64>, DMatrix<Complex64>)>> = mats
        .par_iter()
        .map(|m| {
            let m = m.as_ref()?;
            let (lam, v) = complex_eigen(m).ok()?;
            if lam.iter().any(|l| l.norm() == 0.0) {
                return None;
            }
            Some((lam, v))
        })
        .collect();
    let mut traces = vec![vec![nan(); freq_hz.len()]; n];
    let mut skipped = Vec::new();
    let mut prev: Option<DMatrix<Complex64>> = None;
    for (i, d) in decomposed.into_iter().enumerate() {
        let Some((lam, v)) = d else {
            skipped.push(i);
            continue;
        };
        let order: Vec<usize> = match &prev {
            None => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| lam[a].norm().total_cmp(&lam[b].norm()));
                idx
            }
            Some(pv) => associate(pv, &v),
        };
        let mut vv = DMatrix::zeros(n, n);
        for (k, &j) in order.iter().enumerate() {
            traces[k][i] = 1.0 / lam[j];
            vv.set_column(k, &v.column(j));
        }
        prev = Some(vv);
    }
    let peaks = find_peaks(freq_hz, &traces);
    RmaSweep {
        freq_hz: freq_hz.to_vec(),
        traces,
        skipped,
        peaks,
    }
}

/// Greedy assignment of new eigenvectors to previous traces by largest
/// `|<v_prev, v_new>|`. Returns, per trace, the new column index.
fn associate(prev: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> Vec<usize> {
    let n = prev.ncols();
    let mut score: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let ip = prev.column(a).dotc(&v.column(b)).norm();
            score.push((ip, a, b));
        }
    }
    score.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, a, b) in score {
        if out[a] == usize::MAX && !used[b] {
            out[a] = b;
            used[b] = true;
        }
    }
    out
}

fn find_peaks(freq_hz: &[f64], traces: &[Vec<Complex64>]) -> Vec<Peak> {
    let mut peaks = Vec::new();
    for (k, tr) in traces.iter().enumerate() {
        let mag: Vec<f64> = tr.iter().map(|z| z.norm()).collect();
        for i in 1..mag.len().saturating_sub(1) {
            let (a, b, c) = (mag[i - 1], mag[i], mag[i + 1]);
            if b.is_finite() && a.is_finite() && c.is_finite() && b > a && b >= c {
                peaks.push(Peak {
                    freq_hz: freq_hz[i],
                    magnitude: b,
                    trace: k,
                });
            }
        }
    }
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then(a.freq_hz.total_cmp(&b.freq_hz)));
    peaks
}

fn evaluate(y: &TFMatrix, grid: &FrequencyGrid) -> Vec<Option<DMatrix<Complex64>>> {
    grid.s_points().par_iter().map(|&s| y.eval(s).ok()).collect()
}

pub fn rma_sweep(y: &TFMatrix, grid: &FrequencyGrid) -> Result<RmaSweep> {
    if !y.is_square() {
        return Err(crate::Error::Dimension("modal analysis needs a square matrix".into()));
    }
    Ok(rma_from_matrices(&grid.hz, &evaluate(y, grid)))
}

impl RmaSweep {
    /// `freq_hz` then `z<k>_re,z<k>_im,z<k>_abs` per trace.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "freq_hz")?;
        for k in 0..self.traces.len() {
            write!(w, ",z{0}_re,z{0}_im,z{0}_abs", k + 1)?;
        }
        writeln!(w)?;
        for (i, f) in self.freq_hz.iter().enumerate() {
            write!(w, "{f:?}")?;
            for tr in &self.traces {
                let z = tr[i];
                write!(w, ",{:?},{:?},{:?}", z.re, z.im, z.norm())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_peaks_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_hz,magnitude,trace")?;
        for p in &self.peaks {
            writeln!(w, "{:?},{:?},{}", p.freq_hz, p.magnitude, p.trace + 1)?;
        }
        Ok(())
    }

    /// Largest modal-impedance magnitude at each grid point.
    pub fn envelope(&self) -> Vec<f64> {
        (0..self.freq_hz.len())
            .map(|i| {
                self.traces
                    .iter()
                    .map(|t| t[i].norm())
                    .filter(|x| x.is_finite())
                    .fold(f64::NAN, f64::max)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SigmaSweep {
    pub freq_hz: Vec<f64>,
    /// Singular values per grid point, descending; empty at skipped points.
    pub sigmas: Vec<Vec<f64>>,
}

impl SigmaSweep {
    pub fn min_sigma(&self) -> Vec<f64> {
        self.sigmas
            .iter()
            .map(|s| s.last().copied().unwrap_or(f64::NAN))
            .collect()
    }

    /// `freq_hz,sigma1..sigman,sigma_min`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.sigmas.iter().map(Vec::len).max().unwrap_or(0);
        write!(w, "freq_hz")?;
        for k in 0..n {
            write!(w, ",sigma{}", k + 1)?;
        }
        writeln!(w, ",sigma_min")?;
        for (f, s) in self.freq_hz.iter().zip(&self.sigmas) {
            write!(w, "{f:?}")?;
            for k in 0..n {
                write!(w, ",{:?}", s.get(k).copied().unwrap_or(f64::NAN))?;
            }
            writeln!(w, ",{:?}", s.last().copied().unwrap_or(f64::NAN))?;
        }
        Ok(())
    }
}

pub fn sigma_sweep(y: &TFMatrix, grid: &FrequencyGrid) -> Result<SigmaSweep> {
    let sigmas = evaluate(y, grid)
        .into_par_iter()
        .map(|m| match m {
            Some(m) => {
                let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
                s.sort_by(|a, b| b.total_cmp(a));
                s
            }
            None => Vec::new(),
        })
        .collect();
    Ok(SigmaSweep {
        freq_hz: grid.hz.clone(),
        sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalFunction;

    #[test]
    fn diagonal_modal_impedances_at_dc() {
        let mut y = TFMatrix::zeros(2, 2);
        y.set(0, 0, RationalFunction::from_real(&[1.0], &[1.0, 1.0]).unwrap());
        y.set(1, 1, RationalFunction::from_real(&[2.0], &[1.0, 1.0]).unwrap());
        let m = y.eval(Complex64::new(0.0, 0.0)).unwrap();
        let r = rma_from_matrices(&[0.0], &[Some(m)]);
        let mut z: Vec<f64> = r.traces.iter().map(|t| t[0].re).collect();
        z.sort_by(f64::total_cmp);
        assert!((z[0] - 0.5).abs() < 1e-14 && (z[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let g = FrequencyGrid::log_spaced(1.0, 10.0, 5).unwrap();
        let s = sigma_sweep(&TFMatrix::identity(3), &g).unwrap();
        assert!(s.sigmas.iter().flatten().all(|x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn scalar_sigma_is_magnitude() {
        let f = RationalFunction::from_real(&[3.0], &[2.0, 1.0]).unwrap();
        let g = FrequencyGrid::log_spaced(0.5, 50.0, 7).unwrap();
        let s = sigma_sweep(&TFMatrix::scalar(f.clone()), &g).unwrap();
        for (k, s_pt) in g.s_points().into_iter().enumerate() {
            assert!((s.sigmas[k][0] - f.eval(s_pt).unwrap().norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn resonance_peak_found() {
        // parallel RLC: Y = 1/R + 1/(sL) + sC, resonance at 1/(2 pi sqrt(LC))
        let (r, l, c) = (5.0, 1e-2, 1e-2);
        let y = RationalFunction::from_real(&[1.0, l / r, l * c], &[0.0, l]).unwrap();
        let g = FrequencyGrid::log_spaced(0.5, 50.0, 400).unwrap();
        let res = rma_sweep(&TFMatrix::scalar(y), &g).unwrap();
        let f0 = 1.0 / (2.0 * std::f64::consts::PI * (l * c).sqrt());
        assert!((res.peaks[0].freq_hz - f0).abs() / f0 < 0.02);
        assert!((res.peaks[0].magnitude - r).abs() / r < 0.01);
    }
}
