use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tfmatrix::TFMatrix;

pub const DEFAULT_FMIN: f64 = 0.1;
pub const DEFAULT_FMAX: f64 = 100.0;
pub const DEFAULT_POINTS: usize = 400;
/// Extra points per base interval near a determinant minimum.
pub const DENSIFY: usize = 4;
/// Relative half-width of a densified window.
pub const DENSIFY_SPAN: f64 = 0.1;

/// Strictly increasing frequencies in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub hz: Vec<f64>,
}

impl FrequencyGrid {
    pub fn log_spaced(fmin: f64, fmax: f64, n: usize) -> Result<Self> {
        if !(fmin > 0.0 && fmax > fmin && n >= 2) {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < fmin < fmax and n >= 2 (got {fmin}, {fmax}, {n})"
            )));
        }
        let (a, b) = (fmin.ln(), fmax.ln());
        let hz = (0..n)
            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
            .collect();
        Ok(Self { hz })
    }

    pub fn linear(fmin: f64, fmax: f64, n: usize) -> Result<Self> {
        if !(fmax > fmin && n >= 2) {
            return Err(Error::InvalidParameter("linear grid needs fmax > fmin, n >= 2".into()));
        }
        let hz = (0..n)
            .map(|k| fmin + (fmax - fmin) * k as f64 / (n - 1) as f64)
            .collect();
        Ok(Self { hz })
    }

    /// Parses `fmin,fmax,n`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        let bad = || Error::InvalidParameter(format!("grid `{spec}`: expected fmin,fmax,n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let fmin = parts[0].parse().map_err(|_| bad())?;
        let fmax = parts[1].parse().map_err(|_| bad())?;
        let n = parts[2].parse().map_err(|_| bad())?;
        Self::log_spaced(fmin, fmax, n)
    }

    pub fn len(&self) -> usize {
        self.hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hz.is_empty()
    }

    pub fn s_points(&self) -> Vec<Complex64> {
        self.hz.iter().map(|f| Complex64::new(0.0, 2.0 * PI * f)).collect()
    }

    /// Adds `DENSIFY` log-spaced points per base interval within
    /// `+-DENSIFY_SPAN` of each frequency in `centers`.
    pub fn densified(&self, centers: &[f64]) -> Self {
        let mut hz = self.hz.clone();
        for &c in centers {
            let (lo, hi) = (c * (1.0 - DENSIFY_SPAN), c * (1.0 + DENSIFY_SPAN));
            for w in self.hz.windows(2) {
                if w[1] < lo || w[0] > hi {
                    continue;
                }
                let (a, b) = (w[0].ln(), w[1].ln());
                for k in 1..=DENSIFY {
                    hz.push((a + (b - a) * k as f64 / (DENSIFY + 1) as f64).exp());
                }
            }
        }
        hz.sort_by(f64::total_cmp);
        hz.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        Self { hz }
    }

    /// Default grid densified around local minima of `|det Y(j 2 pi f)|`.
    pub fn adaptive(y: &TFMatrix, fmin: f64, fmax: f64, n: usize) -> Result<Self> {
        let base = Self::log_spaced(fmin, fmax, n)?;
        let dets: Vec<f64> = base
            .s_points()
            .par_iter()
            .map(|&s| y.eval(s).map(|m| det_abs(&m)).unwrap_or(0.0))
            .collect();
        let minima: Vec<f64> = (1..dets.len() - 1)
            .filter(|&k| dets[k] < dets[k - 1] && dets[k] <= dets[k + 1])
            .map(|k| base.hz[k])
            .collect();
        Ok(base.densified(&minima))
    }

    pub fn default_for(y: &TFMatrix) -> Result<Self> {
        Self::adaptive(y, DEFAULT_FMIN, DEFAULT_FMAX, DEFAULT_POINTS)
    }
}

pub fn det_abs(m: &DMatrix<Complex64>) -> f64 {
    m.clone().lu().determinant().norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = FrequencyGrid::log_spaced(0.1, 100.0, 400).unwrap();
        assert_eq!(g.len(), 400);
        assert!((g.hz[0] - 0.1).abs() < 1e-15 && (g.hz[399] - 100.0).abs() < 1e-12);
        assert!(g.hz.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn densify_adds_points_near_center() {
        let g = FrequencyGrid::log_spaced(1.0, 10.0, 11).unwrap();
        let d = g.densified(&[5.0]);
        assert!(d.len() > g.len());
        assert!(d.hz.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(FrequencyGrid::parse("1,10,11").unwrap(), g);
        assert!(FrequencyGrid::parse("1,10").is_err());
    }
}
