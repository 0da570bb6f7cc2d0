//! Root migration across a parameter sweep.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stability::eigs::{damping_ratio, freq_hz, EigenReport};

/// Default distance, rad/s, under which two roots of one step are flagged as
/// ambiguous for pairing.
pub const PAIRING_RADIUS: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct ModeTrace {
    pub params: Vec<f64>,
    pub reports: Vec<EigenReport>,
    /// `tracks[k][i]`: root of track `k` at step `i`, `None` once the track
    /// has no partner.
    pub tracks: Vec<Vec<Option<Complex64>>>,
    /// `(step, root a, root b)` pairs closer than the pairing radius.
    pub ambiguities: Vec<(usize, Complex64, Complex64)>,
}

pub fn mode_trace(params: Vec<f64>, reports: Vec<EigenReport>, radius: f64) -> Result<ModeTrace> {
    if params.len() != reports.len() || params.is_empty() {
        return Err(Error::InvalidParameter("one report per parameter value is required".into()));
    }
    let mono = params.windows(2).all(|w| w[1] > w[0]) || params.windows(2).all(|w| w[1] < w[0]);
    if !mono {
        return Err(Error::InvalidParameter("sweep parameters must be monotone".into()));
    }
    let mut ambiguities = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        for a in 0..r.roots.len() {
            for b in a + 1..r.roots.len() {
                if (r.roots[a] - r.roots[b]).norm() < radius {
                    ambiguities.push((i, r.roots[a], r.roots[b]));
                }
            }
        }
    }
    let steps = params.len();
    let mut tracks: Vec<Vec<Option<Complex64>>> = reports[0]
        .roots
        .iter()
        .map(|&r| {
            let mut t = vec![None; steps];
            t[0] = Some(r);
            t
        })
        .collect();
    for i in 1..steps {
        let new = &reports[i].roots;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (k, t) in tracks.iter().enumerate() {
            if let Some(prev) = t[i - 1] {
                for (j, r) in new.iter().enumerate() {
                    pairs.push(((r - prev).norm(), k, j));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut taken_t = vec![false; tracks.len()];
        let mut taken_r = vec![false; new.len()];
        for (_, k, j) in pairs {
            if !taken_t[k] && !taken_r[j] {
                tracks[k][i] = Some(new[j]);
                taken_t[k] = true;
                taken_r[j] = true;
            }
        }
        for (j, r) in new.iter().enumerate() {
            if !taken_r[j] {
                let mut t = vec![None; steps];
                t[i] = Some(*r);
                tracks.push(t);
            }
        }
    }
    Ok(ModeTrace {
        params,
        reports,
        tracks,
        ambiguities,
    })
}

impl ModeTrace {
    /// First pair of consecutive steps where the verdict changes.
    pub fn stability_crossing(&self) -> Option<(f64, f64)> {
        self.reports
            .windows(2)
            .zip(self.params.windows(2))
            .find(|(r, _)| r[0].verdict != r[1].verdict)
            .map(|(_, p)| (p[0], p[1]))
    }

    /// `param,track,re,im,freq_hz,damping_ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "param,track,re,im,freq_hz,damping_ratio")?;
        for (i, p) in self.params.iter().enumerate() {
            for (k, t) in self.tracks.iter().enumerate() {
                if let Some(r) = t[i] {
                    writeln!(
                        w,
                        "{p:?},{},{:?},{:?},{:?},{:?}",
                        k + 1,
                        r.re,
                        r.im,
                        freq_hz(r),
                        damping_ratio(r)
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_step() {
        let r = EigenReport::from_roots(vec![c(-1.0, 2.0)]);
        let t = mode_trace(vec![0.5], vec![r], PAIRING_RADIUS).unwrap();
        assert_eq!(t.tracks.len(), 1);
        assert!(t.stability_crossing().is_none());
    }

    #[test]
    fn tracks_follow_nearest_roots() {
        let r0 = EigenReport::from_roots(vec![c(-1.0, 10.0), c(-5.0, 50.0)]);
        let r1 = EigenReport::from_roots(vec![c(-4.0, 52.0), c(0.5, 11.0)]);
        let t = mode_trace(vec![0.1, 0.2], vec![r0, r1], PAIRING_RADIUS).unwrap();
        let slow = t.tracks.iter().find(|tr| tr[0] == Some(c(-1.0, 10.0))).unwrap();
        assert_eq!(slow[1], Some(c(0.5, 11.0)));
        assert_eq!(t.stability_crossing(), Some((0.1, 0.2)));
    }

    #[test]
    fn close_roots_flagged() {
        let r = EigenReport::from_roots(vec![c(-1.0, 10.0), c(-1.0, 10.5)]);
        let t = mode_trace(vec![1.0], vec![r], PAIRING_RADIUS).unwrap();
        assert_eq!(t.ambiguities.len(), 1);
    }
}
