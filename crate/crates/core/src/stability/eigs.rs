use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::sort_roots;
use crate::rational::{Cancellation, RationalFunction, CANCEL_TOL};
use crate::tfmatrix::TFMatrix;

/// Real part above which a root counts as unstable, rad/s.
pub const TOL_RHP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenReport {
    /// Roots of the simplified determinant numerator, rad/s.
    pub roots: Vec<Complex64>,
    pub cancelled: Vec<Cancellation>,
    /// Poles of the simplified determinant in the closed right half plane.
    /// The root test assumes these are audited separately.
    pub rhp_poles: Vec<Complex64>,
    pub tol_rhp: f64,
    pub verdict: Verdict,
}

pub fn freq_hz(root: Complex64) -> f64 {
    root.im / (2.0 * PI)
}

pub fn damping_ratio(root: Complex64) -> f64 {
    let m = root.norm();
    if m == 0.0 {
        0.0
    } else {
        -root.re / m
    }
}

impl EigenReport {
    pub fn from_roots(mut roots: Vec<Complex64>) -> Self {
        sort_roots(&mut roots);
        let verdict = if roots.iter().any(|r| r.re > TOL_RHP) {
            Verdict::Unstable
        } else {
            Verdict::Stable
        };
        Self {
            roots,
            cancelled: Vec::new(),
            rhp_poles: Vec::new(),
            tol_rhp: TOL_RHP,
            verdict,
        }
    }

    /// Roots of a determinant after common factors are cancelled.
    pub fn from_determinant(det: &RationalFunction) -> Result<Self> {
        Self::build(det, None)
    }

    /// Roots of `det Y`, each refined by Newton steps on `det Y(s)`
    /// evaluated directly. The numerator polynomial alone can be badly
    /// conditioned for clustered, lightly damped modes.
    pub fn from_admittance(y: &TFMatrix) -> Result<Self> {
        Self::build(&y.det()?, Some(y))
    }

    fn build(det: &RationalFunction, y: Option<&TFMatrix>) -> Result<Self> {
        let (simple, cancelled) = det.simplify(CANCEL_TOL)?;
        match simple.num().degree() {
            None | Some(0) => return Err(Error::ConstantPolynomial),
            _ => {}
        }
        let mut roots = simple.zeros()?;
        if let Some(y) = y {
            roots = polish_roots(&roots, |s| Ok(y.eval(s)?.determinant() * simple.den().eval(s)));
        }
        let mut report = Self::from_roots(roots);
        report.cancelled = cancelled;
        report.rhp_poles = simple.poles()?.into_iter().filter(|p| p.re > -TOL_RHP).collect();
        if !report.rhp_poles.is_empty() {
            log::info!(
                "determinant has {} poles with Re >= 0; the root test assumes they are audited",
                report.rhp_poles.len()
            );
        }
        Ok(report)
    }

    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }

    /// Root with the largest real part.
    pub fn dominant(&self) -> Option<Complex64> {
        self.upper_member(self.roots.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re)))
    }

    /// Root with the largest real part among those with `|f| >= fmin` Hz.
    pub fn dominant_oscillatory(&self, fmin: f64) -> Option<Complex64> {
        self.upper_member(
            self.roots
                .iter()
                .copied()
                .filter(|r| freq_hz(*r).abs() >= fmin)
                .max_by(|a, b| a.re.total_cmp(&b.re)),
        )
    }

    /// The positive-frequency member when `r` has a conjugate partner.
    fn upper_member(&self, r: Option<Complex64>) -> Option<Complex64> {
        let r = r?;
        if r.im >= 0.0 {
            return Some(r);
        }
        let tol = 1e-8 * (1.0 + r.norm());
        let paired = self.roots.iter().any(|q| (q - r.conj()).norm() <= tol);
        Some(if paired { r.conj() } else { r })
    }

    /// Nearest root to `target`.
    pub fn nearest(&self, target: Complex64) -> Option<Complex64> {
        self.roots
            .iter()
            .copied()
            .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()))
    }

    /// `re,im,freq_hz,damping_ratio`, one root per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "re,im,freq_hz,damping_ratio")?;
        for r in &self.roots {
            writeln!(w, "{:?},{:?},{:?},{:?}", r.re, r.im, freq_hz(*r), damping_ratio(*r))?;
        }
        Ok(())
    }
}

/// Simultaneous (Aberth) refinement of all roots of `h`, an analytic
/// function with exactly these roots. The mutual repulsion term keeps two
/// approximations from settling on the same root. The input is returned
/// unchanged when the iteration does not converge.
fn polish_roots<H>(roots: &[Complex64], h: H) -> Vec<Complex64>
where
    H: Fn(Complex64) -> Result<Complex64>,
{
    let newton = |z: Complex64| -> Option<Complex64> {
        let hz = h(z).ok()?;
        if hz == Complex64::new(0.0, 0.0) {
            return Some(Complex64::new(0.0, 0.0));
        }
        let d = 1e-7 * (1.0 + z.norm());
        let dh = (h(z + d).ok()? - h(z - d).ok()?) / (2.0 * d);
        let n = hz / dh;
        n.is_finite().then_some(n)
    };
    let mut z = roots.to_vec();
    let mut worst = f64::INFINITY;
    for _ in 0..60 {
        worst = 0.0;
        for i in 0..z.len() {
            let Some(n) = newton(z[i]) else {
                return roots.to_vec();
            };
            let repel: Complex64 = (0..z.len()).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = n / (1.0 - n * repel);
            if !step.is_finite() {
                return roots.to_vec();
            }
            z[i] -= step;
            worst = worst.max(step.norm() / (1.0 + z[i].norm()));
        }
        // Steps stall near 1e-13 on evaluation noise.
        if worst <= 1e-12 {
            return z;
        }
    }
    if worst <= 1e-9 {
        return z;
    }
    log::debug!("root refinement did not converge; keeping polynomial roots");
    roots.to_vec()
}
