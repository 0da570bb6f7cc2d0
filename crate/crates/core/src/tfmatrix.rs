//! Matrices of rational functions.
//!
//! Determinants, inverses and Schur complements of matrices larger than 2x2
//! are computed on a row-wise polynomial form `Y = diag(l)^-1 P`: every row is
//! brought to a common denominator `l_i`, the needed polynomial determinants
//! of `P` are sampled on a circle in the s-plane and recovered by an inverse
//! DFT. The circle radius is re-estimated once from the recovered
//! coefficients so that the scaled coefficients are roughly balanced.
//! Determinants first try the cheaper and better conditioned form with each
//! distinct denominator taken once.

use std::f64::consts::{FRAC_1_PI, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::RationalFunction;

/// Relative level below which interpolated leading coefficients are noise.
const INTERP_TRIM: f64 = 1e-11;
/// Weighted share of oversampled coefficients allowed above the degree bound.
const DISTINCT_CHECK: f64 = 1e-6;
/// Relative coefficient gap under which two monic entry denominators are
/// taken to be the same.
const SAME_DEN: f64 = 1e-9;
/// Smallest ratio between the sampling radius and any pole modulus.
const CLEARANCE: f64 = 1.25;
/// Relative distances from a denominator root at which a leftover pole is
/// probed.
const POLE_PROBE: [f64; 2] = [1e-6, 1e-3];

#[derive(Clone, Debug, PartialEq)]
pub struct TFMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFunction>,
}

impl TFMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![RationalFunction::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, RationalFunction::one());
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<RationalFunction>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn scalar(f: RationalFunction) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![f],
        }
    }

    pub fn from_constant(m: &DMatrix<Complex64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != Complex64::new(0.0, 0.0) {
                    out.set(i, j, RationalFunction::constant(m[(i, j)]));
                }
            }
        }
        out
    }

    pub fn from_real_constant(m: &DMatrix<f64>) -> Self {
        Self::from_constant(&m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: RationalFunction) {
        self.entries[i * self.cols + j] = f;
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.is_real())
    }

    pub fn is_proper(&self) -> bool {
        self.entries.iter().all(|e| e.is_proper())
    }

    fn same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other, "add")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(k)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "mul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RationalFunction::zero();
                for k in 0..self.cols {
                    let t = self.get(i, k).mul(other.get(k, j))?;
                    acc = acc.add(&t)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// `left * self * right` for constant real matrices.
    pub fn congruence(&self, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Result<Self> {
        let l = Self::from_real_constant(left);
        let r = Self::from_real_constant(right);
        l.mul(self)?.mul(&r)
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Result<Self> {
        if r0 + nr > self.rows || c0 + nc > self.cols {
            return Err(Error::Dimension(format!(
                "block {nr}x{nc} at ({r0},{c0}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out.set(i, j, self.get(r0 + i, c0 + j).clone());
            }
        }
        Ok(out)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) -> Result<()> {
        if r0 + b.rows > self.rows || c0 + b.cols > self.cols {
            return Err(Error::Dimension(format!(
                "block {}x{} at ({r0},{c0}) outside {}x{}",
                b.rows, b.cols, self.rows, self.cols
            )));
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
        Ok(())
    }

    /// Rows and columns picked by index.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = self.get(i, j);
                if e.is_zero() {
                    continue;
                }
                m[(i, j)] = e
                    .eval(s)
                    .map_err(|_| Error::PoleHit { row: i, col: j, s })?;
            }
        }
        Ok(m)
    }

    /// Evaluates at many points in parallel.
    pub fn eval_many(&self, points: &[Complex64]) -> Result<Vec<DMatrix<Complex64>>> {
        points.par_iter().map(|&s| self.eval(s)).collect()
    }

    pub fn det(&self) -> Result<RationalFunction> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "determinant of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        match self.rows {
            0 => Ok(RationalFunction::one()),
            1 => Ok(self.get(0, 0).clone()),
            _ => {
                let rf = RowForm::new(self);
                let all: Vec<usize> = (0..self.rows).collect();
                if let Some(d) = self.det_distinct(&rf)? {
                    return Ok(d);
                }
                let det_p = rf.det_poly(&all)?;
                RationalFunction::new(det_p, rf.denominator_product(&all))
            }
        }
    }

    /// `det Y` over the product of the distinct entry denominators, each
    /// raised only as far as `det Y` needs, or `None` when that fails.
    ///
    /// Row-wise clearing multiplies a denominator shared by several rows in
    /// more than once, which plants spurious, clustered common factors in
    /// the numerator. Block admittances usually need each block denominator
    /// once, so multiplicities start at one and are raised while `det Y`
    /// times the product still has a pole next to a denominator root.
    fn det_distinct(&self, rf: &RowForm) -> Result<Option<RationalFunction>> {
        let monic = |p: &Polynomial| p.scale(Complex64::new(1.0, 0.0) / p.leading());
        let same = |a: &Polynomial, b: &Polynomial| monic(a).approx_eq(&monic(b), SAME_DEN);
        let mut distinct: Vec<Polynomial> = Vec::new();
        for e in &self.entries {
            if e.is_zero() || e.den().degree() == Some(0) {
                continue;
            }
            if !distinct.iter().any(|d| same(d, e.den())) {
                distinct.push(monic(e.den()));
            }
        }
        // A denominator enters a term of the expansion at most once per row
        // and once per column it occupies.
        let cap: Vec<usize> = distinct
            .iter()
            .map(|d| {
                let has = |i: usize, j: usize| same(self.get(i, j).den(), d);
                let rows = (0..self.rows).filter(|&i| (0..self.cols).any(|j| has(i, j))).count();
                let cols = (0..self.cols).filter(|&j| (0..self.rows).any(|i| has(i, j))).count();
                rows.min(cols)
            })
            .collect();
        let den_roots: Vec<Vec<Complex64>> = distinct.iter().map(|d| d.roots()).collect::<Result<_>>()?;
        let mut mult = vec![1usize; distinct.len()];
        let product = |mult: &[usize]| {
            distinct
                .iter()
                .zip(mult)
                .fold(Polynomial::one(), |acc, (d, &m)| (0..m).fold(acc, |a, _| &a * d))
        };
        // Factor by factor: the expanded product loses all accuracy next to
        // a cluster of its roots.
        // Also returns the Hadamard bound on the same scale, which sizes the
        // rounding error of the determinant.
        let cleared_scaled = |mult: &[usize], s: Complex64| -> Result<(Complex64, f64)> {
            let y = self.eval(s)?;
            let mut v = y.determinant();
            let mut h: f64 = y.row_iter().map(|r| r.norm()).product();
            for (d, &m) in distinct.iter().zip(mult) {
                let f = d.eval(s).powu(m as u32);
                v *= f;
                h *= f.norm();
            }
            Ok((v, h))
        };
        let cleared = |mult: &[usize], s: Complex64| cleared_scaled(mult, s).map(|(v, _)| v);
        loop {
            let mut raised = false;
            'probe: for (k, roots) in den_roots.iter().enumerate() {
                for &r in roots {
                    let u = Complex64::from_polar(1.0, 0.7);
                    let mut ratio = f64::INFINITY;
                    for scale in POLE_PROBE {
                        let eps = scale * (1.0 + r.norm());
                        let (near, far) = match (cleared(&mult, r + u * eps), cleared(&mult, r + u * (10.0 * eps))) {
                            (Ok(a), Ok(b)) => (a.norm(), b.norm()),
                            (Err(Error::PoleHit { .. }), _) | (_, Err(Error::PoleHit { .. })) => continue,
                            (Err(e), _) | (_, Err(e)) => return Err(e),
                        };
                        ratio = ratio.min(near / far);
                    }
                    // A leftover pole makes the closer sample ~10x larger at
                    // both scales; rounding noise only shows at the fine one.
                    if ratio > 3.0 && ratio.is_finite() {
                        if mult[k] >= cap[k] {
                            return Ok(None);
                        }
                        mult[k] += 1;
                        raised = true;
                        break 'probe;
                    }
                }
            }
            if !raised {
                break;
            }
        }
        let dprod = product(&mult);
        let moduli: Vec<f64> = den_roots.iter().flatten().map(|r| r.norm()).collect();
        let all: Vec<usize> = (0..self.rows).collect();
        // det Y grows at most like the product of each row's largest excess
        // of numerator over denominator degree.
        let excess: usize = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .filter_map(|j| {
                        let e = self.get(i, j);
                        let (n, d) = (e.num().degree()?, e.den().degree().unwrap_or(0));
                        Some(n.saturating_sub(d))
                    })
                    .max()
                    .unwrap_or(0)
            })
            .sum();
        let bound = rf.degree_of(&all).min(dprod.degree().unwrap_or(0) + excess);
        // Oversampled so the coefficients above `bound` measure how far the
        // samples are from a polynomial of that degree. Each coefficient is
        // taken from the circle where its rounding error is smallest.
        let m = 2 * bound + 2;
        let mut best = vec![(f64::INFINITY, Complex64::new(0.0, 0.0)); m];
        for r in sample_radii(rf.rho_hint, &moduli) {
            let (c, peak) = match circle_coeffs(m, r, &|s| cleared_scaled(&mult, s)) {
                Ok(v) => v,
                Err(Error::PoleHit { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            for (k, ck) in c.into_iter().enumerate() {
                let err = peak * r.powi(-(k as i32));
                if err < best[k].0 {
                    best[k] = (err, ck);
                }
            }
        }
        // Above `bound` only rounding noise may remain.
        if best.iter().skip(bound + 1).any(|(err, c)| !(c.norm() <= DISTINCT_CHECK * err)) {
            return Ok(None);
        }
        // Leading coefficients at the rounding level are dropped as well.
        let mut keep = bound + 1;
        while keep > 1 && best[keep - 1].0 * 1e-13 >= best[keep - 1].1.norm() {
            keep -= 1;
        }
        let wide = Polynomial::new(best.into_iter().take(keep).map(|(_, c)| c).collect());
        let wide = if rf.real { wide.re_part() } else { wide };
        let num = Polynomial::new(wide.coeffs().iter().take(bound + 1).copied().collect());
        let den = dprod.scale(Complex64::new(1.0, 0.0) / dprod.leading());
        let den = if rf.real { den.re_part() } else { den };
        Ok(Some(RationalFunction::new(num, den)?))
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "inverse of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        match self.rows {
            0 => Ok(Self::zeros(0, 0)),
            1 => Ok(Self::scalar(self.get(0, 0).recip()?)),
            2 => {
                let d = self.det()?;
                if d.is_zero() {
                    return Err(Error::Singular("2x2 transfer matrix".into()));
                }
                let inv_d = d.recip()?;
                let mut out = Self::zeros(2, 2);
                out.set(0, 0, self.get(1, 1).mul(&inv_d)?);
                out.set(1, 1, self.get(0, 0).mul(&inv_d)?);
                out.set(0, 1, self.get(0, 1).neg().mul(&inv_d)?);
                out.set(1, 0, self.get(1, 0).neg().mul(&inv_d)?);
                Ok(out)
            }
            n => {
                let rf = RowForm::new(self);
                let (det_p, adj) = rf.adjugate()?;
                if det_p.is_zero() {
                    return Err(Error::Singular(format!("{n}x{n} transfer matrix")));
                }
                let mut out = Self::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let num = &adj[i * n + j] * &rf.l[j];
                        out.set(i, j, RationalFunction::new(num, det_p.clone())?);
                    }
                }
                Ok(out)
            }
        }
    }

    /// `Y_kk - Y_ke Y_ee^-1 Y_ek` for the kept index set `keep`.
    ///
    /// Each entry is formed from one bordered determinant of the row-wise
    /// polynomial form, so the result carries no spurious common factors
    /// beyond the determinant of the eliminated block.
    pub fn schur_complement(&self, keep: &[usize]) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("Schur complement of a non-square matrix".into()));
        }
        let n = self.rows;
        if keep.iter().any(|&k| k >= n) {
            return Err(Error::Dimension(format!("kept index outside 0..{n}")));
        }
        let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        if elim.is_empty() {
            return Ok(self.select(keep, keep));
        }
        let rf = RowForm::new(self);
        let (det_e, border) = rf.bordered(keep, &elim)?;
        if det_e.is_zero() {
            return Err(Error::Singular("eliminated block".into()));
        }
        let k = keep.len();
        let mut out = Self::zeros(k, k);
        for (a, &i) in keep.iter().enumerate() {
            let den = &rf.l[i] * &det_e;
            for b in 0..k {
                out.set(a, b, RationalFunction::new(border[a * k + b].clone(), den.clone())?);
            }
        }
        Ok(out)
    }

    /// Entrywise [`RationalFunction::simplify`].
    pub fn simplified(&self, tol: f64) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.simplify(tol).map(|(f, _)| f))
            .collect::<Result<_>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    /// Largest numerator or denominator degree over all entries.
    pub fn max_degree(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.num().degree().unwrap_or(0).max(e.den().degree().unwrap_or(0)))
            .max()
            .unwrap_or(0)
    }
}

/// `Y = diag(l)^-1 P` with polynomial `P`.
struct RowForm {
    n: usize,
    l: Vec<Polynomial>,
    p: Vec<Polynomial>,
    row_deg: Vec<usize>,
    real: bool,
    rho_hint: f64,
}

impl RowForm {
    fn new(y: &TFMatrix) -> Self {
        let n = y.rows;
        let mut l = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n * n);
        let mut row_deg = Vec::with_capacity(n);
        let mut log_sum = 0.0;
        let mut log_count = 0usize;
        for i in 0..n {
            let mut distinct: Vec<Polynomial> = Vec::new();
            for j in 0..n {
                let e = y.get(i, j);
                if e.is_zero() || e.den().degree() == Some(0) {
                    continue;
                }
                if !distinct.iter().any(|d| d.approx_eq(e.den(), 1e-12)) {
                    distinct.push(e.den().clone());
                }
            }
            for d in &distinct {
                let m = d.degree().unwrap_or(0);
                let c0 = d.coeffs()[0].norm();
                if m > 0 && c0 > 0.0 {
                    log_sum += (c0 / d.leading().norm()).ln() / m as f64;
                    log_count += 1;
                }
            }
            let li = distinct
                .iter()
                .fold(Polynomial::one(), |acc, d| &acc * d);
            let mut deg = 0;
            for j in 0..n {
                let e = y.get(i, j);
                let mut pij = e.num().clone();
                if !e.is_zero() {
                    // Multiply by every row denominator except this entry's own.
                    let mut own_used = e.den().degree() == Some(0);
                    for d in &distinct {
                        if !own_used && d.approx_eq(e.den(), 1e-12) {
                            own_used = true;
                            continue;
                        }
                        pij = &pij * d;
                    }
                    // A constant denominator is monic, i.e. exactly one.
                    deg = deg.max(pij.degree().unwrap_or(0));
                }
                p.push(pij);
            }
            l.push(li);
            row_deg.push(deg);
        }
        let rho_hint = if log_count > 0 {
            (log_sum / log_count as f64).exp()
        } else {
            1.0
        };
        Self {
            n,
            real: y.is_real(),
            l,
            p,
            row_deg,
            rho_hint,
        }
    }

    fn denominator_product(&self, rows: &[usize]) -> Polynomial {
        rows.iter().fold(Polynomial::one(), |acc, &i| &acc * &self.l[i])
    }

    fn eval_p(&self, s: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.p[i * self.n + j].eval(s))
    }

    fn degree_of(&self, rows: &[usize]) -> usize {
        rows.iter().map(|&i| self.row_deg[i]).sum()
    }

    fn det_poly(&self, idx: &[usize]) -> Result<Polynomial> {
        let bound = self.degree_of(idx);
        let out = interpolate(&[bound], self.rho_hint, self.real, &[], |s| {
            let p = self.eval_p(s);
            let sub = p.select_rows(idx).select_columns(idx);
            Ok(vec![sub.determinant()])
        })?;
        Ok(out.into_iter().next().unwrap_or_else(Polynomial::zero))
    }

    /// `det P` and the adjugate of `P`, row-major.
    fn adjugate(&self) -> Result<(Polynomial, Vec<Polynomial>)> {
        let n = self.n;
        let total = self.degree_of(&(0..n).collect::<Vec<_>>());
        let mut bounds = vec![total];
        for _i in 0..n {
            for j in 0..n {
                bounds.push(total - self.row_deg[j]);
            }
        }
        let mut polys = interpolate(&bounds, self.rho_hint, self.real, &[], |s| {
            let p = self.eval_p(s);
            let lu = p.clone().lu();
            let d = lu.determinant();
            let mut out = Vec::with_capacity(1 + n * n);
            out.push(d);
            match lu.try_inverse() {
                Some(inv) => {
                    for i in 0..n {
                        for j in 0..n {
                            out.push(d * inv[(i, j)]);
                        }
                    }
                }
                None => {
                    // Sample point on a root of det P: fall back to cofactors.
                    for i in 0..n {
                        for j in 0..n {
                            out.push(cofactor(&p, j, i));
                        }
                    }
                }
            }
            Ok(out)
        })?;
        let det = polys.remove(0);
        Ok((det, polys))
    }

    /// `det P_ee` and the bordered determinants `det P[e+{i}, e+{j}]`.
    fn bordered(&self, keep: &[usize], elim: &[usize]) -> Result<(Polynomial, Vec<Polynomial>)> {
        let de = self.degree_of(elim);
        let mut bounds = vec![de];
        for &i in keep {
            for _ in keep {
                bounds.push(de + self.row_deg[i]);
            }
        }
        let mut polys = interpolate(&bounds, self.rho_hint, self.real, &[], |s| {
            let p = self.eval_p(s);
            let mut out = Vec::with_capacity(1 + keep.len() * keep.len());
            let pee = p.select_rows(elim).select_columns(elim);
            out.push(pee.determinant());
            for &i in keep {
                for &j in keep {
                    let mut rows = elim.to_vec();
                    rows.push(i);
                    let mut cols = elim.to_vec();
                    cols.push(j);
                    out.push(p.select_rows(&rows).select_columns(&cols).determinant());
                }
            }
            Ok(out)
        })?;
        let det = polys.remove(0);
        Ok((det, polys))
    }
}

fn cofactor(p: &DMatrix<Complex64>, i: usize, j: usize) -> Complex64 {
    let n = p.nrows();
    let rows: Vec<usize> = (0..n).filter(|&r| r != i).collect();
    let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
    let minor = p.select_rows(&rows).select_columns(&cols).determinant();
    if (i + j).is_multiple_of(2) {
        minor
    } else {
        -minor
    }
}

/// Recovers polynomials of known degree bounds from samples on a circle.
///
/// `f` returns one value per output at a sample point. The first output
/// drives the radius re-estimate.
fn interpolate<F>(bounds: &[usize], rho_hint: f64, real: bool, avoid: &[f64], f: F) -> Result<Vec<Polynomial>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync,
{
    let mut rho = clear_radius(
        if rho_hint.is_finite() && rho_hint > 0.0 {
            rho_hint
        } else {
            1.0
        },
        avoid,
    );
    let mut result = interpolate_once(bounds, rho, real, &f)?;
    if let Some(r) = balanced_radius(&result[0]) {
        let r = clear_radius(r, avoid);
        if (r / rho).ln().abs() > 0.4 {
            rho = r;
            result = interpolate_once(bounds, rho, real, &f)?;
        }
    }
    Ok(result)
}

fn interpolate_once<F>(bounds: &[usize], rho: f64, real: bool, f: &F) -> Result<Vec<Polynomial>>
where
    F: Fn(Complex64) -> Result<Vec<Complex64>> + Sync,
{
    let m = bounds.iter().copied().max().unwrap_or(0) + 1;
    // Fixed phase offset keeps sample points off the real axis.
    let phi = FRAC_1_PI;
    let points: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(rho, phi + 2.0 * PI * k as f64 / m as f64))
        .collect();
    let samples: Vec<Vec<Complex64>> = points.par_iter().map(|&s| f(s)).collect::<Result<_>>()?;
    let twiddle: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / m as f64))
        .collect();
    let mut out = Vec::with_capacity(bounds.len());
    for (o, &bound) in bounds.iter().enumerate() {
        let mut b = vec![Complex64::new(0.0, 0.0); bound + 1];
        for (k, bk) in b.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, sample) in samples.iter().enumerate() {
                acc += sample[o] * twiddle[(k * j) % m];
            }
            *bk = acc / m as f64;
        }
        let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            out.push(Polynomial::zero());
            continue;
        }
        while b.len() > 1 && b.last().map(|c| c.norm()).unwrap_or(0.0) <= INTERP_TRIM * scale {
            b.pop();
        }
        let coeffs: Vec<Complex64> = b
            .iter()
            .enumerate()
            .map(|(k, bk)| {
                bk * Complex64::from_polar(1.0, -(k as f64) * phi) * rho.powi(-(k as i32))
            })
            .collect();
        let p = Polynomial::new(coeffs);
        out.push(if real { p.re_part() } else { p });
    }
    Ok(out)
}

/// Radius at which the lowest and highest significant coefficients balance.
/// Nearest radius to `rho` keeping a ratio of at least [`CLEARANCE`] to
/// every nonzero modulus in `avoid`, so no sample sits next to a pole.
/// Radii spanning the pole moduli around `rho`, each kept clear of them.
fn sample_radii(rho: f64, moduli: &[f64]) -> Vec<f64> {
    let pos = moduli.iter().copied().filter(|x| *x > 0.0 && x.is_finite());
    let lo = pos.clone().fold(rho, f64::min) / 2.0;
    let hi = pos.fold(rho, f64::max) * 2.0;
    let mut out = vec![clear_radius(rho, moduli)];
    let mut r = lo;
    while r <= hi * 1.000_001 && out.len() < 12 {
        let c = clear_radius(r, moduli);
        if out.iter().all(|x| (x / c).ln().abs() > 0.1) {
            out.push(c);
        }
        r *= 2.0;
    }
    out
}

/// Coefficients of the degree `m - 1` interpolant of `f` on a circle of
/// radius `rho`, and the largest error scale `f` reported on it.
fn circle_coeffs<F>(m: usize, rho: f64, f: &F) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(Complex64) -> Result<(Complex64, f64)> + Sync,
{
    let phi = FRAC_1_PI;
    let points: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(rho, phi + 2.0 * PI * k as f64 / m as f64))
        .collect();
    let samples: Vec<(Complex64, f64)> = points.par_iter().map(|&s| f(s)).collect::<Result<_>>()?;
    let peak = samples.iter().map(|z| z.1).fold(0.0, f64::max);
    let coeffs = (0..m)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, z) in samples.iter().enumerate() {
                acc += z.0 * Complex64::from_polar(1.0, -2.0 * PI * ((k * j) % m) as f64 / m as f64);
            }
            acc / m as f64 * Complex64::from_polar(1.0, -(k as f64) * phi) * rho.powi(-(k as i32))
        })
        .collect();
    Ok((coeffs, peak))
}

fn clear_radius(rho: f64, avoid: &[f64]) -> f64 {
    let mut m: Vec<f64> = avoid.iter().copied().filter(|x| *x > 0.0 && x.is_finite()).collect();
    if m.iter().all(|x| (x / rho).ln().abs() >= CLEARANCE.ln()) {
        return rho;
    }
    m.sort_by(f64::total_cmp);
    let mut cands = vec![m[0] / CLEARANCE, m[m.len() - 1] * CLEARANCE];
    for w in m.windows(2) {
        if w[1] / w[0] >= CLEARANCE * CLEARANCE {
            cands.push((w[0] * w[1]).sqrt());
        }
    }
    cands
        .into_iter()
        .min_by(|a, b| (a / rho).ln().abs().total_cmp(&(b / rho).ln().abs()))
        .unwrap_or(rho)
}

fn balanced_radius(p: &Polynomial) -> Option<f64> {
    let d = p.degree()?;
    if d == 0 {
        return None;
    }
    let c = p.coeffs();
    let scale = p.max_abs();
    let lo = c.iter().position(|x| x.norm() > 1e-13 * scale)?;
    if lo >= d {
        return None;
    }
    let r = (c[lo].norm() / c[d].norm()).powf(1.0 / (d - lo) as f64);
    (r.is_finite() && r > 0.0).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rf(num: &[f64], den: &[f64]) -> RationalFunction {
        RationalFunction::from_real(num, den).unwrap()
    }

    fn random_tf(seed: u64, n: usize) -> TFMatrix {
        // Small LCG so the test has no extra dependencies.
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = TFMatrix::zeros(n, n);
        for i in 0..n {
            let den = [2.0 + next().abs(), 0.5 + next().abs(), 1.0];
            for j in 0..n {
                m.set(i, j, rf(&[next(), next()], &den));
            }
        }
        m
    }

    #[test]
    fn identity_det_is_one() {
        for n in 1..5 {
            let d = TFMatrix::identity(n).det().unwrap();
            assert!((d.eval(c(0.3, 0.2)).unwrap() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_adds() {
        let mut a = TFMatrix::zeros(2, 2);
        a.set(0, 0, rf(&[1.0], &[0.0, 1.0]));
        a.set(1, 1, rf(&[1.0], &[0.0, 1.0]));
        let b = a.add(&a).unwrap();
        assert_eq!(b.get(0, 0).den().degree(), Some(1));
        assert!((b.eval(c(1.0, 0.0)).unwrap()[(0, 0)] - 2.0).norm() < 1e-15);
    }

    #[test]
    fn pole_hit_names_entry() {
        let mut a = TFMatrix::identity(2);
        a.set(1, 0, rf(&[1.0], &[1.0, 1.0]));
        match a.eval(c(-1.0, 0.0)) {
            Err(Error::PoleHit { row, col, .. }) => assert_eq!((row, col), (1, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interpolated_det_matches_pointwise() {
        for n in 3..7 {
            let m = random_tf(n as u64, n);
            let d = m.det().unwrap();
            for s in [c(0.1, 1.0), c(-0.4, 3.0), c(2.0, -0.5)] {
                let direct = m.eval(s).unwrap().determinant();
                let got = d.eval(s).unwrap();
                assert!((got - direct).norm() <= 1e-9 * direct.norm().max(1e-12), "n={n}");
            }
        }
    }

    #[test]
    fn interpolated_inverse_matches_pointwise() {
        let m = random_tf(9, 4);
        let inv = m.inverse().unwrap();
        let s = c(0.2, 0.9);
        let direct = m.eval(s).unwrap().try_inverse().unwrap();
        let got = inv.eval(s).unwrap();
        assert!((got - &direct).norm() <= 1e-9 * direct.norm());
    }

    #[test]
    fn schur_complement_matches_pointwise() {
        let m = random_tf(21, 5);
        let keep = [1, 3];
        let sc = m.schur_complement(&keep).unwrap();
        let s = c(-0.1, 2.2);
        let y = m.eval(s).unwrap();
        let elim = [0, 2, 4];
        let ykk = y.select_rows(&keep).select_columns(&keep);
        let yke = y.select_rows(&keep).select_columns(&elim);
        let yee = y.select_rows(&elim).select_columns(&elim);
        let yek = y.select_rows(&elim).select_columns(&keep);
        let direct = ykk - yke * yee.try_inverse().unwrap() * yek;
        let got = sc.eval(s).unwrap();
        assert!((got - &direct).norm() <= 1e-9 * direct.norm());
    }

    #[test]
    fn two_by_two_det_shares_denominator() {
        let g = [3.0, 0.2, 1.0];
        let mut m = TFMatrix::zeros(2, 2);
        m.set(0, 0, rf(&[1.0, 1.0], &g));
        m.set(0, 1, rf(&[2.0], &g));
        m.set(1, 0, rf(&[-1.0], &g));
        m.set(1, 1, rf(&[0.5, 1.0], &g));
        let d = m.det().unwrap();
        assert_eq!(d.den().degree(), Some(4));
    }
}
