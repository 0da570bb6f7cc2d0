//! Constant complex bus admittance matrices.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::case::NetworkCase;
use crate::rational::RationalFunction;
use crate::tfmatrix::TFMatrix;

/// Bus admittance matrix at the nominal frequency, with loads folded in as
/// constant impedances. Rows follow `case.bus_index`.
pub fn build_ybus(case: &NetworkCase) -> Result<DMatrix<Complex64>> {
    let n = case.buses.len();
    let mut y = DMatrix::zeros(n, n);
    for br in &case.branches {
        let (i, j) = (case.bus_index(br.from)?, case.bus_index(br.to)?);
        let z = Complex64::new(br.r, br.x * (1.0 - br.comp));
        if z.norm() == 0.0 {
            return Err(Error::Case(format!("branch {}-{} has zero impedance", br.from, br.to)));
        }
        let ys = 1.0 / z;
        let ysh = Complex64::new(0.0, br.b / 2.0);
        y[(i, i)] += ys + ysh;
        y[(j, j)] += ys + ysh;
        y[(i, j)] -= ys;
        y[(j, i)] -= ys;
    }
    for ld in &case.loads {
        let i = case.bus_index(ld.bus)?;
        y[(i, i)] += Complex64::new(ld.p, -ld.q);
    }
    for sh in &case.shunts {
        let i = case.bus_index(sh.bus)?;
        y[(i, i)] += Complex64::new(sh.g, sh.b);
    }
    Ok(y)
}

/// Schur complement onto `keep`, eliminating every other bus in one block.
pub fn kron_reduce(y: &DMatrix<Complex64>, keep: &[usize]) -> Result<DMatrix<Complex64>> {
    let n = y.nrows();
    if y.ncols() != n {
        return Err(Error::Dimension("Kron reduction needs a square matrix".into()));
    }
    if let Some(&k) = keep.iter().find(|&&k| k >= n) {
        return Err(Error::Dimension(format!("kept bus index {k} outside 0..{n}")));
    }
    let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let ykk = y.select_rows(keep).select_columns(keep);
    if elim.is_empty() {
        return Ok(ykk);
    }
    let yke = y.select_rows(keep).select_columns(&elim);
    let yek = y.select_rows(&elim).select_columns(keep);
    let yee = y.select_rows(&elim).select_columns(&elim);
    let lu = yee.lu();
    let scale = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let piv = lu.u().diagonal().iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
    if !(piv > 1e-13 * scale) {
        return Err(Error::Singular(format!(
            "eliminated block of {} buses (smallest pivot {piv:e})",
            elim.len()
        )));
    }
    let x = lu
        .solve(&yek)
        .ok_or_else(|| Error::Singular("eliminated block".into()))?;
    Ok(ykk - yke * x)
}

/// Real 2x2 block form `[[Re, -Im], [Im, Re]]` of a complex matrix.
pub fn expand_dq_matrix(yc: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = yc.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let v = yc[(i, j)];
            out[(2 * i, 2 * j)] = v.re;
            out[(2 * i, 2 * j + 1)] = -v.im;
            out[(2 * i + 1, 2 * j)] = v.im;
            out[(2 * i + 1, 2 * j + 1)] = v.re;
        }
    }
    out
}

/// [`expand_dq_matrix`] as a constant transfer matrix.
pub fn expand_dq(yc: &DMatrix<Complex64>) -> TFMatrix {
    let m = expand_dq_matrix(yc);
    let mut out = TFMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                out.set(i, j, RationalFunction::real_constant(m[(i, j)]));
            }
        }
    }
    out
}

/// CSV with one row per bus and `re,im` pairs per entry.
pub fn write_ybus_csv<W: Write>(y: &DMatrix<Complex64>, mut w: W) -> Result<()> {
    for i in 0..y.nrows() {
        let row: Vec<String> = (0..y.ncols())
            .map(|j| format!("{:?},{:?}", y[(i, j)].re, y[(i, j)].im))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_bus_reduction() {
        let y = DMatrix::from_row_slice(2, 2, &[c(2.0), c(-1.0), c(-1.0), c(1.0)]);
        let r = kron_reduce(&y, &[0]).unwrap();
        assert!((r[(0, 0)] - c(1.0)).norm() < 1e-15);
        assert_eq!(kron_reduce(&y, &[0, 1]).unwrap(), y);
    }

    #[test]
    fn singular_block_rejected() {
        let y = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(kron_reduce(&y, &[0]), Err(Error::Singular(_))));
    }

    #[test]
    fn expansion_examples() {
        let y = DMatrix::from_row_slice(1, 2, &[c(3.0), Complex64::new(0.0, 1.0)]);
        let m = expand_dq_matrix(&y);
        assert_eq!(m, DMatrix::from_row_slice(2, 4, &[3.0, 0.0, 0.0, -1.0, 0.0, 3.0, 1.0, 0.0]));
    }
}
