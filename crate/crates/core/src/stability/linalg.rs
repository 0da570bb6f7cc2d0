//! Dense complex eigen-decomposition through the Schur form.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues and unit right eigenvectors of a complex matrix. Fails when
/// the matrix is numerically defective.
pub fn complex_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    if n == 1 {
        return Ok((vec![m[(0, 0)]], DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))));
    }
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); n], DMatrix::identity(n, n)));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Singular("complex Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let lam: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let tiny = 1e-13 * scale;
    let mut v = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lam[k];
            if d.norm() < tiny {
                d = Complex64::new(tiny, 0.0);
            }
            x[i] = -acc / d;
        }
        let col = &q * DMatrix::from_column_slice(n, 1, &x);
        let nrm = col.norm();
        v.set_column(k, &(col / Complex64::new(nrm, 0.0)).column(0));
    }
    let sv = v.clone().svd(false, false).singular_values;
    if !(sv.min() > 1e-10 * sv.max()) {
        return Err(Error::Singular("defective matrix".into()));
    }
    Ok((lam, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        let m = DMatrix::from_row_slice(3, 3, &[c(1.0, 2.0), c(0.5, 0.0), c(0.0, -1.0), c(-2.0, 0.0), c(0.3, 0.3), c(1.0, 0.0), c(0.0, 0.0), c(4.0, 1.0), c(-1.0, 0.5)]);
        let (lam, v) = complex_eigen(&m).unwrap();
        for k in 0..3 {
            let r = &m * v.column(k) - v.column(k) * lam[k];
            assert!(r.norm() < 1e-12, "{k}: {}", r.norm());
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(complex_eigen(&m).is_err());
    }
}
