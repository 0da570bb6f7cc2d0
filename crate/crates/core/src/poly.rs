//! Dense polynomials in the Laplace variable with complex coefficients.
//!
//! Coefficients are stored in ascending degree. Real-coefficient polynomials
//! are the common case and are detected on demand; complex coefficients show
//! up for static-frame machine models where the slip carries `j*omega_m`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest degree accepted by root finding and rational arithmetic.
pub const DEGREE_CAP: usize = 200;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if c.im == 0.0 {
                write!(f, "{:e}", c.re)?;
            } else {
                write!(f, "{:e}{:+e}j", c.re, c.im)?;
            }
        }
        write!(f, "]")
    }
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming exact zeros
    /// above the leading term.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { coeffs };
        p.trim_exact();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    /// `lead * prod (s - r)`.
    pub fn from_roots(roots: &[Complex64], lead: Complex64) -> Self {
        let mut c = vec![lead];
        for &r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        let scale = self.max_abs();
        self.coeffs
            .iter()
            .all(|c| c.im.abs() <= 1e-13 * scale || c.im == 0.0)
    }

    /// Real coefficients (imaginary parts dropped).
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    /// Coefficient-wise real part.
    pub fn re_part(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect())
    }

    /// Coefficient-wise imaginary part (as a real polynomial).
    pub fn im_part(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| Complex64::new(c.im, 0.0)).collect())
    }

    /// Polynomial with conjugated coefficients.
    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Drops imaginary parts when they are at rounding level.
    pub fn realified(&self) -> Self {
        if self.is_real() {
            self.re_part()
        } else {
            self.clone()
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * s + c)
    }

    /// `sum |c_k| |s|^k`, the natural scale of `eval(s)` rounding errors.
    pub fn eval_abs(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    /// Substitutes `s -> s + a`.
    pub fn shift(&self, a: Complex64) -> Self {
        let lin = Self::new(vec![a, Complex64::new(1.0, 0.0)]);
        let mut out = Self::zero();
        for &c in self.coeffs.iter().rev() {
            out = &(&out * &lin) + &Self::constant(c);
        }
        out
    }

    /// Substitutes `s -> rho * s`.
    pub fn scale_var(&self, rho: f64) -> Self {
        let mut f = 1.0;
        let mut c = Vec::with_capacity(self.coeffs.len());
        for &ck in &self.coeffs {
            c.push(ck * f);
            f *= rho;
        }
        Self::new(c)
    }

    /// Long division, returning `(quotient, remainder)`.
    pub fn div_rem(&self, d: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        let dd = d.degree().ok_or(Error::ZeroDenominator)?;
        let Some(nd) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if nd < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut q = vec![ZERO; nd - dd + 1];
        let lead = d.leading();
        for k in (0..=nd - dd).rev() {
            let f = rem[k + dd] / lead;
            q[k] = f;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                rem[k + j] -= f * dj;
            }
            rem[k + dd] = ZERO;
        }
        rem.truncate(dd);
        Ok((Self::new(q), Self::new(rem)))
    }

    /// Approximate coefficient-wise equality relative to the larger operand.
    pub fn approx_eq(&self, other: &Polynomial, rel: f64) -> bool {
        if self.coeffs.len() != other.coeffs.len() {
            return false;
        }
        let scale = self.max_abs().max(other.max_abs());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(a, b)| (a - b).norm() <= rel * scale)
    }

    /// Roots with multiplicity, from the eigenvalues of a balanced companion
    /// matrix of the variable-scaled monic polynomial, followed by a Newton
    /// polish that is kept only when it lowers the residual.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = match self.degree() {
            None | Some(0) => return Err(Error::ConstantPolynomial),
            Some(n) => n,
        };
        if n > DEGREE_CAP {
            return Err(Error::DegreeCap(n));
        }
        let nz = self.coeffs.iter().take_while(|c| **c == ZERO).count();
        let mut roots = vec![ZERO; nz];
        let c = &self.coeffs[nz..];
        let m = c.len() - 1;
        if m == 0 {
            return Ok(roots);
        }
        let real = self.is_real();

        let rho = (c[0].norm() / c[m].norm()).powf(1.0 / m as f64);
        let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
        // monic q(z) = p(rho z) / (c_m rho^m)
        let q: Vec<Complex64> = (0..=m)
            .map(|k| c[k] / c[m] * rho.powi(k as i32 - m as i32))
            .collect();
        let qpoly = Polynomial::new(q.clone());

        let mut scaled = if real {
            let mut comp = DMatrix::<f64>::zeros(m, m);
            for i in 1..m {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..m {
                comp[(i, m - 1)] = -q[i].re;
            }
            balance(&mut comp);
            real_eigenvalues(comp)?
        } else {
            let mut comp = DMatrix::<Complex64>::zeros(m, m);
            for i in 1..m {
                comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            for i in 0..m {
                comp[(i, m - 1)] = -q[i];
            }
            balance(&mut comp);
            complex_eigenvalues(comp)?
        };

        let dq = qpoly.derivative();
        if real {
            // polish one member of each conjugate pair and mirror it
            let mut out = Vec::with_capacity(m);
            for z in scaled.iter().copied() {
                if z.im < 0.0 {
                    continue;
                }
                let p = polish(&qpoly, &dq, z);
                if z.im == 0.0 {
                    out.push(Complex64::new(p.re, 0.0));
                } else if p.im.abs() < 1e-300 {
                    out.push(z);
                    out.push(z.conj());
                } else {
                    let p = Complex64::new(p.re, p.im.abs());
                    out.push(p);
                    out.push(p.conj());
                }
            }
            // unpaired negative-imaginary eigenvalues would indicate a broken
            // conjugate structure; fall back to the raw set in that case
            if out.len() == m {
                scaled = out;
            }
        } else {
            for z in scaled.iter_mut() {
                *z = polish(&qpoly, &dq, *z);
            }
        }
        roots.extend(scaled.into_iter().map(|z| z * rho));
        sort_roots(&mut roots);
        Ok(roots)
    }

    fn trim_exact(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if *c == ZERO) {
            self.coeffs.pop();
        }
    }
}

/// Canonical ordering: descending real part, then descending imaginary part.
pub fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

fn polish(q: &Polynomial, dq: &Polynomial, z0: Complex64) -> Complex64 {
    let mut z = z0;
    let mut fz = q.eval(z).norm();
    for _ in 0..3 {
        let d = dq.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - q.eval(z) / d;
        let fc = q.eval(cand).norm();
        if fc.is_finite() && fc < fz {
            z = cand;
            fz = fc;
        } else {
            break;
        }
    }
    z
}

fn real_eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Singular("companion Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn complex_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Singular("companion Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Parlett-Reinsch diagonal similarity balancing with radix 2.
fn balance<T>(a: &mut DMatrix<T>)
where
    T: nalgebra::Scalar + AbsLike + std::ops::MulAssign<f64> + std::ops::DivAssign<f64>,
{
    let n = a.nrows();
    for _sweep in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs_like();
                    r += a[(i, j)].abs_like();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if c + r < 0.95 * s {
                converged = false;
                for k in 0..n {
                    a[(k, i)] *= f;
                    a[(i, k)] /= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

trait AbsLike {
    fn abs_like(&self) -> f64;
}

impl AbsLike for f64 {
    fn abs_like(&self) -> f64 {
        self.abs()
    }
}

impl AbsLike for Complex64 {
    fn abs_like(&self) -> f64 {
        self.norm()
    }
}

// Addition trims leading coefficients that cancel to rounding level.
fn add_coeffs(a: &[Complex64], b: &[Complex64], sign: f64) -> Polynomial {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    let mut mag = Vec::with_capacity(n);
    for k in 0..n {
        let x = a.get(k).copied().unwrap_or(ZERO);
        let y = b.get(k).copied().unwrap_or(ZERO) * sign;
        out.push(x + y);
        mag.push(x.norm() + y.norm());
    }
    while let (Some(c), Some(m)) = (out.last(), mag.last()) {
        if c.norm() <= 8.0 * f64::EPSILON * m {
            out.pop();
            mag.pop();
        } else {
            break;
        }
    }
    Polynomial::new(out)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        add_coeffs(&self.coeffs, &rhs.coeffs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        add_coeffs(&self.coeffs, &rhs.coeffs, -1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut c = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn contains(roots: &[Complex64], z: Complex64, tol: f64) -> bool {
        roots.iter().any(|r| (r - z).norm() <= tol)
    }

    #[test]
    fn roots_of_s2_plus_1() {
        let r = Polynomial::from_real(&[1.0, 0.0, 1.0]).roots().unwrap();
        assert_eq!(r.len(), 2);
        assert!(contains(&r, c(0.0, 1.0), 1e-14));
        assert!(contains(&r, c(0.0, -1.0), 1e-14));
    }

    #[test]
    fn roots_of_linear() {
        let r = Polynomial::from_real(&[2.0, 1.0]).roots().unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn roots_of_factored_cubic() {
        // (s+1)(s^2+2s+5) = s^3 + 3s^2 + 7s + 5
        let r = Polynomial::from_real(&[5.0, 7.0, 3.0, 1.0]).roots().unwrap();
        for z in [c(-1.0, 0.0), c(-1.0, 2.0), c(-1.0, -2.0)] {
            assert!(contains(&r, z, 1e-12), "{z} missing from {r:?}");
        }
    }

    #[test]
    fn constant_has_no_roots() {
        let err = Polynomial::from_real(&[3.0]).roots().unwrap_err();
        assert_eq!(err.to_string(), "constant polynomial has no roots");
        assert!(Polynomial::zero().roots().is_err());
    }

    #[test]
    fn degree_cap_enforced() {
        let mut coeffs = vec![0.0; 202];
        coeffs[0] = 1.0;
        coeffs[201] = 1.0;
        assert!(matches!(
            Polynomial::from_real(&coeffs).roots(),
            Err(Error::DegreeCap(201))
        ));
    }

    #[test]
    fn complex_coefficient_roots() {
        let roots = [c(-1.0, 3.0), c(-0.5, -7.0), c(2.0, 0.25)];
        let p = Polynomial::from_roots(&roots, c(2.0, -1.0));
        assert!(!p.is_real());
        let r = p.roots().unwrap();
        for z in roots {
            assert!(contains(&r, z, 1e-11));
        }
    }

    #[test]
    fn zero_roots_are_exact() {
        let p = Polynomial::from_real(&[0.0, 0.0, 4.0, 1.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.iter().filter(|z| **z == ZERO).count(), 2);
        assert!(contains(&r, c(-4.0, 0.0), 1e-14));
    }

    #[test]
    fn widely_scaled_roots() {
        let roots = [c(-1e-2, 0.0), c(-3.0, 240.0), c(-3.0, -240.0), c(-900.0, 0.0)];
        let p = Polynomial::from_roots(&roots, c(1.0, 0.0));
        let r = p.roots().unwrap();
        for z in roots {
            assert!(contains(&r, z, 1e-9 * (1.0 + z.norm())), "{z} vs {r:?}");
        }
    }

    #[test]
    fn shift_substitutes_variable() {
        let p = Polynomial::from_real(&[1.0, 2.0, 3.0]);
        let a = c(0.5, -2.0);
        let q = p.shift(a);
        for s in [c(0.3, 0.1), c(-2.0, 5.0)] {
            assert!((q.eval(s) - p.eval(s + a)).norm() < 1e-12);
        }
    }

    #[test]
    fn div_rem_reconstructs() {
        let n = Polynomial::from_real(&[1.0, -3.0, 0.0, 2.0, 5.0]);
        let d = Polynomial::from_real(&[2.0, 1.0, 1.0]);
        let (q, r) = n.div_rem(&d).unwrap();
        assert!(r.degree().unwrap_or(0) < 2);
        let back = &(&q * &d) + &r;
        assert!(back.approx_eq(&n, 1e-14));
    }

    #[test]
    fn subtraction_trims_cancelled_leading_terms() {
        let a = Polynomial::from_real(&[1.0, 2.0, 0.1 + 0.2]);
        let b = Polynomial::from_real(&[0.0, 1.0, 0.3]);
        assert_eq!((&a - &b).degree(), Some(1));
    }
}
