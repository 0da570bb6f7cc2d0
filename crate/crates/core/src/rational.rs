//! Scalar rational functions `num(s) / den(s)`.
//!
//! Arithmetic never cancels common roots on its own. Cancellation happens
//! only through [`RationalFunction::simplify`], which reports every pair it
//! removed so right-half-plane pole/zero coincidences stay visible.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{sort_roots, Polynomial, DEGREE_CAP};

/// Default pole/zero cancellation tolerance for [`RationalFunction::simplify`].
pub const CANCEL_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

/// A zero/pole pair removed by [`RationalFunction::simplify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cancellation {
    pub zero: Complex64,
    pub pole: Complex64,
}

/// `b / a` when `a` divides `b` up to rounding.
fn exact_quotient(b: &Polynomial, a: &Polynomial) -> Option<Polynomial> {
    if a.degree()? == 0 || a.degree()? >= b.degree()? {
        return None;
    }
    let (q, r) = b.div_rem(a).ok()?;
    (r.max_abs() <= 1e-12 * b.max_abs()).then_some(q)
}

impl RationalFunction {
    /// Builds `num / den`, normalizing the denominator to be monic.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        for p in [&num, &den] {
            if let Some(d) = p.degree() {
                if d > DEGREE_CAP {
                    return Err(Error::DegreeCap(d));
                }
            }
        }
        let lead = den.leading();
        let inv = Complex64::new(1.0, 0.0) / lead;
        Ok(Self {
            num: num.scale(inv),
            den: den.scale(inv),
        })
    }

    pub fn from_poly(num: Polynomial) -> Self {
        Self {
            num,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn real_constant(c: f64) -> Self {
        Self::constant(Complex64::new(c, 0.0))
    }

    pub fn zero() -> Self {
        Self::from_poly(Polynomial::zero())
    }

    pub fn one() -> Self {
        Self::real_constant(1.0)
    }

    /// Convenience constructor from ascending real coefficients.
    pub fn from_real(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::from_real(num), Polynomial::from_real(den))
    }

    /// `sum_i residue_i / (s - pole_i) + direct`, with imaginary coefficient
    /// parts dropped when the data come in conjugate pairs.
    pub fn from_partial_fractions(
        residues: &[Complex64],
        poles: &[Complex64],
        direct: Complex64,
    ) -> Result<Self> {
        if residues.len() != poles.len() {
            return Err(Error::Dimension(format!(
                "{} residues for {} poles",
                residues.len(),
                poles.len()
            )));
        }
        let one = Complex64::new(1.0, 0.0);
        let den = Polynomial::from_roots(poles, one);
        let mut num = den.scale(direct);
        for (i, &r) in residues.iter().enumerate() {
            let others: Vec<Complex64> = poles
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &p)| p)
                .collect();
            num = &num + &Polynomial::from_roots(&others, r);
        }
        Self::new(num.realified(), den.realified())
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.num.is_real() && self.den.is_real()
    }

    /// Proper means `deg num <= deg den`.
    pub fn is_proper(&self) -> bool {
        self.num.degree().unwrap_or(0) <= self.den.degree().unwrap_or(0)
    }

    /// Evaluates at `s`; a vanishing denominator is reported as a pole hit.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        if d.norm() <= 1e-14 * self.den.eval_abs(s) {
            return Err(Error::PoleHit { row: 0, col: 0, s });
        }
        Ok(self.num.eval(s) / d)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.den.approx_eq(&other.den, 1e-14) {
            return Self::new(&self.num + &other.num, self.den.clone());
        }
        // Running sums over a few distinct denominators keep each one once.
        if let Some(q) = exact_quotient(&other.den, &self.den) {
            return Self::new(&(&self.num * &q) + &other.num, other.den.clone());
        }
        if let Some(q) = exact_quotient(&self.den, &other.den) {
            return Self::new(&self.num + &(&other.num * &q), self.den.clone());
        }
        Self::new(
            &(&self.num * &other.den) + &(&other.num * &self.den),
            &self.den * &other.den,
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        Self::new(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.recip()?)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn neg(&self) -> Self {
        Self {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Substitutes `s -> s + a` in numerator and denominator.
    pub fn shift(&self, a: Complex64) -> Result<Self> {
        Self::new(self.num.shift(a), self.den.shift(a))
    }

    /// Coefficient conjugation: `conj(F(conj(s)))`.
    pub fn conj(&self) -> Self {
        Self {
            num: self.num.conj(),
            den: self.den.conj(),
        }
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        match self.den.degree() {
            Some(d) if d > 0 => self.den.roots(),
            _ => Ok(Vec::new()),
        }
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        match self.num.degree() {
            Some(d) if d > 0 => self.num.roots(),
            _ => Ok(Vec::new()),
        }
    }

    /// Cancels numerator/denominator roots closer than `tol * (1 + |pole|)`,
    /// closest pairs first. Returns the reduced function and the removed pairs.
    pub fn simplify(&self, tol: f64) -> Result<(Self, Vec<Cancellation>)> {
        if self.is_zero() {
            return Ok((Self::zero(), Vec::new()));
        }
        let zeros = self.zeros()?;
        let poles = self.poles()?;
        let mut candidates = Vec::new();
        for (i, z) in zeros.iter().enumerate() {
            for (j, p) in poles.iter().enumerate() {
                let d = (z - p).norm();
                if d <= tol * (1.0 + p.norm()) {
                    candidates.push((d, i, j));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut zero_used = vec![false; zeros.len()];
        let mut pole_used = vec![false; poles.len()];
        let mut cancelled = Vec::new();
        for (_, i, j) in candidates {
            if !zero_used[i] && !pole_used[j] {
                zero_used[i] = true;
                pole_used[j] = true;
                cancelled.push(Cancellation {
                    zero: zeros[i],
                    pole: poles[j],
                });
            }
        }
        if cancelled.is_empty() {
            return Ok((self.clone(), cancelled));
        }
        let keep = |roots: &[Complex64], used: &[bool]| -> Vec<Complex64> {
            roots
                .iter()
                .zip(used)
                .filter(|(_, u)| !**u)
                .map(|(r, _)| *r)
                .collect()
        };
        let real = self.is_real();
        let mut num = Polynomial::from_roots(&keep(&zeros, &zero_used), self.num.leading());
        let mut den = Polynomial::from_roots(&keep(&poles, &pole_used), self.den.leading());
        if real {
            num = num.re_part();
            den = den.re_part();
        }
        cancelled.sort_by(|a, b| {
            b.pole
                .re
                .total_cmp(&a.pole.re)
                .then(b.pole.im.total_cmp(&a.pole.im))
        });
        Ok((Self::new(num, den)?, cancelled))
    }

    /// Zeros sorted by the canonical root order.
    pub fn sorted_zeros(&self) -> Result<Vec<Complex64>> {
        let mut z = self.zeros()?;
        sort_roots(&mut z);
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_one_over_s_at_j() {
        let f = RationalFunction::from_real(&[1.0], &[0.0, 1.0]).unwrap();
        let v = f.eval(c(0.0, 1.0)).unwrap();
        assert!((v - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn pole_hit_is_an_error() {
        let f = RationalFunction::from_real(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(f.eval(c(-1.0, 0.0)), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(
            RationalFunction::new(Polynomial::one(), Polynomial::zero()),
            Err(Error::ZeroDenominator)
        ));
    }

    #[test]
    fn same_denominator_addition_keeps_degree() {
        let a = RationalFunction::from_real(&[1.0], &[0.0, 1.0]).unwrap();
        let b = a.add(&a).unwrap();
        assert_eq!(b.den().degree(), Some(1));
        assert!((b.eval(c(2.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn simplify_reports_rhp_cancellation() {
        // (s-1)(s+2) / ((s-1)(s+3))
        let num = Polynomial::from_roots(&[c(1.0, 0.0), c(-2.0, 0.0)], c(1.0, 0.0));
        let den = Polynomial::from_roots(&[c(1.0, 0.0), c(-3.0, 0.0)], c(1.0, 0.0));
        let f = RationalFunction::new(num, den).unwrap();
        let (g, cancelled) = f.simplify(CANCEL_TOL).unwrap();
        assert_eq!(cancelled.len(), 1);
        assert!((cancelled[0].pole - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(g.den().degree(), Some(1));
        let s = c(0.3, 0.7);
        assert!((g.eval(s).unwrap() - f.eval(s).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn arithmetic_never_cancels_implicitly() {
        let f = RationalFunction::from_real(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(f.den().degree(), Some(1));
        let g = f.mul(&f).unwrap();
        assert_eq!(g.den().degree(), Some(2));
    }

    #[test]
    fn partial_fractions_conjugate_pair_is_real() {
        let p = c(-1.0, 5.0);
        let r = c(0.5, -2.0);
        let f = RationalFunction::from_partial_fractions(&[r, r.conj()], &[p, p.conj()], c(0.1, 0.0))
            .unwrap();
        assert!(f.is_real());
        let s = c(0.2, 3.0);
        let direct = r / (s - p) + r.conj() / (s - p.conj()) + 0.1;
        assert!((f.eval(s).unwrap() - direct).norm() < 1e-13);
    }
}
