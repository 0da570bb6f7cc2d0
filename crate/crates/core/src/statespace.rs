//! LTI state-space models and the admittance view of them.
//!
//! Sign convention: the inputs are terminal-voltage perturbations and the
//! outputs are current perturbations flowing out of the device. The
//! admittance returned by [`StateSpace::to_admittance`] is
//! `Y = -(C (sI - A)^-1 B + D)`, i.e. current injected into the network is
//! positive.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{sort_roots, Polynomial};
use crate::rational::RationalFunction;
use crate::tfmatrix::TFMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Sample period for discrete models.
    pub dt: Option<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {n}x{n}, B is {}x{}, C is {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d, dt: None })
    }

    pub fn discrete(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("sample period {dt} must be positive")));
        }
        let mut ss = Self::new(a, b, c, d)?;
        ss.dt = Some(dt);
        Ok(ss)
    }

    /// A static gain `y = D u`.
    pub fn gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
            dt: None,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let mut e = eigenvalues(&self.a)?;
        sort_roots(&mut e);
        Ok(e)
    }

    /// `C (sI - A)^-1 B + D` at a complex point.
    pub fn transfer_at(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.order();
        let a = self.a.map(|x| Complex64::new(x, 0.0));
        let m = DMatrix::<Complex64>::identity(n, n) * s - a;
        let b = self.b.map(|x| Complex64::new(x, 0.0));
        let x = m
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Singular(format!("sI - A at s = {s}")))?;
        Ok(self.c.map(|x| Complex64::new(x, 0.0)) * x + self.d.map(|x| Complex64::new(x, 0.0)))
    }

    /// Exact rational conversion `Y = -(C (sI - A)^-1 B + D)`.
    ///
    /// Every entry shares the characteristic polynomial of `A` as its
    /// denominator; numerators come from the determinant lemma
    /// `c^T (sI-A)^-1 b = [det(sI - A + b c^T) - det(sI - A)] / det(sI - A)`.
    pub fn to_admittance(&self) -> Result<TFMatrix> {
        if self.dt.is_some() {
            return Err(Error::InvalidParameter(
                "admittance conversion needs a continuous model".into(),
            ));
        }
        let (p, m) = (self.outputs(), self.inputs());
        let chi = charpoly(&self.a)?;
        let mut y = TFMatrix::zeros(p, m);
        for i in 0..p {
            for j in 0..m {
                let bc = self.b.column(j) * self.c.row(i);
                let num = if bc.iter().all(|&x| x == 0.0) {
                    Polynomial::zero()
                } else {
                    &charpoly(&(&self.a - &bc))? - &chi
                };
                let total = &num + &chi.scale(Complex64::new(self.d[(i, j)], 0.0));
                if total.is_zero() {
                    continue;
                }
                y.set(i, j, RationalFunction::new(-&total, chi.clone())?);
            }
        }
        Ok(y)
    }

    /// Zero-order-hold discretization through the augmented matrix exponential.
    pub fn discretize_zoh(&self, dt: f64) -> Result<Self> {
        if self.dt.is_some() {
            return Err(Error::InvalidParameter("model is already discrete".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("sample period {dt} must be positive")));
        }
        let (n, m) = (self.order(), self.inputs());
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * dt));
        let e = aug.exp();
        let ad = e.view((0, 0), (n, n)).into_owned();
        let bd = e.view((0, n), (n, m)).into_owned();
        Self::discrete(ad, bd, self.c.clone(), self.d.clone(), dt)
    }

    /// Drives a discrete model with the input columns of `u` (m x N).
    pub fn simulate(&self, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.dt.is_none() {
            return Err(Error::InvalidParameter("simulate needs a discrete model".into()));
        }
        if u.nrows() != self.inputs() {
            return Err(Error::Dimension(format!(
                "{} input rows for {} inputs",
                u.nrows(),
                self.inputs()
            )));
        }
        let steps = u.ncols();
        let mut x = DVector::zeros(self.order());
        let mut y = DMatrix::zeros(self.outputs(), steps);
        for k in 0..steps {
            let uk = u.column(k);
            y.set_column(k, &(&self.c * &x + &self.d * uk));
            x = &self.a * &x + &self.b * uk;
        }
        Ok(y)
    }

    /// Response to a step of size `p` on input `channel` applied at t = 0,
    /// from zero initial state, sampled at `fs` up to and including `t_end`.
    pub fn step_response(&self, channel: usize, p: f64, t_end: f64, fs: f64) -> Result<TimeSeries> {
        if channel >= self.inputs() {
            return Err(Error::Dimension(format!(
                "input channel {channel} of {}",
                self.inputs()
            )));
        }
        if !(fs > 0.0) || !(t_end > 0.0) || fs * t_end < 10.0 {
            return Err(Error::InvalidParameter(format!(
                "need at least 10 samples, got fs*t_end = {}",
                fs * t_end
            )));
        }
        let steps = (fs * t_end).round() as usize + 1;
        let disc = match self.dt {
            Some(dt) if (dt * fs - 1.0).abs() < 1e-12 => self.clone(),
            Some(dt) => {
                return Err(Error::InvalidParameter(format!(
                    "discrete model period {dt} does not match fs = {fs}"
                )))
            }
            None => self.discretize_zoh(1.0 / fs)?,
        };
        let mut u = DMatrix::zeros(self.inputs(), steps);
        u.row_mut(channel).fill(p);
        let y = disc.simulate(&u)?;
        let t = (0..steps).map(|k| k as f64 / fs).collect();
        let names = (0..self.outputs()).map(|i| format!("y{}", i + 1)).collect();
        let data = (0..self.outputs())
            .map(|i| y.row(i).iter().copied().collect())
            .collect();
        Ok(TimeSeries { t, names, data })
    }

    /// Block-diagonal combination that stacks inputs and outputs.
    pub fn append(&self, other: &Self) -> Result<Self> {
        if self.dt != other.dt {
            return Err(Error::InvalidParameter("sample periods differ".into()));
        }
        let (n1, n2) = (self.order(), other.order());
        let (m1, m2) = (self.inputs(), other.inputs());
        let (p1, p2) = (self.outputs(), other.outputs());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DMatrix::zeros(n1 + n2, m1 + m2);
        b.view_mut((0, 0), (n1, m1)).copy_from(&self.b);
        b.view_mut((n1, m1), (n2, m2)).copy_from(&other.b);
        let mut c = DMatrix::zeros(p1 + p2, n1 + n2);
        c.view_mut((0, 0), (p1, n1)).copy_from(&self.c);
        c.view_mut((p1, n1), (p2, n2)).copy_from(&other.c);
        let mut d = DMatrix::zeros(p1 + p2, m1 + m2);
        d.view_mut((0, 0), (p1, m1)).copy_from(&self.d);
        d.view_mut((p1, m1), (p2, m2)).copy_from(&other.d);
        Ok(Self { a, b, c, d, dt: self.dt })
    }
}

/// Complex-valued state-space model, used for static-frame scalar systems.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStateSpace {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    pub d: DMatrix<Complex64>,
}

impl ComplexStateSpace {
    pub fn transfer_at(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.a.nrows();
        let m = DMatrix::<Complex64>::identity(n, n) * s - &self.a;
        let x = m
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::Singular(format!("sI - A at s = {s}")))?;
        Ok(&self.c * x + &self.d)
    }

    /// Real model of twice the size with `X -> [[Re X, -Im X], [Im X, Re X]]`.
    pub fn realify(&self) -> StateSpace {
        let lift = |x: &DMatrix<Complex64>| {
            let (r, c) = x.shape();
            let mut out = DMatrix::zeros(2 * r, 2 * c);
            for i in 0..r {
                for j in 0..c {
                    let v = x[(i, j)];
                    out[(2 * i, 2 * j)] = v.re;
                    out[(2 * i, 2 * j + 1)] = -v.im;
                    out[(2 * i + 1, 2 * j)] = v.im;
                    out[(2 * i + 1, 2 * j + 1)] = v.re;
                }
            }
            out
        };
        StateSpace {
            a: lift(&self.a),
            b: lift(&self.b),
            c: lift(&self.c),
            d: lift(&self.d),
            dt: None,
        }
    }
}

/// Realizes a proper scalar rational function, possibly with complex
/// coefficients. Distinct poles give a diagonal modal form; repeated poles
/// fall back to the controllable companion form.
pub fn realize_scalar(f: &RationalFunction) -> Result<ComplexStateSpace> {
    if !f.is_proper() {
        return Err(Error::Improper(format!(
            "numerator degree {} exceeds denominator degree {}",
            f.num().degree().unwrap_or(0),
            f.den().degree().unwrap_or(0)
        )));
    }
    let n = f.den().degree().unwrap_or(0);
    let (q, r) = f.num().div_rem(f.den())?;
    let direct = q.coeffs().first().copied().unwrap_or_default();
    let one = DMatrix::from_element(1, 1, direct);
    if n == 0 || r.is_zero() {
        return Ok(ComplexStateSpace {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: one,
        });
    }
    let poles = f.den().roots()?;
    let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_gap = min_gap.min((poles[i] - poles[j]).norm());
        }
    }
    if min_gap > 1e-6 * scale {
        let dp = f.den().derivative();
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { poles[i] } else { Complex64::default() });
        let b = DMatrix::from_element(n, 1, Complex64::new(1.0, 0.0));
        let c = DMatrix::from_fn(1, n, |_, k| r.eval(poles[k]) / dp.eval(poles[k]));
        return Ok(ComplexStateSpace { a, b, c, d: one });
    }
    // Controllable canonical form of the monic denominator.
    let den = f.den().coeffs();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = Complex64::new(1.0, 0.0);
    }
    for j in 0..n {
        a[(n - 1, j)] = -den[j];
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = Complex64::new(1.0, 0.0);
    let rc = r.coeffs();
    let c = DMatrix::from_fn(1, n, |_, j| rc.get(j).copied().unwrap_or_default());
    Ok(ComplexStateSpace { a, b, c, d: one })
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Singular("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues and right eigenvectors (columns, unit norm) by shifted
/// inverse iteration on the Schur eigenvalues. Needs a diagonalizable matrix
/// with numerically distinct eigenvalues.
pub fn eigen_decompose(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    let lam = eigenvalues(a)?;
    let ac = a.map(|x| Complex64::new(x, 0.0));
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut v = DMatrix::zeros(n, n);
    for (k, &l) in lam.iter().enumerate() {
        let shift = l + Complex64::new(1.0, 1.0) * (1e-10 * scale);
        let m = &ac - DMatrix::<Complex64>::identity(n, n) * shift;
        let lu = m.lu();
        let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.37 * i as f64, 0.11 * (k + i) as f64));
        for _ in 0..3 {
            x = lu
                .solve(&x)
                .ok_or_else(|| Error::Singular(format!("inverse iteration at {l}")))?;
            let nrm = x.norm();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::Singular(format!("inverse iteration at {l}")));
            }
            x /= Complex64::new(nrm, 0.0);
        }
        v.set_column(k, &x);
    }
    let sv = v.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if n > 0 && !(smin > 1e-10 * smax) {
        return Err(Error::Singular(
            "eigenvector matrix: repeated or defective eigenvalues".into(),
        ));
    }
    Ok((lam, v))
}

/// Characteristic polynomial `det(sI - A)` with real coefficients.
pub fn charpoly(a: &DMatrix<f64>) -> Result<Polynomial> {
    let e = eigenvalues(a)?;
    Ok(Polynomial::from_roots(&e, Complex64::new(1.0, 0.0)).re_part())
}

/// A nonlinear model `x' = f(x, u)`, `y = g(x, u)`.
pub trait NonlinearModel {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn g(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// Starting point for the equilibrium solve.
    fn seed(&self) -> (DVector<f64>, DVector<f64>);
}

type VecFn = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A [`NonlinearModel`] assembled from closures.
pub struct FnModel {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub f: VecFn,
    pub g: VecFn,
    pub x0: DVector<f64>,
    pub u0: DVector<f64>,
}

impl NonlinearModel for FnModel {
    fn state_dim(&self) -> usize {
        self.n
    }
    fn input_dim(&self) -> usize {
        self.m
    }
    fn output_dim(&self) -> usize {
        self.p
    }
    fn f(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.f)(x, u)
    }
    fn g(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.g)(x, u)
    }
    fn seed(&self) -> (DVector<f64>, DVector<f64>) {
        (self.x0.clone(), self.u0.clone())
    }
}

/// Residual bound for accepting an operating point in [`linearize`].
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

fn fd_step(v: f64) -> f64 {
    1e-6 * (1.0 + v.abs())
}

fn jacobian<F>(v: &DVector<f64>, rows: usize, mut eval: F) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let mut j = DMatrix::zeros(rows, v.len());
    let mut w = v.clone();
    for k in 0..v.len() {
        let h = fd_step(v[k]);
        w[k] = v[k] + h;
        let plus = eval(&w);
        w[k] = v[k] - h;
        let minus = eval(&w);
        w[k] = v[k];
        j.set_column(k, &((plus - minus) / (2.0 * h)));
    }
    j
}

/// Central-difference linearization at an equilibrium.
pub fn linearize<M: NonlinearModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<StateSpace> {
    let (n, m, p) = (model.state_dim(), model.input_dim(), model.output_dim());
    if x.len() != n || u.len() != m {
        return Err(Error::Dimension(format!(
            "operating point has {} states and {} inputs, model expects {n} and {m}",
            x.len(),
            u.len()
        )));
    }
    let residual = model.f(x, u).norm();
    if !(residual <= EQUILIBRIUM_TOL) {
        return Err(Error::NotEquilibrium(residual));
    }
    let a = jacobian(x, n, |xx| model.f(xx, u));
    let b = jacobian(u, n, |uu| model.f(x, uu));
    let c = jacobian(x, p, |xx| model.g(xx, u));
    let d = jacobian(u, p, |uu| model.g(x, uu));
    StateSpace::new(a, b, c, d)
}

/// Damped Newton on `f(x, u) = 0` with `u` fixed.
pub fn solve_equilibrium<M: NonlinearModel + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    u: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let n = model.state_dim();
    let mut x = x0.clone();
    let mut r = model.f(&x, u);
    let mut norm = r.norm();
    for _ in 0..max_iter {
        if norm <= tol {
            return Ok(x);
        }
        let j = jacobian(&x, n, |xx| model.f(xx, u));
        let dx = match j.lu().solve(&(-&r)) {
            Some(dx) => dx,
            None => break,
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial = &x + &dx * lambda;
            let rt = model.f(&trial, u);
            let nt = rt.norm();
            if nt.is_finite() && nt < norm {
                x = trial;
                r = rt;
                norm = nt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm <= tol {
        return Ok(x);
    }
    Err(Error::EquilibriumFailed {
        residual: norm,
        iterations: max_iter,
    })
}

/// Uniformly sampled multichannel signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub names: Vec<String>,
    /// One vector per channel, each as long as `t`.
    pub data: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (k, t) in self.t.iter().enumerate() {
            write!(w, "{t:?}")?;
            for ch in &self.data {
                write!(w, ",{:?}", ch[k])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty time-series file".into()))??;
        let mut cols = header.trim().split(',');
        if cols.next().map(str::trim) != Some("t") {
            return Err(Error::Parse("first column must be `t`".into()));
        }
        let names: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
        let mut t = Vec::new();
        let mut data = vec![Vec::new(); names.len()];
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != names.len() + 1 {
                return Err(Error::Parse(format!(
                    "line {}: {} values, expected {}",
                    lineno + 2,
                    vals.len(),
                    names.len() + 1
                )));
            }
            t.push(vals[0]);
            for (ch, v) in data.iter_mut().zip(&vals[1..]) {
                ch.push(*v);
            }
        }
        Ok(Self { t, names, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn first_order() -> StateSpace {
        StateSpace::new(m(1, 1, &[-1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[0.0])).unwrap()
    }

    #[test]
    fn first_order_admittance() {
        let y = first_order().to_admittance().unwrap();
        let s = Complex64::new(0.3, 2.0);
        let expect = -1.0 / (s + 1.0);
        assert!((y.eval(s).unwrap()[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn d_only_model() {
        let ss = StateSpace::gain(m(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let y = ss.to_admittance().unwrap();
        let v = y.eval(Complex64::new(0.0, 5.0)).unwrap();
        assert!((v[(1, 0)] + 3.0).norm() < 1e-15);
    }

    #[test]
    fn unit_step_at_one_second() {
        let ts = first_order().step_response(0, 1.0, 2.0, 1000.0).unwrap();
        assert_eq!(ts.t[0], 0.0);
        let y = ts.data[0][1000];
        assert!((y - (1.0 - (-1.0f64).exp())).abs() < 1e-6, "{y}");
    }

    #[test]
    fn zero_step_is_zero() {
        let ts = first_order().step_response(0, 0.0, 1.0, 100.0).unwrap();
        assert!(ts.data[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(first_order().step_response(0, 1.0, 0.05, 100.0).is_err());
    }

    #[test]
    fn sine_model_linearizes() {
        let model = FnModel {
            n: 1,
            m: 1,
            p: 1,
            f: Box::new(|x, u| DVector::from_element(1, -x[0].sin() + u[0])),
            g: Box::new(|x, _| x.clone()),
            x0: DVector::zeros(1),
            u0: DVector::zeros(1),
        };
        let ss = linearize(&model, &DVector::zeros(1), &DVector::zeros(1)).unwrap();
        assert!((ss.a[(0, 0)] + 1.0).abs() < 1e-9);
        assert!((ss.b[(0, 0)] - 1.0).abs() < 1e-9);
        assert!((ss.c[(0, 0)] - 1.0).abs() < 1e-9);
        assert!(ss.d[(0, 0)].abs() < 1e-12);
        let err = linearize(&model, &DVector::from_element(1, 0.5), &DVector::zeros(1));
        assert!(matches!(err, Err(Error::NotEquilibrium(r)) if (r - 0.5f64.sin()).abs() < 1e-12));
    }

    #[test]
    fn newton_finds_equilibrium() {
        let model = FnModel {
            n: 1,
            m: 1,
            p: 1,
            f: Box::new(|x, u| DVector::from_element(1, -x[0].sin() + u[0])),
            g: Box::new(|x, _| x.clone()),
            x0: DVector::zeros(1),
            u0: DVector::from_element(1, 0.5),
        };
        let (x0, u0) = model.seed();
        let x = solve_equilibrium(&model, &x0, &u0, 1e-12, 50).unwrap();
        assert!((x[0] - 0.5f64.asin()).abs() < 1e-10);
    }

    #[test]
    fn complex_realization_round_trip() {
        let f = RationalFunction::new(
            Polynomial::new(vec![Complex64::new(1.0, 2.0), Complex64::new(0.5, 0.0)]),
            Polynomial::new(vec![
                Complex64::new(4.0, 1.0),
                Complex64::new(1.0, -0.3),
                Complex64::new(1.0, 0.0),
            ]),
        )
        .unwrap();
        let ss = realize_scalar(&f).unwrap();
        let s = Complex64::new(0.2, 1.7);
        let got = ss.transfer_at(s).unwrap()[(0, 0)];
        assert!((got - f.eval(s).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let ts = first_order().step_response(0, 0.3, 0.1, 100.0).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ts);
    }
}
