//! Eigensystem realization from step-response records.
//!
//! Several events, one per perturbed input, are stacked column-wise in one
//! Hankel pair so that every event shares the same `A` and `C`. Step records
//! are first-differenced into Markov parameters by default; the raw step
//! path is kept as [`StepHandling::Integrated`], in which case the step pole
//! is removed after conversion by multiplying with `s`.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::RationalFunction;
use crate::statespace::{eigen_decompose, StateSpace, TimeSeries};
use crate::tfmatrix::TFMatrix;

/// `sigma_{n+1} / sigma_1` below which the automatic order stops.
pub const AUTO_ORDER_TOL: f64 = 1e-8;
/// `sigma_n / sigma_1` below which a requested order is rank deficient.
pub const RANK_TOL: f64 = 1e-12;
/// Continuous poles closer to the origin than this are cancelled, rad/s.
pub const ORIGIN_POLE_TOL: f64 = 1e-3;
/// Cap on the default number of block columns per event.
pub const MAX_DEFAULT_L: usize = 400;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepHandling {
    /// `h_k = (y_k - y_{k-1}) / p`: the ZOH impulse response.
    #[default]
    Difference,
    /// `h_k = (y_k - y_ss) / p`: the step response itself.
    Integrated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    /// Perturbed input channel.
    pub input: usize,
    /// Step size, pu.
    pub p: f64,
    /// Sample period, s.
    pub ts: f64,
    pub names: Vec<String>,
    /// One row per output channel.
    pub data: DMatrix<f64>,
    /// Samples recorded before the step. Raw records only.
    pub pre_event: usize,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
    /// Set once the record holds Markov parameters.
    pub processed: Option<StepHandling>,
    /// Channels that never moved.
    pub flat_channels: Vec<usize>,
}

impl EventRecord {
    pub fn new(
        input: usize,
        p: f64,
        ts: f64,
        names: Vec<String>,
        data: DMatrix<f64>,
        pre_event: usize,
    ) -> Result<Self> {
        if !(ts > 0.0) {
            return Err(Error::Events(format!("sample period {ts} must be positive")));
        }
        if p == 0.0 || !p.is_finite() {
            return Err(Error::Events(format!("perturbation size {p} must be nonzero")));
        }
        if names.len() != data.nrows() {
            return Err(Error::Events(format!(
                "{} channel names for {} channels",
                names.len(),
                data.nrows()
            )));
        }
        if pre_event >= data.ncols() {
            return Err(Error::Events("no samples after the event".into()));
        }
        let k = data.nrows();
        Ok(Self {
            input,
            p,
            ts,
            names,
            data,
            pre_event,
            offsets: vec![0.0; k],
            scales: vec![1.0; k],
            processed: None,
            flat_channels: Vec::new(),
        })
    }

    pub fn with_scales(mut self, scales: Vec<f64>) -> Result<Self> {
        if scales.len() != self.outputs() || scales.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err(Error::Events("need one finite nonzero scale per channel".into()));
        }
        self.scales = scales;
        Ok(self)
    }

    /// Picks `channels` out of a time series; the step lands at sample
    /// `pre_event`.
    pub fn from_time_series(
        series: &TimeSeries,
        channels: &[String],
        input: usize,
        p: f64,
        pre_event: usize,
    ) -> Result<Self> {
        if series.t.len() < 2 {
            return Err(Error::Events("time series needs at least two samples".into()));
        }
        let ts = series.t[1] - series.t[0];
        let span = series.t[series.t.len() - 1] - series.t[0];
        let uniform = (span - ts * (series.t.len() - 1) as f64).abs() <= 1e-9 * span.abs().max(1.0);
        if !uniform {
            return Err(Error::Events("time series is not uniformly sampled".into()));
        }
        let rows = channels
            .iter()
            .map(|c| {
                series
                    .channel(c)
                    .ok_or_else(|| Error::Events(format!("channel `{c}` not in time series")))
            })
            .collect::<Result<Vec<_>>>()?;
        let data = DMatrix::from_fn(rows.len(), series.t.len(), |i, j| rows[i][j]);
        Self::new(input, p, ts, channels.to_vec(), data, pre_event)
    }

    pub fn outputs(&self) -> usize {
        self.data.nrows()
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }
}

/// Removes steady-state offsets, applies scales, divides by `p` and, for
/// [`StepHandling::Difference`], differences into Markov parameters.
pub fn preprocess(raw: &EventRecord, handling: StepHandling) -> Result<EventRecord> {
    if raw.processed.is_some() {
        return Err(Error::Events("record is already processed".into()));
    }
    if raw.pre_event == 0 {
        return Err(Error::Events(
            "need at least one pre-event sample to estimate the steady state".into(),
        ));
    }
    let k = raw.outputs();
    let n = raw.samples() - raw.pre_event;
    let offsets: Vec<f64> = (0..k)
        .map(|i| raw.data.row(i).columns(0, raw.pre_event).mean())
        .collect();
    let mut out = DMatrix::zeros(k, n);
    let mut flat = Vec::new();
    for i in 0..k {
        let v: Vec<f64> = (0..n)
            .map(|j| raw.scales[i] * (raw.data[(i, raw.pre_event + j)] - offsets[i]) / raw.p)
            .collect();
        if v.iter().all(|x| *x == 0.0) {
            log::warn!("channel `{}` does not respond to the event", raw.names[i]);
            flat.push(i);
        }
        for j in 0..n {
            out[(i, j)] = match handling {
                StepHandling::Integrated => v[j],
                StepHandling::Difference if j == 0 => v[0],
                StepHandling::Difference => v[j] - v[j - 1],
            };
        }
    }
    Ok(EventRecord {
        data: out,
        pre_event: 0,
        offsets,
        processed: Some(handling),
        flat_channels: flat,
        ..raw.clone()
    })
}

/// Block-Hankel pair of one or more processed events.
#[derive(Clone, Debug)]
pub struct HankelPair {
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    /// Block rows.
    pub r: usize,
    /// Block columns per event.
    pub l: usize,
    pub outputs: usize,
}

impl HankelPair {
    /// `H1[i, j] = h_{i+j+1}`, `H2[i, j] = h_{i+j+2}`, each block `K x 1`,
    /// events side by side.
    pub fn build(events: &[EventRecord], l: usize) -> Result<Self> {
        let first = events.first().ok_or_else(|| Error::Events("no events".into()))?;
        let k = first.outputs();
        let n = first.samples() - 1;
        if l == 0 || l >= n {
            return Err(Error::Events(format!("L = {l} outside 1..{n}")));
        }
        let r = n - l;
        let e = events.len();
        let mut h1 = DMatrix::zeros(k * r, l * e);
        let mut h2 = DMatrix::zeros(k * r, l * e);
        for (ev_idx, ev) in events.iter().enumerate() {
            for i in 0..r {
                for j in 0..l {
                    for c in 0..k {
                        h1[(i * k + c, ev_idx * l + j)] = ev.data[(c, i + j + 1)];
                        h2[(i * k + c, ev_idx * l + j)] = ev.data[(c, i + j + 2)];
                    }
                }
            }
        }
        let pair = Self {
            h1,
            h2,
            r,
            l,
            outputs: k,
        };
        pair.check_shift()?;
        Ok(pair)
    }

    /// H2 block row `i` equals H1 block row `i + 1`.
    pub fn check_shift(&self) -> Result<()> {
        let k = self.outputs;
        for i in 0..self.r.saturating_sub(1) {
            let a = self.h2.rows(i * k, k);
            let b = self.h1.rows((i + 1) * k, k);
            if a != b {
                return Err(Error::Events(format!("Hankel shift structure broken at block row {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EraOptions {
    /// Model order; automatic when `None`.
    pub order: Option<usize>,
    /// Block columns per event; `min(N/2, MAX_DEFAULT_L)` when `None`.
    pub l: Option<usize>,
    /// Accept orders beyond the numerical rank.
    pub allow_overfit: bool,
}

/// Discrete realization with shared `A`, `C` and one `B`, `D` per event.
/// `C` and `D` are in unscaled output units.
#[derive(Clone, Debug)]
pub struct EraModel {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub b: Vec<DVector<f64>>,
    pub d: Vec<DVector<f64>>,
    pub inputs: Vec<usize>,
    pub ts: f64,
    pub p: f64,
    pub handling: StepHandling,
    pub names: Vec<String>,
    pub singular_values: Vec<f64>,
    pub order: usize,
    pub l: usize,
    /// Relative Frobenius error of the reconstructed Markov parameters.
    pub markov_error: f64,
}

pub fn era_realize(events: &[EventRecord], opts: &EraOptions) -> Result<EraModel> {
    let first = events.first().ok_or_else(|| Error::Events("no events".into()))?;
    let handling = first
        .processed
        .ok_or_else(|| Error::Events("events must be preprocessed".into()))?;
    for ev in events {
        if ev.processed != Some(handling) {
            return Err(Error::Events("events processed differently".into()));
        }
        if ev.outputs() != first.outputs() || ev.samples() != first.samples() {
            return Err(Error::Events("events differ in channels or length".into()));
        }
        if (ev.ts - first.ts).abs() > 1e-12 * first.ts || ev.p != first.p {
            return Err(Error::Events("events differ in sample period or step size".into()));
        }
        if ev.scales != first.scales {
            return Err(Error::Events("events use different channel scales".into()));
        }
    }
    let k = first.outputs();
    let n_markov = first.samples() - 1;
    let l = opts.l.unwrap_or((n_markov / 2).min(MAX_DEFAULT_L));
    let pair = HankelPair::build(events, l)?;
    let svd = pair.h1.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let s1 = sv.first().copied().unwrap_or(0.0);
    let unscale = DMatrix::from_diagonal(&DVector::from_iterator(k, first.scales.iter().map(|s| 1.0 / s)));
    let d: Vec<DVector<f64>> = events
        .iter()
        .map(|ev| &unscale * ev.data.column(0))
        .collect();
    let inputs: Vec<usize> = events.iter().map(|e| e.input).collect();
    if s1 == 0.0 {
        log::warn!("event records carry no dynamics; realizing a static model");
        return Ok(EraModel {
            a: DMatrix::zeros(0, 0),
            c: DMatrix::zeros(k, 0),
            b: vec![DVector::zeros(0); events.len()],
            d,
            inputs,
            ts: first.ts,
            p: first.p,
            handling,
            names: first.names.clone(),
            singular_values: sv,
            order: 0,
            l,
            markov_error: 0.0,
        });
    }
    let order = match opts.order {
        Some(n) => {
            if n == 0 || n > sv.len() {
                return Err(Error::Events(format!("order {n} outside 1..{}", sv.len())));
            }
            let ratio = sv[n - 1] / s1;
            if ratio < RANK_TOL && !opts.allow_overfit {
                return Err(Error::RankDeficient { order: n, ratio });
            }
            n
        }
        None => (1..=sv.len())
            .find(|&n| sv.get(n).is_none_or(|s| s / s1 < AUTO_ORDER_TOL))
            .unwrap_or(sv.len()),
    };
    if pair.r < order || l < order {
        return Err(Error::Events(format!(
            "order {order} needs at least {order} block rows and columns (have {} and {l})",
            pair.r
        )));
    }
    let u = svd.u.as_ref().expect("U computed").columns(0, order).into_owned();
    let vt = svd.v_t.as_ref().expect("V computed").rows(0, order).into_owned();
    let sq: Vec<f64> = sv[..order].iter().map(|s| s.sqrt()).collect();
    let s_half = DMatrix::from_diagonal(&DVector::from_vec(sq.clone()));
    let s_mhalf = DMatrix::from_diagonal(&DVector::from_iterator(order, sq.iter().map(|s| 1.0 / s)));
    let a = &s_mhalf * u.transpose() * &pair.h2 * vt.transpose() * &s_mhalf;
    let obs = &u * &s_half;
    let ctrb = &s_half * &vt;
    let c_scaled = obs.rows(0, k).into_owned();
    let b: Vec<DVector<f64>> = (0..events.len())
        .map(|e| ctrb.column(e * l).into_owned())
        .collect();
    // Markov reconstruction over the whole record.
    let mut num = 0.0;
    let mut den = 0.0;
    for (e, ev) in events.iter().enumerate() {
        let mut x = b[e].clone();
        for j in 1..ev.samples() {
            let y = &c_scaled * &x;
            for c in 0..k {
                num += (y[c] - ev.data[(c, j)]).powi(2);
                den += ev.data[(c, j)].powi(2);
            }
            x = &a * x;
        }
    }
    let markov_error = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(EraModel {
        c: &unscale * c_scaled,
        a,
        b,
        d,
        inputs,
        ts: first.ts,
        p: first.p,
        handling,
        names: first.names.clone(),
        singular_values: sv,
        order,
        l,
        markov_error,
    })
}

/// Continuous-time modal data: `G_e(s) = sum_i C v_i beta_ie / (s - lambda_i) + direct_e`.
#[derive(Clone, Debug)]
pub struct ModalModel {
    pub poles: Vec<Complex64>,
    /// `C V`, outputs by modes.
    pub cv: DMatrix<Complex64>,
    /// Modal input coefficients, modes by events.
    pub beta: DMatrix<Complex64>,
    /// Direct feedthrough, outputs by events.
    pub direct: DMatrix<f64>,
    /// Poles dropped as step artifacts.
    pub cancelled: Vec<Complex64>,
}

impl EraModel {
    /// Discrete eigenvalues of the shared `A`.
    pub fn discrete_eigenvalues(&self) -> Result<Vec<Complex64>> {
        crate::statespace::eigenvalues(&self.a)
    }

    /// `ln(lambda) / Ts` of each discrete eigenvalue.
    pub fn continuous_eigenvalues(&self) -> Result<Vec<Complex64>> {
        Ok(self
            .discrete_eigenvalues()?
            .into_iter()
            .map(|l| to_continuous(l, self.ts))
            .collect())
    }

    /// Discrete model with the events as input columns.
    pub fn discrete_model(&self) -> Result<StateSpace> {
        let n = self.order;
        let m = self.b.len();
        let b = DMatrix::from_fn(n, m, |i, j| self.b[j][i]);
        let d = DMatrix::from_fn(self.c.nrows(), m, |i, j| self.d[j][i]);
        StateSpace::discrete(self.a.clone(), b, self.c.clone(), d, self.ts)
    }

    /// Plain-text realization: `ts`, `order`, then matrices `A`, `C` and
    /// `B`, `D` per event, each as a `name rows cols` header and its rows.
    pub fn write_realization<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        fn mat<W: std::io::Write>(w: &mut W, name: &str, m: &DMatrix<f64>) -> Result<()> {
            writeln!(w, "{name} {} {}", m.nrows(), m.ncols())?;
            for i in 0..m.nrows() {
                let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:?}")).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
            Ok(())
        }
        writeln!(w, "ts {:?}", self.ts)?;
        writeln!(w, "order {}", self.order)?;
        mat(&mut w, "A", &self.a)?;
        mat(&mut w, "C", &self.c)?;
        for (k, (b, d)) in self.b.iter().zip(&self.d).enumerate() {
            mat(&mut w, &format!("B_input{}", self.inputs[k]), &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
            mat(&mut w, &format!("D_input{}", self.inputs[k]), &DMatrix::from_column_slice(d.len(), 1, d.as_slice()))?;
        }
        Ok(())
    }

    /// Reconstructed processed sequence of event `e` (outputs by samples).
    pub fn reconstruct(&self, e: usize, samples: usize) -> DMatrix<f64> {
        let k = self.c.nrows();
        let mut out = DMatrix::zeros(k, samples);
        if samples == 0 {
            return out;
        }
        out.set_column(0, &self.d[e]);
        let mut x = self.b[e].clone();
        for j in 1..samples {
            out.set_column(j, &(&self.c * &x));
            x = &self.a * x;
        }
        out
    }

    /// Continuous modal form of the per-unit transfer from each event input
    /// to the outputs.
    pub fn modal(&self) -> Result<ModalModel> {
        let k = self.c.nrows();
        let m = self.b.len();
        if self.order == 0 {
            let direct = DMatrix::from_fn(k, m, |i, j| self.d[j][i]);
            return Ok(ModalModel {
                poles: Vec::new(),
                cv: DMatrix::zeros(k, 0),
                beta: DMatrix::zeros(0, m),
                direct,
                cancelled: Vec::new(),
            });
        }
        let (lam, v) = eigen_decompose(&self.a)?;
        let w = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("ERA eigenvector matrix".into()))?;
        let cc = self.c.map(|x| Complex64::new(x, 0.0));
        let cv_all = &cc * &v;
        let mut poles = Vec::new();
        let mut cancelled = Vec::new();
        let mut keep = Vec::new();
        let mut beta_rows: Vec<Vec<Complex64>> = Vec::new();
        let mut direct = DMatrix::zeros(k, m);
        for i in 0..self.order {
            let ld = lam[i];
            if ld.norm() == 0.0 {
                return Err(Error::Singular("discrete eigenvalue at zero has no continuous image".into()));
            }
            if ld.im == 0.0 && ld.re < 0.0 {
                log::warn!("discrete eigenvalue {ld} on the negative real axis; continuous image is ambiguous");
            }
            let lc = to_continuous(ld, self.ts);
            let wb: Vec<Complex64> = (0..m)
                .map(|e| {
                    (0..self.order)
                        .map(|j| w[(i, j)] * self.b[e][j])
                        .sum::<Complex64>()
                })
                .collect();
            let row: Vec<Complex64> = match self.handling {
                StepHandling::Difference => {
                    let f = zoh_factor(ld, lc, self.ts);
                    wb.iter().map(|x| x * f).collect()
                }
                // step samples y_k = C A^{k-1} B are y(t) = C e^{A_c t} A^{-1} B;
                // multiplying by s turns r / (s - l) into r + l r / (s - l)
                StepHandling::Integrated => wb.iter().map(|x| x / ld).collect(),
            };
            if lc.norm() < ORIGIN_POLE_TOL {
                log::info!("cancelling near-origin pole {lc} rad/s");
                cancelled.push(lc);
                if self.handling == StepHandling::Integrated {
                    for e in 0..m {
                        for o in 0..k {
                            direct[(o, e)] += (cv_all[(o, i)] * row[e]).re;
                        }
                    }
                }
                continue;
            }
            if self.handling == StepHandling::Integrated {
                for e in 0..m {
                    for o in 0..k {
                        direct[(o, e)] += (cv_all[(o, i)] * row[e]).re;
                    }
                }
                beta_rows.push(row.iter().map(|x| x * lc).collect());
            } else {
                beta_rows.push(row);
            }
            poles.push(lc);
            keep.push(i);
        }
        if self.handling == StepHandling::Difference {
            for e in 0..m {
                for o in 0..k {
                    direct[(o, e)] = self.d[e][o];
                }
            }
        }
        let cv = DMatrix::from_fn(k, keep.len(), |o, j| cv_all[(o, keep[j])]);
        let beta = DMatrix::from_fn(keep.len(), m, |j, e| beta_rows[j][e]);
        Ok(ModalModel {
            poles,
            cv,
            beta,
            direct,
            cancelled,
        })
    }

    /// Continuous transfer from event input `e` to output `o` at `s`.
    pub fn transfer_at(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let mm = self.modal()?;
        let (k, m) = mm.direct.shape();
        Ok(DMatrix::from_fn(k, m, |o, e| {
            let mut acc = Complex64::new(mm.direct[(o, e)], 0.0);
            for (j, &l) in mm.poles.iter().enumerate() {
                acc += mm.cv[(o, j)] * mm.beta[(j, e)] / (s - l);
            }
            acc
        }))
    }

    /// `Y = -G` for two events on dq inputs 0 and 1, with outputs the
    /// injected dq currents.
    pub fn admittance(&self) -> Result<TFMatrix> {
        if self.b.len() != 2 {
            return Err(Error::Events(format!(
                "two events required for 2x2 identification, got {}",
                self.b.len()
            )));
        }
        if self.c.nrows() != 2 {
            return Err(Error::Events(format!(
                "2x2 identification needs two current channels, got {}",
                self.c.nrows()
            )));
        }
        let mut col = [usize::MAX; 2];
        for (e, &inp) in self.inputs.iter().enumerate() {
            if inp > 1 || col[inp] != usize::MAX {
                return Err(Error::Events("events must perturb inputs 0 and 1 once each".into()));
            }
            col[inp] = e;
        }
        let mm = self.modal()?;
        let mut y = TFMatrix::zeros(2, 2);
        for o in 0..2 {
            for (inp, &e) in col.iter().enumerate() {
                let residues: Vec<Complex64> = (0..mm.poles.len())
                    .map(|j| -mm.cv[(o, j)] * mm.beta[(j, e)])
                    .collect();
                let f = RationalFunction::from_partial_fractions(
                    &residues,
                    &mm.poles,
                    Complex64::new(-mm.direct[(o, e)], 0.0),
                )?;
                y.set(o, inp, f);
            }
        }
        Ok(y)
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            order: self.order,
            l: self.l,
            handling: self.handling,
            markov_error: self.markov_error,
            singular_values: self.singular_values.clone(),
        }
    }
}

fn to_continuous(ld: Complex64, ts: f64) -> Complex64 {
    ld.ln() / ts
}

/// `B_c = (A_d - I)^{-1} A_c B_d` per mode.
fn zoh_factor(ld: Complex64, lc: Complex64, ts: f64) -> Complex64 {
    let dm = ld - 1.0;
    if dm.norm() < 1e-12 {
        Complex64::new(1.0 / ts, 0.0)
    } else {
        lc / dm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub order: usize,
    pub l: usize,
    pub handling: StepHandling,
    pub markov_error: f64,
    pub singular_values: Vec<f64>,
}

impl FitReport {
    pub fn write<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "order,{}", self.order)?;
        writeln!(w, "block_columns,{}", self.l)?;
        writeln!(w, "step_handling,{:?}", self.handling)?;
        writeln!(w, "markov_rel_error,{:?}", self.markov_error)?;
        writeln!(w, "index,singular_value")?;
        for (i, s) in self.singular_values.iter().enumerate() {
            writeln!(w, "{},{:?}", i + 1, s)?;
        }
        Ok(())
    }
}

/// Step events of a continuous model, one per input, with `pre_event`
/// samples of steady state `offsets` before each step.
pub fn events_from_model(
    ss: &StateSpace,
    p: f64,
    fs: f64,
    t_end: f64,
    pre_event: usize,
    offsets: &[f64],
) -> Result<Vec<EventRecord>> {
    let k = ss.outputs();
    if offsets.len() != k {
        return Err(Error::Dimension(format!("{} offsets for {k} outputs", offsets.len())));
    }
    (0..ss.inputs())
        .map(|inp| {
            let resp = ss.step_response(inp, p, t_end, fs)?;
            let n = resp.t.len();
            let data = DMatrix::from_fn(k, pre_event + n, |i, j| {
                offsets[i] + if j < pre_event { 0.0 } else { resp.data[i][j - pre_event] }
            });
            EventRecord::new(inp, p, 1.0 / fs, resp.names.clone(), data, pre_event)
        })
        .collect()
}

/// Sidecar describing a set of event CSV files.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EventMeta {
    /// Step size, pu.
    pub p: f64,
    /// Samples before each step.
    pub pre_event: usize,
    /// Output channels, in order, as named in the CSV headers.
    pub channels: Vec<String>,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
    #[serde(default)]
    pub handling: StepHandling,
    pub events: Vec<EventFile>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EventFile {
    pub input: usize,
    /// Relative to the sidecar.
    pub csv: PathBuf,
}

impl EventMeta {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Events(format!("{}: {e}", path.display())))
    }

    /// Raw records, scales applied but not yet preprocessed.
    pub fn read_events(&self, base: &Path) -> Result<Vec<EventRecord>> {
        self.events
            .iter()
            .map(|f| {
                let path = base.join(&f.csv);
                let file = std::fs::File::open(&path)
                    .map_err(|e| Error::Events(format!("{}: {e}", path.display())))?;
                let series = TimeSeries::read_csv(std::io::BufReader::new(file))?;
                let ev = EventRecord::from_time_series(&series, &self.channels, f.input, self.p, self.pre_event)?;
                match &self.scales {
                    Some(s) => ev.with_scales(s.clone()),
                    None => Ok(ev),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn constant_channel_processes_to_zero() {
        let data = m(1, 6, &[2.0; 6]);
        let raw = EventRecord::new(0, 0.001, 0.01, vec!["y".into()], data, 2).unwrap();
        let out = preprocess(&raw, StepHandling::Difference).unwrap();
        assert!(out.data.iter().all(|x| *x == 0.0));
        assert_eq!(out.flat_channels, vec![0]);
    }

    #[test]
    fn scales_are_applied() {
        let data = m(4, 3, &[0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let names = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let raw = EventRecord::new(0, 1.0, 0.01, names, data, 1)
            .unwrap()
            .with_scales(vec![1000.0, 1.0, 100.0, 10.0])
            .unwrap();
        let out = preprocess(&raw, StepHandling::Integrated).unwrap();
        assert_eq!(out.data.column(0).as_slice(), &[1000.0, 1.0, 100.0, 10.0]);
    }

    #[test]
    fn differenced_step_is_zoh_impulse() {
        let (a, ts) = (-3.0_f64, 0.01);
        let ss = StateSpace::new(m(1, 1, &[a]), m(1, 1, &[2.0]), m(1, 1, &[1.0]), m(1, 1, &[0.0])).unwrap();
        let ev = &events_from_model(&ss, 0.001, 1.0 / ts, 0.5, 3, &[0.7]).unwrap()[0];
        let h = preprocess(ev, StepHandling::Difference).unwrap();
        let ad = (a * ts).exp();
        let bd = (ad - 1.0) / a * 2.0;
        assert!(h.data[(0, 0)].abs() < 1e-12);
        for k in 1..h.samples() {
            let expect = ad.powi(k as i32 - 1) * bd;
            assert!((h.data[(0, k)] - expect).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn scalar_impulse_recovers_pole() {
        let n = 40;
        let data = DMatrix::from_fn(1, n, |_, k| if k == 0 { 0.0 } else { 0.9_f64.powi(k as i32 - 1) });
        let mut ev = EventRecord::new(0, 1.0, 1.0, vec!["y".into()], data, 0).unwrap();
        ev.processed = Some(StepHandling::Difference);
        let model = era_realize(&[ev], &EraOptions { order: Some(1), ..Default::default() }).unwrap();
        assert!((model.a[(0, 0)] - 0.9).abs() < 1e-10);
    }

    #[test]
    fn overfit_is_rejected_unless_allowed() {
        let n = 40;
        let data = DMatrix::from_fn(1, n, |_, k| if k == 0 { 0.0 } else { 0.5_f64.powi(k as i32) });
        let mut ev = EventRecord::new(0, 1.0, 1.0, vec!["y".into()], data, 0).unwrap();
        ev.processed = Some(StepHandling::Difference);
        let opts = EraOptions { order: Some(3), ..Default::default() };
        assert!(matches!(era_realize(&[ev.clone()], &opts), Err(Error::RankDeficient { .. })));
        let opts = EraOptions { allow_overfit: true, ..opts };
        assert!(era_realize(&[ev], &opts).is_ok());
    }

    #[test]
    fn zero_events_give_zero_admittance() {
        let data = DMatrix::zeros(2, 50);
        let names: Vec<String> = vec!["i1".into(), "i2".into()];
        let evs: Vec<EventRecord> = (0..2)
            .map(|inp| {
                preprocess(
                    &EventRecord::new(inp, 0.001, 0.001, names.clone(), data.clone(), 1).unwrap(),
                    StepHandling::Difference,
                )
                .unwrap()
            })
            .collect();
        let model = era_realize(&evs, &EraOptions::default()).unwrap();
        let y = model.admittance().unwrap();
        assert!(y.entries().iter().all(|e| e.is_zero()));
    }

    #[test]
    fn one_event_is_not_enough_for_2x2() {
        let ss = StateSpace::new(
            m(1, 1, &[-5.0]),
            m(1, 2, &[1.0, 0.5]),
            m(2, 1, &[1.0, -1.0]),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let evs = events_from_model(&ss, 0.001, 1000.0, 0.2, 1, &[0.0, 0.0]).unwrap();
        let one = vec![preprocess(&evs[0], StepHandling::Difference).unwrap()];
        let model = era_realize(&one, &EraOptions::default()).unwrap();
        let err = model.admittance().unwrap_err();
        assert!(err.to_string().contains("two events required"), "{err}");
    }

    #[test]
    fn integrated_path_matches_difference_path() {
        let ss = StateSpace::new(
            m(2, 2, &[0.0, 1.0, -400.0, -8.0]),
            m(2, 2, &[0.0, 0.0, 1.0, 2.0]),
            m(2, 2, &[1.0, 0.0, 0.3, 0.1]),
            m(2, 2, &[0.0, 0.0, 0.0, 0.05]),
        )
        .unwrap();
        let evs = events_from_model(&ss, 0.001, 2500.0, 1.0, 1, &[0.1, -0.2]).unwrap();
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * 10.0);
        let expect = ss.transfer_at(s).unwrap();
        for handling in [StepHandling::Difference, StepHandling::Integrated] {
            let pre: Vec<_> = evs.iter().map(|e| preprocess(e, handling).unwrap()).collect();
            let model = era_realize(&pre, &EraOptions { l: Some(100), ..Default::default() }).unwrap();
            let g = model.transfer_at(s).unwrap();
            assert!((&g - &expect).norm() < 1e-6 * expect.norm(), "{handling:?}: {g} vs {expect}");
        }
    }
}
