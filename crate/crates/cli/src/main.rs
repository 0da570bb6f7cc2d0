use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use admittance::era::{era_realize, preprocess, EraOptions, EventMeta};
use admittance::io::save_admittance;
use admittance::network::{Mode, SourceSpec, Study};
use admittance::network::sources::{source_block, FrameChoice};
use admittance::stability::{
    freq_hz, mode_trace, nyquist_loci, rma_sweep, sigma_sweep, EigenReport, FrequencyGrid, NyquistOptions,
    Verdict, PAIRING_RADIUS,
};
use admittance::{Error, TFMatrix};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "admittance", version, about = "Admittance-based small-signal stability analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write one source's admittance model.
    Derive {
        #[command(flatten)]
        common: CaseArgs,
        /// Source name, or the bus hosting it.
        #[arg(long)]
        source: String,
    },
    /// Write the total admittance and the power-flow report.
    Assemble {
        #[command(flatten)]
        common: CaseArgs,
    },
    /// Roots of det(Y).
    Eigs {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Modal impedances over a frequency grid.
    Rma {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_name = "FMIN,FMAX,N")]
        grid: Option<String>,
    },
    /// Singular values of Y over a frequency grid.
    Sigma {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_name = "FMIN,FMAX,N")]
        grid: Option<String>,
    },
    /// Generalized Nyquist test of the source-versus-rest loop.
    Nyquist {
        #[command(flatten)]
        common: CaseArgs,
        /// Bus of the source forming the loop; defaults to analysis.nyquist_bus.
        #[arg(long)]
        bus: Option<usize>,
        #[arg(long, value_name = "FMIN,FMAX,N")]
        grid: Option<String>,
    },
    /// Root migration across the case's analysis.sweep.
    Trace {
        #[command(flatten)]
        common: CaseArgs,
    },
    /// Identify a model from step-response events.
    Era {
        /// Event metadata file listing the CSVs.
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        /// Block columns of the Hankel matrices.
        #[arg(long)]
        block_columns: Option<usize>,
        #[arg(long)]
        allow_overfit: bool,
    },
}

#[derive(Args, Debug)]
struct CaseArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameArg::System)]
    frame: FrameArg,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long, conflicts_with = "admittance", required_unless_present = "admittance")]
    case: Option<PathBuf>,
    /// Admittance file to analyse instead of a case.
    #[arg(long)]
    admittance: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FrameArg::System)]
    frame: FrameArg,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FrameArg {
    System,
    Local,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Quasistatic,
    DynamicBranches,
}

impl From<FrameArg> for FrameChoice {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::System => FrameChoice::System,
            FrameArg::Local => FrameChoice::Local,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Quasistatic => Mode::Quasistatic,
            ModeArg::DynamicBranches => Mode::DynamicBranches,
        }
    }
}

const EXIT_UNSTABLE: u8 = 3;

/// Failures of the input or model rather than of the numerics.
fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Case(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Events(_)
            | Error::InvalidParameter(_)
            | Error::OperatingPoint(_)
            | Error::FrameMismatch(_)
            | Error::Dimension(_)
    )
}

fn load_study(c: &CaseArgs) -> anyhow::Result<Study> {
    Ok(Study::load(&c.case, c.frame.into(), c.mode.map(Into::into))?)
}

fn out_file(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Stable => 0,
        Verdict::Unstable => EXIT_UNSTABLE,
    }
}

/// Admittance under analysis and the study it came from, if any.
fn input_admittance(i: &InputArgs) -> anyhow::Result<(TFMatrix, Option<Study>)> {
    match (&i.case, &i.admittance) {
        (Some(case), None) => {
            let study = Study::load(case, i.frame.into(), i.mode.map(Into::into))?;
            let y = study.total()?.y;
            Ok((y, Some(study)))
        }
        (None, Some(path)) => Ok((admittance::io::load_admittance(path)?, None)),
        _ => Err(anyhow!("give exactly one of --case or --admittance")),
    }
}

fn pick_grid(flag: &Option<String>, study: Option<&Study>, y: &TFMatrix) -> anyhow::Result<FrequencyGrid> {
    if let Some(g) = flag {
        return Ok(FrequencyGrid::parse(g)?);
    }
    if let Some(g) = study.map(Study::grid).transpose()?.flatten() {
        return Ok(g);
    }
    Ok(FrequencyGrid::default_for(y)?)
}

fn find_source<'a>(study: &'a Study, key: &str) -> anyhow::Result<&'a SourceSpec> {
    let by_bus = key.parse::<usize>().ok();
    study
        .case
        .sources
        .iter()
        .find(|s| s.name() == key || Some(s.bus()) == by_bus)
        .ok_or_else(|| anyhow!("no source named or at bus `{key}`"))
}

fn cmd_derive(c: &CaseArgs, source: &str) -> anyhow::Result<u8> {
    let study = load_study(c)?;
    let spec = find_source(&study, source)?;
    let block = source_block(&study.case, &study.pf, spec, c.frame.into(), &study.base_dir)?
        .ok_or_else(|| anyhow!("{} is an infinite bus and has no admittance", spec.name()))?;
    std::fs::create_dir_all(&c.out)?;
    let path = c.out.join(format!("{}.adm", spec.name()));
    save_admittance(&block.y, &path)?;
    println!("{}: {}x{} admittance -> {}", spec.name(), block.dim(), block.dim(), path.display());
    Ok(0)
}

fn cmd_assemble(c: &CaseArgs) -> anyhow::Result<u8> {
    let study = load_study(c)?;
    let total = study.total()?;
    std::fs::create_dir_all(&c.out)?;
    save_admittance(&total.y, &c.out.join("total.adm"))?;
    let mut w = out_file(&c.out, "powerflow.csv")?;
    writeln!(w, "bus,vm,va_deg,p,q,retained")?;
    for (k, b) in study.case.buses.iter().enumerate() {
        let (v, s) = (study.pf.v[k], study.pf.s[k]);
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{}",
            b.id,
            v.norm(),
            v.arg().to_degrees(),
            s.re,
            s.im,
            total.buses.contains(&b.id)
        )?;
    }
    w.flush()?;
    println!(
        "{}x{} total admittance over buses {:?}, power flow converged in {} iterations",
        total.y.rows(),
        total.y.cols(),
        total.buses,
        study.pf.iterations
    );
    Ok(0)
}

fn cmd_eigs(i: &InputArgs) -> anyhow::Result<u8> {
    let (y, _) = input_admittance(i)?;
    let report = EigenReport::from_admittance(&y)?;
    let mut w = out_file(&i.out, "eigs.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    match report.dominant() {
        Some(d) => println!(
            "{}: {} roots, dominant {:?}{:+?}j ({:.4} Hz)",
            report.verdict.as_str(),
            report.roots.len(),
            d.re,
            d.im,
            freq_hz(d)
        ),
        None => println!("{}: no roots", report.verdict.as_str()),
    }
    for c in &report.cancelled {
        println!("cancelled common factor at {:?}{:+?}j", c.zero.re, c.zero.im);
    }
    Ok(verdict_code(report.verdict))
}

fn cmd_rma(i: &InputArgs, grid: &Option<String>) -> anyhow::Result<u8> {
    let (y, study) = input_admittance(i)?;
    let g = pick_grid(grid, study.as_ref(), &y)?;
    let res = rma_sweep(&y, &g)?;
    let mut w = out_file(&i.out, "rma.csv")?;
    res.write_csv(&mut w)?;
    w.flush()?;
    let mut w = out_file(&i.out, "rma_peaks.csv")?;
    res.write_peaks_csv(&mut w)?;
    w.flush()?;
    if let Some(p) = res.peaks.first() {
        println!("largest modal impedance {:?} at {:?} Hz (trace {})", p.magnitude, p.freq_hz, p.trace + 1);
    }
    if !res.skipped.is_empty() {
        println!("{} grid points skipped", res.skipped.len());
    }
    Ok(0)
}

fn cmd_sigma(i: &InputArgs, grid: &Option<String>) -> anyhow::Result<u8> {
    let (y, study) = input_admittance(i)?;
    let g = pick_grid(grid, study.as_ref(), &y)?;
    let res = sigma_sweep(&y, &g)?;
    let mut w = out_file(&i.out, "sigma.csv")?;
    res.write_csv(&mut w)?;
    w.flush()?;
    let min = res
        .min_sigma()
        .into_iter()
        .zip(&res.freq_hz)
        .filter(|(s, _)| s.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0));
    if let Some((s, f)) = min {
        println!("smallest singular value {s:?} at {f:?} Hz");
    }
    Ok(0)
}

fn cmd_nyquist(c: &CaseArgs, bus: Option<usize>, grid: &Option<String>) -> anyhow::Result<u8> {
    let study = load_study(c)?;
    let bus = match bus {
        Some(b) => b,
        None => study.loop_bus()?,
    };
    let l = study.open_loop(bus)?;
    let g = pick_grid(grid, Some(&study), &l)?;
    let res = nyquist_loci(&l, &g, &NyquistOptions::default())?;
    let mut w = out_file(&c.out, "nyquist.csv")?;
    res.write_csv(&mut w)?;
    w.flush()?;
    let mut w = out_file(&c.out, "nyquist_summary.csv")?;
    res.write_summary(&mut w)?;
    w.flush()?;
    println!(
        "{}: {} clockwise encirclements, {} open-loop RHP poles",
        res.verdict.as_str(),
        res.encirclements_cw,
        res.open_loop_rhp
    );
    Ok(verdict_code(res.verdict))
}

fn cmd_trace(c: &CaseArgs) -> anyhow::Result<u8> {
    let study = load_study(c)?;
    let sweep = study
        .case
        .analysis
        .sweep
        .clone()
        .ok_or_else(|| Error::Case("trace needs an [analysis.sweep] section".into()))?;
    let reports = sweep
        .values
        .iter()
        .map(|&v| study.with_comp(sweep.branch, v)?.eigen_report())
        .collect::<admittance::Result<Vec<_>>>()?;
    let trace = mode_trace(sweep.values.clone(), reports, PAIRING_RADIUS)?;
    let mut w = out_file(&c.out, "trace.csv")?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    let mut w = out_file(&c.out, "trace_summary.csv")?;
    writeln!(w, "param,verdict,dominant_re,dominant_im,dominant_hz")?;
    for (p, r) in trace.params.iter().zip(&trace.reports) {
        let d = r.dominant_oscillatory(1.0).or(r.dominant()).unwrap_or_default();
        writeln!(w, "{p:?},{},{:?},{:?},{:?}", r.verdict.as_str(), d.re, d.im, freq_hz(d))?;
    }
    w.flush()?;
    match trace.stability_crossing() {
        Some((a, b)) => println!("verdict changes between {} = {a:?} and {b:?}", sweep.parameter),
        None => println!("verdict constant across the sweep"),
    }
    for (step, a, b) in &trace.ambiguities {
        log::warn!("step {step}: roots {a} and {b} closer than the pairing radius");
    }
    Ok(0)
}

fn cmd_era(
    events: &Path,
    out: &Path,
    order: Option<usize>,
    l: Option<usize>,
    allow_overfit: bool,
) -> anyhow::Result<u8> {
    let meta = EventMeta::load(events)?;
    let base = events.parent().unwrap_or_else(|| Path::new("."));
    let processed = meta
        .read_events(base)?
        .iter()
        .map(|e| preprocess(e, meta.handling))
        .collect::<admittance::Result<Vec<_>>>()?;
    let opts = EraOptions {
        order,
        l,
        allow_overfit,
    };
    let model = era_realize(&processed, &opts)?;
    let mut w = out_file(out, "era_fit.csv")?;
    model.report().write(&mut w)?;
    w.flush()?;
    let modal = model.modal()?;
    let mut w = out_file(out, "era_poles.csv")?;
    writeln!(w, "re,im,freq_hz")?;
    for p in &modal.poles {
        writeln!(w, "{:?},{:?},{:?}", p.re, p.im, freq_hz(*p))?;
    }
    w.flush()?;
    let mut w = out_file(out, "era_statespace.txt")?;
    model.write_realization(&mut w)?;
    w.flush()?;
    println!(
        "order {} from {} events, Markov reconstruction error {:e}",
        model.order,
        processed.len(),
        model.markov_error
    );
    let y = model.admittance()?;
    save_admittance(&y, &out.join("era_admittance.adm"))?;
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.cmd {
        Cmd::Derive { common, source } => cmd_derive(&common, &source),
        Cmd::Assemble { common } => cmd_assemble(&common),
        Cmd::Eigs { input } => cmd_eigs(&input),
        Cmd::Rma { input, grid } => cmd_rma(&input, &grid),
        Cmd::Sigma { input, grid } => cmd_sigma(&input, &grid),
        Cmd::Nyquist { common, bus, grid } => cmd_nyquist(&common, bus, &grid),
        Cmd::Trace { common } => cmd_trace(&common),
        Cmd::Era {
            events,
            out,
            order,
            block_columns,
            allow_overfit,
        } => cmd_era(&events, &out, order, block_columns, allow_overfit),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = match e.downcast_ref::<Error>() {
                Some(inner) => is_usage(inner),
                None => true,
            };
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
