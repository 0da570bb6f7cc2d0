//! Plain-text admittance files.
//!
//! ```text
//! rows=2
//! cols=2
//! var=s
//! # entry 0 0
//! num: 0.5 -1.25e-3
//! den: 2.0 0.1 1.0
//! ...
//! ```
//!
//! Entries follow in row-major order, coefficients in ascending degree.
//! Complex coefficients are written `re+imj`. Every number uses the shortest
//! representation that parses back to the same `f64`.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::rational::RationalFunction;
use crate::tfmatrix::TFMatrix;

pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{:?}", c.re)
    } else if c.im.is_sign_negative() {
        format!("{:?}{:?}j", c.re, c.im)
    } else {
        format!("{:?}+{:?}j", c.re, c.im)
    }
}

pub fn parse_complex(tok: &str) -> Result<Complex64> {
    let t = tok.trim();
    let bad = || Error::Parse(format!("bad coefficient `{t}`"));
    if let Some(body) = t.strip_suffix('j') {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        return match split {
            Some(k) => {
                let re = body[..k].parse::<f64>().map_err(|_| bad())?;
                let im = body[k..].trim_start_matches('+').parse::<f64>().map_err(|_| bad())?;
                Ok(Complex64::new(re, im))
            }
            None => Ok(Complex64::new(0.0, body.parse::<f64>().map_err(|_| bad())?)),
        };
    }
    Ok(Complex64::new(t.parse::<f64>().map_err(|_| bad())?, 0.0))
}

fn write_poly<W: Write>(w: &mut W, tag: &str, p: &Polynomial) -> Result<()> {
    write!(w, "{tag}:")?;
    if p.is_zero() {
        write!(w, " 0.0")?;
    }
    for c in p.coeffs() {
        write!(w, " {}", format_complex(*c))?;
    }
    writeln!(w)?;
    Ok(())
}

pub fn write_admittance<W: Write>(m: &TFMatrix, mut w: W) -> Result<()> {
    writeln!(w, "rows={}", m.rows())?;
    writeln!(w, "cols={}", m.cols())?;
    writeln!(w, "var=s")?;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            writeln!(w, "# entry {i} {j}")?;
            let e = m.get(i, j);
            write_poly(&mut w, "num", e.num())?;
            write_poly(&mut w, "den", e.den())?;
        }
    }
    Ok(())
}

pub fn admittance_to_string(m: &TFMatrix) -> String {
    let mut buf = Vec::new();
    write_admittance(m, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn header(line: Option<(usize, String)>, key: &str) -> Result<String> {
    let (no, line) = line.ok_or_else(|| Error::Parse(format!("missing `{key}` header")))?;
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("line {no}: expected `{key}=...`")))?;
    if k.trim() != key {
        return Err(Error::Parse(format!("line {no}: expected `{key}`, found `{}`", k.trim())));
    }
    Ok(v.trim().to_string())
}

pub fn read_admittance<R: BufRead>(r: R) -> Result<TFMatrix> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(k, l)| l.map(|l| (k + 1, l)))
        .filter(|l| match l {
            Ok((_, s)) => !s.trim().is_empty() && !s.trim_start().starts_with('#'),
            Err(_) => true,
        });
    let mut next = || lines.next().transpose();
    let rows: usize = header(next()?, "rows")?
        .parse()
        .map_err(|e| Error::Parse(format!("rows: {e}")))?;
    let cols: usize = header(next()?, "cols")?
        .parse()
        .map_err(|e| Error::Parse(format!("cols: {e}")))?;
    let var = header(next()?, "var")?;
    if var != "s" {
        return Err(Error::Parse(format!("unsupported variable `{var}`")));
    }
    let mut poly = |tag: &str| -> Result<Polynomial> {
        let (no, line) = next()?.ok_or_else(|| Error::Parse(format!("missing `{tag}:` line")))?;
        let rest = line
            .trim()
            .strip_prefix(tag)
            .and_then(|r| r.strip_prefix(':'))
            .ok_or_else(|| Error::Parse(format!("line {no}: expected `{tag}:`")))?;
        let coeffs = rest
            .split_whitespace()
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Parse(format!("line {no}: {e}")))?;
        Ok(Polynomial::new(coeffs))
    };
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let num = poly("num")?;
        let den = poly("den")?;
        entries.push(RationalFunction::new(num, den)?);
    }
    TFMatrix::from_entries(rows, cols, entries)
}

pub fn load_admittance(path: &Path) -> Result<TFMatrix> {
    let f = std::fs::File::open(path)?;
    read_admittance(std::io::BufReader::new(f))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn save_admittance(m: &TFMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, admittance_to_string(m))?;
    Ok(())
}
