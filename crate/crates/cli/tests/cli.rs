use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use admittance::io::{load_admittance, save_admittance};
use admittance::statespace::StateSpace;
use admittance::TFMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use tempfile::TempDir;

fn case(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admittance"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stable_case_exits_zero() {
    let dir = TempDir::new().unwrap();
    let out = run(&["eigs", "--case", s(&case("smib.toml")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("eigs.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
}

#[test]
fn unstable_case_exits_three() {
    let dir = TempDir::new().unwrap();
    let out = run(&["eigs", "--case", s(&case("torsional.toml")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("unstable"));
}

#[test]
fn bad_arguments_exit_one() {
    let out = run(&["eigs", "--case", s(&case("smib.toml"))]);
    assert_eq!(code(&out), 1);
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_case_file_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = run(&["eigs", "--case", "no/such/case.toml", "--out", s(dir.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn constant_admittance_is_a_numeric_failure() {
    let dir = TempDir::new().unwrap();
    let adm = dir.path().join("id.adm");
    save_admittance(&TFMatrix::identity(2), &adm).unwrap();
    let out = run(&["eigs", "--admittance", s(&adm), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        for cmd in ["eigs", "rma", "sigma"] {
            let out = run(&[cmd, "--case", s(&case("kundur.toml")), "--out", s(dir.path())]);
            assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for f in ["eigs.csv", "rma.csv", "rma_peaks.csv", "sigma.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn derived_admittance_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = run(&["derive", "--case", s(&case("smib.toml")), "--source", "G1", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let y = load_admittance(&dir.path().join("G1.adm")).unwrap();
    assert_eq!((y.rows(), y.cols()), (2, 2));
    let again = dir.path().join("again.adm");
    save_admittance(&y, &again).unwrap();
    let z = load_admittance(&again).unwrap();
    for w in [0.3, 2.0, 40.0] {
        let sp = Complex64::new(0.1, w);
        let (a, b) = (y.eval(sp).unwrap(), z.eval(sp).unwrap());
        assert!((&a - &b).norm() <= 1e-14 * a.norm());
    }
}

#[test]
fn assembled_admittance_gives_the_same_roots() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out = run(&["assemble", "--case", s(&case("kundur.toml")), "--out", s(a.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(a.path().join("powerflow.csv").exists());
    let out = run(&["eigs", "--case", s(&case("kundur.toml")), "--out", s(a.path())]);
    assert_eq!(code(&out), 0);
    let total = a.path().join("total.adm");
    let out = run(&["eigs", "--admittance", s(&total), "--out", s(b.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let parse = |p: &Path| -> Vec<(f64, f64)> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let v: Vec<f64> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
                (v[0], v[1])
            })
            .collect()
    };
    let (x, y) = (parse(&a.path().join("eigs.csv")), parse(&b.path().join("eigs.csv")));
    assert_eq!(x.len(), y.len());
    for (p, q) in x.iter().zip(&y) {
        assert!((p.0 - q.0).abs() + (p.1 - q.1).abs() < 1e-9, "{p:?} vs {q:?}");
    }
}

#[test]
fn nyquist_agrees_with_eigs_on_dfig() {
    let dir = TempDir::new().unwrap();
    let out = run(&["nyquist", "--case", s(&case("dfig.toml")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("nyquist_summary.csv").exists());
}

/// Two-input, two-output test system written as event CSVs with a sidecar.
fn write_events(dir: &Path, inputs: &[usize]) -> PathBuf {
    let a = DMatrix::from_row_slice(3, 3, &[-4.0, 60.0, 0.0, -60.0, -4.0, 0.0, 0.0, 0.0, -25.0]);
    let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let c = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 1.0]);
    let d = DMatrix::zeros(2, 2);
    let ss = StateSpace::new(a, b, c, d).unwrap();
    let (p, fs, pre) = (0.01, 1000.0, 5);
    let mut entries = String::new();
    for &inp in inputs {
        let resp = ss.step_response(inp, p, 0.5, fs).unwrap();
        let mut csv = String::from("t,id,iq\n");
        for k in 0..pre {
            csv.push_str(&format!("{:?},0.0,0.0\n", (k as f64 - pre as f64) / fs));
        }
        for (k, t) in resp.t.iter().enumerate() {
            csv.push_str(&format!("{t:?},{:?},{:?}\n", resp.data[0][k], resp.data[1][k]));
        }
        let name = format!("event{inp}.csv");
        fs::write(dir.join(&name), csv).unwrap();
        entries.push_str(&format!("\n[[events]]\ninput = {inp}\ncsv = \"{name}\"\n"));
    }
    let meta = dir.join("events.toml");
    fs::write(
        &meta,
        format!("p = {p:?}\npre_event = {pre}\nchannels = [\"id\", \"iq\"]\n{entries}"),
    )
    .unwrap();
    meta
}

#[test]
fn era_needs_two_events() {
    let dir = TempDir::new().unwrap();
    let meta = write_events(dir.path(), &[0]);
    let out = run(&["era", "--events", s(&meta), "--out", s(&dir.path().join("fit"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("two events required"));
}

#[test]
fn era_identifies_the_test_system() {
    let dir = TempDir::new().unwrap();
    let meta = write_events(dir.path(), &[0, 1]);
    let fit = dir.path().join("fit");
    let out = run(&["era", "--events", s(&meta), "--out", s(&fit)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("order 3 "));
    let poles = fs::read_to_string(fit.join("era_poles.csv")).unwrap();
    let found: Vec<(f64, f64)> = poles
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').take(2).map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    for want in [(-4.0, 60.0), (-4.0, -60.0), (-25.0, 0.0)] {
        assert!(
            found.iter().any(|f| (f.0 - want.0).abs() + (f.1 - want.1).abs() < 1e-6),
            "{want:?} not in {found:?}"
        );
    }
    assert!(fit.join("era_admittance.adm").exists());
}
