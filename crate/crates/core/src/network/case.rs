//! Case files: a TOML document validated before any numerics run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::OMEGA0;

fn default_omega0() -> f64 {
    OMEGA0
}
fn default_base() -> f64 {
    100.0
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkCase {
    pub system: SystemSection,
    #[serde(default)]
    pub buses: Vec<BusSpec>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub loads: Vec<LoadSpec>,
    #[serde(default)]
    pub shunts: Vec<ShuntSpec>,
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default)]
    pub name: Option<String>,
    /// Nominal angular frequency, rad/s.
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    /// Power base, MVA. Every per-unit value in the file uses it.
    #[serde(default = "default_base")]
    pub base_mva: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    Slack,
    Pv,
    Pq,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub id: usize,
    #[serde(rename = "type")]
    pub kind: BusType,
    /// Voltage setpoint for slack and PV buses.
    #[serde(default = "one")]
    pub v: f64,
    /// Slack angle, degrees.
    #[serde(default)]
    pub angle_deg: f64,
    /// Scheduled generation, pu. Loads are listed separately.
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, pu.
    #[serde(default)]
    pub b: f64,
    /// Series compensation as a fraction of `x`.
    #[serde(default)]
    pub comp: f64,
}

/// Constant-impedance load, `P + jQ` drawn at 1 pu voltage.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub bus: usize,
    pub p: f64,
    #[serde(default)]
    pub q: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ShuntSpec {
    pub bus: usize,
    #[serde(default)]
    pub g: f64,
    #[serde(default)]
    pub b: f64,
}

/// Operating point a block is derived at when it must differ from the
/// power flow (for studies of miscalibrated models).
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub p: f64,
    pub q: f64,
    pub v: f64,
    #[serde(default)]
    pub theta_deg: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    Generator {
        bus: usize,
        #[serde(default)]
        name: Option<String>,
        h: f64,
        #[serde(default)]
        d: f64,
        xg: f64,
        #[serde(default)]
        calibrate_at: Option<CalibrationSpec>,
    },
    Dfig {
        bus: usize,
        #[serde(default)]
        name: Option<String>,
        rs: f64,
        xls: f64,
        rr: f64,
        xlr: f64,
        /// Rotor speed, pu.
        wm: f64,
    },
    TorsionalGenerator {
        bus: usize,
        #[serde(default)]
        name: Option<String>,
        h: Vec<f64>,
        d: Vec<f64>,
        k: Vec<f64>,
        xg: f64,
        #[serde(default)]
        generator_mass: usize,
        /// Machine base when `h`, `d`, `k`, `xg` are on it rather than on
        /// the system base.
        #[serde(default)]
        machine_mva: Option<f64>,
        #[serde(default)]
        calibrate_at: Option<CalibrationSpec>,
    },
    VscReference {
        bus: usize,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: VscSpec,
        #[serde(default)]
        calibrate_at: Option<CalibrationSpec>,
    },
    MeasuredAdmittanceFile {
        bus: usize,
        #[serde(default)]
        name: Option<String>,
        /// Relative paths resolve against the case file directory.
        path: String,
        /// Frame angle of the stored block relative to the system frame.
        #[serde(default)]
        frame_angle_deg: f64,
        #[serde(default)]
        calibrate_at: Option<CalibrationSpec>,
    },
    InfiniteBus {
        bus: usize,
        #[serde(default)]
        name: Option<String>,
    },
}

impl SourceSpec {
    pub fn bus(&self) -> usize {
        match self {
            SourceSpec::Generator { bus, .. }
            | SourceSpec::Dfig { bus, .. }
            | SourceSpec::TorsionalGenerator { bus, .. }
            | SourceSpec::VscReference { bus, .. }
            | SourceSpec::MeasuredAdmittanceFile { bus, .. }
            | SourceSpec::InfiniteBus { bus, .. } => *bus,
        }
    }

    pub fn name(&self) -> String {
        let n = match self {
            SourceSpec::Generator { name, .. }
            | SourceSpec::Dfig { name, .. }
            | SourceSpec::TorsionalGenerator { name, .. }
            | SourceSpec::VscReference { name, .. }
            | SourceSpec::MeasuredAdmittanceFile { name, .. }
            | SourceSpec::InfiniteBus { name, .. } => name.clone(),
        };
        n.unwrap_or_else(|| format!("{}@{}", self.kind(), self.bus()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SourceSpec::Generator { .. } => "generator",
            SourceSpec::Dfig { .. } => "dfig",
            SourceSpec::TorsionalGenerator { .. } => "torsional-generator",
            SourceSpec::VscReference { .. } => "vsc-reference",
            SourceSpec::MeasuredAdmittanceFile { .. } => "measured-admittance-file",
            SourceSpec::InfiniteBus { .. } => "infinite-bus",
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SourceSpec::InfiniteBus { .. })
    }
}

fn d_rg() -> f64 {
    0.001
}
fn d_xg() -> f64 {
    0.1
}
fn d_kpi() -> f64 {
    0.3
}
fn d_kii() -> f64 {
    5.0
}
fn d_kpo() -> f64 {
    1.0
}
fn d_kio() -> f64 {
    60.0
}
fn d_kpp() -> f64 {
    60.0
}
fn d_kip() -> f64 {
    1400.0
}
fn d_tau() -> f64 {
    0.0272
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VscSpec {
    #[serde(default = "d_rg")]
    pub rg: f64,
    #[serde(default = "d_xg")]
    pub xg: f64,
    #[serde(default)]
    pub rl: f64,
    #[serde(default)]
    pub xl: f64,
    #[serde(default = "d_kpi")]
    pub kpi: f64,
    #[serde(default = "d_kii")]
    pub kii: f64,
    #[serde(default = "d_kpo")]
    pub kpo: f64,
    #[serde(default = "d_kio")]
    pub kio: f64,
    #[serde(default = "d_kpp")]
    pub kp_pll: f64,
    #[serde(default = "d_kip")]
    pub ki_pll: f64,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "one")]
    pub vdc_ref: f64,
}

impl Default for VscSpec {
    fn default() -> Self {
        Self {
            rg: d_rg(),
            xg: d_xg(),
            rl: 0.0,
            xl: 0.0,
            kpi: d_kpi(),
            kii: d_kii(),
            kpo: d_kpo(),
            kio: d_kio(),
            kp_pll: d_kpp(),
            ki_pll: d_kip(),
            tau: d_tau(),
            vdc_ref: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Constant complex Ybus, Kron-reduced to the source buses.
    #[default]
    Quasistatic,
    /// Rational R-L-C branch models on the full nodal matrix.
    DynamicBranches,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub fmin: f64,
    pub fmax: f64,
    pub n: usize,
}

/// Parameter sweep for mode tracing.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Currently `comp` (series compensation of `branch`).
    pub parameter: String,
    /// Index into `branches`.
    #[serde(default)]
    pub branch: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Bus whose source forms the converter side of the Nyquist loop.
    #[serde(default)]
    pub nyquist_bus: Option<usize>,
}

impl NetworkCase {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let case: Self = toml::from_str(s).map_err(|e| Error::Case(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Case(m) => Error::Case(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn bus_index(&self, id: usize) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::Case(format!("unknown bus {id}")))
    }

    pub fn omega0(&self) -> f64 {
        self.system.omega0
    }

    pub fn source_at(&self, bus: usize) -> Option<&SourceSpec> {
        self.sources.iter().find(|s| s.bus() == bus)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.system.omega0 > 0.0) {
            return Err(Error::Case("system.omega0 must be positive".into()));
        }
        if self.buses.is_empty() {
            return Err(Error::Case("no buses".into()));
        }
        let mut ids = BTreeSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(Error::Case(format!("duplicate bus {}", b.id)));
            }
            if b.kind != BusType::Pq && !(b.v > 0.0) {
                return Err(Error::Case(format!("bus {}: voltage setpoint must be > 0", b.id)));
            }
        }
        if !self.buses.iter().any(|b| b.kind == BusType::Slack) {
            return Err(Error::Case("no slack bus".into()));
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::Case(format!("branch {k}: unknown bus {end}")));
                }
            }
            if br.from == br.to {
                return Err(Error::Case(format!("branch {k}: both ends at bus {}", br.from)));
            }
            if br.r < 0.0 || !(br.comp >= 0.0 && br.comp < 1.0) {
                return Err(Error::Case(format!("branch {k}: need r >= 0 and 0 <= comp < 1")));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::Case(format!("branch {k}: zero impedance")));
            }
        }
        for ld in &self.loads {
            if !ids.contains(&ld.bus) {
                return Err(Error::Case(format!("load at unknown bus {}", ld.bus)));
            }
        }
        for sh in &self.shunts {
            if !ids.contains(&sh.bus) {
                return Err(Error::Case(format!("shunt at unknown bus {}", sh.bus)));
            }
        }
        let mut hosted: BTreeMap<usize, String> = BTreeMap::new();
        for s in &self.sources {
            let bus = s.bus();
            if !ids.contains(&bus) {
                return Err(Error::Case(format!("source {} at unknown bus {bus}", s.name())));
            }
            if let Some(other) = hosted.insert(bus, s.name()) {
                return Err(Error::Case(format!(
                    "bus {bus} hosts both {other} and {}",
                    s.name()
                )));
            }
            let kind = self.buses[self.bus_index(bus)?].kind;
            if s.is_infinite() && kind != BusType::Slack {
                return Err(Error::Case(format!("infinite bus {bus} must be the slack bus")));
            }
        }
        for b in &self.buses {
            if b.kind != BusType::Pq && !hosted.contains_key(&b.id) {
                return Err(Error::Case(format!(
                    "bus {} is {:?} but hosts no source",
                    b.id, b.kind
                )));
            }
        }
        self.check_connected()?;
        if let Some(sw) = &self.analysis.sweep {
            if sw.parameter != "comp" {
                return Err(Error::Case(format!("unsupported sweep parameter `{}`", sw.parameter)));
            }
            if sw.branch >= self.branches.len() {
                return Err(Error::Case(format!("sweep branch {} does not exist", sw.branch)));
            }
            if sw.values.is_empty() {
                return Err(Error::Case("sweep has no values".into()));
            }
        }
        if let Some(g) = &self.analysis.grid {
            if !(g.fmin > 0.0 && g.fmax > g.fmin && g.n >= 2) {
                return Err(Error::Case("grid needs 0 < fmin < fmax and n >= 2".into()));
            }
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (i, j) = (self.bus_index(br.from)?, self.bus_index(br.to)?);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Case(format!("bus {} is not connected", self.buses[k].id)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMIB: &str = r#"
[system]
omega0 = 377.0

[[buses]]
id = 1
type = "pv"
v = 1.0
p = 0.5

[[buses]]
id = 2
type = "slack"

[[branches]]
from = 1
to = 2
x = 0.5

[[sources]]
kind = "generator"
bus = 1
h = 3.0
d = 1.0
xg = 0.3

[[sources]]
kind = "infinite-bus"
bus = 2
"#;

    #[test]
    fn parses_smib() {
        let c = NetworkCase::from_toml_str(SMIB).unwrap();
        assert_eq!(c.sources.len(), 2);
        assert_eq!(c.sources[0].kind(), "generator");
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SMIB.replace("h = 3.0", "h = 3.0\ninertia = 2.0");
        let err = NetworkCase::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("inertia"), "{err}");
        let bad = SMIB.replace("omega0 = 377.0", "omega0 = 377.0\nfoo = 1");
        assert!(NetworkCase::from_toml_str(&bad).is_err());
    }

    #[test]
    fn two_sources_on_one_bus_rejected() {
        let bad = SMIB.replace("bus = 2\n", "bus = 1\n");
        assert!(NetworkCase::from_toml_str(&bad).is_err());
    }
}
