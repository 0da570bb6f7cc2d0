//! A loaded case with its power flow and source blocks, ready for analysis.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::network::assemble::{aggregate_at, assemble_total, Aggregate, TotalAdmittance};
use crate::network::block::AdmittanceBlock;
use crate::network::case::{Mode, NetworkCase};
use crate::network::powerflow::{power_flow, PowerFlow};
use crate::network::sources::{source_blocks, FrameChoice};
use crate::stability::eigs::EigenReport;
use crate::stability::grid::FrequencyGrid;
use crate::tfmatrix::TFMatrix;

#[derive(Clone, Debug)]
pub struct Study {
    pub case: NetworkCase,
    pub pf: PowerFlow,
    pub blocks: Vec<AdmittanceBlock>,
    pub mode: Mode,
    pub frame: FrameChoice,
    /// Directory relative file references resolve against.
    pub base_dir: PathBuf,
}

impl Study {
    /// `mode` overrides the case's `analysis.mode`.
    pub fn new(case: NetworkCase, base_dir: &Path, frame: FrameChoice, mode: Option<Mode>) -> Result<Self> {
        let pf = power_flow(&case)?;
        let blocks = source_blocks(&case, &pf, frame, base_dir)?;
        let mode = mode.or(case.analysis.mode).unwrap_or_default();
        Ok(Self {
            case,
            pf,
            blocks,
            mode,
            frame,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path, frame: FrameChoice, mode: Option<Mode>) -> Result<Self> {
        let case = NetworkCase::load(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::new(case, dir, frame, mode)
    }

    pub fn total(&self) -> Result<TotalAdmittance> {
        assemble_total(&self.case, &self.pf, &self.blocks, self.mode)
    }

    pub fn eigen_report(&self) -> Result<EigenReport> {
        EigenReport::from_admittance(&self.total()?.y)
    }

    pub fn aggregate(&self, bus: usize) -> Result<Aggregate> {
        aggregate_at(&self.case, &self.pf, &self.blocks, self.mode, bus)
    }

    /// Bus whose source is the converter side of the Nyquist loop: the
    /// configured one, else the only source block.
    pub fn loop_bus(&self) -> Result<usize> {
        if let Some(b) = self.case.analysis.nyquist_bus {
            return Ok(b);
        }
        match self.blocks.as_slice() {
            [b] => Ok(b.bus),
            _ => Err(Error::Case(
                "several source blocks: set analysis.nyquist_bus to pick the loop".into(),
            )),
        }
    }

    /// Open-loop gain `Y_source Z_rest` at `bus`.
    pub fn open_loop(&self, bus: usize) -> Result<TFMatrix> {
        let agg = self.aggregate(bus)?;
        agg.y_source.mul(&agg.thevenin_impedance()?)
    }

    /// Same study with the series compensation of one branch replaced.
    pub fn with_comp(&self, branch: usize, comp: f64) -> Result<Self> {
        let mut case = self.case.clone();
        let br = case
            .branches
            .get_mut(branch)
            .ok_or_else(|| Error::Case(format!("branch {branch} does not exist")))?;
        br.comp = comp;
        case.validate()?;
        Self::new(case, &self.base_dir, self.frame, Some(self.mode))
    }

    /// The case's `analysis.grid`, if any.
    pub fn grid(&self) -> Result<Option<FrequencyGrid>> {
        self.case
            .analysis
            .grid
            .as_ref()
            .map(|g| FrequencyGrid::log_spaced(g.fmin, g.fmax, g.n))
            .transpose()
    }
}
