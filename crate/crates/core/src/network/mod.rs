//! Network description, power flow and assembly of the total admittance.

pub mod assemble;
pub mod block;
pub mod case;
pub mod powerflow;
pub mod sources;
pub mod study;
pub mod ybus;

pub use assemble::{aggregate_at, assemble_total, thevenin_at, Aggregate, TotalAdmittance, CALIBRATION_TOL};
pub use block::{AdmittanceBlock, Calibration, SignConvention};
pub use case::{Mode, NetworkCase, SourceSpec};
pub use powerflow::{power_flow, PowerFlow};
pub use sources::{source_block, source_blocks, terminal_calibration, FrameChoice};
pub use study::Study;
pub use ybus::{build_ybus, expand_dq, kron_reduce};
