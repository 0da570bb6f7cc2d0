//! Admittance builders for individual devices.

mod branch;
mod dfig;
mod generator;
mod torsional;
mod vsc;

pub use branch::{rl_branch_admittance, rl_impedance, series_branch_static, shunt_capacitor_static};
pub use dfig::{dfig_machine_admittance, dfig_static_admittance, DfigModels, DfigParams};
pub use generator::{
    classical_state_space, gen_classical_admittance, torque_coefficients, ClassicalMachine,
    GeneratorParams, OperatingPoint, TorqueCoefficients, CONSISTENCY_TOL,
};
pub use torsional::{torsional_gen_admittance, torsional_state_space, TorsionalParams};
pub use vsc::{vsc_reference_model, VscModel, VscParams};
