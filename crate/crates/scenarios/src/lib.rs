//! Executable models of the two example systems: a room thermostat with its
//! plant, and a fail-safe monitor for an unmanned vehicle.

pub mod afs;
pub mod registry;
pub mod script;
pub mod thermostat;

pub use afs::{afs_step, fence_check, grid_cells, AfsInputs, AfsMode, AfsOutput, AfsParams, AfsState, Breach, Breaches, CopterCommand, Fence, GridCell, Priority};
pub use registry::{build, random_afs_inputs, SCENARIOS};
pub use script::{ExogenousScript, ScriptFile};
pub use thermostat::{
    convergence_time, house_step, regulation_margin, thermometer_step, thermostat_step, toggle_gap_bound, ElseBranch, Margin, ThermoParams,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{0}' (known: thermostat, regulation, afs)")]
    UnknownScenario(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("scenario {scenario} has no input '{variable}'")]
    UnknownVariable { scenario: String, variable: String },
    #[error("script line {line}: {message}")]
    Script { line: u64, message: String },
    #[error("{0}")]
    Params(String),
}
