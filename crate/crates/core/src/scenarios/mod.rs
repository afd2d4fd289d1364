//! Named, configuration-driven experiments with structured reports.

mod checks;
mod config;
mod output;
mod physics;
mod report;

pub use checks::random_element;
pub use config::{
    BatteryConfig, EquationConfig, GridConfig, InitialConfig, OutputConfig, ScenarioConfig, ScenarioKind,
    SearchConfig, StepConfig, TimeConfig, WhitneyConfig,
};
pub use output::write_outcome;
pub use report::{Check, Outcome, Refinement, Relation, Report, Table};

use crate::error::Result;

/// Runs the scenario a validated configuration names.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cfg.scenario {
        ScenarioKind::LensCheck => physics::lens_check(cfg),
        ScenarioKind::PcCheck => checks::pc_check(cfg),
        ScenarioKind::MehlerCheck => checks::mehler_check(cfg),
        ScenarioKind::Soliton => physics::soliton(cfg),
        ScenarioKind::Scatter => physics::scatter(cfg),
        ScenarioKind::Frames => physics::frames(cfg),
        ScenarioKind::Whitney => checks::whitney(cfg),
        ScenarioKind::Concentrate => checks::concentrate(cfg),
        ScenarioKind::Sweep => physics::sweep(cfg),
    }
}
