//! `lensnls`: runs the named scenarios and writes their reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lensnls::scenarios::{run_scenario, write_outcome, ScenarioConfig, ScenarioKind};
use lensnls::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "lensnls", version, about = "NLS lens-transform experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Scenario configuration (TOML). Defaults to the shipped config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for the summary, CSV tables and snapshots.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gate chirps on the worst-case edge gradient.
    #[arg(long, global = true)]
    strict_aliasing: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Physical evolution plus lens transform against lens-frame evolution.
    LensCheck,
    /// Pseudoconformal involution, conjugation and energy decomposition.
    PcCheck,
    /// Harmonic propagator against the kernel quadrature.
    MehlerCheck,
    /// Lens image of the quintic ground state.
    Soliton,
    /// Endpoint continuity and the scattering state.
    Scatter,
    /// Strichartz norms across frames and lens periods.
    Frames,
    /// Whitney pairs, restriction partitions and dyadic sums.
    Whitney,
    /// Planted-atom recovery by the concentration search.
    Concentrate,
    /// Strichartz norm against mass.
    Sweep,
    /// Runs whatever scenario `--config` names.
    Run,
}

impl Command {
    fn kind(self) -> Option<ScenarioKind> {
        Some(match self {
            Command::LensCheck => ScenarioKind::LensCheck,
            Command::PcCheck => ScenarioKind::PcCheck,
            Command::MehlerCheck => ScenarioKind::MehlerCheck,
            Command::Soliton => ScenarioKind::Soliton,
            Command::Scatter => ScenarioKind::Scatter,
            Command::Frames => ScenarioKind::Frames,
            Command::Whitney => ScenarioKind::Whitney,
            Command::Concentrate => ScenarioKind::Concentrate,
            Command::Sweep => ScenarioKind::Sweep,
            Command::Run => return None,
        })
    }
}

const EXIT_SCHEMA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn schema_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_SCHEMA)
}

fn numerical_failure(scenario: &str, reason: &str, failed: Vec<String>) -> ExitCode {
    let record = json!({
        "status": "numerical_failure",
        "scenario": scenario,
        "reason": reason,
        "failed_checks": failed,
    });
    eprintln!("{record}");
    ExitCode::from(EXIT_NUMERICAL)
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let mut cfg = match (&cli.global.config, cli.command.kind()) {
        (Some(path), kind) => {
            let cfg = ScenarioConfig::load(path)?;
            if let Some(kind) = kind {
                if cfg.scenario != kind {
                    return Err(Error::Config(format!(
                        "{} configures scenario `{}`, not `{kind}`",
                        path.display(),
                        cfg.scenario
                    )));
                }
            }
            cfg
        }
        (None, Some(kind)) => ScenarioConfig::default_for(kind),
        (None, None) => return Err(Error::Config("`run` needs --config".into())),
    };
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    cfg.strict_aliasing |= cli.global.strict_aliasing;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => return schema_error(e),
    };
    let name = cfg.scenario.name();
    let mut outcome = match run_scenario(&cfg) {
        Ok(o) => o,
        Err(Error::Config(msg)) => return schema_error(msg),
        Err(e) => return numerical_failure(name, &e.to_string(), Vec::new()),
    };
    let dir = cli
        .global
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(name));
    if let Err(e) = write_outcome(&dir, &mut outcome) {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::FAILURE;
    }
    let report = &outcome.report;
    for c in &report.checks {
        println!(
            "{} {:<36} {:>12.4e} {} {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            match c.relation {
                lensnls::scenarios::Relation::AtMost => "<=",
                lensnls::scenarios::Relation::AtLeast => ">=",
            },
            c.bound
        );
    }
    println!("summary: {}", dir.join("summary.json").display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        let failed = report.failed_checks().iter().map(|c| c.name.clone()).collect();
        numerical_failure(name, "checks failed", failed)
    }
}
