//! Scenario files and seeded Monte-Carlo experiment runners.
//!
//! A scenario names one experiment, the network parameters and the number
//! of trials. Trial `t` draws its channel from the stream `(seed, t)`, so
//! results do not depend on how trials are scheduled across threads; rows
//! are always emitted in trial order.

mod config;
mod experiments;
mod output;

pub use config::{Experiment, FrameSplit, Scenario, TableCell, SCHEMA_VERSION};
pub use experiments::{run_experiment, ExperimentOutput};
pub use output::{OutputPaths, Stats, Table, CSV_SCHEMA};

use std::path::PathBuf;

use crate::error::Result;

/// Files written by [`run_scenario`] and the summary they contain.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub paths: OutputPaths,
    pub rows: usize,
    pub summary: serde_json::Value,
}

/// Runs the scenario and writes `<name>.csv`, `<name>.summary.json` and,
/// when a trace was recorded, `<name>.trace.csv` into `output_dir`.
pub fn run_scenario(s: &Scenario) -> Result<RunReport> {
    let out = run_experiment(s)?;
    std::fs::create_dir_all(&s.output_dir)?;
    let paths = OutputPaths::new(&s.output_dir, &s.name, out.trace.is_some());
    let header = format!(
        "uwbpc {} csv_schema={} experiment={} scenario={} seed={} trials={}",
        env!("CARGO_PKG_VERSION"),
        CSV_SCHEMA,
        s.experiment.kind(),
        s.hash(),
        s.seed,
        s.trials
    );
    out.table.write_csv(&paths.csv, &header)?;
    output::write_json(&paths.summary, &out.summary)?;
    if let (Some(trace), Some(path)) = (&out.trace, &paths.trace) {
        trace.write_csv(path, &header)?;
    }
    log::info!("wrote {} rows to {}", out.table.rows.len(), paths.csv.display());
    Ok(RunReport {
        paths,
        rows: out.table.rows.len(),
        summary: out.summary,
    })
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub experiment: Option<String>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<()> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(trials) = self.trials {
            s.trials = trials;
        }
        if let Some(dir) = &self.output_dir {
            s.output_dir = dir.clone();
        }
        if let Some(kind) = &self.experiment {
            if kind != s.experiment.kind() {
                s.experiment = Experiment::with_defaults(kind, &s.params)?;
            }
        }
        s.validate()
    }
}
