//! Command-line front end: CSV ingestion, key-value configuration, command
//! dispatch and JSON reports for the `groupperm` binary.

pub mod error;
pub mod report;
pub mod run;
pub mod settings;
pub mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, EXIT_GUARD, EXIT_IO, EXIT_OK, EXIT_VALIDATION};
pub use report::Report;
pub use run::{run_analysis, run_simulation, AnalysisCommand, Artifacts, SimCommand};
pub use settings::Settings;
pub use table::{load_csv, read_csv, ExperimentTable};

#[derive(Debug, Parser)]
#[command(
    name = "groupperm",
    version,
    about = "Randomization tests for peer effects in group formation experiments"
)]
pub struct Cli {
    /// Worker threads (default: available cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Plain-text `key = value` config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test the sharp null of no effect between two exposures.
    TestSharp(AnalysisArgs),
    /// Test the pairwise null on the focal units of two exposures.
    TestPairwise(AnalysisArgs),
    /// Hodges-Lehmann estimate and test-inversion interval for a constant shift.
    Hl(AnalysisArgs),
    /// Confidence interval by test inversion (studentized statistic by default).
    Ci(AnalysisArgs),
    /// Simulation studies.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Exact computations by enumerating the design.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Rejection rate of the pairwise test against the effect size.
    Power(SimArgs),
    /// Power with and without stratifying on a covariate.
    Covariate(SimArgs),
    /// Coverage and length of weak-null intervals.
    Coverage(SimArgs),
    /// Rejection sampler against permutation sampler cost.
    Timing(SimArgs),
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// List the support of the design and the exact exposure distribution.
    Enumerate(AnalysisArgs),
    /// Exact randomization p-value.
    ExactP(AnalysisArgs),
    /// Whether a candidate exposure vector is reachable under the design.
    Feasibility(AnalysisArgs),
}

#[derive(Debug, Default, Args)]
pub struct AnalysisArgs {
    /// Data CSV with columns unit_id, attribute, group_id, outcome.
    #[arg(long)]
    pub data: Option<String>,
    /// Declared attribute alphabet, e.g. `0,1`.
    #[arg(long)]
    pub attribute_levels: Option<String>,
    /// sr (observed attribute tallies), sr:COLUMN, or cr.
    #[arg(long)]
    pub design: Option<String>,
    /// multiset, count or coarsened.
    #[arg(long)]
    pub exposure: Option<String>,
    /// Two-column CSV mapping multisets to labels.
    #[arg(long)]
    pub coarsen_map: Option<String>,
    /// First exposure of the contrast.
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<String>,
    /// Second exposure of the contrast.
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<String>,
    /// Restrict the focal set to one attribute level.
    #[arg(long)]
    pub subgroup: Option<String>,
    /// diff-in-means, studentized, stratified:COLUMN or residual:COL[,COL...].
    #[arg(long)]
    pub statistic: Option<String>,
    /// Monte Carlo permutations.
    #[arg(long)]
    pub permutations: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// valid or unbiased.
    #[arg(long)]
    pub estimator: Option<String>,
    /// greater or two-sided.
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// Shift grid `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// sharp or pairwise (oracle exact-p).
    #[arg(long)]
    pub null: Option<String>,
    /// Largest support the oracle will enumerate.
    #[arg(long)]
    pub limit: Option<String>,
    /// Column holding a candidate exposure vector (oracle feasibility).
    #[arg(long)]
    pub candidate_col: Option<String>,
    /// Write the Monte Carlo null draws as CSV.
    #[arg(long)]
    pub draws_out: Option<PathBuf>,
    /// Write the p-value curve as CSV.
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SimArgs {
    /// Comma-separated effect sizes.
    #[arg(long, allow_hyphen_values = true)]
    pub taus: Option<String>,
    /// Outer replicates per effect size.
    #[arg(long)]
    pub replicates: Option<String>,
    /// Permutations per test.
    #[arg(long)]
    pub permutations: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of 4-unit groups holding 0,1,2,3,4 units with attribute 1.
    #[arg(long)]
    pub group_types: Option<String>,
    /// Timing: comma-separated group counts.
    #[arg(long)]
    pub groups: Option<String>,
    /// Timing: accepted draws per group count.
    #[arg(long)]
    pub draws: Option<String>,
    /// Timing: attempt cap per draw.
    #[arg(long)]
    pub cap: Option<String>,
    /// Write plot-ready rows as CSV.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

fn collect(pairs: &[(&str, &Option<String>)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
}

impl AnalysisArgs {
    pub fn flags(&self) -> BTreeMap<String, String> {
        collect(&[
            ("data", &self.data),
            ("attribute-levels", &self.attribute_levels),
            ("design", &self.design),
            ("exposure", &self.exposure),
            ("coarsen-map", &self.coarsen_map),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("subgroup", &self.subgroup),
            ("statistic", &self.statistic),
            ("permutations", &self.permutations),
            ("seed", &self.seed),
            ("estimator", &self.estimator),
            ("direction", &self.direction),
            ("alpha", &self.alpha),
            ("grid", &self.grid),
            ("null", &self.null),
            ("limit", &self.limit),
            ("candidate-col", &self.candidate_col),
        ])
    }
}

impl SimArgs {
    pub fn flags(&self) -> BTreeMap<String, String> {
        collect(&[
            ("taus", &self.taus),
            ("replicates", &self.replicates),
            ("permutations", &self.permutations),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("group-types", &self.group_types),
            ("groups", &self.groups),
            ("draws", &self.draws),
            ("cap", &self.cap),
        ])
    }
}

/// Output of one invocation: the report text and any side files.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(PathBuf, String)>,
}

/// Runs a parsed command line without touching stdout or the thread pool.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let config = cli.config.as_deref();
    let mut files = Vec::new();
    let report = match &cli.command {
        Command::Simulate(sub) => {
            let (command, args) = match sub {
                SimulateCommand::Power(a) => (SimCommand::Power, a),
                SimulateCommand::Covariate(a) => (SimCommand::Covariate, a),
                SimulateCommand::Coverage(a) => (SimCommand::Coverage, a),
                SimulateCommand::Timing(a) => (SimCommand::Timing, a),
            };
            let settings = Settings::resolve(args.flags(), config, settings::SIM_KEYS)?;
            let (report, artifacts) = run_simulation(command, settings)?;
            if let (Some(path), Some(csv)) = (&args.csv_out, artifacts.simulation_csv) {
                files.push((path.clone(), csv));
            }
            report
        }
        other => {
            let (command, args) = match other {
                Command::TestSharp(a) => (AnalysisCommand::TestSharp, a),
                Command::TestPairwise(a) => (AnalysisCommand::TestPairwise, a),
                Command::Hl(a) => (AnalysisCommand::Hl, a),
                Command::Ci(a) => (AnalysisCommand::Ci, a),
                Command::Oracle(OracleCommand::Enumerate(a)) => {
                    (AnalysisCommand::OracleEnumerate, a)
                }
                Command::Oracle(OracleCommand::ExactP(a)) => (AnalysisCommand::OracleExactP, a),
                Command::Oracle(OracleCommand::Feasibility(a)) => {
                    (AnalysisCommand::OracleFeasibility, a)
                }
                Command::Simulate(_) => unreachable!("handled above"),
            };
            let settings = Settings::resolve(args.flags(), config, settings::ANALYSIS_KEYS)?;
            let (report, artifacts) = run_analysis(command, settings)?;
            if let (Some(path), Some(draws)) = (&args.draws_out, &artifacts.null_draws) {
                files.push((path.clone(), report::draws_csv(draws)));
            }
            if let (Some(path), Some(curve)) = (&args.curve_out, &artifacts.curve) {
                files.push((path.clone(), report::curve_csv(curve)));
            }
            report
        }
    };
    Ok(Outcome { report, files })
}

/// Writes the report to `out` (or returns it for stdout) and the side files.
pub fn write_outputs(outcome: &Outcome, out: Option<&Path>) -> Result<Option<String>, CliError> {
    for (path, text) in &outcome.files {
        std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    let json = outcome.report.to_json();
    match out {
        Some(path) => {
            std::fs::write(path, json)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            Ok(None)
        }
        None => Ok(Some(json)),
    }
}
