//! `ggff`: runs the identity checks and Monte Carlo experiments on a network
//! file and writes a JSON report. The exit status is 0 iff every verdict in
//! the report passes.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ggff", version, about = "Gauge-twisted free field experiments on electrical networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Network file (JSON).
    #[arg(long)]
    pub network: PathBuf,
    /// Master seed.
    #[arg(long, env = "GGFF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateArg {
    Conductance,
    Green,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the network invariants.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the exact determinant and Green function identities.
    Identities {
        #[command(flatten)]
        common: Common,
        /// Also write the Laplacians and Green matrices as CSV into this directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Estimate the probability that no sign cluster has a loop of holonomy -1.
    VerifyTheorem1 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Tolerance in standard errors.
        #[arg(long, default_value_t = 3.0)]
        z: f64,
    },
    /// Flipped two-point moments conditioned on the event, against G_σ.
    ConditionalMoments {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Vertex pair "x,y"; repeatable. Defaults to every interior pair.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(String, String)>,
        #[arg(long, default_value_t = 3.0)]
        z: f64,
    },
    /// Two-point sign-cluster connectivity against the arcsine formula.
    Connectivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Vertex pair "x,y"; repeatable. Defaults to every pair of distinct interior vertices.
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(String, String)>,
        #[arg(long, default_value_t = 3.0)]
        z: f64,
    },
    /// Loop soup counts, occupation moments and the twisted isomorphism.
    LoopsoupTest {
        #[command(flatten)]
        common: Common,
        /// Number of soups.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Rate of the jump-free loop durations.
        #[arg(long, value_enum, default_value_t = RateArg::Conductance)]
        one_point_rate: RateArg,
        /// Tolerance for means, in standard errors.
        #[arg(long, default_value_t = 3.0)]
        z: f64,
        /// Tolerance for second moments and the isomorphism, in standard errors.
        #[arg(long, default_value_t = 4.0)]
        z_second: f64,
        /// Write the loops of the first `dump_soups` soups as JSON lines.
        #[arg(long)]
        dump_loops: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        dump_soups: u64,
    },
    /// Gauge equivalence and triviality, with certificates.
    Gauge {
        #[command(flatten)]
        common: Common,
        /// Network file carrying a second gauge field on the same graph.
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// Sample the metric-graph field on a grid along every edge.
    MetricGrid {
        #[command(flatten)]
        common: Common,
        /// Grid cells per edge.
        #[arg(long, default_value_t = 8)]
        cells: usize,
        /// Number of sampled grids.
        #[arg(long, default_value_t = 1)]
        samples: u64,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected \"x,y\", got \"{s}\""))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, outcome) = match cli.command {
        Command::Validate { common } => (common.clone(), commands::validate(&common)),
        Command::Identities { common, csv_dir } => (common.clone(), commands::identities(&common, csv_dir.as_deref())),
        Command::VerifyTheorem1 { common, samples, z } => {
            (common.clone(), commands::verify_theorem1(&common, samples, z))
        }
        Command::ConditionalMoments { common, samples, pairs, z } => {
            (common.clone(), commands::conditional_moments(&common, samples, &pairs, z))
        }
        Command::Connectivity { common, samples, pairs, z } => {
            (common.clone(), commands::connectivity(&common, samples, &pairs, z))
        }
        Command::LoopsoupTest { common, samples, alpha, one_point_rate, z, z_second, dump_loops, dump_soups } => {
            let opts =
                commands::LoopsoupOptions { samples, alpha, rate: one_point_rate, z, z_second, dump_loops, dump_soups };
            (common.clone(), commands::loopsoup_test(&common, &opts))
        }
        Command::Gauge { common, other } => (common.clone(), commands::gauge(&common, other.as_deref())),
        Command::MetricGrid { common, cells, samples } => {
            (common.clone(), commands::metric_grid(&common, cells, samples))
        }
    };
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.write(common.output.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
