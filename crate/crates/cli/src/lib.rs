//! Command-line front-end: instance parsing, dispatch and JSON reports.

pub mod commands;
pub mod instance;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use polybias::algebra::{Budget, DEFAULT_BUDGET};

use crate::instance::Instance;
use crate::report::{BudgetInfo, ErrorInfo, InstanceInfo, Report, Tool, SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] polybias::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 3,
            CliError::Core(e) if e.is_budget() => 2,
            CliError::Core(polybias::Error::IdentityViolation(_)) => 1,
            CliError::Core(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "budget",
            3 => "input",
            _ => "internal",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polybias", version, about = "Exact bias, rank and point-count analyses of polynomials over finite rings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Instance file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Maximum number of points any single enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Parallel shards; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub shards: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Bias and analytic rank of a polynomial or of a combination of a collection.
    Bias {
        #[arg(long)]
        poly: Option<String>,
        #[arg(long)]
        collection: Option<String>,
        /// Coefficients of the combination, comma separated.
        #[arg(long)]
        a: Option<String>,
    },
    /// Normalized fiber sizes of a collection as exact rationals.
    Nu {
        #[arg(long)]
        collection: String,
        /// Also compare both routes to the Fourier coefficients.
        #[arg(long)]
        fourier: bool,
    },
    /// Gowers norm of `e(P)`.
    Gowers {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
    /// Rank bounds for a polynomial or a collection.
    Rank {
        #[arg(long)]
        poly: Option<String>,
        #[arg(long)]
        collection: Option<String>,
        /// Sample derivative enrichments of the collection.
        #[arg(long)]
        enrich_trials: Option<usize>,
    },
    /// Rank bounds for the multilinear form of a polynomial.
    Ncrank {
        #[arg(long)]
        poly: String,
    },
    /// Point counts over extensions of the base field.
    Tau {
        #[arg(long)]
        collection: String,
        #[arg(long)]
        t: Option<String>,
        #[arg(long, default_value_t = 2)]
        levels: usize,
    },
    /// Fiber sizes against the degree bound, or one fiber in detail.
    Fibers {
        #[arg(long)]
        collection: String,
        #[arg(long)]
        t: Option<String>,
        #[arg(long, default_value_t = 8)]
        sample: usize,
    },
    /// Ideal membership of one polynomial, or a probe over vanishing polynomials.
    Nullstellensatz {
        #[arg(long)]
        collection: String,
        #[arg(long)]
        probe: bool,
        #[arg(long, default_value_t = 1)]
        a: usize,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        extra_degree: usize,
        #[arg(long)]
        member: Option<String>,
        #[arg(long)]
        degbound: Option<usize>,
    },
    /// Character biases and depth-weighted uniformity over `Z/p^l`.
    Padic {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 1)]
        s: i64,
        /// A single character `x -> e(c x / p^l)`.
        #[arg(long)]
        character: Option<u32>,
    },
    /// Zero counts modulo `p^m` for `m = 1..=levels`.
    Ratsing {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 2)]
        levels: u32,
    },
    /// Affine map `phi` with `phi^* P = Q`.
    Pullback {
        #[arg(long)]
        poly: String,
        #[arg(long)]
        target: String,
        /// Number of variables of the target; defaults to the largest index used.
        #[arg(long)]
        target_vars: Option<usize>,
    },
    /// Weak polynomiality of a table, or weak against global dimensions on a fiber.
    Weakpoly {
        #[arg(long)]
        table: Option<String>,
        #[arg(long)]
        collection: Option<String>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long, default_value_t = 1)]
        a: usize,
        /// 1 for lines only, 2 to add planes.
        #[arg(long, default_value_t = 1)]
        cap: usize,
    },
    /// Rank of the reduced multilinear form against normalized p-adic biases.
    Probe {
        #[arg(long)]
        polys: String,
        #[arg(long, default_value_t = 1)]
        s: i64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bias { .. } => "bias",
            Command::Nu { .. } => "nu",
            Command::Gowers { .. } => "gowers",
            Command::Rank { .. } => "rank",
            Command::Ncrank { .. } => "ncrank",
            Command::Tau { .. } => "tau",
            Command::Fibers { .. } => "fibers",
            Command::Nullstellensatz { .. } => "nullstellensatz",
            Command::Padic { .. } => "padic",
            Command::Ratsing { .. } => "ratsing",
            Command::Pullback { .. } => "pullback",
            Command::Weakpoly { .. } => "weakpoly",
            Command::Probe { .. } => "probe",
        }
    }
}

/// Runs one command and returns the report with its exit code.
pub fn run(cli: &Cli) -> (Report, u8) {
    let start = Instant::now();
    let budget = Budget::new(cli.global.budget).with_shards(cli.global.shards);
    let mut report = Report {
        schema: SCHEMA.into(),
        tool: Tool::default(),
        command: cli.command.name().into(),
        instance: None,
        budget: BudgetInfo {
            max_points: budget.max_points,
        },
        result: None,
        error: None,
        timing_ms: 0,
    };
    let outcome = load(cli).and_then(|inst| {
        report.instance = Some(InstanceInfo {
            sha256: inst.digest.clone(),
            ring: inst.ring.to_string(),
            vars: inst.vars,
        });
        commands::dispatch(&cli.command, &inst, &budget, cli.global.seed)
    });
    let code = match outcome {
        Ok(value) => {
            report.result = Some(value);
            0
        }
        Err(e) => {
            report.error = Some(ErrorInfo {
                kind: e.kind().into(),
                message: e.to_string(),
            });
            e.exit_code()
        }
    };
    report.timing_ms = start.elapsed().as_millis() as u64;
    (report, code)
}

fn load(cli: &Cli) -> Result<Instance, CliError> {
    let path = cli
        .global
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Instance::parse(&text)
}
