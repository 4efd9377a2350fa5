use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, Parser)]
#[command(name = "hjj", version, about = "Hamilton-Jacobi equations on a junction with time-measurable data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: RunOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Finite-difference solution
    Solve,
    /// Value function of the control problem by dynamic programming
    Value,
    /// Both solvers on the control-induced problem, with their gaps
    Compare,
    /// Mollified-data study of the error signal and solution gaps
    Approx,
    /// Assumption audit of the problem file
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Value => "value",
            Command::Compare => "compare",
            Command::Approx => "approx",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    /// Problem file (JSON)
    #[arg(long, global = true)]
    pub problem: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0.01)]
    pub dx: f64,
    /// Time step; derived from the CFL limit when absent
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long = "cfl-safety", global = true, default_value_t = 0.5)]
    pub cfl_safety: f64,
    /// Overrides the horizon of the problem file
    #[arg(long = "T", global = true)]
    pub horizon: Option<f64>,
    /// Overrides the truncation radius of the problem file
    #[arg(long = "R-domain", global = true)]
    pub r_domain: Option<f64>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated snapshot times (default: the horizon)
    #[arg(long = "report-times", global = true, value_delimiter = ',')]
    pub report_times: Option<Vec<f64>>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Control samples per edge
    #[arg(long, global = true)]
    pub controls: Option<usize>,
    #[arg(long, env = "HJJ_THREADS", hide = true, global = true)]
    pub threads: Option<usize>,
}
