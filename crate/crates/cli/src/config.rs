use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "gossip-aoi", version, about = "Age-of-information moments for Poissonian gossip networks")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Network document (JSON)
    #[arg(long, global = true)]
    pub network: Option<PathBuf>,

    /// Comma-separated node ids, e.g. 1,2,3
    #[arg(long, global = true, value_delimiter = ',')]
    pub subset: Vec<usize>,

    /// Highest moment order
    #[arg(long, global = true, default_value_t = 1)]
    pub k: usize,

    /// First passage / lattice Monte Carlo samples
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: u64,

    /// Independent simulation replicas
    #[arg(long, global = true, default_value_t = 10_000)]
    pub replicas: u64,

    /// Simulation horizon; defaults to twice the largest pilot t0
    #[arg(long, global = true)]
    pub horizon: Option<f64>,

    /// Start of the time-average window; defaults to twice the largest pilot t0
    #[arg(long = "burn-in", global = true)]
    pub burn_in: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = SimMode::Replication)]
    pub mode: SimMode,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads; results do not depend on it
    #[arg(long, global = true, env = "GOSSIP_AOI_WORKERS")]
    #[serde(skip)]
    pub workers: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Report path; stdout when absent
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    /// |z| above which a compare row fails
    #[arg(long = "se-threshold", global = true, default_value_t = 4.0)]
    pub se_threshold: f64,

    /// Lattice dimension
    #[arg(long, global = true, default_value_t = 2)]
    pub d: usize,

    /// Lattice radius
    #[arg(long, global = true, default_value_t = 2)]
    pub ell: usize,

    /// Write the simulated event trace (CSV) of one trajectory here
    #[arg(long, global = true)]
    #[serde(skip)]
    pub trace: Option<PathBuf>,

    /// Embed wall-clock runtime in the report
    #[arg(long, global = true)]
    #[serde(skip)]
    pub timing: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Exact moments by recursion; all subsets when --subset is omitted
    Solve,
    /// First passage percolation Monte Carlo
    Fpp,
    /// Event-driven gossip simulation
    Simulate,
    /// Growth recursion and Monte Carlo on a Z^d box
    Lattice,
    /// Solver against both Monte Carlo oracles
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Fpp => "fpp",
            Command::Simulate => "simulate",
            Command::Lattice => "lattice",
            Command::Compare => "compare",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    Replication,
    TimeAverage,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}
