mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "clustersync",
    version,
    about = "Cluster synchronization analysis of multilayer networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the network comes from and where artifacts go.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Network file (same as --input).
    #[arg(value_name = "INPUT")]
    pub input_pos: Option<PathBuf>,
    /// Network file.
    #[arg(long, conflicts_with = "input_pos")]
    pub input: Option<PathBuf>,
    /// Built-in fixture; `$CLUSTERSYNC_FIXTURES` overrides its network file.
    #[arg(long = "case", conflicts_with_all = ["input", "input_pos"])]
    pub case: Option<String>,
    /// Directory for the emitted artifacts.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Integration settings shared by the dynamical subcommands.
#[derive(Debug, Clone, Args)]
pub struct Dynamics {
    /// Requested step; shrunk so every delay is a whole number of steps.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Balanced partition as comma-separated cluster labels per node (default: minimal coloring).
    #[arg(long)]
    pub partition: Option<String>,
    /// Seeded offset amplitude added to every cluster's initial state.
    #[arg(long, default_value_t = 0.0)]
    pub spread: f64,
}

#[derive(Debug, Clone, Args)]
pub struct Grid {
    /// Swept parameter: `delay`, `sigma1`, `sigma2`, ... (`kappa` = `sigma1`).
    #[arg(long)]
    pub param: Option<String>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimal balanced coloring.
    Color {
        #[command(flatten)]
        common: Common,
    },
    /// Every balanced partition, coarsest first.
    Partitions {
        #[command(flatten)]
        common: Common,
    },
    /// Breaking vectors and intertwining indices.
    Breakings {
        #[command(flatten)]
        common: Common,
    },
    /// Irreducible transform T and the transformed adjacency matrices.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Output of `partitions`, used instead of enumerating again.
        #[arg(long)]
        partitions: Option<PathBuf>,
        /// 1-based index of the base partition in the lattice.
        #[arg(long, default_value_t = 1)]
        base: usize,
    },
    /// Independent, one-way dependent and intertwined clusters.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        partition: Option<String>,
    },
    /// Quotient network of a balanced partition.
    Quotient {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        partition: Option<String>,
    },
    /// Time traces of the full network (or of the quotient with --quotient).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dynamics: Dynamics,
        /// Integrate the quotient network instead.
        #[arg(long)]
        quotient: bool,
        /// Seeded perturbation amplitude added to every node.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        /// Keep one sample every this many steps.
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Transverse MLE of every irreducible piece.
    Mle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dynamics: Dynamics,
        /// Allowed drift of the running estimate over the last 20% of the run.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Transverse MLEs over a parameter grid, with the first sign change.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dynamics: Dynamics,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Bisection steps refining the first sign change.
        #[arg(long, default_value_t = 6)]
        bisect: usize,
    },
    /// Basins of in-phase and anti-phase locking of a two-cluster phase quotient.
    Basin {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dynamics: Dynamics,
        #[command(flatten)]
        grid: Grid,
        /// Number of initial lags in [0, 2 pi).
        #[arg(long, default_value_t = 16)]
        lags: usize,
        /// Angular tolerance of the in-phase / anti-phase labels.
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
    },
    /// Structural analysis and default sweep of a built-in fixture.
    Case {
        /// Fixture name; `--list` prints them all.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Structural analysis only.
        #[arg(long)]
        no_sweep: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Color { common } => commands::color(&common),
        Command::Partitions { common } => commands::partitions(&common),
        Command::Breakings { common } => commands::breakings(&common),
        Command::Transform {
            common,
            partitions,
            base,
        } => commands::transform(&common, partitions.as_deref(), base),
        Command::Classify { common, partition } => commands::classify(&common, partition.as_deref()),
        Command::Quotient { common, partition } => commands::quotient(&common, partition.as_deref()),
        Command::Simulate {
            common,
            dynamics,
            quotient,
            perturb,
            every,
        } => commands::simulate(&common, &dynamics, quotient, perturb, every),
        Command::Mle { common, dynamics, tol } => commands::mle(&common, &dynamics, tol),
        Command::Sweep {
            common,
            dynamics,
            grid,
            tol,
            bisect,
        } => commands::sweep(&common, &dynamics, &grid, tol, bisect),
        Command::Basin {
            common,
            dynamics,
            grid,
            lags,
            tol,
        } => commands::basin(&common, &dynamics, &grid, lags, tol),
        Command::Case {
            name,
            list,
            out_dir,
            seed,
            dt,
            horizon,
            points,
            no_sweep,
        } => commands::case(name.as_deref(), list, &out_dir, seed, dt, horizon, points, no_sweep),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
