use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netcoord::{GameParams, SolverConfig};
use netcoord_cli::experiments::{
    default_fig3_grid, default_fig5_grid, fig5_params, FIG3_RHOS,
};
use netcoord_cli::spec::{linspace, logspace, ChainSettings};
use netcoord_cli::{
    run_chain_validation, run_fig3, run_optimize, run_published_matrices, run_spec,
    run_topology_compare, run_uniform, CliError, ExperimentKind, ExperimentSpec, Report, Topology,
};

/// Reproduces the weight-design experiments and writes CSV and SVG output.
///
/// Exit status: 0 success, 1 invalid input, 2 failed check, 3 solver
/// non-convergence, 4 I/O error.
#[derive(Debug, Parser)]
#[command(name = "netcoord", version)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Base seed for simulations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Run the experiment described by this JSON file instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct Grid {
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

impl Grid {
    fn build(&self, default: Vec<f64>, log: bool) -> Vec<f64> {
        if self.beta_min.is_none() && self.beta_max.is_none() && self.points.is_none() {
            return default;
        }
        let lo = self.beta_min.unwrap_or(default[0]);
        let hi = self.beta_max.unwrap_or(*default.last().unwrap());
        let k = self.points.unwrap_or(default.len());
        if log {
            logspace(lo, hi, k)
        } else {
            linspace(lo, hi, k)
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Complete-graph optima versus rationality, one curve per price.
    Fig3 {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = FIG3_RHOS)]
        rho: Vec<f64>,
        #[command(flatten)]
        grid: Grid,
    },
    /// Optimized objective of line, star and hybrid networks versus rationality.
    Topologies {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 4.0)]
        theta: f64,
        #[arg(long, default_value_t = 5.0)]
        rho: f64,
        #[command(flatten)]
        grid: Grid,
    },
    /// Solves the five-agent star and line reference designs and checks them.
    Published,
    /// Compares simulated log-linear learning with the exact Gibbs law.
    Chain {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Weight on every edge of the topology.
        #[arg(long, default_value_t = 0.5)]
        weight: f64,
        /// full, star, line, hybrid, or an edge list like 0-1,1-2
        #[arg(long, default_value = "full")]
        topology: String,
        #[arg(long, default_value_t = 2_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 3)]
        chains: u64,
        #[arg(long, default_value_t = 0.02)]
        tv_threshold: f64,
    },
    /// Optimal weights on one sparsity pattern.
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        rho: f64,
        /// full, star, line, hybrid, or an edge list like 0-1,1-2
        #[arg(long, default_value = "full")]
        topology: String,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// Allow up to 20 agents.
        #[arg(long)]
        allow_large: bool,
    },
    /// Uniform optimum, equilibrium probability and sensitivity over a grid.
    Uniform {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        rho: f64,
        /// Space the grid linearly instead of logarithmically.
        #[arg(long)]
        linear: bool,
        #[command(flatten)]
        grid: Grid,
    },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let out = cli.out.clone();
    if let Some(path) = &cli.config {
        if cli.command.is_some() {
            return Err(CliError::Config("--config replaces the subcommand; give one or the other".into()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return run_spec(&ExperimentSpec::from_json(&text)?);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given (try --help)".into()));
    };
    match command {
        Command::Fig3 { n, rho, grid } => run_fig3(n, &rho, &grid.build(default_fig3_grid(), true), &out),
        Command::Topologies { n, theta, rho, grid } => {
            let base = GameParams::new(n, theta, fig5_params().beta, rho)?;
            run_topology_compare(&base, &grid.build(default_fig5_grid(), false), &out)
        }
        Command::Published => run_published_matrices(&out),
        Command::Chain {
            n,
            theta,
            beta,
            weight,
            topology,
            steps,
            chains,
            tv_threshold,
        } => {
            let spec = ExperimentSpec {
                kind: ExperimentKind::ChainValidate,
                params: Some(GameParams::new(n, theta, beta, 1.0)?),
                beta_grid: None,
                rho_list: None,
                pattern: Some(Topology::parse(&topology)?),
                output_dir: out,
                seed: cli.seed,
                chain: ChainSettings {
                    steps,
                    chains,
                    weight,
                    tv_threshold,
                },
            };
            run_chain_validation(&spec)
        }
        Command::Optimize {
            n,
            theta,
            beta,
            rho,
            topology,
            max_iter,
            allow_large,
        } => {
            let config = SolverConfig {
                max_iterations: max_iter,
                allow_large,
                ..SolverConfig::default()
            };
            let params = GameParams::new(n, theta, beta, rho)?;
            run_optimize(&params, &Topology::parse(&topology)?, &config, &out)
        }
        Command::Uniform {
            n,
            theta,
            rho,
            linear,
            grid,
        } => {
            let base = GameParams::new(n, theta, 1.0, rho)?;
            run_uniform(&base, &grid.build(default_fig3_grid(), !linear), &out)
        }
    }
}

fn print_report(report: &Report) {
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("{status}  {}", c.name);
        } else {
            println!("{status}  {}: {}", c.name, c.detail);
        }
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = run(cli).and_then(|report| {
        print_report(&report);
        report.into_result()
    });
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
