use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wwdecay_cli::config::Scenario;
use wwdecay_cli::{execute, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "wwdecay", version, about = "Excited-atom decay near a photodetector")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Free-space decay on the radial grid.
    Vacuum(Common),
    /// One detector atom in the full three-dimensional model.
    SingleDetector(Common),
    /// Reduction factor for detector atoms on a spherical shell.
    Shell(Common),
    /// Scalar one-dimensional model with one detector atom.
    Toy(Common),
    /// Equations of motion against numerical Laplace inversion.
    CompareRoutes(Common),
    /// Repeat a scenario over a list of parameter values.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a configuration key by dotted path, e.g. system.beta=0.02.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for Monte Carlo estimates.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn config(scenario: Scenario, c: &Common) -> Result<RunConfig, CliError> {
    let base = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(&c.set)?;
    cfg.scenario = scenario;
    if let Some(d) = &c.out {
        cfg.output.dir = d.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Config(format!("--jobs: {e}"))),
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T: Send>(_jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (scenario, common) = match &cli.cmd {
        Cmd::Vacuum(c) => (Scenario::Vacuum, c),
        Cmd::SingleDetector(c) => (Scenario::SingleDetector, c),
        Cmd::Shell(c) => (Scenario::Shell, c),
        Cmd::Toy(c) => (Scenario::ToyDynamics, c),
        Cmd::CompareRoutes(c) => (Scenario::RouteCompare, c),
        Cmd::Sweep(c) => (Scenario::Sweep, c),
    };
    let result = config(scenario, common).and_then(|cfg| {
        with_jobs(common.jobs, || execute(&cfg))??;
        Ok(cfg.output.dir)
    });
    match result {
        Ok(dir) => {
            eprintln!("{}: results in {}", scenario.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
