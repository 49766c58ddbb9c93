//! Command-line scenarios on top of `wwdecay-core`: configuration, execution
//! and result files.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::RunConfig;
pub use error::CliError;

/// Validate, check the output directory, compute, write.
pub fn execute(cfg: &RunConfig) -> Result<run::Outcome, CliError> {
    cfg.check()?;
    cfg.system.clone().sync_mu_a().validate().into_result()?;
    let dir: PathBuf = cfg.output.dir.clone();
    output::prepare_dir(&dir)?;
    let out = run::run(cfg)?;
    output::write_all(&out, &dir, cfg.output.plot_data)?;
    Ok(out)
}
