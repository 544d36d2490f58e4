//! Command-line layer: configuration, subcommands and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{commands, Command};
pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::CliError;
pub use output::{emit_outputs, CsvTable, Manifest, RunOutput, Surrogates, MANIFEST};

/// Runs `command` on a pool of `cfg.threads` workers without writing anything.
pub fn run_command(command: &str, cfg: &RunConfig) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let cmd = commands().get(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| cmd.run(cfg))
}

/// Runs `command` and writes its files and manifest to `cfg.out`.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<Manifest, CliError> {
    let out = run_command(command, cfg)?;
    emit_outputs(command, cfg, &out, &cfg.out)
}
