mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Simulate, equilibrate and certify volume-surface reaction-diffusion systems.
///
/// Log verbosity is read from VSRD_LOG (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "vsrd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate in time and record entropy, dissipation and mass.
    Run(Common),
    /// Compute the equilibrium with the mass of the initial condition.
    Equilibrium(Common),
    /// Certify a decay rate on three successive mesh levels.
    Certify(Common),
    /// Gap constants of a first-order reaction network (JSON or TOML).
    NetworkGap(Common),
    /// Export the mesh and the assembled operator.
    MeshExport(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of uniform refinements applied to the configured mesh.
    #[arg(long, default_value_t = 0)]
    pub mesh_level: u32,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VSRD_LOG", "warn")).init();
    vsrd::use_sequential_linear_algebra();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => commands::run(c),
        Command::Equilibrium(c) => commands::equilibrium(c),
        Command::Certify(c) => commands::certify_cmd(c),
        Command::NetworkGap(c) => commands::network_gap(c),
        Command::MeshExport(c) => commands::mesh_export(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vsrd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
