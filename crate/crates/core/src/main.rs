//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or model error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use situtest::cli::{cmd_audit, cmd_fit, cmd_label, AuditFlags, LoadedConfig};

#[derive(Parser)]
#[command(name = "situtest", disable_version_flag = true)]
#[command(about = "Audit tabular decisions for individual discrimination with \
situation testing (attribute-flip comparator) or counterfactual situation \
testing (model-generated comparator)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the structural causal model declared by the config's DAG and
    /// export it as JSON.
    Fit {
        /// Run config (TOML).
        config: PathBuf,
    },
    /// Apply the config's decision rule and write the labeled dataset.
    Label {
        /// Run config (TOML).
        config: PathBuf,
    },
    /// Run the configured audit over the k grid; writes a summary CSV and
    /// per-k case JSON files.
    Audit {
        /// Run config (TOML).
        config: PathBuf,
        /// Also write per-case neighborhood member dumps (for box plots).
        #[arg(long)]
        dump_neighborhoods: bool,
        /// Evaluate complainants sequentially instead of on the thread
        /// pool. Outputs are byte-identical either way.
        #[arg(long)]
        sequential: bool,
    },
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let mut stdout = std::io::stdout();
    let result = match &cli.command {
        Command::Version => {
            println!("situtest {}", env!("CARGO_PKG_VERSION"));
            return ExitCode::SUCCESS;
        }
        Command::Fit { config } => {
            LoadedConfig::from_path(config).and_then(|loaded| cmd_fit(&loaded, &mut stdout))
        }
        Command::Label { config } => {
            LoadedConfig::from_path(config).and_then(|loaded| cmd_label(&loaded, &mut stdout))
        }
        Command::Audit {
            config,
            dump_neighborhoods,
            sequential,
        } => {
            let flags = AuditFlags {
                dump_neighborhoods: *dump_neighborhoods,
                sequential: *sequential,
            };
            LoadedConfig::from_path(config)
                .and_then(|loaded| cmd_audit(&loaded, flags, &mut stdout))
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
