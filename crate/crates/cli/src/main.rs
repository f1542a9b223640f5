use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use bernsim_cli::{plot_file, run_file, validate_file, CliError};

#[derive(Parser)]
#[command(
    name = "bernsim",
    version,
    about = "Bernstein operator and Wright-Fisher experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and BERNSIM_OUTPUT_DIR).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads for the numerical kernels; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
    /// Render a study CSV as a log-log SVG plot.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.command {
        Command::Run {
            config,
            output,
            threads,
        } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| CliError::config("--threads", e.to_string()))?;
            }
            let report = run_file(&config, output.as_deref())?;
            let files: Vec<_> = report
                .manifest
                .outputs
                .iter()
                .map(|o| o.file.clone())
                .collect();
            Ok(json!({
                "status": "ok",
                "output": report.dir.display().to_string(),
                "files": files,
                "summary": report.manifest.summary,
            }))
        }
        Command::Validate { config } => {
            let cfg = validate_file(&config)?;
            Ok(json!({ "status": "ok", "kind": cfg.experiment.kind.as_str() }))
        }
        Command::Plot { csv, kind, output } => {
            let out = plot_file(&csv, &kind, output.as_deref())?;
            Ok(json!({ "status": "ok", "output": out.display().to_string() }))
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::to_string(&e.record()).expect("record serializes")
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
