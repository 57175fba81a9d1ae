use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tsecon_cli::pipeline::run_config_file;
use tsecon_cli::plots::{render_bundle, PlotFormat};

/// Monthly time-series econometrics pipeline: descriptives, unit-root and
/// cointegration batteries, ARDL bounds testing, augmented-lag causality,
/// and structural VAR analysis, written out as a CSV report bundle.
#[derive(Parser)]
#[command(name = "tsecon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a TOML config and write a bundle.
    Run {
        /// Path to the pipeline configuration file.
        config: PathBuf,
    },
    /// Download a CSV snapshot, validate it is delimited text, and report
    /// its checksum. Refuses to overwrite existing files.
    Fetch {
        /// Source URL.
        url: String,
        /// Destination file path.
        out: PathBuf,
    },
    /// Render the figure artifacts of an existing bundle.
    Plots {
        /// Bundle directory produced by `run`.
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Svg)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> tsecon_cli::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let (manifest, dir, outcome) = run_config_file(&config)?;
            for s in &manifest.stages {
                match &s.message {
                    Some(m) => println!("{:<14} {}  ({m})", s.name, s.status),
                    None => println!("{:<14} {}", s.name, s.status),
                }
            }
            println!(
                "bundle: {} ({} artifacts, data sha256 {})",
                dir.display(),
                manifest.artifacts.len(),
                &manifest.data.sha256[..12]
            );
            let failed = outcome.failed_stages();
            if failed.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for s in &failed {
                    eprintln!(
                        "stage failed: {} ({})",
                        s.name,
                        s.message.as_deref().unwrap_or("no detail")
                    );
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Fetch { url, out } => {
            let report = tsecon_cli::fetch::fetch(&url, &out)?;
            println!(
                "wrote {} ({} bytes, {} lines)\nsha256 {}",
                out.display(),
                report.bytes,
                report.lines,
                report.sha256
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Plots { bundle, format } => {
            let fmt = match format {
                FormatArg::Csv => PlotFormat::Csv,
                FormatArg::Svg => PlotFormat::Svg,
            };
            let written = render_bundle(&bundle, fmt)?;
            for p in &written {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
