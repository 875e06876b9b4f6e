use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use dwis::{plot, ExperimentSpec};

#[derive(Debug, Parser)]
#[command(name = "dwis", version, about = "Run contour-query field reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every sweep cell of a spec and write CSVs, a manifest and figures.
    Run {
        spec: PathBuf,
        /// Output directory. Falls back to `output.dir` in the spec, then `dwis-out`.
        #[arg(long, env = "DWIS_OUT")]
        out: Option<PathBuf>,
        /// Worker threads. Defaults to the available parallelism.
        #[arg(long, env = "DWIS_JOBS")]
        jobs: Option<usize>,
        /// Plot reply counts in decibels.
        #[arg(long)]
        db_axis: bool,
    },
    /// Check a spec and list its sweep cells without running them.
    Validate { spec: PathBuf },
    /// Redraw the figures of an output directory from its CSVs.
    Plot {
        dir: PathBuf,
        #[arg(long)]
        db_axis: bool,
    },
}

fn load(path: &Path) -> Result<ExperimentSpec, ExitCode> {
    ExperimentSpec::load(path).map_err(|e| {
        eprintln!("error: invalid spec {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { spec: path } => {
            let spec = match load(&path) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let cells = spec.cells();
            println!("{}: ok, {} cells", path.display(), cells.len());
            for cell in &cells {
                println!("{}  {cell}", cell.id());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { spec: path, out, jobs, db_axis } => {
            let spec = match load(&path) {
                Ok(s) => s,
                Err(code) => return code,
            };
            let out = out.or_else(|| spec.output.dir.clone()).unwrap_or_else(|| PathBuf::from("dwis-out"));
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            dwis::execute(&spec, &out, jobs, db_axis).map(|report| {
                let failed = report.failures().count();
                println!("{} cells, {} failed, output in {}", report.rows.len(), failed, out.display());
                for row in report.failures() {
                    eprintln!("failed: {}: {}", row.cell, row.error);
                }
                if failed == 0 {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            })
        }
        Command::Plot { dir, db_axis } => {
            plot::write_figures(&dir, db_axis).with_context(|| format!("plotting {}", dir.display())).map(|paths| {
                for p in paths {
                    println!("{}", p.display());
                }
                ExitCode::SUCCESS
            })
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
