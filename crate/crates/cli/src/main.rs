//! `harmcoord`: gasket tables and plots, and the check suites.

mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use harmcoord::sg::{cell_enumerate, cells_csv, gasket_svg, GasketGraph, DEFAULT_MAX_LEVEL};

use crate::suites::SuiteConfig;

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Parser)]
#[command(
    name = "harmcoord",
    version,
    about = "Harmonic coordinates, Kusuoka measure and coordinate calculus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write cells.csv with ν, G, Z and eigenvalue ratio for every level-N cell.
    SgCells {
        #[arg(long, value_parser = level_parser())]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write gasket.svg, the harmonic coordinate image of V_N.
    SgPlot {
        #[arg(long, value_parser = level_parser())]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a check suite and print a JSON report.
    Check {
        suite: Suite,
        #[arg(long, value_parser = level_parser())]
        level: Option<usize>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..=512))]
        grid: Option<u64>,
        /// Graph in the `v id mu` / `e id1 id2 c` text format (builder suite).
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Override the tolerance of the exact identities.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Sg,
    Heisenberg,
    Euclid,
    Builder,
    All,
}

fn level_parser() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::<usize>::new().range(0..=DEFAULT_MAX_LEVEL as u64)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SgCells { level, out } => {
            let path = write_file(&out, "cells.csv", &cells_csv(&cell_enumerate(level)?))?;
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
        Command::SgPlot { level, out } => {
            let path = write_file(&out, "gasket.svg", &gasket_svg(&GasketGraph::build(level)?))?;
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
        Command::Check {
            suite,
            level,
            grid,
            graph,
            seed,
            tol,
        } => {
            let cfg = SuiteConfig {
                level,
                grid: grid.map(|g| g as usize),
                graph,
                seed,
                tol,
            };
            let report = match suite {
                Suite::Sg => suites::sg(&cfg)?,
                Suite::Heisenberg => suites::heisenberg(&cfg)?,
                Suite::Euclid => suites::euclid(&cfg)?,
                Suite::Builder => suites::builder(&cfg)?,
                Suite::All => suites::all(&cfg)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
