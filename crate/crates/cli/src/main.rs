use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::Report;

/// Simulation experiments on the random walk in random scenery process.
///
/// Trial `i` of a run draws all its randomness from the pair (seed, i), so
/// output is identical for a given seed whatever the thread count.
#[derive(Parser, Debug)]
#[command(name = "ttlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample outputs over the window [-W, W]
    Generate,
    /// Scan the first --steps symbols for marker occurrences and records
    Markers,
    /// Couple two window-conditioned processes on [-N, N]
    Couple,
    /// Split a second path off before the first marker and measure agreement
    Split,
    /// Read the scenery back from an output over [-W, W]
    Reconstruct,
    /// Rewrite markers between bounds chosen outside [-N, N]
    Rewrite,
    /// Align sceneries read at time 0 and at a later even time
    Cfiber,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Master seed
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Number of trials
    #[arg(long, global = true, default_value_t = 1,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Symbols scanned per trial (markers)
    #[arg(long, global = true, default_value_t = 1 << 20)]
    pub steps: u64,
    /// Half-width W of the output window [-W, W]
    #[arg(long, global = true, default_value_t = 100,
          value_parser = clap::value_parser!(i64).range(0..=1 << 30))]
    pub window: i64,
    /// Half-width N of the conditioning window (couple) or of the protected
    /// range (rewrite)
    #[arg(long, global = true, default_value_t = 2,
          value_parser = clap::value_parser!(i64).range(0..=1 << 20))]
    pub n: i64,
    /// Time horizon for couple and split
    #[arg(long, global = true, default_value_t = 100_000,
          value_parser = clap::value_parser!(i64).range(1..=1 << 40))]
    pub horizon: i64,
    /// Output format: JSON lines, or CSV with the summary on stderr
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn write_report(report: &Report, format: Format, out: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Json => {
            for row in &report.rows {
                writeln!(out, "{}", row.json)?;
            }
            if let Some(s) = &report.summary {
                writeln!(out, "{}", serde_json::json!({ "summary": s }))?;
            }
        }
        Format::Csv => {
            writeln!(out, "{}", report.header.join(","))?;
            for row in &report.rows {
                writeln!(out, "{}", row.csv.join(","))?;
            }
            if let Some(s) = &report.summary {
                eprintln!("{s}");
            }
        }
    }
    out.flush()
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let o = &cli.opts;
    let report = match cli.command {
        Command::Generate => commands::generate(o)?,
        Command::Markers => commands::markers(o)?,
        Command::Couple => commands::couple(o)?,
        Command::Split => commands::split(o)?,
        Command::Reconstruct => commands::reconstruct(o)?,
        Command::Rewrite => commands::rewrite(o)?,
        Command::Cfiber => commands::cfiber(o)?,
    };
    match &o.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_report(&report, o.format, &mut w)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_report(&report, o.format, &mut w)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ttlab: {e:#}");
            ExitCode::FAILURE
        }
    }
}
