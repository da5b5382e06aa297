use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weakmeter_cli::checks;
use weakmeter_cli::output::{write_rows, Format};
use weakmeter_cli::runner::{run, RunOptions};
use weakmeter_cli::scenario::{parse_scenario, Scenario, Shots};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "weakmeter", version, about = "Weak values: analytic, simulated meters and shot sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file over its own coupling sweep.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a scenario file over a different list of couplings.
    Sweep {
        file: PathBuf,
        /// Comma-separated coupling strengths, e.g. 0.1,0.01,0.001
        #[arg(long, value_delimiter = ',', required = true)]
        g: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in reproduction checks and print one line per criterion.
    Check,
}

#[derive(Args)]
struct Common {
    /// Seed for shot sampling (overrides the scenario file).
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per shot experiment (enables sampling if the file has none).
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn evaluate(file: &Path, sweep: Option<Vec<f64>>, common: Common) -> ExitCode {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    // Command-line overrides are validated like the file's own fields.
    let parsed = parse_scenario(&text).and_then(|s| {
        let shots = match (s.shots, common.shots, common.seed) {
            (base, Some(n_total), seed) => Some(Shots { n_total, seed: seed.or(base.map(|b| b.seed)).unwrap_or(0) }),
            (Some(base), None, seed) => Some(Shots { seed: seed.unwrap_or(base.seed), ..base }),
            (None, None, _) => None,
        };
        Scenario { sweep: sweep.unwrap_or(s.sweep.clone()), shots, ..s }.validated()
    });
    let scenario = match parsed {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let report = match run(&scenario, &RunOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };

    let written = match &common.out {
        Some(path) => File::create(path)
            .map_err(anyhow::Error::from)
            .and_then(|f| write_rows(&report.rows, common.format, BufWriter::new(f))),
        None => write_rows(&report.rows, common.format, io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: writing results: {e}");
        return ExitCode::from(EXIT_IO);
    }
    if report.diverged {
        eprintln!("error: scenario '{}': pre- and post-selection are orthogonal; the weak value diverges", scenario.name);
        return ExitCode::from(EXIT_DIVERGENCE);
    }
    ExitCode::SUCCESS
}

fn check() -> ExitCode {
    let reports = checks::all();
    let mut stdout = io::stdout().lock();
    for r in &reports {
        let _ = writeln!(stdout, "{r}");
    }
    if reports.iter().any(|r| !r.unexplained_failures().is_empty()) {
        ExitCode::from(EXIT_CHECK)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, common } => evaluate(&file, None, common),
        Command::Sweep { file, g, common } => evaluate(&file, Some(g), common),
        Command::Check => check(),
    }
}
