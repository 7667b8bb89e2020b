use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use grassmann_cli::commands::{self, CliError, Mode};
use grassmann_cli::harness;
use grassmann_cli::report::Report;

/// Exact computations on Grassmannians over small finite fields.
///
/// Exit codes: 0 pass or answer produced, 1 fail with counterexample,
/// 2 usage or parse error, 3 outside the feasibility envelope.
/// GRASS_THREADS sets the worker count.
#[derive(Parser)]
#[command(name = "grass", version)]
struct Cli {
    /// Omit elapsed time so output is byte-for-byte reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Regular,
    Irregular,
    Characteristics,
    Degree,
}

#[derive(Subcommand)]
enum Command {
    /// Count or list the k-planes of GF(q)^n.
    Enumerate {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        count_only: bool,
    },
    /// Classify a plane-set file: regularity, exactness, degree, irregularity, characteristics.
    Analyze {
        #[arg(long = "in")]
        input: String,
        /// Without a mode: regular analysis, then degree or irregularity.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Classify a transformation given as a map-table file.
    Classify {
        #[arg(long = "in")]
        input: String,
    },
    /// Check one theorem on every instance of a parameter set.
    Verify {
        #[arg(long)]
        theorem: String,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

fn run(command: Command) -> Result<Report, CliError> {
    match command {
        Command::Enumerate { q, n, k, count_only } => commands::enumerate(q, n, k, count_only),
        Command::Analyze { input, mode } => {
            let mode = match mode {
                None => Mode::Auto,
                Some(ModeArg::Regular) => Mode::Regular,
                Some(ModeArg::Irregular) => Mode::Irregular,
                Some(ModeArg::Characteristics) => Mode::Characteristics,
                Some(ModeArg::Degree) => Mode::Degree,
            };
            commands::analyze(&input, mode)
        }
        Command::Classify { input } => commands::classify_table(&input),
        Command::Verify { theorem, q, n, k } => Ok(harness::verify(&theorem, q, n, k)?),
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("GRASS_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("GRASS_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("grass: {e}");
        return ExitCode::from(2);
    }
    let start = Instant::now();
    match run(cli.command) {
        Ok(mut report) => {
            if !cli.no_timing {
                report.elapsed_ms = Some(start.elapsed().as_millis() as u64);
            }
            match cli.format {
                Format::Text => print!("{}", report.render_text()),
                Format::Json => println!("{}", report.render_json()),
            }
            ExitCode::from(report.verdict.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("grass: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
