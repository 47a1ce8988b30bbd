use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use offshore_sim::sim::{run, Format, Scenario, ScenarioError, Trace};

const EXIT_SCHEMA: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "offshore-sim", version, about = "Deterministic USV / GCS / UAV communication and landing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// Overrides the scenario duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Jsonl => Format::Jsonl,
        }
    }
}

fn schema_failure(path: &Path, e: &ScenarioError) -> ExitCode {
    eprintln!("{}: {e}", path.display());
    ExitCode::from(EXIT_SCHEMA)
}

fn write_trace(trace: &Trace, format: Format, out: Option<&Path>) -> Result<(), String> {
    let result = match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut w = BufWriter::new(file);
            trace.write(format, &mut w).and_then(|_| w.flush().map_err(Into::into))
        }
        None => trace.write(format, io::stdout().lock()),
    };
    result.map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario } => match Scenario::load(&scenario) {
            Ok(s) => {
                println!("{}: ok ({} steps, sha256 {})", scenario.display(), s.step_count(), s.digest());
                ExitCode::SUCCESS
            }
            Err(e) => schema_failure(&scenario, &e),
        },
        Command::Run { scenario: path, seed, out, format, duration } => {
            let mut scenario = match Scenario::load(&path) {
                Ok(s) => s,
                Err(e) => return schema_failure(&path, &e),
            };
            if let Some(seed) = seed {
                scenario.seed = seed;
            }
            if let Some(d) = duration {
                scenario.duration = d;
                if let Err(e) = scenario.validate() {
                    return schema_failure(&path, &e);
                }
            }
            let format = Format::from(format);
            match run(&scenario) {
                Ok(trace) => match write_trace(&trace, format, out.as_deref()) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(EXIT_RUNTIME)
                    }
                },
                Err(abort) => {
                    eprintln!("error: {abort}");
                    // keep whatever was simulated before the failure
                    if !abort.trace.records.is_empty() {
                        if let Err(e) = write_trace(&abort.trace, format, out.as_deref()) {
                            eprintln!("error: {e}");
                        }
                    }
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}
