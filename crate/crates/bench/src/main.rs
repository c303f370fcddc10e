use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use clap::error::ErrorKind;

use pqe2::kat::{self, Suite};
use pqe2_bench::compare::compare;
use pqe2_bench::config::parse_seed;
use pqe2_bench::report::{emit_report, read_summary, Format, Summary, REFERENCE_FOOTER};
use pqe2_bench::{load_config, run_scenario};

const EXIT_PROTOCOL: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "bench", version, about = "IKEv2/ESP tunnel benchmarks over an emulated O-RAN E2 link")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        /// Up to 64 hex digits.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Compare summary JSON files against one of them.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Scenario name of the baseline report.
        #[arg(long)]
        baseline: String,
    },
    /// Run a conformance vector suite.
    Kat {
        #[arg(long)]
        suite: Suite,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("bench: {msg}");
    ExitCode::from(code)
}

fn run(config: PathBuf, iterations: Option<usize>, seed: Option<String>, out: PathBuf, format: Format) -> ExitCode {
    let mut cfg = match load_config(&config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(n) = iterations {
        if n == 0 {
            return fail(EXIT_CONFIG, "--iterations must be at least 1");
        }
        cfg.iterations = n;
    }
    if let Some(s) = seed {
        match parse_seed(&s) {
            Ok(s) => cfg.seed = s,
            Err(e) => return fail(EXIT_CONFIG, format!("--seed: {e}")),
        }
    }
    let t0 = Instant::now();
    let report = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_PROTOCOL, e),
    };
    let files = match emit_report(&report, format, &out) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_IO, e),
    };
    print!("{}", Summary::new(&report));
    println!("  elapsed: {:.1}s", t0.elapsed().as_secs_f64());
    for f in files {
        println!("  wrote {}", f.display());
    }
    println!("{REFERENCE_FOOTER}");
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match cli.cmd {
        Cmd::Run { config, iterations, seed, out, format } => run(config, iterations, seed, out, format),
        Cmd::Compare { reports, baseline } => {
            let mut summaries = Vec::new();
            for p in &reports {
                match read_summary(p) {
                    Ok(s) => summaries.push(s),
                    Err(e) => return fail(EXIT_CONFIG, e),
                }
            }
            match compare(&summaries, &baseline) {
                Ok(t) => {
                    print!("{t}");
                    println!("{REFERENCE_FOOTER}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_CONFIG, e),
            }
        }
        Cmd::Kat { suite } => {
            let t0 = Instant::now();
            match kat::run_suite(suite) {
                Ok(o) if o.ok() => {
                    println!("{suite}: {} vectors passed in {:.2}s", o.passed, t0.elapsed().as_secs_f64());
                    ExitCode::SUCCESS
                }
                Ok(o) => {
                    println!("{suite}: {} passed, {} failed", o.passed, o.failed.len());
                    for f in &o.failed {
                        println!("  FAIL {f}");
                    }
                    ExitCode::from(EXIT_PROTOCOL)
                }
                Err(e) => fail(EXIT_CONFIG, e),
            }
        }
    }
}
