use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ncgx::harness::{self, Fixture, Suite};
use ncgx::report::{emit, Format};
use ncgx::Error;

#[derive(Parser)]
#[command(name = "ncgx", version, about = "Check spectral triples on crossed products against finite fixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Text => Format::Text,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite on a fixture file or bundled fixture name.
    Verify {
        fixture: String,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Absolute tolerance, overriding the fixture's.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Include wall times (makes output non-deterministic).
        #[arg(long)]
        timings: bool,
    },
    /// Signs and KO-dimensions of the base and crossed real structures.
    Ko {
        fixture: String,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
    /// Build the lifted orientation cycle and check it.
    Orient {
        fixture: String,
        /// Group element: an integer on windowed groups, `e`, `g<i>` or an index on finite ones.
        #[arg(long)]
        g: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
    /// List the bundled fixtures.
    Fixtures,
}

fn load(path: &str, tolerance: Option<f64>) -> ncgx::Result<Fixture> {
    let f = Fixture::load(path)?;
    match tolerance {
        Some(t) => f.with_tolerance(t),
        None => Ok(f),
    }
}

fn run(cli: Cli) -> ncgx::Result<i32> {
    match cli.command {
        Command::Verify { fixture, suite, format, seed, tolerance, timings } => {
            let suite = Suite::parse(&suite)?;
            let f = load(&fixture, tolerance)?;
            let report = harness::run_suite(&f, suite, seed)?;
            print!("{}", emit(&report, format.into(), timings));
            Ok(report.exit_code())
        }
        Command::Ko { fixture, format } => {
            let f = load(&fixture, None)?;
            let report = harness::ko_report(&f)?;
            print!("{}", emit(&report, format.into(), false));
            Ok(report.exit_code())
        }
        Command::Orient { fixture, g, format } => {
            let f = load(&fixture, None)?;
            let g = match g {
                Some(s) => Some(f.group.parse_element(&s).map_err(|e| Error::Schema(e.to_string()))?),
                None => None,
            };
            let (chain, report) = harness::orient(&f, g)?;
            match format {
                OutFormat::Json => {
                    let out = serde_json::json!({ "chain": chain.to_json(), "report": report });
                    println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
                }
                OutFormat::Text => {
                    println!("ĉ: degree {}, {} terms", chain.degree(), chain.len());
                    print!("{}", emit(&report, Format::Text, false));
                }
            }
            Ok(report.exit_code())
        }
        Command::Fixtures => {
            for name in harness::bundled_names() {
                println!("{name}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Schema(_) | Error::UnknownElement(_) | Error::ZeroWeightElement(_) => 2,
                _ => 1,
            })
        }
    }
}
