//! Command-line front end for `bellmem`.
//!
//! Subcommands map one-to-one onto library operations:
//! `simulate` (Monte Carlo), `enumerate` (exact), `bounds`, `table` and
//! `nosig`. Exit codes: 0 success, 1 invariant violation, 2 input error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use bellmem_core::enumerator::{self, Enumerator, NoSignaling};
use bellmem_core::strategies::{FixedAssignment, Model, StochasticLhv};
use bellmem_core::Error as CoreError;

mod output;

pub use output::{BatchRow, SummaryRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("no-signalling violated: {0}")]
    Signalling(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Invariant(_)) | CliError::Signalling(_) => 1,
            CliError::Core(CoreError::ViewRestricted { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "bellmem", version, about = "CHSH experiments under local hidden variable models with memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Args)]
struct StrategyArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Model::NAMES))]
    strategy: String,
    /// Weights file for `stochastic-lhv`: CSV `weight,a1,a2,b1,b2`.
    #[arg(long)]
    strategy_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo estimate over independent seeded batches.
    Simulate {
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        batches: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact expectations by enumerating every setting sequence.
    Enumerate {
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = enumerator::DEFAULT_CAP)]
        enum_cap: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Analytic tail and expectation bounds.
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bounds for every model class.
    Table {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustive no-signalling check.
    Nosig {
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = enumerator::DEFAULT_CAP)]
        enum_cap: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// A validated request.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Simulate {
        strategy: String,
        strategy_file: Option<PathBuf>,
        n: usize,
        batches: u64,
        seed: u64,
        delta: f64,
    },
    Enumerate {
        strategy: String,
        strategy_file: Option<PathBuf>,
        n: usize,
        enum_cap: usize,
    },
    Bounds {
        n: u64,
        delta: f64,
        epsilon: Option<f64>,
    },
    Table {
        n: u64,
        delta: f64,
        epsilon: f64,
    },
    Nosig {
        strategy: String,
        strategy_file: Option<PathBuf>,
        n: usize,
        enum_cap: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub request: Request,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for --{flag}: {msg}"))
}

fn check_delta(delta: f64, upper: f64) -> Result<(), CliError> {
    if delta > 0.0 && delta < upper {
        Ok(())
    } else {
        Err(usage("delta", format!("{delta} must lie in (0, {upper})")))
    }
}

fn check_strategy_file(s: &StrategyArgs) -> Result<(), CliError> {
    match (s.strategy.as_str(), &s.strategy_file) {
        ("stochastic-lhv", None) => Err(usage(
            "strategy-file",
            "stochastic-lhv needs a weights file (CSV weight,a1,a2,b1,b2)",
        )),
        ("stochastic-lhv", Some(_)) | (_, None) => Ok(()),
        (other, Some(_)) => Err(usage(
            "strategy-file",
            format!("{other} takes no weights file"),
        )),
    }
}

fn check_enum_n(strategy: &str, n: usize, cap: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(usage("n", "must be at least 1"));
    }
    if cap > enumerator::HARD_CAP {
        return Err(usage("enum-cap", format!("at most {}", enumerator::HARD_CAP)));
    }
    if strategy == "model101" && n == 101 {
        return Ok(());
    }
    if strategy == "collective-n2" && n != 2 {
        return Err(usage("n", "collective-n2 is defined for n = 2 only"));
    }
    if n > cap {
        return Err(CliError::Core(CoreError::ResourceLimit(format!(
            "--n {n} exceeds --enum-cap {cap} (4^n playouts)"
        ))));
    }
    Ok(())
}

/// Parses and validates the command line. `argv[0]` is the program name.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    let (request, output) = match cli.command {
        Command::Simulate {
            strategy,
            n,
            batches,
            seed,
            delta,
            output,
        } => {
            check_strategy_file(&strategy)?;
            if n == 0 {
                return Err(usage("n", "must be at least 1"));
            }
            if batches == 0 {
                return Err(usage("batches", "must be at least 1"));
            }
            if strategy.strategy == "collective-n2" && n != 2 {
                return Err(usage("n", "collective-n2 is defined for n = 2 only"));
            }
            check_delta(delta, 1.0)?;
            (
                Request::Simulate {
                    strategy: strategy.strategy,
                    strategy_file: strategy.strategy_file,
                    n,
                    batches,
                    seed,
                    delta,
                },
                output,
            )
        }
        Command::Enumerate {
            strategy,
            n,
            enum_cap,
            output,
        } => {
            check_strategy_file(&strategy)?;
            check_enum_n(&strategy.strategy, n, enum_cap)?;
            if strategy.strategy == "quantum" {
                return Err(usage("strategy", "quantum is randomised; use simulate"));
            }
            (
                Request::Enumerate {
                    strategy: strategy.strategy,
                    strategy_file: strategy.strategy_file,
                    n,
                    enum_cap,
                },
                output,
            )
        }
        Command::Bounds {
            n,
            delta,
            epsilon,
            output,
        } => {
            if n == 0 {
                return Err(usage("n", "must be at least 1"));
            }
            check_delta(delta, 1.0)?;
            if let Some(e) = epsilon {
                if !(e > 0.0) {
                    return Err(usage("epsilon", format!("{e} must be positive")));
                }
            }
            (Request::Bounds { n, delta, epsilon }, output)
        }
        Command::Table {
            n,
            delta,
            epsilon,
            output,
        } => {
            if n == 0 {
                return Err(usage("n", "must be at least 1"));
            }
            check_delta(delta, 0.2)?;
            if !(epsilon > 0.0) {
                return Err(usage("epsilon", format!("{epsilon} must be positive")));
            }
            (Request::Table { n, delta, epsilon }, output)
        }
        Command::Nosig {
            strategy,
            n,
            enum_cap,
            output,
        } => {
            check_strategy_file(&strategy)?;
            check_enum_n(&strategy.strategy, n, enum_cap)?;
            if strategy.strategy == "quantum" {
                return Err(usage(
                    "strategy",
                    "quantum is randomised; the exhaustive check needs a deterministic strategy",
                ));
            }
            (
                Request::Nosig {
                    strategy: strategy.strategy,
                    strategy_file: strategy.strategy_file,
                    n,
                    enum_cap,
                },
                output,
            )
        }
    };
    Ok(CliConfig {
        request,
        out: output.out,
        format: output.format,
    })
}

fn load_model(strategy: &str, file: Option<&PathBuf>) -> Result<(Model, Option<StochasticLhv>), CliError> {
    let lhv = match file {
        Some(path) => Some(StochasticLhv::read_csv(File::open(path)?)?),
        None => None,
    };
    Ok((Model::from_name(strategy, lhv.clone())?, lhv))
}

/// Runs a validated configuration and writes its output.
pub fn dispatch(config: &CliConfig) -> Result<(), CliError> {
    let mut buf = Vec::new();
    let outcome = render(config, &mut buf);
    // a failed no-signalling check still writes its counterexample
    match config.out.as_ref() {
        Some(path) => File::create(path)?.write_all(&buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    outcome
}

fn render(config: &CliConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let format = config.format;
    match &config.request {
        Request::Simulate {
            strategy,
            strategy_file,
            n,
            batches,
            seed,
            delta,
        } => {
            let (model, _) = load_model(strategy, strategy_file.as_ref())?;
            output::simulate(&model, *n, *batches, *seed, *delta, format, out)
        }
        Request::Enumerate {
            strategy,
            strategy_file,
            n,
            enum_cap,
        } => {
            let (model, _) = load_model(strategy, strategy_file.as_ref())?;
            let enumerator = Enumerator::new(*enum_cap);
            output::enumerate(&model, *n, &enumerator, format, out)
        }
        Request::Bounds { n, delta, epsilon } => output::bounds(*n, *delta, *epsilon, format, out),
        Request::Table { n, delta, epsilon } => output::table(*n, *delta, *epsilon, format, out),
        Request::Nosig {
            strategy,
            strategy_file,
            n,
            enum_cap,
        } => {
            let (model, lhv) = load_model(strategy, strategy_file.as_ref())?;
            let result = match (&model, lhv) {
                (Model::Collective(c), _) => enumerator::collective_no_signaling_check(c.as_ref(), *n)?,
                // a mixture is local iff every component is
                (Model::Sequential(_), Some(lhv)) => {
                    let mut result = None;
                    for (i, (_, a)) in lhv.support().iter().enumerate() {
                        let component = FixedAssignment::new(format!("component-{i}"), *a);
                        let r = enumerator::no_signaling_check(&component, *n, *enum_cap)?;
                        if !r.passed() {
                            result = Some(r);
                            break;
                        }
                        result.get_or_insert(r);
                    }
                    result.expect("support is non-empty")
                }
                (Model::Sequential(s), None) => enumerator::no_signaling_check(s.as_ref(), *n, *enum_cap)?,
            };
            output::nosig(strategy, *n, &result, format, out)?;
            match result {
                NoSignaling::Pass { .. } => Ok(()),
                NoSignaling::Fail { counterexample } => Err(CliError::Signalling(format!(
                    "{strategy}: round {} {:?} outcome changes between {} and {}",
                    counterexample.round,
                    counterexample.side,
                    counterexample.settings[0],
                    counterexample.settings[1]
                ))),
            }
        }
    }
}

/// Full entry point: parse, dispatch, report. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let config = match Cli::try_parse_from(&argv) {
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return 0;
        }
        _ => parse_args(&argv),
    };
    match config.and_then(|c| dispatch(&c)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bellmem: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<CliConfig, CliError> {
        parse_args(std::iter::once("bellmem").chain(s.split_whitespace()))
    }

    #[test]
    fn simulate_plan() {
        let c = parse("simulate --strategy quantum --n 10000 --batches 100 --seed 7").unwrap();
        assert_eq!(
            c.request,
            Request::Simulate {
                strategy: "quantum".into(),
                strategy_file: None,
                n: 10000,
                batches: 100,
                seed: 7,
                delta: 0.1
            }
        );
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn enumerate_over_cap_is_resource_error() {
        let e = parse("enumerate --strategy guessing --n 12").unwrap_err();
        assert!(matches!(e, CliError::Core(CoreError::ResourceLimit(_))));
        assert_eq!(e.exit_code(), 2);
        assert!(parse("enumerate --strategy guessing --n 12 --enum-cap 12").is_ok());
        assert!(parse("enumerate --strategy model101 --n 101").is_ok());
    }

    #[test]
    fn bounds_request() {
        let c = parse("bounds --n 1000 --delta 0.1").unwrap();
        assert_eq!(
            c.request,
            Request::Bounds {
                n: 1000,
                delta: 0.1,
                epsilon: None
            }
        );
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "simulate --strategy nope --n 10",
            "simulate --strategy quantum --n 0",
            "simulate --strategy quantum --n 10 --delta 1.5",
            "simulate --strategy stochastic-lhv --n 10",
            "simulate --strategy guessing --n 10 --strategy-file w.csv",
            "table --n 1000 --delta 0.3",
            "bounds --n 1000",
            "enumerate --strategy collective-n2 --n 3",
            "nosig --strategy quantum --n 3",
            "frobnicate",
        ] {
            let e = parse(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn unknown_strategy_lists_valid_names() {
        let e = parse("simulate --strategy nope --n 10").unwrap_err().to_string();
        for n in Model::NAMES {
            assert!(e.contains(n), "{e}");
        }
    }

    #[test]
    fn signalling_exit_code() {
        assert_eq!(CliError::Signalling("x".into()).exit_code(), 1);
        assert_eq!(CliError::Core(CoreError::Invariant("x".into())).exit_code(), 1);
    }
}
