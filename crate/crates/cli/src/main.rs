use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quantalg::fixtures;
use quantalg::gmet::validate_space;
use quantalg::parse::{parse_ground_term, parse_theory_file, TheoryFile};
use quantalg::saturation::{saturate, SaturationConfig};
use quantalg::verify::{run_suite, Suite};

/// Quantitative equational reasoning over finite generalized metric spaces.
#[derive(Parser)]
#[command(name = "quantalg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Maximum term depth of the universe.
    #[arg(long)]
    depth: Option<usize>,
    /// Round limit per depth stage.
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Rounds of parameter closure applied before saturating.
    #[arg(long)]
    closure: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a theory file and check its space against the declared kind.
    Validate { file: PathBuf },
    /// Derived distance between two ground terms.
    Dist {
        file: PathBuf,
        lhs: String,
        rhs: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print all classes and the distance table.
    Saturate {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a self-check suite.
    Verify {
        #[arg(long, default_value = "examples")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the bundled theories, or print one.
    Fixtures { name: Option<String> },
}

enum Failure {
    /// A check did not pass (exit 1).
    Check(String),
    /// Bad input (exit 2).
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Check(out)) => {
            print!("{out}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Reads a theory file; names of bundled theories work when no such file
/// exists.
fn load(path: &Path) -> Result<TheoryFile, Failure> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => match path.to_str().and_then(fixtures::source) {
            Some(t) if !path.exists() => t.to_string(),
            _ => return Err(Failure::Usage(format!("{}: {e}", path.display()))),
        },
    };
    parse_theory_file(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn config(file: &TheoryFile, run: &RunArgs) -> SaturationConfig {
    let defaults = SaturationConfig::default();
    SaturationConfig {
        depth: run.depth.or(file.options.depth).unwrap_or(defaults.depth),
        max_rounds: run
            .max_rounds
            .or(file.options.max_rounds)
            .unwrap_or(defaults.max_rounds),
        param_closure: run
            .closure
            .or(file.options.closure)
            .unwrap_or(defaults.param_closure),
        ..defaults
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn dispatch(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Validate { file } => {
            let f = load(&file)?;
            let th = &f.theory;
            let mut out = format!(
                "theory: kind {}, {} operation(s), {} axiom(s)\n",
                th.kind,
                th.sig.ops().len(),
                th.axioms.len()
            );
            let Some(space) = &f.space else {
                out.push_str("space: none\nvalid\n");
                return Ok(out);
            };
            out.push_str(&format!("space: {} point(s)\n", space.len()));
            let report = validate_space(space);
            if report.is_valid() {
                out.push_str(&format!("valid, kind {}\n", space.kind()));
                Ok(out)
            } else {
                for v in &report.violations {
                    out.push_str(&format!("{v}\n"));
                }
                out.push_str("invalid\n");
                Err(Failure::Check(out))
            }
        }
        Command::Dist {
            file,
            lhs,
            rhs,
            run,
        } => {
            let f = load(&file)?;
            let th = f.extended().map_err(|e| Failure::Usage(e.to_string()))?;
            let term = |s: &str| {
                parse_ground_term(s, &th.sig).map_err(|e| Failure::Usage(format!("`{s}`: {e}")))
            };
            let (s, t) = (term(&lhs)?, term(&rhs)?);
            let cfg = config(&f, &run);
            let r = saturate(&th, &cfg).map_err(|e| Failure::Check(format!("{e}\n")))?;
            let d = r
                .derived_distance(&s, &t)
                .map_err(|e| Failure::Check(format!("{e} (depth {})\n", cfg.depth)))?;
            let out = match run.format {
                Format::Text => format!("{d}\nfixpoint: {}\n", yes_no(r.fixpoint_reached)),
                Format::Tsv => format!("distance\t{d}\nfixpoint\t{}\n", yes_no(r.fixpoint_reached)),
            };
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            Ok(out)
        }
        Command::Saturate { file, run } => {
            let f = load(&file)?;
            let th = f.extended().map_err(|e| Failure::Usage(e.to_string()))?;
            let r =
                saturate(&th, &config(&f, &run)).map_err(|e| Failure::Check(format!("{e}\n")))?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            Ok(match run.format {
                Format::Text => format!(
                    "{}fixpoint: {}\n",
                    r.dump_text(),
                    yes_no(r.fixpoint_reached)
                ),
                Format::Tsv => {
                    format!("{}fixpoint\t{}\n", r.dump_tsv(), yes_no(r.fixpoint_reached))
                }
            })
        }
        Command::Verify { suite, seed } => {
            let report = run_suite(suite, seed);
            let out = report.to_string();
            if report.all_pass() {
                Ok(out)
            } else {
                Err(Failure::Check(out))
            }
        }
        Command::Fixtures { name } => match name {
            None => Ok(fixtures::ALL
                .iter()
                .map(|(n, _)| format!("{n}\n"))
                .collect()),
            Some(n) => fixtures::source(&n)
                .map(str::to_string)
                .ok_or_else(|| Failure::Usage(format!("no bundled theory `{n}`"))),
        },
    }
}
