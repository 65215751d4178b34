//! Command line front end: parse and validate model files, run single
//! checks or the full classification, compare two models, reduce a setup.
//!
//! Exit codes: 0 success, 1 internal error, 2 parse or validation failure,
//! 3 reducible setup rejected by classify without --auto-reduce.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtax_core::checkers::irreducible::reduce;
use qtax_core::{
    behavior, canonical_text, check_one, classify, e_equivalent, p_equivalent, parse_experiments,
    parse_model, ClassifyError, ClassifyOptions, Ctx, EngineError, Model, Tolerance,
    PROPERTY_NAMES,
};

#[derive(Parser)]
#[command(
    name = "qtax",
    about = "Taxonomy engine for finite lattice models: exact property checks, locality and causal-order labels, equivalence and reduction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Per file: rationals first, decimal literals as the fallback
    Auto,
    Rational,
    Decimal,
}

#[derive(Args)]
struct NumberMode {
    /// Number mode for model literals: exact rationals, or decimals with a
    /// comparison tolerance
    #[arg(long, value_enum, default_value = "auto")]
    mode: Mode,
    /// Comparison tolerance, default 1e-9 on decimal-mode models
    #[arg(long)]
    epsilon: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Full classification of a model, optionally against a reference
    Classify {
        model: PathBuf,
        /// Reference model the classification labels are relative to
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Experiment file for the e-equivalence side check
        #[arg(long)]
        experiments: Option<PathBuf>,
        /// Delete inert parts instead of rejecting a reducible setup
        #[arg(long)]
        auto_reduce: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        numbers: NumberMode,
        /// Worker threads for the property sweep (0 = library default)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Parse and validate a model file, reporting positioned diagnostics
    Parse {
        model: PathBuf,
        #[command(flatten)]
        numbers: NumberMode,
    },
    /// Run a single property check by name
    Check {
        /// One of the twenty property names from the report
        property: String,
        model: PathBuf,
        /// Reference model (required by the superdeterminism check)
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        numbers: NumberMode,
    },
    /// Compare two models' behaviors
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// p: all hypothetical scenarios; e: a listed experiment set only
        #[arg(long, default_value = "p")]
        level: String,
        /// Experiment file, required at level e
        #[arg(long)]
        experiments: Option<PathBuf>,
        #[command(flatten)]
        numbers: NumberMode,
    },
    /// Delete inert parts and print the reduced model
    Reduce {
        model: PathBuf,
        #[command(flatten)]
        numbers: NumberMode,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Explicit comparison tolerance, or None to let the engine infer one from
/// the subject model's number mode (exact for rational, 1e-9 for decimal).
fn tolerance(numbers: &NumberMode) -> Result<Option<Tolerance>, String> {
    let parse_eps = |text: &str| {
        qtax_core::parse_decimal(text)
            .or_else(|| qtax_core::parse_rational(text))
            .ok_or_else(|| format!("cannot read --epsilon value {text:?}"))
    };
    match (numbers.mode, &numbers.epsilon) {
        (Mode::Auto, None) => Ok(None),
        (Mode::Rational, None) => Ok(Some(Tolerance(None))),
        (Mode::Decimal, None) => Ok(Some(Tolerance(Some(qtax_core::checkers::default_epsilon())))),
        (Mode::Rational, Some(e)) => Err(format!(
            "--epsilon {e} makes no sense in rational mode; comparisons are exact"
        )),
        (_, Some(e)) => Ok(Some(Tolerance(Some(parse_eps(e)?)))),
    }
}

fn load_model(path: &PathBuf, numbers: &NumberMode) -> Result<Model, ExitCode> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    let src = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return Err(ExitCode::from(2));
        }
    };
    let file = path.display().to_string();
    let attempts: &[bool] = match numbers.mode {
        Mode::Rational => &[false],
        Mode::Decimal => &[true],
        Mode::Auto => &[false, true],
    };
    let mut first_errors = None;
    for &decimal in attempts {
        match parse_model(&src, &name, &file, decimal) {
            Ok((m, warnings)) => {
                for d in &warnings {
                    eprintln!("{d}");
                }
                return Ok(m);
            }
            Err(diags) => {
                if first_errors.is_none() {
                    first_errors = Some(diags);
                }
            }
        }
    }
    for d in &first_errors.unwrap_or_default() {
        eprintln!("{d}");
    }
    Err(ExitCode::from(2))
}

fn run(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Classify {
            model,
            reference,
            experiments,
            auto_reduce,
            format,
            numbers,
            jobs,
        } => {
            if jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build_global()
                    .map_err(|e| format!("thread pool: {e}"))?;
            }
            let m = match load_model(&model, &numbers) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let reference = match &reference {
                None => None,
                Some(p) => match load_model(p, &numbers) {
                    Ok(r) => Some(r),
                    Err(code) => return Ok(code),
                },
            };
            let experiments = match &experiments {
                None => None,
                Some(p) => {
                    let src = std::fs::read_to_string(p)
                        .map_err(|e| format!("{}: {e}", p.display()))?;
                    match parse_experiments(&src, &p.display().to_string()) {
                        Ok(exps) => Some(exps),
                        Err(diags) => {
                            for d in &diags {
                                eprintln!("{d}");
                            }
                            return Ok(ExitCode::from(2));
                        }
                    }
                }
            };
            let opts = ClassifyOptions {
                auto_reduce,
                experiments,
                tolerance: tolerance(&numbers)?,
            };
            match classify(&m, reference.as_ref(), &opts) {
                Ok(report) => {
                    for (name, ms) in &report.timings {
                        eprintln!("timing {name}: {ms:.3} ms");
                    }
                    match format {
                        Format::Text => println!("{}", report.text()),
                        Format::Json => println!(
                            "{}",
                            serde_json::to_string_pretty(&report.json())
                                .map_err(|e| e.to_string())?
                        ),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(ClassifyError::Reducible(v)) => {
                    eprintln!("setup is reducible; rerun with --auto-reduce or `qtax reduce`");
                    if let Some(w) = &v.witness {
                        for (k, val) in &w.fields {
                            eprintln!("  {k}: {val}");
                        }
                    }
                    Ok(ExitCode::from(3))
                }
                Err(ClassifyError::Engine(EngineError::ImpossibleScenario(s))) => {
                    eprintln!("scenario ({s}) has zero total weight under the model's assumptions");
                    Ok(ExitCode::from(2))
                }
            }
        }

        Command::Parse { model, numbers } => {
            let m = match load_model(&model, &numbers) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            // surface impossible-scenario validation, not just grammar
            if let Err(EngineError::ImpossibleScenario(s)) = Ctx::new(&m) {
                eprintln!("scenario ({s}) has zero total weight under the model's assumptions");
                return Ok(ExitCode::from(2));
            }
            println!(
                "{}: {} variables, {} mechanisms, {} constraints",
                m.name,
                m.variables.len(),
                m.mechanisms.len(),
                m.constraints.len()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Check {
            property,
            model,
            reference,
            numbers,
        } => {
            if !PROPERTY_NAMES.contains(&property.as_str()) {
                eprintln!("unknown property {property:?}; one of:");
                for n in PROPERTY_NAMES {
                    eprintln!("  {n}");
                }
                return Ok(ExitCode::from(2));
            }
            let m = match load_model(&model, &numbers) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let reference = match &reference {
                None => None,
                Some(p) => match load_model(p, &numbers) {
                    Ok(r) => Some(r),
                    Err(code) => return Ok(code),
                },
            };
            let opts = ClassifyOptions {
                auto_reduce: true,
                experiments: None,
                tolerance: tolerance(&numbers)?,
            };
            match check_one(&property, &m, reference.as_ref(), &opts) {
                Ok(Some(v)) => {
                    println!("{property}: {}", v.status);
                    if let Some(r) = &v.reason {
                        println!("  reason: {r}");
                    }
                    if let Some(w) = &v.witness {
                        for (k, val) in &w.fields {
                            println!("  {k}: {val}");
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Ok(None) => {
                    eprintln!("unknown property {property:?}");
                    Ok(ExitCode::from(2))
                }
                Err(ClassifyError::Reducible(_)) => unreachable!("check auto-reduces"),
                Err(ClassifyError::Engine(EngineError::ImpossibleScenario(s))) => {
                    eprintln!("scenario ({s}) has zero total weight under the model's assumptions");
                    Ok(ExitCode::from(2))
                }
            }
        }

        Command::Compare {
            a,
            b,
            level,
            experiments,
            numbers,
        } => {
            let ma = match load_model(&a, &numbers) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let mb = match load_model(&b, &numbers) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let tol = tolerance(&numbers)?.unwrap_or_else(|| {
                if ma.decimal || mb.decimal {
                    Tolerance(Some(qtax_core::checkers::default_epsilon()))
                } else {
                    Tolerance(None)
                }
            });
            let (ba, bb) = match (behavior(&ma), behavior(&mb)) {
                (Ok(ba), Ok(bb)) => (ba, bb),
                (Err(EngineError::ImpossibleScenario(s)), _)
                | (_, Err(EngineError::ImpossibleScenario(s))) => {
                    eprintln!("scenario ({s}) has zero total weight under the model's assumptions");
                    return Ok(ExitCode::from(2));
                }
            };
            let v = match level.as_str() {
                "p" => p_equivalent(&ba, &bb, &tol),
                "e" => {
                    let Some(path) = &experiments else {
                        return Err("--level e needs --experiments FILE".to_string());
                    };
                    let src = std::fs::read_to_string(path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    let exps = match parse_experiments(&src, &path.display().to_string()) {
                        Ok(exps) => exps,
                        Err(diags) => {
                            for d in &diags {
                                eprintln!("{d}");
                            }
                            return Ok(ExitCode::from(2));
                        }
                    };
                    e_equivalent(&ba, &bb, &exps, &tol)
                }
                other => return Err(format!("--level must be p or e, not {other:?}")),
            };
            if v.reason.as_deref() == Some(qtax_core::equivalence::REASON_SIGNATURE_MISMATCH) {
                let detail = v
                    .witness
                    .as_ref()
                    .and_then(|w| w.fields.get("mismatch").cloned())
                    .unwrap_or_default();
                eprintln!("behavior signatures differ: {detail}");
                return Ok(ExitCode::from(2));
            }
            println!("{level}-equivalent: {}", v.status);
            if let Some(w) = &v.witness {
                for (k, val) in &w.fields {
                    println!("  {k}: {val}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Reduce { model, numbers } => {
            let m = match load_model(&model, &numbers) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let (reduced, log) = reduce(&m);
            for entry in &log {
                eprintln!("{entry}");
            }
            if log.is_empty() {
                eprintln!("nothing to remove");
            }
            print!("{}", canonical_text(&reduced));
            Ok(ExitCode::SUCCESS)
        }
    }
}
