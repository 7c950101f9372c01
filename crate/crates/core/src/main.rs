use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use luc::eval::{format_store, run, run_observed, trace_line, Outcome};
use luc::props::{self, LawReport};
use luc::trial::{fuzz, soundness_trial, FuzzOptions, TrialOptions};
use luc::{parse_program, typecheck_program, Expr, ParseError, TypeError};

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const EXIT_TYPE_ERROR: u8 = 1;
const EXIT_PARSE_ERROR: u8 = 2;
const EXIT_STUCK: u8 = 3;
const EXIT_STEP_LIMIT: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "luc", version, about = "Typechecker, interpreter and soundness harness for a small object calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and typecheck a program.
    Check {
        file: PathBuf,
        /// Emit {type, post_constraints, errors} as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Typecheck, then evaluate a program.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// Print one line per reduction step.
        #[arg(long)]
        trace: bool,
        /// Skip typechecking.
        #[arg(long)]
        r#unsafe: bool,
    },
    /// Generate well-typed programs and run soundness trials on them.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Re-type the residual program after every step.
        #[arg(long)]
        subject_reduction: bool,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Run soundness trials on program files or directories of `.luc` files.
    Trial {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        subject_reduction: bool,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Check the constraint-algebra and satisfaction laws on random instances.
    Props {
        /// Instances per algebraic law.
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        /// Instances per satisfaction law.
        #[arg(long, default_value_t = 5_000)]
        sat_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Check { file, json } => check(&file, json),
        Command::Run { file, max_steps, trace, r#unsafe } => run_file(&file, max_steps, trace, r#unsafe),
        Command::Fuzz { seed, count, depth, subject_reduction, max_steps } => {
            let report = fuzz(FuzzOptions { seed, count, depth, subject_reduction, max_steps });
            let _ = std::io::Write::write_all(&mut std::io::stdout(), report.render().as_bytes());
            u8::from(report.violation_count() > 0)
        }
        Command::Trial { paths, subject_reduction, max_steps } => trial(&paths, subject_reduction, max_steps),
        Command::Props { iters, sat_iters, seed } => run_props(iters, sat_iters, seed),
    };
    ExitCode::from(code)
}

enum Loaded {
    Program(Expr),
    Failed(u8),
}

fn load(file: &Path) -> Loaded {
    let text = match fs::read_to_string(file) {
        Ok(t) => t,
        Err(err) => {
            eprintln!("{}: {err}", file.display());
            return Loaded::Failed(EXIT_USAGE);
        }
    };
    match parse_program(&text) {
        Ok(e) => Loaded::Program(e),
        Err(err) => {
            eprintln!("{}", parse_diagnostic(file, &err));
            Loaded::Failed(EXIT_PARSE_ERROR)
        }
    }
}

fn parse_diagnostic(file: &Path, err: &ParseError) -> String {
    format!("{}:{err}", file.display())
}

fn type_diagnostic(file: &Path, err: &TypeError) -> String {
    format!("{}:{}:{}: {err}", file.display(), err.span.line, err.span.col)
}

#[derive(Serialize)]
struct JsonDiagnostic {
    kind: String,
    rule: Option<String>,
    line: u32,
    col: u32,
    detail: String,
}

#[derive(Serialize)]
struct JsonCheck {
    #[serde(rename = "type")]
    ty: Option<String>,
    post_constraints: Option<String>,
    errors: Vec<JsonDiagnostic>,
}

fn check(file: &Path, json: bool) -> u8 {
    let text = match fs::read_to_string(file) {
        Ok(t) => t,
        Err(err) => {
            eprintln!("{}: {err}", file.display());
            return EXIT_USAGE;
        }
    };
    let (out, code) = match parse_program(&text) {
        Err(err) => {
            if !json {
                eprintln!("{}", parse_diagnostic(file, &err));
            }
            let span = err.span();
            let message = err.to_string();
            let detail = message.splitn(3, ':').nth(2).unwrap_or(&message).trim().to_string();
            let d = JsonDiagnostic { kind: "ParseError".into(), rule: None, line: span.line, col: span.col, detail };
            (JsonCheck { ty: None, post_constraints: None, errors: vec![d] }, EXIT_PARSE_ERROR)
        }
        Ok(e) => match typecheck_program(&e) {
            Ok(r) => {
                if !json {
                    out!("type: {}  post: {}", r.ty, r.post);
                }
                (
                    JsonCheck {
                        ty: Some(r.ty.to_string()),
                        post_constraints: Some(r.post.to_string()),
                        errors: vec![],
                    },
                    0,
                )
            }
            Err(err) => {
                if !json {
                    eprintln!("{}", type_diagnostic(file, &err));
                }
                let d = JsonDiagnostic {
                    kind: err.kind.to_string(),
                    rule: Some(err.rule.to_string()),
                    line: err.span.line,
                    col: err.span.col,
                    detail: err.detail.clone(),
                };
                (JsonCheck { ty: None, post_constraints: None, errors: vec![d] }, EXIT_TYPE_ERROR)
            }
        },
    };
    if json {
        out!("{}", serde_json::to_string(&out).expect("plain data serializes"));
    }
    code
}

fn run_file(file: &Path, max_steps: usize, trace: bool, skip_check: bool) -> u8 {
    let e = match load(file) {
        Loaded::Program(e) => e,
        Loaded::Failed(code) => return code,
    };
    if !skip_check {
        if let Err(err) = typecheck_program(&e) {
            eprintln!("{}", type_diagnostic(file, &err));
            return EXIT_TYPE_ERROR;
        }
    }
    let result = if trace {
        run_observed(&e, max_steps, &mut |event| out!("{}", trace_line(event)))
    } else {
        run(&e, max_steps)
    };
    match result.outcome {
        Outcome::Done { store, value } => {
            out!("value: {value}");
            out!("store: {}", format_store(&store));
            out!("steps: {}", result.steps);
            0
        }
        Outcome::Stuck { reason, config } => {
            out!("Stuck({reason}) at {}", config.redex);
            out!("store: {}", format_store(&result.store));
            out!("steps: {}", result.steps);
            EXIT_STUCK
        }
        Outcome::StepLimit(_) => {
            out!("StepLimit after {} steps", result.steps);
            EXIT_STEP_LIMIT
        }
        Outcome::Stepped { .. } => unreachable!("run returns terminal outcomes"),
    }
}

fn program_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, std::io::Error> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> =
                fs::read_dir(p)?.map(|entry| entry.map(|e| e.path())).collect::<Result<_, _>>()?;
            files.retain(|f| f.extension().is_some_and(|x| x == "luc"));
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn trial(paths: &[PathBuf], subject_reduction: bool, max_steps: usize) -> u8 {
    let files = match program_files(paths) {
        Ok(f) => f,
        Err(err) => {
            eprintln!("{err}");
            return EXIT_USAGE;
        }
    };
    let mut violations = 0;
    for file in files {
        let e = match load(&file) {
            Loaded::Program(e) => e,
            Loaded::Failed(_) => continue,
        };
        match soundness_trial(&e, TrialOptions { max_steps, subject_reduction }) {
            Ok(r) => {
                violations += usize::from(r.verdict.is_violation());
                let mut line = format!("{}: {} steps={}", file.display(), r.verdict, r.steps);
                if subject_reduction {
                    line += &format!(" weakened={}/{}", r.weakened_replays, r.replays);
                }
                if !r.details.is_empty() {
                    line += &format!(" ({})", r.details);
                }
                out!("{line}");
            }
            Err(err) => out!("{}: ill-typed, skipped ({err})", file.display()),
        }
    }
    u8::from(violations > 0)
}

fn run_props(iters: usize, sat_iters: usize, seed: u64) -> u8 {
    out!("props seed={seed} iters={iters} sat_iters={sat_iters}");
    let mut stated = props::constraint_laws(seed, iters);
    stated.extend(props::entailment_soundness(seed, sat_iters));
    stated.push(props::hasfield(seed, sat_iters));
    stated.push(props::value_completeness(seed, sat_iters));
    let show = |r: &LawReport| out!("[{}] {r}", if r.holds() { "ok" } else { "FAIL" });
    stated.iter().for_each(show);
    out!("informational:");
    props::merge_closed_laws(seed, iters).iter().for_each(show);
    props::merge_satisfaction(seed, sat_iters).iter().for_each(show);
    u8::from(!stated.iter().all(LawReport::holds))
}
