//! `causalbound` command-line front end.
//!
//! Exit codes: 0 success, 2 validation failure (or bad usage), 3 unreadable
//! or malformed input, 4 compilation failure, 5 evaluation failure, 6 a
//! verification or simulation check failed.
//!
//! Problem files have three `%%`-separated sections: the graph, `query:`
//! lines and `constraint:` lines. The graph grammar, one statement per line:
//!
//! ```text
//! var NAME : CARD [left|right]     # right is the default
//! edge A -> B [-> C ...]
//! confound NAME { A, B, ... }
//! confound left|right              # one confounder over the whole side
//! unobserved NAME
//! # comments run to the end of the line
//! ```
//!
//! Queries are linear combinations of `P{...}` terms such as
//! `P{Y(X=1)=1} - P{Y(X=0)=1}` or `P{Y(M(X=0), X=1)=1}`. Constraints are
//! either unit-level (`Y2(Y=1) >= Y2(Y=0)`) or linear in probabilities
//! (`P{Y(X=1)=1} - P{Y(X=0)=1} >= 0`).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causalbound::error::Error;
use causalbound::oracle::parse_distribution_tsv;
use causalbound::polytope::DdOptions;
use causalbound::problem::{compile, parse_problem, prepare, verify_query, CompileOptions, Counterexample};
use causalbound::rational::format_rational;
use causalbound::simulation::{run_study, study_bounds};
use causalbound::symbolic::{
    complete_distribution, evaluate_bound, prune_dominated, read_bounds_file, write_bounds_file, SymbolicBound,
};
use causalbound::Tightness;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "causalbound", version, about = "Symbolic bounds on counterfactual queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem's graph and queries.
    Validate {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile a problem into symbolic bounds.
    Bounds {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_cells: Option<u64>,
        /// Drop expressions never strictly active at an achievable distribution.
        #[arg(long)]
        prune_dominated: bool,
        /// Recompute even when a cached result exists.
        #[arg(long)]
        no_cache: bool,
    },
    /// Evaluate compiled bounds at a distribution.
    Evaluate {
        bounds: PathBuf,
        distribution: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare the bounds against the exact primal optimum at sampled points.
    Verify {
        problem: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check this bounds file instead of compiling afresh.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long)]
        max_cells: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run the instrument comparison study and emit CSV.
    Simulate {
        #[arg(long, default_value = "two-iv")]
        model: String,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Io(_) => 3,
            Error::Validation(_) | Error::Query(_) => 2,
            Error::Symbolic(_) => 5,
            Error::Oracle(_) => 6,
            Error::Canonical(_) | Error::Constraint(_) | Error::Polytope(_) => 4,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::new(3, format!("{}: {e}", path.display())))
}

fn options(max_cells: Option<u64>) -> CompileOptions {
    let mut opts = CompileOptions { dd: DdOptions::from_env(), ..CompileOptions::default() };
    if let Some(c) = max_cells {
        opts.max_cells = c;
    }
    opts
}

fn tightness_label(t: Tightness) -> &'static str {
    match t {
        Tightness::Tight => "tight",
        Tightness::ValidOnly => "valid, not guaranteed tight",
    }
}

fn cmd_validate(path: &Path, format: Format) -> CmdResult {
    let problem = parse_problem(&read(path)?).map_err(Error::from)?;
    let report = causalbound::problem::check_problem(&problem)?;
    let v = &report.validation;
    match format {
        Format::Json => {
            let doc = json!({
                "passed": v.passed(),
                "tightness": v.tightness(),
                "errors": v.errors.iter().map(|e| json!({"kind": e.kind(), "message": e.to_string()})).collect::<Vec<_>>(),
                "findings": v.findings.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "warnings": report.lint.warnings,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
        Format::Text => {
            for e in &v.errors {
                println!("error: {e}");
            }
            for f in &v.findings {
                println!("finding: {f}");
            }
            for w in &report.lint.warnings {
                println!("warning: {}", w.message);
            }
            if v.passed() {
                println!("ok: bounds will be {}", tightness_label(v.tightness()));
            }
        }
    }
    if v.passed() {
        Ok(())
    } else {
        Err(Failure::new(2, "validation failed"))
    }
}

fn cache_path(problem: &Path, out: Option<&Path>, key: &str) -> PathBuf {
    let dir = out
        .and_then(Path::parent)
        .or_else(|| problem.parent())
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    dir.join(".causalbound-cache").join(format!("{key}.json"))
}

fn cmd_bounds(
    path: &Path,
    format: Format,
    out: Option<&Path>,
    max_cells: Option<u64>,
    prune: bool,
    no_cache: bool,
) -> CmdResult {
    let text = read(path)?;
    let problem = parse_problem(&text).map_err(Error::from)?;
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    let key = format!("{hash}{}", if prune { "-pruned" } else { "" });
    let cache = cache_path(path, out, &key);
    let cached = if no_cache {
        None
    } else {
        fs::read_to_string(&cache)
            .ok()
            .and_then(|t| read_bounds_file(&t).ok())
            .filter(|(h, _)| h.as_deref() == Some(hash.as_str()))
            .map(|(_, b)| b)
    };
    let from_cache = cached.is_some();
    let bounds: Vec<SymbolicBound> = match cached {
        Some(b) => b,
        None => {
            let compiled = compile(&problem, &options(max_cells))?;
            let system = &compiled.prepared.system;
            let bounds: Vec<SymbolicBound> =
                compiled.bounds.iter().map(|b| if prune { prune_dominated(b, system) } else { b.clone() }).collect();
            if let Some(dir) = cache.parent() {
                // A cache that cannot be written only costs a recomputation later.
                if fs::create_dir_all(dir).is_ok() {
                    let _ = fs::write(&cache, write_bounds_file(Some(&hash), &bounds));
                }
            }
            bounds
        }
    };
    let rendered = match format {
        Format::Json => write_bounds_file(Some(&hash), &bounds),
        Format::Text => bounds.iter().map(SymbolicBound::to_text).collect::<Vec<_>>().join("\n"),
    };
    match out {
        Some(o) => {
            write(o, &rendered)?;
            for b in &bounds {
                eprintln!(
                    "{}: {} lower and {} upper vertices ({} total), {} and {} expressions kept; {}{}",
                    b.query,
                    b.lower_vertex_count,
                    b.upper_vertex_count,
                    b.lower_vertex_count + b.upper_vertex_count,
                    b.lower.len(),
                    b.upper.len(),
                    tightness_label(b.tightness),
                    if b.conditional { "; conditional on distribution compatibility" } else { "" },
                );
            }
            if from_cache {
                eprintln!("(reused cached result {})", cache.display());
            }
        }
        None => print!("{rendered}{}", if rendered.ends_with('\n') { "" } else { "\n" }),
    }
    Ok(())
}

fn cmd_evaluate(bounds_path: &Path, dist_path: &Path, format: Format) -> CmdResult {
    let (_, bounds) = read_bounds_file(&read(bounds_path)?).map_err(|e| Failure::new(3, e.to_string()))?;
    let file = parse_distribution_tsv(&read(dist_path)?).map_err(Error::from)?;
    let mut results = Vec::new();
    for b in &bounds {
        let dist = complete_distribution(&b.legend, &file).map_err(Error::from)?;
        let (lo, hi) = evaluate_bound(b, &dist).map_err(Error::from)?;
        results.push((b.query.clone(), lo, hi));
    }
    match format {
        Format::Json => {
            let doc: Vec<_> = results
                .iter()
                .map(|(q, lo, hi)| {
                    json!({"query": q, "lower": format_rational(lo), "upper": format_rational(hi),
                           "lower_f64": causalbound::rational::to_f64(lo), "upper_f64": causalbound::rational::to_f64(hi)})
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
        }
        Format::Text => {
            for (q, lo, hi) in &results {
                println!("{q}: [{}, {}]", format_rational(lo), format_rational(hi));
            }
        }
    }
    Ok(())
}

fn dump(c: &Counterexample) -> serde_json::Value {
    json!({
        "trial": c.trial,
        "q": c.q.iter().map(format_rational).collect::<Vec<_>>(),
        "p": c.p.legend.symbols().into_iter().zip(c.p.values.iter().map(format_rational)).collect::<Vec<_>>(),
        "symbolic": [format_rational(&c.symbolic.0), format_rational(&c.symbolic.1)],
        "oracle": [format_rational(&c.oracle.0), format_rational(&c.oracle.1)],
        "query_value": format_rational(&c.truth),
    })
}

fn cmd_verify(
    path: &Path,
    trials: usize,
    seed: u64,
    bounds_path: Option<&Path>,
    max_cells: Option<u64>,
    format: Format,
) -> CmdResult {
    let problem = parse_problem(&read(path)?).map_err(Error::from)?;
    let opts = options(max_cells);
    let (prepared, bounds) = match bounds_path {
        Some(bp) => {
            let (_, b) = read_bounds_file(&read(bp)?).map_err(|e| Failure::new(3, e.to_string()))?;
            (prepare(&problem, &opts)?, b)
        }
        None => {
            let c = compile(&problem, &opts)?;
            (c.prepared, c.bounds)
        }
    };
    if bounds.len() != prepared.queries.len() {
        return Err(Failure::new(6, "the bounds file does not match the problem's queries"));
    }
    let mut all_ok = true;
    let mut docs = Vec::new();
    for (b, q) in bounds.iter().zip(&prepared.queries) {
        let report = verify_query(b, q, &prepared.system, trials, seed).map_err(|e| match e {
            Error::Symbolic(s) => Failure::new(6, format!("{}: {s}", q.text)),
            other => other.into(),
        })?;
        all_ok &= report.passed();
        match format {
            Format::Text => {
                println!("{}: {}/{} trials match", q.text, trials - report.failures.len(), trials);
                if let Some(c) = report.failures.first() {
                    println!("counterexample: {}", serde_json::to_string_pretty(&dump(c)).expect("serializable"));
                }
            }
            Format::Json => docs.push(json!({
                "query": q.text,
                "trials": trials,
                "failures": report.failures.iter().map(dump).collect::<Vec<_>>(),
            })),
        }
    }
    if format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&docs).expect("serializable"));
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::new(6, "symbolic bounds disagree with the oracle"))
    }
}

fn cmd_simulate(model: &str, reps: usize, seed: u64, out: Option<&Path>, format: Format) -> CmdResult {
    if model != "two-iv" {
        return Err(Failure::new(2, format!("unknown model `{model}`; only `two-iv` is available")));
    }
    let bounds = study_bounds(&options(None))?;
    let report = run_study(&bounds, reps, seed)?;
    let csv = report.to_csv();
    match out {
        Some(o) => write(o, &csv)?,
        None => print!("{csv}"),
    }
    let containment = report.containment_failures().len();
    let equality = report.equality_failures().len();
    match format {
        Format::Json => eprintln!(
            "{}",
            json!({"replicates": report.replicates.len(), "degenerate": report.degenerate,
                   "containment_failures": containment, "four_level_mismatches": equality})
        ),
        Format::Text => {
            eprintln!(
                "{} replicates ({} skipped as degenerate): two-instrument interval inside the single-instrument interval in {}, equal to the four-level interval in {}",
                report.replicates.len(),
                report.degenerate,
                report.replicates.len() - containment,
                report.replicates.len() - equality,
            );
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::new(6, "simulation checks failed"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { problem, format } => cmd_validate(problem, *format),
        Command::Bounds { problem, format, out, max_cells, prune_dominated, no_cache } => {
            cmd_bounds(problem, *format, out.as_deref(), *max_cells, *prune_dominated, *no_cache)
        }
        Command::Evaluate { bounds, distribution, format } => cmd_evaluate(bounds, distribution, *format),
        Command::Verify { problem, trials, seed, bounds, max_cells, format } => {
            cmd_verify(problem, *trials, *seed, bounds.as_deref(), *max_cells, *format)
        }
        Command::Simulate { model, reps, seed, out, format } => {
            cmd_simulate(model, *reps, *seed, out.as_deref(), *format)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
