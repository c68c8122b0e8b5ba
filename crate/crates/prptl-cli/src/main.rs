//! Command line front end for the prptl toolkit: parse and rewrite
//! formulas, build their graphs, evaluate traces, and check probability
//! queries against Markov chain models.
//!
//! Exit status: 0 success (query holds, trace satisfies); 1 query fails
//! or trace falsifies; 2 usage error (bad arguments or unparsable
//! formula); 3 computation error (unreadable or malformed input files,
//! checker limits); 4 inconclusive query verdict.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use prptl_core::checker::{
    check_query_with, enumerate_exact_with, estimate, CheckOptions, Value, Verdict,
};
use prptl_core::formula::{canonicalize, Formula, ProbQuery};
use prptl_core::markov::{self, Dtmc};
use prptl_core::parser::{parse_formula, parse_query, ratio_text, render, render_query};
use prptl_core::semantics::{parse_interval, Alphabet, Evaluator, Interval};
use prptl_core::tnf::{ctnf, tnf};
use prptl_core::tnfg;

#[derive(Parser)]
#[command(
    name = "prptl",
    version,
    about = "Probabilistic discrete-time projection temporal logic toolkit",
    max_term_width = 100
)]
struct Cli {
    /// Output format for results on standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Human-readable lines.
    Text,
    /// One JSON object per line (field names documented in the README).
    JsonLines,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FormulaInput {
    /// Formula text (quoted). With `parse`, a `Pr..[..]` query is also accepted.
    formula: Option<String>,
    /// Read the formula from a file instead of the command line.
    #[arg(long, value_name = "PATH")]
    formula_file: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct QueryInput {
    /// Query text (quoted), e.g. "Pr>=0.5 [ X[1,1] q ]".
    query: Option<String>,
    /// Read the query from a file instead of the command line.
    #[arg(long, value_name = "PATH")]
    formula_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula (or query) and echo its canonical form.
    Parse {
        #[command(flatten)]
        input: FormulaInput,
    },
    /// Rewrite a formula into time normal form.
    Tnf {
        #[command(flatten)]
        input: FormulaInput,
    },
    /// Rewrite a formula into complete time normal form.
    Ctnf {
        #[command(flatten)]
        input: FormulaInput,
    },
    /// Build the time normal form graph and print it.
    Graph {
        #[command(flatten)]
        input: FormulaInput,
        /// Emit Graphviz DOT instead of the plain listing.
        #[arg(long)]
        dot: bool,
        /// Abort if the graph would exceed this many nodes.
        #[arg(long, value_name = "N", default_value_t = 10_000)]
        node_limit: usize,
    },
    /// Evaluate a formula over a finite trace at (0, |trace|).
    Eval {
        /// Trace file: one line per state listing its true propositions.
        trace_file: PathBuf,
        #[command(flatten)]
        input: FormulaInput,
    },
    /// Decide a probability query against a Markov chain model.
    Check {
        /// Model file in the dtmc format.
        model_file: PathBuf,
        #[command(flatten)]
        input: QueryInput,
        /// Convergence tolerance for the unbounded fixpoint method.
        #[arg(long, value_name = "T", default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Compute an exact satisfaction probability over bounded-horizon paths.
    Exact {
        /// Model file in the dtmc format.
        model_file: PathBuf,
        #[command(flatten)]
        input: FormulaInput,
        /// Number of transitions to unroll.
        #[arg(long, value_name = "N")]
        horizon: usize,
    },
    /// Estimate a satisfaction probability by Monte Carlo sampling.
    Sample {
        /// Model file in the dtmc format.
        model_file: PathBuf,
        #[command(flatten)]
        input: FormulaInput,
        /// Number of sampled paths.
        #[arg(long, value_name = "N")]
        samples: u64,
        /// Length of each sampled path, in transitions.
        #[arg(long, value_name = "H")]
        horizon: usize,
        /// Seed for the deterministic sampler.
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
    },
}

/// A failure routed to the diagnostic stream with its exit status.
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            status: 2,
            message: message.into(),
        }
    }

    fn computation(message: impl Into<String>) -> Failure {
        Failure {
            status: 3,
            message: message.into(),
        }
    }
}

fn read_file(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::computation(format!("cannot read {what} {}: {e}", path.display())))
}

impl FormulaInput {
    fn text(&self) -> Result<String, Failure> {
        match (&self.formula, &self.formula_file) {
            (Some(text), None) => Ok(text.clone()),
            (None, Some(path)) => read_file(path, "formula file"),
            _ => unreachable!("clap enforces exactly one source"),
        }
    }

    fn parse(&self) -> Result<Formula, Failure> {
        let text = self.text()?;
        parse_formula(&text).map_err(|e| Failure::usage(e.to_string()))
    }
}

impl QueryInput {
    fn parse(&self) -> Result<ProbQuery, Failure> {
        let text = match (&self.query, &self.formula_file) {
            (Some(text), None) => text.clone(),
            (None, Some(path)) => read_file(path, "query file")?,
            _ => unreachable!("clap enforces exactly one source"),
        };
        parse_query(&text).map_err(|e| Failure::usage(e.to_string()))
    }
}

fn load_model(path: &Path) -> Result<Dtmc, Failure> {
    let text = read_file(path, "model file")?;
    markov::load(&text)
        .map_err(|e| Failure::computation(format!("{}: {e}", path.display())))
}

/// Query syntax always opens with `Pr` followed by a comparator.
fn looks_like_query(text: &str) -> bool {
    text.trim_start().strip_prefix("Pr").is_some_and(|rest| {
        matches!(rest.trim_start().as_bytes().first(), Some(b'<' | b'>' | b'='))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Prints help or a usage diagnostic; exits 0 for --help, 2 otherwise.
        Err(e) => e.exit(),
    };
    match run(cli.format, cli.command) {
        Ok(status) => status,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.status)
        }
    }
}

fn run(format: Format, command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Parse { input } => cmd_parse(format, &input),
        Command::Tnf { input } => cmd_rewrite(format, &input, false),
        Command::Ctnf { input } => cmd_rewrite(format, &input, true),
        Command::Graph {
            input,
            dot,
            node_limit,
        } => cmd_graph(format, &input, dot, node_limit),
        Command::Eval { trace_file, input } => cmd_eval(format, &trace_file, &input),
        Command::Check {
            model_file,
            input,
            tolerance,
        } => cmd_check(format, &model_file, &input, tolerance),
        Command::Exact {
            model_file,
            input,
            horizon,
        } => cmd_exact(format, &model_file, &input, horizon),
        Command::Sample {
            model_file,
            input,
            samples,
            horizon,
            seed,
        } => cmd_sample(format, &model_file, &input, samples, horizon, seed),
    }
}

fn cmd_parse(format: Format, input: &FormulaInput) -> Result<ExitCode, Failure> {
    let text = input.text()?;
    let (kind, canonical) = if looks_like_query(&text) {
        let q = parse_query(&text).map_err(|e| Failure::usage(e.to_string()))?;
        let q = ProbQuery::new(q.comparator, q.threshold, canonicalize(&q.body))
            .expect("threshold already validated");
        ("query", render_query(&q))
    } else {
        let f = input.parse()?;
        ("formula", render(&canonicalize(&f)))
    };
    match format {
        Format::Text => println!("{canonical}"),
        Format::JsonLines => print_json(json!({
            "command": "parse",
            "kind": kind,
            "canonical": canonical,
        })),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_rewrite(format: Format, input: &FormulaInput, complete: bool) -> Result<ExitCode, Failure> {
    let f = input.parse()?;
    let normal = tnf(&f).map_err(|e| Failure::computation(e.to_string()))?;
    let (command, normal) = if complete {
        let alphabet = f.atoms();
        let c = ctnf(&normal, &alphabet).map_err(|e| Failure::computation(e.to_string()))?;
        ("ctnf", c)
    } else {
        ("tnf", normal)
    };
    let rendered = normal.render();
    match format {
        Format::Text => println!("{rendered}"),
        Format::JsonLines => print_json(json!({
            "command": command,
            "input": render(&f),
            "output": rendered,
        })),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_graph(
    format: Format,
    input: &FormulaInput,
    dot: bool,
    node_limit: usize,
) -> Result<ExitCode, Failure> {
    let f = input.parse()?;
    let alphabet = f.atoms();
    let graph =
        tnfg::build(&f, &alphabet, node_limit).map_err(|e| Failure::computation(e.to_string()))?;
    match format {
        Format::Text => {
            if dot {
                print!("{}", graph.to_dot());
            } else {
                print!("{}", graph.listing());
            }
        }
        Format::JsonLines => {
            let nodes: Vec<_> = graph
                .nodes()
                .iter()
                .enumerate()
                .map(|(id, node)| json!({ "id": id, "label": node.label() }))
                .collect();
            let edges: Vec<_> = graph
                .edges()
                .iter()
                .map(|e| {
                    json!({
                        "source": e.source,
                        "guard": e.guard.to_string(),
                        "target": e.target,
                    })
                })
                .collect();
            let mut object = json!({
                "command": "graph",
                "nodes": nodes,
                "edges": edges,
            });
            if dot {
                object["dot"] = json!(graph.to_dot());
            }
            print_json(object);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(format: Format, trace_file: &Path, input: &FormulaInput) -> Result<ExitCode, Failure> {
    let f = input.parse()?;
    let text = read_file(trace_file, "trace file")?;
    let trace = parse_interval(&text)
        .map_err(|e| Failure::computation(format!("{}: {e}", trace_file.display())))?;

    // Evaluate over the union alphabet, so formula atoms missing from the
    // trace are simply false rather than unknown.
    let mut names: BTreeSet<String> = trace.alphabet().names().iter().cloned().collect();
    names.extend(f.atoms());
    let alphabet = Alphabet::new(names).map_err(|e| Failure::computation(e.to_string()))?;
    let states: Vec<u64> = trace
        .states()
        .iter()
        .map(|&mask| {
            trace
                .alphabet()
                .names_of(mask)
                .into_iter()
                .fold(0u64, |acc, name| {
                    acc | 1 << alphabet.index(name).expect("union alphabet")
                })
        })
        .collect();
    let interval =
        Interval::new(alphabet.clone(), states).expect("same state count as the parsed trace");

    let evaluator = Evaluator::new(&f, &alphabet);
    let holds = evaluator
        .eval(&interval, 0, interval.length())
        .map_err(|e| Failure::computation(e.to_string()))?;
    match format {
        Format::Text => println!("{holds}"),
        Format::JsonLines => print_json(json!({
            "command": "eval",
            "holds": holds,
            "states": interval.states().len(),
        })),
    }
    Ok(verdict_status(holds))
}

fn cmd_check(
    format: Format,
    model_file: &Path,
    input: &QueryInput,
    tolerance: f64,
) -> Result<ExitCode, Failure> {
    let query = input.parse()?;
    let model = load_model(model_file)?;
    let opts = CheckOptions {
        tolerance,
        ..CheckOptions::default()
    };
    let outcome =
        check_query_with(&model, &query, &opts).map_err(|e| Failure::computation(e.to_string()))?;
    let probability = probability_text(&outcome.result.value);
    match format {
        Format::Text => println!("{} ({probability})", outcome.verdict),
        Format::JsonLines => {
            let (exact, error_bound) = match &outcome.result.value {
                Value::Exact(p) => (Some(ratio_text(p)), None),
                Value::Approx { error_bound, .. } => (None, Some(*error_bound)),
                Value::Interval { low, high, .. } => (None, Some((high - low) / 2.0)),
            };
            print_json(json!({
                "command": "check",
                "verdict": outcome.verdict.to_string(),
                "probability": probability,
                "value": outcome.result.value.to_f64(),
                "exact": exact,
                "error_bound": error_bound,
                "method": outcome.result.method.to_string(),
                "work": outcome.result.work,
            }));
        }
    }
    Ok(match outcome.verdict {
        Verdict::Holds => ExitCode::SUCCESS,
        Verdict::Fails => ExitCode::from(1),
        Verdict::Inconclusive => ExitCode::from(4),
    })
}

fn cmd_exact(
    format: Format,
    model_file: &Path,
    input: &FormulaInput,
    horizon: usize,
) -> Result<ExitCode, Failure> {
    let f = input.parse()?;
    let model = load_model(model_file)?;
    let opts = CheckOptions::default();
    let p = enumerate_exact_with(&model, &f, horizon, &opts)
        .map_err(|e| Failure::computation(e.to_string()))?;
    match format {
        Format::Text => println!("{}", ratio_text(&p)),
        Format::JsonLines => {
            print_json(json!({
                "command": "exact",
                "exact": ratio_text(&p),
                "value": Value::Exact(p.clone()).to_f64(),
                "horizon": horizon,
            }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(
    format: Format,
    model_file: &Path,
    input: &FormulaInput,
    samples: u64,
    horizon: usize,
    seed: u64,
) -> Result<ExitCode, Failure> {
    let f = input.parse()?;
    let model = load_model(model_file)?;
    let result = estimate(&model, &f, samples, horizon, seed)
        .map_err(|e| Failure::computation(e.to_string()))?;
    let Value::Interval { value, low, high } = result.value else {
        unreachable!("estimates carry confidence intervals");
    };
    match format {
        Format::Text => {
            let truncated = if result.truncated { ", truncated" } else { "" };
            println!(
                "{value} [{low}, {high}] (samples {samples}, horizon {horizon}, seed {seed}{truncated})"
            );
        }
        Format::JsonLines => print_json(json!({
            "command": "sample",
            "estimate": value,
            "low": low,
            "high": high,
            "samples": samples,
            "horizon": horizon,
            "seed": seed,
            "truncated": result.truncated,
        })),
    }
    Ok(ExitCode::SUCCESS)
}

fn probability_text(value: &Value) -> String {
    match value {
        Value::Exact(p) => ratio_text(p),
        Value::Approx { value, error_bound } => format!("{value} +/- {error_bound:e}"),
        Value::Interval { value, low, high } => format!("{value} in [{low}, {high}]"),
    }
}

fn verdict_status(holds: bool) -> ExitCode {
    if holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_json(object: serde_json::Value) {
    println!("{object}");
}
