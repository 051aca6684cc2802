//! The `cloudnet` command line.
//!
//! Documents go to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 domain rejection (infeasible request, failed check, infeasible what-if),
//! 2 usage, parse or internal error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::doc::{EmbeddingDoc, StateDoc};
use crate::engine::{
    apply_plan, embed, reembed, verify_embedding, whatif_subset, CheckScope, EmbedOutcome,
    MigrationInputs, ReembedMode, SubstrateState,
};
use crate::mip::build;
use crate::network::doc::{ProblemDoc, RequestFileDoc};
use crate::network::{validate_problem, ElementId, ObjectiveConfig, ResourceClass, SubstrateGraph};
use crate::scenario::{emit_metrics, run_experiment, MetricsFormat, ScenarioConfig};
use crate::solver::{export_model, ExportFormat, SolverConfig};

/// Environment variable naming the default scenario config for `experiment`.
pub const CONFIG_ENV: &str = "CLOUDNET_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cloudnet", version, about = "Embed virtual cloud networks onto a substrate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Embed one request against the current state.
    Embed(EmbedArgs),
    /// Propose migrations that lower the total objective.
    Reembed(ReembedArgs),
    /// Check whether all committed requests fit on a subset of the substrate.
    Whatif(WhatifArgs),
    /// Run an iterative placement experiment and write metrics.
    Experiment(ExperimentArgs),
    /// Write the program of a problem in LP or MPS format.
    ExportModel(ExportArgs),
    /// Check an embedding against a state.
    Verify(VerifyArgs),
    /// Report structural problems of a problem document.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Load,
    Resource,
}

#[derive(Args, Debug)]
struct ObjectiveOpts {
    #[arg(long, value_enum, default_value = "resource")]
    objective: ObjectiveArg,
    /// Priority factor of the maximum load; defaults to the sum of load weights.
    #[arg(long)]
    load_factor: Option<f64>,
}

#[derive(Args, Debug)]
struct SolverOpts {
    /// Depth-first search on one worker; reproducible statistics.
    #[arg(long)]
    deterministic: bool,
    /// Seconds per solve.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Branch-and-bound workers; ignored with --deterministic.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    state: PathBuf,
    /// Request document with `request` and optional `policies`.
    #[arg(long)]
    request: PathBuf,
    #[command(flatten)]
    objective: ObjectiveOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Write the state with the new embedding committed.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReembedArgs {
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    objective: ObjectiveOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Migration inputs document (penalties and transit costs).
    #[arg(long)]
    migration: Option<PathBuf>,
    /// Penalty per migrated node; overrides the document.
    #[arg(long)]
    penalty: Option<f64>,
    /// Solve all requests in one model.
    #[arg(long)]
    joint: bool,
    /// Write the state with the plan applied.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WhatifArgs {
    #[arg(long)]
    state: PathBuf,
    /// Substrate element ids, whitespace separated or a JSON array.
    #[arg(long)]
    subset: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricsArg {
    Csv,
    Jsonl,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Scenario config; falls back to $CLOUDNET_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: MetricsArg,
    #[command(flatten)]
    solver: SolverOpts,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Lp,
    Mps,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "lp")]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    embedding: PathBuf,
    #[command(flatten)]
    objective: ObjectiveOpts,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    problem: PathBuf,
}

/// A failure that ends the command with a non-zero exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

type Outcome = Result<i32, Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn document<T: Serialize>(&mut self, doc: &T) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(doc).map_err(usage)?;
        writeln!(self.out, "{text}").map_err(usage)
    }

    fn note(&mut self, message: impl std::fmt::Display) {
        let _ = writeln!(self.err, "{message}");
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<SubstrateState, Failure> {
    let doc = StateDoc::parse(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    doc.to_state().map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn save_state(path: &Path, state: &SubstrateState) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&StateDoc::from_state(state)).map_err(usage)?;
    write_file(path, &(text + "\n"))
}

fn objective(opts: &ObjectiveOpts, substrate: &SubstrateGraph) -> ObjectiveConfig {
    match opts.objective {
        ObjectiveArg::Resource => ObjectiveConfig::ResourceMin,
        ObjectiveArg::Load => {
            let sum: f64 = substrate
                .resources
                .of_class(ResourceClass::Substrate)
                .map(|r| r.load_weight)
                .sum();
            ObjectiveConfig::LoadBalance {
                c: opts.load_factor.unwrap_or(sum),
            }
        }
    }
}

fn solver(opts: &SolverOpts) -> SolverConfig {
    let mut config = if opts.deterministic {
        SolverConfig::deterministic()
    } else {
        SolverConfig::default()
    };
    if let Some(w) = opts.workers.filter(|_| !opts.deterministic) {
        config.workers = w.max(1);
    }
    config.time_limit = opts.time_limit.map(Duration::from_secs_f64);
    config
}

fn cmd_embed(a: &EmbedArgs, io: &mut Io) -> Outcome {
    let mut state = load_state(&a.state)?;
    let text = read(&a.request)?;
    let file: RequestFileDoc =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.request.display())))?;
    let request = file
        .request
        .to_request()
        .map_err(|e| usage(format!("{}: {e}", a.request.display())))?;
    let policies = file.policies.to_policies(&state.substrate);
    let objective = objective(&a.objective, &state.substrate);
    let report = embed(&state, &request, &policies, objective, &solver(&a.solver)).map_err(usage)?;
    for w in &report.warnings {
        io.note(format!("warning: {w}"));
    }
    io.note(format!(
        "{} variables, {} constraints, {} nodes, {:.3} s",
        report.variables,
        report.constraints,
        report.stats.nodes,
        report.stats.wall_time.as_secs_f64()
    ));
    match report.outcome {
        EmbedOutcome::Accepted(e) => {
            io.document(&EmbeddingDoc {
                request: file.request,
                policies: file.policies,
                embedding: e.clone(),
            })?;
            if let Some(path) = &a.state_out {
                state.commit(request, policies, e).map_err(usage)?;
                save_state(path, &state)?;
            }
            Ok(EXIT_OK)
        }
        EmbedOutcome::Rejected(r) => {
            io.note(format!("rejected: {}", r.note));
            io.document(&r)?;
            Ok(EXIT_REJECTED)
        }
    }
}

fn cmd_reembed(a: &ReembedArgs, io: &mut Io) -> Outcome {
    let state = load_state(&a.state)?;
    let mut inputs = match &a.migration {
        Some(path) => serde_json::from_str::<MigrationInputs>(&read(path)?)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => MigrationInputs::default(),
    };
    if let Some(p) = a.penalty {
        inputs.node_penalty = p;
    }
    let mode = if a.joint { ReembedMode::Joint } else { ReembedMode::Sequential };
    let objective = objective(&a.objective, &state.substrate);
    let plan = reembed(&state, objective, &inputs, &solver(&a.solver), mode).map_err(usage)?;
    io.note(format!(
        "{} request(s) move; improvement {:.6} after migration cost {:.6}",
        plan.entries.len(),
        plan.improvement,
        plan.migration_cost
    ));
    io.document(&plan)?;
    if let Some(path) = &a.state_out {
        let next = apply_plan(&state, &plan).map_err(usage)?;
        save_state(path, &next)?;
    }
    Ok(EXIT_OK)
}

fn parse_subset(text: &str) -> Result<BTreeSet<ElementId>, Failure> {
    let ids: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(usage)?
    } else {
        text.lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .map(str::to_string)
            .collect()
    };
    Ok(ids.into_iter().map(ElementId::new).collect())
}

fn cmd_whatif(a: &WhatifArgs, io: &mut Io) -> Outcome {
    let state = load_state(&a.state)?;
    let subset = parse_subset(&read(&a.subset)?)?;
    let result = whatif_subset(&state, &subset, &solver(&a.solver)).map_err(usage)?;
    io.document(&result)?;
    Ok(if result.feasible { EXIT_OK } else { EXIT_REJECTED })
}

fn cmd_experiment(a: &ExperimentArgs, io: &mut Io) -> Outcome {
    let path = match &a.config {
        Some(p) => p.clone(),
        None => std::env::var_os(CONFIG_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| usage(format!("no --config given and {CONFIG_ENV} is not set")))?,
    };
    let text = read(&path)?;
    let mut config = ScenarioConfig::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let config_has_seed = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("seed").is_some())
        .unwrap_or(false);
    config.seed = match a.seed {
        Some(s) => s,
        None if config_has_seed => config.seed,
        None => rand::random(),
    };
    io.note(format!("seed {}", config.seed));
    // relative topology paths are relative to the config file
    if let Some(t) = config.topology.as_mut().filter(|t| t.is_relative()) {
        if let Some(dir) = path.parent() {
            *t = dir.join(&*t);
        }
    }
    let result = run_experiment(&config, &solver(&a.solver)).map_err(usage)?;
    for w in &result.warnings {
        io.note(format!("warning: {w}"));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| usage(format!("{}: {e}", a.out.display())))?;
    let (name, format) = match a.format {
        MetricsArg::Csv => ("metrics.csv", MetricsFormat::CsvTable),
        MetricsArg::Jsonl => ("metrics.jsonl", MetricsFormat::JsonLines),
    };
    write_file(&a.out.join(name), &emit_metrics(&result.records, format))?;
    let summary = serde_json::to_string_pretty(&result.summary).map_err(usage)?;
    write_file(&a.out.join("summary.json"), &(summary + "\n"))?;
    let effective = serde_json::to_string_pretty(&config).map_err(usage)?;
    write_file(&a.out.join("config.json"), &(effective + "\n"))?;
    io.note(format!(
        "{} accepted over {} run(s); median {:.3} ms",
        result.summary.accepted, result.summary.runs, result.summary.median_ms
    ));
    Ok(EXIT_OK)
}

fn load_problem(path: &Path) -> Result<crate::network::EmbeddingProblem, Failure> {
    let doc = ProblemDoc::parse(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    doc.to_problem().map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_export(a: &ExportArgs, io: &mut Io) -> Outcome {
    let problem = load_problem(&a.problem)?;
    let model = build(&problem).map_err(usage)?;
    let format = match a.format {
        FormatArg::Lp => ExportFormat::LpText,
        FormatArg::Mps => ExportFormat::MpsText,
    };
    let text = export_model(&model, format).map_err(usage)?;
    write!(io.out, "{text}").map_err(usage)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    request_id: &'a str,
    valid: bool,
    violations: &'a [String],
}

fn cmd_verify(a: &VerifyArgs, io: &mut Io) -> Outcome {
    let state = load_state(&a.state)?;
    let doc = EmbeddingDoc::parse(&read(&a.embedding)?).map_err(|e| usage(format!("{}: {e}", a.embedding.display())))?;
    let request = doc
        .request
        .to_request()
        .map_err(|e| usage(format!("{}: {e}", a.embedding.display())))?;
    let policies = doc.policies.to_policies(&state.substrate);
    let objective = objective(&a.objective, &state.substrate);
    // an already committed embedding is checked against the state without itself
    let excluding = state.get(&request.id).map(|_| request.id.as_str());
    let problem = state
        .problem_for(&request, &policies, objective, excluding)
        .map_err(usage)?;
    let report = verify_embedding(&problem, &doc.embedding, CheckScope::Full, a.tolerance);
    io.document(&VerifyReport {
        request_id: &request.id,
        valid: report.is_clean(),
        violations: &report.violations,
    })?;
    Ok(if report.is_clean() { EXIT_OK } else { EXIT_REJECTED })
}

fn cmd_validate(a: &ValidateArgs, io: &mut Io) -> Outcome {
    let problem = load_problem(&a.problem)?;
    let report = validate_problem(&problem);
    io.document(&report)?;
    Ok(if report.is_empty() { EXIT_OK } else { EXIT_REJECTED })
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let mut io = Io { out, err };
    let result = match &cli.command {
        Command::Embed(a) => cmd_embed(a, &mut io),
        Command::Reembed(a) => cmd_reembed(a, &mut io),
        Command::Whatif(a) => cmd_whatif(a, &mut io),
        Command::Experiment(a) => cmd_experiment(a, &mut io),
        Command::ExportModel(a) => cmd_export(a, &mut io),
        Command::Verify(a) => cmd_verify(a, &mut io),
        Command::Validate(a) => cmd_validate(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            io.note(format!("error: {}", f.message));
            f.code
        }
    }
}
