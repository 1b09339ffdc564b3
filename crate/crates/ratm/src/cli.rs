//! The `ratm` command line.
//!
//! Exit codes: 0 when the checked property holds, 1 when it is violated,
//! 2 for usage and parse errors, 3 when the state ceiling is exceeded.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ratm_core::corpus::{builtin, HARNESS_IDS, IDS};
use ratm_core::explorer::{ExploreError, ExploreOptions, DEFAULT_CEILING};
use ratm_core::lts::{Backend, StepOptions};
use ratm_core::outline::{check_og_validity, check_reachable_annotations, OutlineError, OutlineOptions};
use ratm_core::program::Program;
use ratm_core::refinement::{check_forward_simulation, check_program_refinement};
use ratm_core::rules::{catalogue, check_rules, falsified_rule, find_rule, RuleBounds, RuleError};
use ratm_core::taro::{EvalOptions, FlagReading};
use ratm_core::tml::Mutation;
use serde::Serialize;

use crate::dsl::{parse_outline, parse_postcondition, parse_program};
use crate::parallel::explore_parallel;
use crate::report::{
    LitmusReport, OutlineCheck, OutlineReport, RefinementReport, RuleEntry, RulesReport, SimulationReport, Verdict,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_EXHAUSTED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ratm", version, about = "Explore and verify release-acquire transactional memory programs")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explore every execution of a litmus program and check its postcondition.
    Litmus(LitmusArgs),
    /// Proof outlines, assertion rules and refinement.
    #[command(subcommand)]
    Check(Check),
}

#[derive(Debug, Subcommand)]
enum Check {
    /// Check an annotated program by reachability and by Owicki-Gries validity.
    Outline(OutlineArgs),
    /// Check the assertion rule catalogue over generated programs.
    Rules(RulesArgs),
    /// Check forward simulation of TML-RA against TMS2-RA.
    Simulate(RefineArgs),
    /// Check that every TML-RA client trace is a TMS2-RA client trace.
    Refine(RefineArgs),
}

fn program_ids() -> Vec<&'static str> {
    IDS.iter().chain(HARNESS_IDS.iter()).copied().collect()
}

fn mutation_names() -> Vec<&'static str> {
    Mutation::ALL.iter().map(|m| m.name()).collect()
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// A built-in program.
    #[arg(long, value_parser = PossibleValuesParser::new(program_ids()))]
    builtin: Option<String>,
    /// A program file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
struct OptionalSource {
    /// The built-in program the outline must annotate.
    #[arg(long, value_parser = PossibleValuesParser::new(program_ids()))]
    builtin: Option<String>,
    /// A program file the outline must annotate.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Limits {
    /// Loop iterations per loop and thread.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    /// Maximum number of explored configurations.
    #[arg(long, env = "RATM_STATE_CEILING", default_value_t = DEFAULT_CEILING,
          value_parser = clap::value_parser!(u64).range(1..).map(|n| n as usize))]
    ceiling: usize,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

impl Limits {
    fn explore(&self) -> ExploreOptions {
        ExploreOptions {
            step: StepOptions { budget: self.budget, ..StepOptions::default() },
            ceiling: self.ceiling,
            ..ExploreOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Plain,
    #[value(name = "tms2-ra")]
    Tms2Ra,
    #[value(name = "tml-ra")]
    TmlRa,
}

#[derive(Debug, Args)]
struct LitmusArgs {
    #[command(flatten)]
    source: Source,
    /// Default: tms2-ra for transactional programs, plain otherwise.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Replace the program's postcondition, e.g. "r2 in {0,5}".
    #[arg(long)]
    expect: Option<String>,
    /// Lock mutations; implies the tml-ra backend.
    #[arg(long, value_parser = PossibleValuesParser::new(mutation_names()))]
    mutate: Vec<String>,
    /// Exploration threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..).map(|n| n as usize))]
    workers: usize,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlagReadingArg {
    Releasing,
    Ignored,
}

#[derive(Debug, Args)]
struct OutlineArgs {
    /// The annotated program.
    #[arg(long)]
    outline: PathBuf,
    #[command(flatten)]
    source: OptionalSource,
    /// How the memory-flag condition of conditional observations is read.
    #[arg(long, value_enum, default_value_t = FlagReadingArg::Releasing)]
    flag_reading: FlagReadingArg,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Debug, Args)]
struct RulesArgs {
    /// Check only these rules. Default: the whole catalogue.
    #[arg(long)]
    rule: Vec<String>,
    /// Also check the deliberately falsified rule.
    #[arg(long)]
    falsified: bool,
    /// Free values range over 0..=N.
    #[arg(long, default_value_t = 3)]
    max_value: i64,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[command(flatten)]
    source: Source,
    /// Lock mutations applied to the implementation side.
    #[arg(long, value_parser = PossibleValuesParser::new(mutation_names()))]
    mutate: Vec<String>,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Exhausted(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Exhausted(_) => EXIT_EXHAUSTED,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Exhausted(m) => m,
        }
    }
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Failure {
        match e {
            ExploreError::Ceiling(_) => Failure::Exhausted(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<OutlineError> for Failure {
    fn from(e: OutlineError) -> Failure {
        match e {
            OutlineError::Explore(e) => e.into(),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<RuleError> for Failure {
    fn from(e: RuleError) -> Failure {
        match e {
            RuleError::Explore(e) => e.into(),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_file(path: &Path) -> Result<Program, Failure> {
    let src = read(path)?;
    parse_program(&src).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))
}

fn load(builtin_id: Option<&str>, file: Option<&Path>) -> Result<Option<Program>, Failure> {
    match (builtin_id, file) {
        (Some(id), _) => Ok(Some(builtin(id).expect("ids are validated by the parser"))),
        (None, Some(path)) => parse_file(path).map(Some),
        (None, None) => Ok(None),
    }
}

fn mutations(names: &[String]) -> BTreeSet<Mutation> {
    names.iter().map(|n| Mutation::from_name(n).expect("names are validated by the parser")).collect()
}

struct Outcome {
    verdict: Verdict,
    text: String,
    json: String,
}

impl Outcome {
    fn new<R: Serialize>(verdict: Verdict, report: &R, text: String) -> Outcome {
        Outcome { verdict, text, json: serde_json::to_string_pretty(report).expect("reports serialise") }
    }
}

fn litmus(args: &LitmusArgs) -> Result<Outcome, Failure> {
    let src = &args.source;
    let mut prog = load(src.builtin.as_deref(), src.file.as_deref())?.expect("source group is required");
    if let Some(expect) = &args.expect {
        prog.postcondition =
            parse_postcondition(expect, &prog).map_err(|e| Failure::Usage(format!("--expect: {e}")))?;
    }
    let muts = mutations(&args.mutate);
    let backend = match (args.backend, muts.is_empty()) {
        (Some(BackendArg::TmlRa), _) | (None, false) => Backend::TmlRa(muts),
        (Some(other), false) => {
            let name = other.to_possible_value().expect("no skipped variants");
            return Err(Failure::Usage(format!("--mutate needs the tml-ra backend, not {}", name.get_name())));
        }
        (Some(BackendArg::Plain), true) => Backend::Plain,
        (Some(BackendArg::Tms2Ra), true) => Backend::Tms2Ra,
        (None, true) if prog.has_transactions() => Backend::Tms2Ra,
        (None, true) => Backend::Plain,
    };
    let result = explore_parallel(&prog, &backend, &args.limits.explore(), args.workers)?;
    let report = LitmusReport::new(&prog, &result, args.expect.clone());
    Ok(Outcome::new(report.verdict, &report, report.text()))
}

fn outline(args: &OutlineArgs) -> Result<Outcome, Failure> {
    let text = read(&args.outline)?;
    let (prog, annotations) =
        parse_outline(&text).map_err(|e| Failure::Usage(format!("{}:{e}", args.outline.display())))?;
    let src = &args.source;
    if let Some(expected) = load(src.builtin.as_deref(), src.file.as_deref())? {
        if expected != prog {
            return Err(Failure::Usage(format!(
                "{} does not annotate program {}",
                args.outline.display(),
                expected.name
            )));
        }
    }
    let defaults = OutlineOptions::default();
    let opts = OutlineOptions {
        explore: ExploreOptions { check_invariants: false, ..args.limits.explore() },
        eval: EvalOptions {
            flag_reading: match args.flag_reading {
                FlagReadingArg::Releasing => FlagReading::Releasing,
                FlagReadingArg::Ignored => FlagReading::Ignored,
            },
        },
        ..defaults
    };
    let reachable = check_reachable_annotations(&prog, &annotations, &opts)?;
    let og = check_og_validity(&prog, &annotations, &opts)?;
    let report = OutlineReport::new(
        &prog.name,
        vec![OutlineCheck::new("reachable", &prog, &reachable), OutlineCheck::new("owicki-gries", &prog, &og)],
    );
    Ok(Outcome::new(report.verdict, &report, report.text()))
}

fn rules(args: &RulesArgs) -> Result<Outcome, Failure> {
    let mut selected = if args.rule.is_empty() {
        catalogue()
    } else {
        args.rule
            .iter()
            .map(|n| find_rule(n).ok_or_else(|| Failure::Usage(format!("unknown rule {n}"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    if args.falsified {
        selected.push(falsified_rule());
    }
    if args.max_value < 0 {
        return Err(Failure::Usage("--max-value must not be negative".into()));
    }
    let bounds = RuleBounds {
        max_value: args.max_value,
        explore: ExploreOptions { check_invariants: false, ..args.limits.explore() },
        ..RuleBounds::default()
    };
    let reports = check_rules(&selected, &bounds)?;
    let report = RulesReport::new(reports.iter().map(RuleEntry::new).collect());
    Ok(Outcome::new(report.verdict, &report, report.text()))
}

fn simulate(args: &RefineArgs) -> Result<Outcome, Failure> {
    let prog = load(args.source.builtin.as_deref(), args.source.file.as_deref())?.expect("source group is required");
    let core = check_forward_simulation(&prog, &mutations(&args.mutate), &args.limits.explore())?;
    let report = SimulationReport::new(&prog, &core);
    Ok(Outcome::new(report.verdict, &report, report.text()))
}

fn refine(args: &RefineArgs) -> Result<Outcome, Failure> {
    let prog = load(args.source.builtin.as_deref(), args.source.file.as_deref())?.expect("source group is required");
    let core = check_program_refinement(&prog, &mutations(&args.mutate), &args.limits.explore())?;
    let report = RefinementReport::new(&prog, &core);
    Ok(Outcome::new(report.verdict, &report, report.text()))
}

/// Runs the command line `args` (program name first), writing the report
/// to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let (json, outcome) = match &cli.command {
        Command::Litmus(a) => (a.limits.json, litmus(a)),
        Command::Check(Check::Outline(a)) => (a.limits.json, outline(a)),
        Command::Check(Check::Rules(a)) => (a.limits.json, rules(a)),
        Command::Check(Check::Simulate(a)) => (a.limits.json, simulate(a)),
        Command::Check(Check::Refine(a)) => (a.limits.json, refine(a)),
    };
    match outcome {
        Ok(o) => {
            let body = if json { o.json + "\n" } else { o.text };
            let _ = out.write_all(body.as_bytes());
            if o.verdict.passed() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}
