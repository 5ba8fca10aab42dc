//! `nbibd` command line: generate, extend, validate, score, simulate, report.
//!
//! Exit status: 0 on success, 1 when a design fails validation or NB1
//! generation runs out of restarts, 2 on malformed flags or input files.
//! Each command prints one `key=value` summary line on stdout; diagnostics go
//! to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::design::{validate, Design, DesignConfig, ValidationReport, DEFAULT_MAX_ATTEMPTS, DEFAULT_RESTART_BUDGET};
use crate::generator::{extend, generate, GeneratorKind};
use crate::io::{self, IoError};
use crate::mixedmodel::{fit_fixed, fit_random};
use crate::simulation::{run_study, SimParams, SimStudyReport};
use crate::{FitError, GenerateError};

pub const THREADS_ENV: &str = "NBIBD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nbibd", version, about = "Near-balanced judge assignments and poster scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Nb1,
    Nb2,
    Random,
}

impl From<KindArg> for GeneratorKind {
    fn from(kind: KindArg) -> Self {
        match kind {
            KindArg::Nb1 => GeneratorKind::Nb1,
            KindArg::Nb2 => GeneratorKind::Nb2,
            KindArg::Random => GeneratorKind::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Fixed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "paper")]
    Standard,
    Appendix555,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a judge assignment design
    Generate(GenerateArgs),
    /// Append judges to an existing design
    Extend(ExtendArgs),
    /// Check replication, concurrence and connectivity of a design
    Validate(ValidateArgs),
    /// Estimate poster marginal means from judge scores
    Score(ScoreArgs),
    /// Run the Monte Carlo design comparison
    Simulate(SimulateArgs),
    /// Summarise a metrics file from `simulate`
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub posters: usize,
    #[arg(long)]
    pub block_size: usize,
    #[arg(long)]
    pub judges: usize,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
    #[arg(long, default_value_t = DEFAULT_RESTART_BUDGET)]
    pub restart_budget: usize,
    /// Leading judges flagged as faculty (default: b_min)
    #[arg(long)]
    pub faculty_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    #[arg(long)]
    pub design: PathBuf,
    /// Number of judges to append
    #[arg(long)]
    pub judges: usize,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Poster count (default: one past the largest id in the design)
    #[arg(long)]
    pub posters: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub design: PathBuf,
    #[arg(long)]
    pub posters: Option<usize>,
    /// Also require the guarantees of this design kind
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    pub model: ModelArg,
    #[arg(long)]
    pub posters: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary sidecar (default: `<out stem>.summary.csv`)
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "paper")]
    pub preset: Preset,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub posters: Option<usize>,
    #[arg(long)]
    pub judges: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub awards: Option<usize>,
    #[arg(long)]
    pub sd_poster: Option<f64>,
    #[arg(long)]
    pub sd_judge: Option<f64>,
    #[arg(long)]
    pub sd_error: Option<f64>,
    /// Comma-separated subset of nb1,nb2,random
    #[arg(long, value_enum, value_delimiter = ',')]
    pub designs: Option<Vec<KindArg>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub metrics: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub hist_bins: usize,
    #[arg(long)]
    pub hist_out: Option<PathBuf>,
}

/// A command failure and its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1: the inputs were fine but the result is not acceptable.
    Rejected(String),
    /// Exit 2: malformed flags or input files.
    Malformed(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Rejected(_) => 1,
            Failure::Malformed(_) => 2,
        }
    }
}

impl From<IoError> for Failure {
    fn from(err: IoError) -> Self {
        Failure::Malformed(err.to_string())
    }
}

impl From<GenerateError> for Failure {
    fn from(err: GenerateError) -> Self {
        match err {
            GenerateError::Design(e) => Failure::Malformed(e.to_string()),
            e @ GenerateError::Nb1InfeasibleBudget { .. } => Failure::Rejected(e.to_string()),
        }
    }
}

impl From<FitError> for Failure {
    fn from(err: FitError) -> Self {
        match err {
            FitError::InconsistentScores(_) => Failure::Malformed(err.to_string()),
            _ => Failure::Rejected(err.to_string()),
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(failure) => {
            let (Failure::Rejected(msg) | Failure::Malformed(msg)) = &failure;
            eprintln!("nbibd: {msg}");
            failure.code()
        }
    }
}

pub fn execute(command: Command) -> Result<String, Failure> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Extend(args) => cmd_extend(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Score(args) => cmd_score(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<String, Failure> {
    let mut config = DesignConfig::new(args.posters, args.block_size, args.judges, args.seed)
        .map_err(|e| Failure::Malformed(e.to_string()))?
        .with_max_attempts(args.max_attempts)
        .with_restart_budget(args.restart_budget);
    if let Some(count) = args.faculty_count {
        config = config.with_faculty_count(count);
    }
    config.check().map_err(|e| Failure::Malformed(e.to_string()))?;
    let kind = GeneratorKind::from(args.kind);
    let (design, trace) = generate(&config, kind)?;
    io::write_design(&args.out, &design)?;
    Ok(format!(
        "command=generate kind={kind} posters={} block_size={} judges={} seed={} restarts={} rejected_blocks={} b_min={} r_f={} out={}",
        config.t,
        config.k,
        design.num_blocks(),
        trace.seed_used,
        trace.restarts,
        trace.rejected_blocks,
        config.b_min(),
        config.r_f(),
        args.out.display()
    ))
}

fn cmd_extend(args: ExtendArgs) -> Result<String, Failure> {
    let loaded = io::read_design(&args.design, args.posters)?;
    let mut config = loaded.config().clone();
    config.seed = args.seed;
    config.max_attempts = args.max_attempts;
    let design = Design::from_blocks(config, loaded.blocks().to_vec()).map_err(|e| Failure::Malformed(e.to_string()))?;
    let kind = GeneratorKind::from(args.kind);
    let extended = extend(&design, args.judges, kind)?;
    io::write_design(&args.out, &extended)?;
    Ok(format!(
        "command=extend kind={kind} judges_before={} judges_after={} out={}",
        design.num_blocks(),
        extended.num_blocks(),
        args.out.display()
    ))
}

fn report_line(report: &ValidationReport) -> String {
    format!(
        "replication_spread={} max_concurrence={} connected={} all_prefixes_connected={} covered={} faculty_coverage_ok={}",
        report.replication_spread,
        report.max_concurrence,
        report.connected,
        report.all_prefixes_connected,
        report.covered,
        report.faculty_coverage_ok
    )
}

/// Problems with a design relative to the guarantees expected of `kind`
/// (coverage and connectivity when no kind is given).
pub fn guarantee_violations(report: &ValidationReport, kind: Option<GeneratorKind>) -> Vec<&'static str> {
    let mut problems = Vec::new();
    if !report.covered {
        problems.push("some posters are never reviewed");
    }
    if !report.connected {
        problems.push("design is not connected");
    }
    match kind {
        Some(GeneratorKind::Nb1) | Some(GeneratorKind::Nb2) => {
            if !report.all_prefixes_connected {
                problems.push("some prefix of the design is disconnected");
            }
            if report.replication_spread > 1 {
                problems.push("replication spread exceeds 1");
            }
            if kind == Some(GeneratorKind::Nb1) && report.max_concurrence > 1 {
                problems.push("some pair of posters shares more than one judge");
            }
        }
        Some(GeneratorKind::Random) => problems.retain(|p| *p == "some posters are never reviewed"),
        None => {}
    }
    problems
}

fn cmd_validate(args: ValidateArgs) -> Result<String, Failure> {
    let design = io::read_design(&args.design, args.posters)?;
    let report = validate(&design);
    let line = format!("command=validate judges={} {}", design.num_blocks(), report_line(&report));
    let problems = guarantee_violations(&report, args.kind.map(GeneratorKind::from));
    if problems.is_empty() {
        Ok(line)
    } else {
        println!("{line}");
        Err(Failure::Rejected(problems.join("; ")))
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "fit".into());
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn cmd_score(args: ScoreArgs) -> Result<String, Failure> {
    let design = io::read_design(&args.design, args.posters)?;
    let scores = io::read_scores(&args.scores, design.config().t, design.num_blocks())?;
    let fit = match args.model {
        ModelArg::Fixed => fit_fixed(&design, &scores)?,
        ModelArg::Random => fit_random(&design, &scores)?,
    };
    let summary_out = args.summary_out.unwrap_or_else(|| sidecar_path(&args.out));
    io::write_atomic(&args.out, &io::fit_to_csv(&fit))?;
    io::write_atomic(&summary_out, &io::fit_summary_to_csv(&fit))?;
    Ok(format!(
        "command=score model={} posters={} observations={} grand_mean={} var_judge={} var_error={} converged={} out={} summary={}",
        fit.model_kind.label(),
        design.config().t,
        scores.observations().len(),
        fit.grand_mean,
        fit.var_judge.map_or("NA".into(), |v| v.to_string()),
        fit.var_error,
        fit.converged,
        args.out.display(),
        summary_out.display()
    ))
}

/// Worker count from `NBIBD_THREADS`; 0 or unset lets rayon decide.
fn thread_count() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Malformed(format!("{THREADS_ENV}=`{v}` is not a non-negative integer"))),
        Err(_) => Ok(0),
    }
}

pub fn sim_params(args: &SimulateArgs) -> SimParams {
    let mut params = match args.preset {
        Preset::Standard => SimParams::standard(),
        Preset::Appendix555 => SimParams::appendix555(),
    };
    macro_rules! apply {
        ($($field:ident <- $arg:ident),*) => {
            $(if let Some(v) = args.$arg { params.$field = v; })*
        };
    }
    apply!(iterations <- iterations, seed <- seed, t <- posters, b <- judges, k <- block_size,
        awards <- awards, sd_poster <- sd_poster, sd_judge <- sd_judge, sd_error <- sd_error);
    if let Some(kinds) = &args.designs {
        params.designs = Vec::new();
        for &kind in kinds {
            let kind = GeneratorKind::from(kind);
            if !params.designs.contains(&kind) {
                params.designs.push(kind);
            }
        }
    }
    params
}

fn cmd_simulate(args: SimulateArgs) -> Result<String, Failure> {
    let params = sim_params(&args);
    params.check().map_err(|e| Failure::Malformed(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Failure::Rejected(format!("cannot start worker pool: {e}")))?;
    let report = pool
        .install(|| run_study(&params))
        .map_err(|e| Failure::Rejected(e.to_string()))?;
    for (iteration, message) in &report.failures {
        eprintln!("nbibd: iteration {iteration} dropped: {message}");
    }
    io::write_atomic(&args.out, &io::metrics_to_csv(&report.iterations))?;
    Ok(format!(
        "command=simulate iterations={} failed={} designs={} disconnected_random={} out={}",
        report.iterations.len(),
        report.failures.len(),
        params.designs.iter().map(|k| k.label()).collect::<Vec<_>>().join(","),
        report.disconnected_random,
        args.out.display()
    ))
}

fn cmd_report(args: ReportArgs) -> Result<String, Failure> {
    let (kinds, iterations) = io::metrics_from_csv(io::open(&args.metrics)?)?;
    let report = SimStudyReport::from_iterations(kinds, iterations, Vec::new()).map_err(|e| Failure::Malformed(e.to_string()))?;
    io::write_atomic(&args.out, &io::report_to_csv(&report))?;
    if let Some(path) = &args.hist_out {
        io::write_atomic(path, &io::histograms_to_csv(&report, args.hist_bins))?;
    }
    Ok(format!(
        "command=report iterations={} designs={} summary_rows={} difference_rows={} out={}",
        report.iterations.len(),
        report.designs.len(),
        report.summaries.len(),
        report.differences.len(),
        args.out.display()
    ))
}
