mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use bfm_core::harness::GenKind;
use bfm_core::mechanisms::{MechanismId, OptMode};

/// Budget-feasible procurement mechanisms: runs, exact expectations, property sweeps.
///
/// Structured results go to stdout (or --out); a short summary goes to stderr.
/// Exit status: 0 ok, 1 verification failure, 2 usage or input error.
#[derive(Parser, Debug)]
#[command(name = "bfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one mechanism on an instance: a single run, its exact expectation, or a Monte Carlo estimate.
    Run(RunArgs),
    /// Sweep truthfulness, budget feasibility, IR and payment identities over a corpus.
    Verify(VerifyArgs),
    /// Per-subset integrality gap v / ṽ of an instance's valuation (CSV by default).
    Gap(GapArgs),
    /// Bayesian mechanism on an instance and a scenario distribution.
    Bayes(BayesArgs),
    /// Generate a random corpus, or the correlated k-family instance and prior.
    Gen(GenArgs),
    /// Approximation ratios of mechanisms over a corpus.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (each verb has its own default).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OptModeArg {
    Exact,
    AlgMax,
}

impl From<OptModeArg> for OptMode {
    fn from(m: OptModeArg) -> Self {
        match m {
            OptModeArg::Exact => OptMode::Exact,
            OptModeArg::AlgMax => OptMode::AlgMax,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
#[group(multiple = false)]
struct EvalArgs {
    /// Exact expectation over every coin outcome (n ≤ 10).
    #[arg(long)]
    exact: bool,
    /// Monte Carlo estimate over this many tapes.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

#[derive(Args, Debug, Clone, Copy)]
struct TuningArgs {
    /// Grid step of the budgeted-maximization subroutine (1 = the 8-approximation grid).
    #[arg(long, default_value_t = 1.0)]
    grid_step: f64,
    /// How the XOS mechanisms compute the optimum on their sample.
    #[arg(long, value_enum, default_value_t = OptModeArg::Exact)]
    opt_mode: OptModeArg,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct CorpusSource {
    /// Corpus file (schema v1).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Generate the corpus: `kind,n,count` with kind in additive, xos, coverage, subadditive-table.
    #[arg(long, value_parser = parse_gen_spec)]
    gen: Option<GenSpec>,
}

#[derive(Debug, Clone, Copy)]
struct GenSpec {
    kind: GenKind,
    n: usize,
    count: usize,
}

fn parse_gen_spec(s: &str) -> Result<GenSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [kind, n, count] = parts.as_slice() else {
        return Err(format!("expected kind,n,count, got `{s}`"));
    };
    Ok(GenSpec {
        kind: kind.parse()?,
        n: n.parse().map_err(|e| format!("bad n `{n}`: {e}"))?,
        count: count
            .parse()
            .map_err(|e| format!("bad count `{count}`: {e}"))?,
    })
}

impl std::fmt::Display for GenSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.kind, self.n, self.count)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    mechanism: MechanismId,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Mechanisms to sweep (comma-separated; default: all truthful ones).
    #[arg(long, value_delimiter = ',')]
    mechanism: Vec<MechanismId>,
    #[command(flatten)]
    source: CorpusSource,
    /// Master seed for generation and tapes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tapes per instance.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// Deviation grid points over [0, B].
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    #[command(flatten)]
    tuning: TuningArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GapArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Experiment {
    /// Compare against the strawman that learns its threshold from an independent prior draw.
    PriorSample,
}

#[derive(Args, Debug)]
struct BayesArgs {
    /// Valuation and budget (the instance's own costs are ignored).
    #[arg(long)]
    instance: PathBuf,
    /// Scenario distribution over cost vectors.
    #[arg(long)]
    dist: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// `kind,n,count` for a random corpus.
    #[arg(long, value_parser = parse_gen_spec, conflicts_with = "k_family", required_unless_present = "k_family")]
    gen: Option<GenSpec>,
    /// Emit the correlated k-family instance instead (distribution goes to --dist-out).
    #[arg(long, requires = "dist_out")]
    k_family: Option<u32>,
    /// Truncate the k-family to this many agents (default 2^k).
    #[arg(long, requires = "k_family")]
    agents: Option<usize>,
    #[arg(long)]
    dist_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Mechanisms to report (comma-separated; default: all).
    #[arg(long, value_delimiter = ',')]
    mechanism: Vec<MechanismId>,
    #[command(flatten)]
    source: CorpusSource,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Outcome of a verb that completed without an input error.
pub enum Status {
    Ok,
    VerificationFailed,
}

/// Parse errors exit 2 and always end with the usage line of the verb involved.
fn parse_args() -> Result<Cli, ExitCode> {
    let err = match Cli::try_parse() {
        Ok(cli) => return Ok(cli),
        Err(e) => e,
    };
    if matches!(
        err.kind(),
        ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
    ) {
        err.exit();
    }
    let rendered = err.render().to_string();
    eprint!("{rendered}");
    if !rendered.contains("Usage:") {
        let mut cmd = Cli::command();
        cmd.build();
        let usage = std::env::args()
            .nth(1)
            .and_then(|verb| cmd.find_subcommand_mut(&verb).map(|sub| sub.render_usage()))
            .unwrap_or_else(|| cmd.render_usage());
        eprintln!("\n{usage}");
    }
    Err(ExitCode::from(2))
}

fn main() -> ExitCode {
    let cli = match parse_args() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Verify(a) => commands::verify(a),
        Command::Gap(a) => commands::gap(a),
        Command::Bayes(a) => commands::bayes(a),
        Command::Gen(a) => commands::gen(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
