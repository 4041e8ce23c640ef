//! `qcr`: construct, verify and transform resource-state files.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success, verification passed, or every cut PPT |
//! | 1    | verification failed (including an input rejected by a protocol) |
//! | 2    | informational: some cut is not PPT |
//! | 64   | usage error (bad flags, bad player set, dimension cap exceeded) |
//! | 65   | malformed state file or inconsistent data (e.g. mismatched `d`) |
//! | 74   | I/O error |

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcr_core::QcrError;
use serde::Deserialize;

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_NOT_PPT: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_IO: u8 = 74;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io(String),
    Rejected(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
            CliError::Rejected(_) => EXIT_FAIL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) | CliError::Rejected(m) => m,
        }
    }
}

impl From<QcrError> for CliError {
    fn from(e: QcrError) -> Self {
        let msg = e.to_string();
        match e {
            QcrError::Io(_) => CliError::Io(msg),
            QcrError::NotCertified(_) => CliError::Rejected(msg),
            QcrError::DimensionCap { .. }
            | QcrError::InvalidPlayerSubset(_)
            | QcrError::InvalidArgument(_)
            | QcrError::UnknownLabel(_)
            | QcrError::InvalidCut(_) => CliError::Usage(msg),
            _ => CliError::Data(msg),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Verification or PPT tolerance (each command has its own default).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest Hilbert-space dimension a command may build.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Seed for randomized constructions.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output state file (for `reduce`, the path stem of the branch files).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum)]
    pub report: Option<ReportFormat>,
}

#[derive(Parser, Debug)]
#[command(
    name = "qcr",
    version,
    about = "Multipartite resource states for key distribution and secret sharing"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Two-party private state; nontrivial shields get a random seed state and twist.
    Private,
    /// The three-party qubit example state.
    Example,
    /// Untwisted GHZ-type state; nontrivial shields get a random seed state.
    Ghz,
    /// GHZ-type state with a random information-controlled twist.
    Twisted,
    /// |0⟩|0⟩ on a dealer and one player.
    Product,
    /// Classically correlated mixture of |i, −i⟩.
    Classical,
    /// Correlated qubits with outcome probabilities 1/3 and 2/3.
    Biased,
    /// Product of random separable dealer/player pairs.
    Separable,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Modulus (dimension of each information register).
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Number of players.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Shield dimensions, dealer first, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub shields: Option<Vec<usize>>,
    /// Rank of the random shield seed state (default full rank).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Product terms per separable pair.
    #[arg(long, default_value_t = 3)]
    pub terms: usize,
    /// Free-text note stored in the file.
    #[arg(long)]
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CutMode {
    /// Every bipartition of the parties.
    All,
    /// Dealer with a player subset against the remaining players.
    Dealer,
    /// Cuts given with --side-two.
    Explicit,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a state family and write it to --out.
    Construct(ConstructArgs),
    /// Check the resource-state conditions.
    Verify {
        file: PathBuf,
        /// Check every coalition size, not just the largest.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Measure the players outside --keep, correct the dealer, and write one file per branch.
    Reduce {
        file: PathBuf,
        /// Players that remain, comma separated (1-based).
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<usize>,
        /// Only this outcome of the measured players, comma separated.
        #[arg(long, value_delimiter = ',')]
        branch: Option<Vec<usize>>,
    },
    /// Merge two states through the dealer's controlled addition.
    Compose {
        first: PathBuf,
        second: PathBuf,
        /// Skip verification of the inputs.
        #[arg(long)]
        force: bool,
    },
    /// Partial-transpose test across cuts.
    Ppt {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = CutMode::Dealer)]
        cuts: CutMode,
        /// Registers on the transposed side of one cut, comma separated; repeat for more cuts.
        #[arg(long = "side-two")]
        side_two: Vec<String>,
    },
    /// Trace norm of the difference of two states.
    Distance { first: PathBuf, second: PathBuf },
    /// Computational-basis outcome distribution of some registers.
    Measure {
        file: PathBuf,
        /// Registers to measure, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        on: Vec<String>,
    },
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let cfg = config::RunConfig::merge(config::FileConfig::from_env()?, &cli.global)?;
    match cli.command {
        Command::Construct(args) => commands::construct(&cfg, &args),
        Command::Verify { file, exhaustive } => commands::verify(&cfg, &file, exhaustive),
        Command::Reduce { file, keep, branch } => commands::reduce(&cfg, &file, &keep, branch),
        Command::Compose {
            first,
            second,
            force,
        } => commands::compose(&cfg, &first, &second, force),
        Command::Ppt {
            file,
            cuts,
            side_two,
        } => commands::ppt(&cfg, &file, cuts, &side_two),
        Command::Distance { first, second } => commands::distance(&cfg, &first, &second),
        Command::Measure { file, on } => commands::measure(&cfg, &file, &on),
    }
    .map(|o| o.with_format(cfg.report))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            let _ = writeln!(std::io::stdout(), "{}", outcome.render());
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("qcr: error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
