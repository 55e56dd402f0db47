//! `premsel`: ingest corpora, rank premises, and run the evaluation harness.
//!
//! Exit codes: 0 success, 1 user or configuration error, 2 internal error.

mod commands;
mod config;

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "premsel", version, about = "Premise selection for large-theory reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Inputs shared by the commands that work on a corpus.
#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// TPTP corpus in chronological order; overrides `corpus`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Training dependencies (`theorem:premise ...`); overrides `dependencies`.
    #[arg(long)]
    pub dependencies: Option<PathBuf>,
}

/// Overrides of the evaluation keys of the config.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Comma-separated method names (after slice expansion); all by default.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a corpus and its dependencies and report their sizes.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Write one `name TAB feature:count,...` line per formula.
        #[arg(long)]
        dump_features: Option<PathBuf>,
    },
    /// Rank the premises available to a conjecture.
    Advise {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// File holding the conjecture as a single `fof` statement.
        #[arg(long)]
        conjecture: PathBuf,
        /// Only formulas before this one (a name or a 0-based position) are
        /// candidates; the whole corpus by default.
        #[arg(long)]
        cutoff: Option<String>,
        #[arg(long)]
        method: String,
        /// Constants local to the conjecture, generalized to variables.
        #[arg(long, value_delimiter = ',')]
        locals: Vec<String>,
    },
    /// Attempt every sampled theorem with every method.
    Eval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Attempt every N-th provable theorem.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Alternate learning and proving for several passes.
    Loop {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        passes: Option<usize>,
    },
    /// Greedy sequence of methods covering the most solved theorems.
    Cover {
        /// Results file written by `eval`.
        #[arg(long)]
        results: PathBuf,
        /// Also write the sequence here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the TPTP problem a method builds for a theorem.
    Export {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        theorem: String,
        #[arg(long)]
        method: String,
        /// Destination file; standard output by default.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a random corpus with ground-truth and training dependencies.
    GenSynthetic {
        /// Directory receiving corpus.p, truth.deps, training.deps and premsel.toml.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 2000)]
        formulas: usize,
        #[arg(long, default_value_t = 12.0)]
        mean_proof: f64,
        /// Function and predicate symbols; scales with the formula count by default.
        #[arg(long)]
        symbols: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { corpus, dump_features } => commands::ingest(&corpus, dump_features.as_deref()),
        Command::Advise { corpus, conjecture, cutoff, method, locals } => {
            commands::advise(&corpus, &conjecture, cutoff.as_deref(), &method, &locals)
        }
        Command::Eval { corpus, run, stride } => commands::eval(&corpus, &run, stride),
        Command::Loop { corpus, run, passes } => commands::run_loop(&corpus, &run, passes),
        Command::Cover { results, output } => commands::cover(&results, output.as_deref()),
        Command::Export { corpus, theorem, method, output } => {
            commands::export(&corpus, &theorem, &method, output.as_deref())
        }
        Command::GenSynthetic { output, formulas, mean_proof, symbols, seed } => {
            commands::gen_synthetic(&output, formulas, mean_proof, symbols, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error: the command panicked");
            ExitCode::from(2)
        }
    }
}
