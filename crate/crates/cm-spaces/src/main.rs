use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cm_spaces::{commands, parallel, CliError, Outcome};
use cm_spaces_core::invariants::DEFAULT_WORD_LEN;
use cm_spaces_core::Tolerances;

/// Batch verification tools for Calogero–Moser spaces.
///
/// Exit status: 0 when every asserted check passes, 1 when a check fails,
/// 2 on usage or IO errors. CM_SPACES_THREADS bounds parallelism.
#[derive(Parser)]
#[command(name = "cm-spaces", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Relative rank tolerance σ₂/σ₁ of the membership test.
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Relative eigenvalue separation required by the Wilson chart.
    #[arg(long = "sep-tol", global = true, value_name = "FLOAT")]
    sep_tol: Option<f64>,
    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Sampling {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Emit seeded member pairs.
    Sample {
        #[command(flatten)]
        s: Sampling,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Membership report for a pair file.
    Verify {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// Run an automorphism program over a pair file.
    Flow {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        program: PathBuf,
        /// Run the inverse program instead.
        #[arg(long)]
        inverse: bool,
    },
    /// Compare two pair files entry by entry.
    Equiv {
        /// Given twice: the two pair files.
        #[arg(long = "in", value_name = "PATH", num_args = 1, required = true)]
        input: Vec<PathBuf>,
        #[arg(long = "word-len", default_value_t = DEFAULT_WORD_LEN)]
        word_len: usize,
    },
    /// Conjugation-invariant fingerprints of a pair file.
    Fingerprint {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long = "word-len", default_value_t = DEFAULT_WORD_LEN)]
        word_len: usize,
    },
    /// Tangent-span certificate at sampled points.
    FlexCheck {
        #[command(flatten)]
        s: Sampling,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Generating-vector certificate at sampled Wilson base points.
    SemihomCheck {
        #[command(flatten)]
        s: Sampling,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Tools for the explicit model of the n = 2 space.
    Cm2 {
        #[command(subcommand)]
        command: Cm2Command,
    },
    /// Aggregate earlier outputs into one summary.
    Report {
        #[arg(long = "in", value_name = "PATH", num_args = 1, required = true)]
        input: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Cm2Command {
    /// Canonical coordinates and orbit of each pair in a file.
    Canonical {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// Certificate for the compatible pair of vector fields.
    CompatCheck {
        /// Use the Gaussian-rational grid.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn tolerances(cli: &Cli) -> Tolerances {
    let mut tol = Tolerances::default();
    if let Some(v) = cli.tol {
        tol.rank_tol = v;
    }
    if let Some(v) = cli.sep_tol {
        tol.sep_tol = v;
    }
    tol
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    parallel::init_global_pool()?;
    let tol = tolerances(cli);
    match &cli.command {
        Command::Sample { s, count } => commands::sample(s.n, *count, s.seed, &tol),
        Command::Verify { input } => commands::verify(input, &tol),
        Command::Flow { input, program, inverse } => commands::flow(input, program, *inverse, &tol),
        Command::Equiv { input, word_len } => match input.as_slice() {
            [a, b] => commands::equiv(a, b, *word_len, &tol),
            _ => Err(CliError::Usage(format!("--in must be given exactly twice, got {}", input.len()))),
        },
        Command::Fingerprint { input, word_len } => commands::fingerprint(input, *word_len, &tol),
        Command::FlexCheck { s, samples } => commands::flex_check(s.n, *samples, s.seed, &tol),
        Command::SemihomCheck { s, samples } => commands::semihom_check(s.n, *samples, s.seed, &tol),
        Command::Cm2 { command } => match command {
            Cm2Command::Canonical { input } => commands::cm2_canonical(input, &tol),
            Cm2Command::CompatCheck { exact, samples, seed } => commands::cm2_compat_check(*exact, *samples, *seed, &tol),
        },
        Command::Report { input } => commands::report(input),
    }
}

fn emit(cli: &Cli, json: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, json).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(json.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|outcome| {
        emit(&cli, &outcome.json)?;
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("cm-spaces: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
