//! `kentropy`: similarity-sensitive entropy from the command line.
//!
//! Inputs are JSON documents; results go to stdout as JSON (TSV for
//! `approx`) and diagnostics go to stderr. The exit code classifies failures.

mod commands;
mod error;
mod schema;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{DesignArgs, EnvelopeSource};
use error::{CliError, ExitCode};

#[derive(Parser)]
#[command(name = "kentropy", version, about = "Similarity-sensitive entropy toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy and typicality of a law under a kernel.
    Entropy { kernel: PathBuf, pmf: PathBuf },
    /// Induced kernel on the image of a map, with the coarse-graining check.
    Coarse {
        kernel: PathBuf,
        pmf: PathBuf,
        map: PathBuf,
        /// Take fiber maxima over the support of the law only.
        #[arg(long)]
        supported: bool,
    },
    /// Conditional entropy and kernel mutual information of a joint law.
    Conditional { kernel: PathBuf, joint: PathBuf },
    /// Output kernel of a Markov channel, optionally realized as a lifted map.
    Markov {
        kernel: PathBuf,
        pmf: PathBuf,
        channel: PathBuf,
        /// Resolution of the deterministic realization to check.
        #[arg(long, value_name = "R")]
        realize: Option<usize>,
    },
    /// Step-kernel approximation table for a kernel on [0, 1].
    Approx {
        /// `gauss:<ell>`, `exp:<delta>,<alpha>`, `partition:<b1>,...` or `ones`.
        #[arg(long)]
        kernel_spec: String,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        /// Gauss-Legendre points per block and axis.
        #[arg(long)]
        q: Option<usize>,
    },
    /// Rank experimental designs by estimated task-relative information gain.
    Design {
        /// `gauss-location[:mu0,sigma0,ell[,n_obs]]` or `finite-reveal[:k]`.
        #[arg(long)]
        model: String,
        /// Comma-separated design values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        designs: Vec<f64>,
        /// Simulated datasets per design.
        #[arg(long, default_value_t = 64)]
        outer: usize,
        /// Samples per prior or posterior estimate.
        #[arg(long, default_value_t = 512)]
        inner: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ridge added to every typicality before the logarithm.
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        /// Include the posterior entropy of every simulated dataset.
        #[arg(long)]
        per_dataset: bool,
    },
    /// Typicality atoms and the partition-kernel necessary condition.
    Invariants {
        kernel: PathBuf,
        pmf: PathBuf,
        /// Merge tolerance for typicality values.
        #[arg(long, default_value_t = kentropy::discrete::DEFAULT_MERGE_TOL)]
        tol: f64,
    },
    /// Envelope kernels and coarse-law bounds on the entropy gap.
    Envelopes(EnvelopeArgs),
}

#[derive(Args)]
struct EnvelopeArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Rate of the metric kernel `exp(-delta * d^alpha)`.
    #[arg(long, requires = "dist")]
    delta: Option<f64>,
    /// Exponent of the metric kernel.
    #[arg(long, requires = "dist")]
    alpha: Option<f64>,
    map: PathBuf,
    coarse_pmf: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Fine kernel document.
    #[arg(long)]
    kernel: Option<PathBuf>,
    /// Distance matrix document.
    #[arg(long)]
    dist: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Entropy { kernel, pmf } => commands::entropy_cmd(&kernel, &pmf),
        Command::Coarse {
            kernel,
            pmf,
            map,
            supported,
        } => commands::coarse_cmd(&kernel, &pmf, &map, supported),
        Command::Conditional { kernel, joint } => commands::conditional_cmd(&kernel, &joint),
        Command::Markov {
            kernel,
            pmf,
            channel,
            realize,
        } => commands::markov_cmd(&kernel, &pmf, &channel, realize),
        Command::Approx { kernel_spec, ns, q } => commands::approx_cmd(&kernel_spec, &ns, q),
        Command::Design {
            model,
            designs,
            outer,
            inner,
            seed,
            ridge,
            per_dataset,
        } => commands::design_cmd(&DesignArgs {
            model: &model,
            designs: &designs,
            outer,
            inner,
            seed,
            ridge,
            per_dataset,
        }),
        Command::Invariants { kernel, pmf, tol } => commands::invariants_cmd(&kernel, &pmf, tol),
        Command::Envelopes(args) => {
            let source = match (&args.source.kernel, &args.source.dist) {
                (Some(k), None) => EnvelopeSource::Kernel(k),
                (None, Some(d)) => EnvelopeSource::Metric {
                    dist: d,
                    delta: args.delta.ok_or_else(|| CliError::schema("--dist needs --delta"))?,
                    alpha: args.alpha.ok_or_else(|| CliError::schema("--dist needs --alpha"))?,
                },
                _ => return Err(CliError::schema("give exactly one of --kernel or --dist")),
            };
            commands::envelopes_cmd(source, &args.map, &args.coarse_pmf)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()) {
                Ok(()) => ExitCode::Ok,
                Err(e) => {
                    eprintln!("kentropy: cannot write output: {e}");
                    ExitCode::Invariant
                }
            }
        }
        Err(e) => {
            eprintln!("kentropy: {e}");
            e.code
        }
    };
    std::process::exit(code as i32);
}
