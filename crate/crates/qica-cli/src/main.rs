mod pipelines;
mod output;
mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Benchmark harness for quantum-inspired SVD/CCA: data generation, exact
/// and sketched decompositions, feature expansion, metrics, and timing
/// sweeps. Every command writes a self-contained JSON record; rerunning
/// with the recorded config and seed reproduces all non-timing fields.
#[derive(Parser)]
#[command(name = "qica", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic matrices
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
    /// Exact SVD with the subspace-recovery metric
    Svd(SvdArgs),
    /// Sketch-based SVD with the subspace-recovery metric
    Qisvd(QisvdArgs),
    /// Exact CCA baseline
    Cca(CcaArgs),
    /// Sketch-based CCA
    Qicca(QiccaArgs),
    /// Second-order monomial feature expansion
    Expand(ExpandArgs),
    /// Metrics over saved matrices
    Eval {
        #[command(subcommand)]
        which: EvalCommand,
    },
    /// Timing sweeps over doubling dimensions
    Sweep {
        #[command(subcommand)]
        which: SweepCommand,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Low-rank product of standard-normal factors
    Lowrank {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Matrix destination; .csv selects CSV, anything else binary
        #[arg(long)]
        out: PathBuf,
        /// JSON record destination (default $QICA_OUT_DIR/gen-lowrank.json)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Paired views sharing latent factors: X = Z B1 + 0.5 E1, Y likewise
    Pcca {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d1: usize,
        #[arg(long)]
        d2: usize,
        /// Latent dimension shared by the views
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_x: PathBuf,
        #[arg(long)]
        out_y: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SvdArgs {
    #[arg(long)]
    input: PathBuf,
    /// Components to keep for the recovery metric
    #[arg(long)]
    k: usize,
    /// Center columns first (off by default for SVD runs)
    #[arg(long)]
    centering: bool,
    /// JSON record destination (default $QICA_OUT_DIR/svd-result.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save the top-K right singular vectors as a matrix file
    #[arg(long)]
    save_v: Option<PathBuf>,
}

#[derive(Args)]
struct QisvdArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    /// Sketch size; defaults to ceil(1.5 * K)
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center columns first (off by default for SVD runs)
    #[arg(long)]
    centering: bool,
    /// Skip the orthonormalization step (ablation)
    #[arg(long)]
    no_orthonormalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save the materialized approximate right singular vectors
    #[arg(long)]
    save_v: Option<PathBuf>,
}

#[derive(Args)]
struct CcaArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    k: usize,
    /// Skip column centering (on by default for CCA runs)
    #[arg(long)]
    no_centering: bool,
    /// Held-out view 1 for test metrics (requires --eval-y)
    #[arg(long)]
    eval_x: Option<PathBuf>,
    #[arg(long)]
    eval_y: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QiccaArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    k: usize,
    /// Per-view component count; defaults to ceil(0.5 * max(D1, D2)), or
    /// min(256, that) when --second-order is active
    #[arg(long)]
    l: Option<usize>,
    /// View-specific overrides of --l
    #[arg(long)]
    l1: Option<usize>,
    #[arg(long)]
    l2: Option<usize>,
    /// Sketch size; defaults to ceil(1.5 * L)
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    p1: Option<usize>,
    #[arg(long)]
    p2: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip column centering (on by default for CCA runs)
    #[arg(long)]
    no_centering: bool,
    /// Skip the orthonormalization step inside qiSVD (ablation)
    #[arg(long)]
    no_orthonormalize: bool,
    /// Expand both views with second-order monomials before fitting
    #[arg(long)]
    second_order: bool,
    /// Include squared features in the expansion
    #[arg(long)]
    include_squares: bool,
    /// Expanded-column cap for --second-order
    #[arg(long)]
    cap: Option<usize>,
    /// Save the fitted model (selectors, coefficients, correlations, seed)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Held-out views for test metrics
    #[arg(long)]
    eval_x: Option<PathBuf>,
    #[arg(long)]
    eval_y: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    input: PathBuf,
    /// Expanded matrix destination
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    include_squares: bool,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Fraction of squared mass of X captured by the span of V
    Recovery {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summed Pearson correlations of matched variate columns
    Corr {
        #[arg(long)]
        cx: PathBuf,
        #[arg(long)]
        cy: PathBuf,
        /// Components to sum; defaults to every column
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-component CSV table
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mean retrieval AUC between variate rows
    Auc {
        #[arg(long)]
        cx: PathBuf,
        #[arg(long)]
        cy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Time qiSVD (and optionally exact SVD) over doubling column counts
    Qisvd {
        /// Doubling range, e.g. 32..4096
        #[arg(long)]
        dims: String,
        #[arg(long, default_value_t = 2048)]
        rows: usize,
        /// Latent rank of the generated matrices (clamped to the shape)
        #[arg(long, default_value_t = 100)]
        rank: usize,
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long)]
        p: Option<usize>,
        /// Timing repetitions averaged per dimension
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also time the exact SVD at each dimension
        #[arg(long)]
        with_exact: bool,
        /// CSV destination (default $QICA_OUT_DIR/sweep-qisvd.csv)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Time qiCCA (and optionally exact CCA) over doubling view dimensions
    Qicca {
        #[arg(long)]
        dims: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Latent dimension of the generated pairs (clamped to the shape)
        #[arg(long, default_value_t = 100)]
        latent: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        with_exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen { which } => pipelines::gen(which),
        Command::Svd(args) => pipelines::svd(args),
        Command::Qisvd(args) => pipelines::qisvd(args),
        Command::Cca(args) => pipelines::cca(args),
        Command::Qicca(args) => pipelines::qicca(args),
        Command::Expand(args) => pipelines::expand(args),
        Command::Eval { which } => pipelines::eval(which),
        Command::Sweep { which } => sweep::run(which),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
