use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "obtuse",
    version,
    about = "Stochastic calculus for obtuse random walks on finite path spaces",
    after_help = "Payoff expressions: numbers, + - * /, unary minus, parentheses, max/min/abs,\n\
                  S(i) (terminal price of asset i, i.e. S(i,N)), S(i,n), B(n).\n\
                  Payoff tables: a JSON array of one value per path in lexicographic order.\n\
                  Exit status: 0 success, 1 validation or model failure, 2 usage or input error."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Write the result to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Tolerance for the command's pass/fail checks.
    #[arg(long, global = true, value_parser = positive)]
    pub tol: Option<f64>,
    /// Maximum number of enumerated paths.
    #[arg(long, global = true, env = "OBTUSE_CAP", value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: Option<u64>,
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} is not a positive finite number"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walk specifications.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Chaos expansion in the monomial basis.
    #[command(subcommand)]
    Chaos(ChaosCmd),
    /// Gradient D_k^j F for every step and coordinate.
    Gradient {
        walk: PathBuf,
        #[command(flatten)]
        table: TableArg,
        /// Compute through the chaos expansion instead of finite differences.
        #[arg(long)]
        chaos: bool,
    },
    /// Predictable representation F = E[F] + sum of xi_k Y_k.
    #[command(allow_negative_numbers = true)]
    ClarkOcone {
        walk: PathBuf,
        #[command(flatten)]
        table: TableArg,
        /// Split at time n: F = E[F|F_n] + sum over k > n.
        #[arg(long, value_name = "N")]
        from: Option<isize>,
    },
    /// Divergence of a vector process given as [n][j] tables.
    Divergence {
        walk: PathBuf,
        #[arg(long, value_name = "FILE")]
        process: PathBuf,
    },
    /// Ornstein–Uhlenbeck semigroup P_t F.
    #[command(allow_negative_numbers = true)]
    Ou {
        walk: PathBuf,
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = OuForm::Chaos)]
        form: OuForm,
        /// Emit the kernel matrix instead of P_t F.
        #[arg(long)]
        matrix: bool,
    },
    /// Deviation bound for P(F - E[F] >= x).
    #[command(allow_negative_numbers = true)]
    Deviation {
        walk: PathBuf,
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        x: f64,
        /// Fiber range K (must not be below the computed one).
        #[arg(long)]
        k: Option<f64>,
        /// Bound C on |c| (must not be below the computed one).
        #[arg(long)]
        c: Option<f64>,
    },
    /// Market models.
    #[command(subcommand)]
    Market(MarketCmd),
}

#[derive(Debug, Subcommand)]
pub enum WalkCmd {
    /// Check a walk spec against the normality identities.
    Validate { spec: PathBuf },
    /// Complete a walk from probabilities.
    Construct {
        /// Walk spec whose steps may give only "p".
        #[arg(required_unless_present = "p", conflicts_with = "p")]
        spec: Option<PathBuf>,
        /// Comma-separated step law used at every step.
        #[arg(long, value_delimiter = ',', requires = "horizon")]
        p: Option<Vec<f64>>,
        /// Last time N when using --p.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChaosCmd {
    Decompose {
        walk: PathBuf,
        #[command(flatten)]
        table: TableArg,
    },
    Reconstruct {
        walk: PathBuf,
        /// Coefficients in the chaos JSON format.
        #[arg(long, value_name = "FILE")]
        coeffs: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum MarketCmd {
    /// Equivalent martingale measure and its walk.
    Emm { market: PathBuf },
    Price {
        market: PathBuf,
        #[command(flatten)]
        payoff: PayoffArg,
    },
    /// Hedging strategy, one row per time and atom.
    Hedge {
        market: PathBuf,
        #[command(flatten)]
        payoff: PayoffArg,
        #[arg(long, value_enum, default_value_t = Method::Replicate)]
        method: Method,
    },
    /// Check predictability, self-financing and replication of a strategy.
    Verify {
        market: PathBuf,
        #[command(flatten)]
        payoff: PayoffArg,
        /// Strategy as written by `market hedge` (JSON or CSV); computed if absent.
        #[arg(long, value_name = "FILE")]
        strategy: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Replicate)]
        method: Method,
    },
}

#[derive(Debug, Args)]
pub struct TableArg {
    /// Random variable as a JSON array over paths.
    #[arg(long = "payoff-table", value_name = "FILE")]
    pub table: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct PayoffArg {
    #[arg(long, value_name = "EXPR")]
    pub payoff: Option<String>,
    #[arg(long = "payoff-table", value_name = "FILE")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OuForm {
    Chaos,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Replicate,
    ClarkOcone,
}
