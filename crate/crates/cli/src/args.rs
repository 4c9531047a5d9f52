use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qgrav", version, about = "Metric of quantum states, curvature chain and FRW comparison")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Wave-function file (`param NAME = VALUE` lines and one `psi = EXPR` line)
    #[arg(long, value_name = "FILE")]
    pub psi: Option<PathBuf>,
    /// Builtin wave function (see `qgrav builtins`)
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
    /// unconjugated | conjugated
    #[arg(long, default_value = "unconjugated")]
    pub convention: String,
    /// Parameter override, repeatable
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Coordinate value, repeatable
    #[arg(long = "at", value_name = "COORD=VALUE")]
    pub at: Vec<String>,
    /// Sampling seed (default: QGRAV_SEED, then a fixed value)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; `json`, `csv` or `text` select a format on stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    /// json | csv | text
    #[arg(long)]
    pub format: Option<String>,
    /// `key = value` file with rho, m, hbar, G, c, units
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Christoffel,
    Riemann,
    Ricci,
    Scalar,
    Einstein,
}

impl What {
    pub fn name(self) -> &'static str {
        match self {
            What::Christoffel => "christoffel",
            What::Riemann => "riemann",
            What::Ricci => "ricci",
            What::Scalar => "scalar",
            What::Einstein => "einstein",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FrwTemplate {
    /// Use the FRW metric with this scale factor S(t) instead of the quantum metric
    #[arg(long, value_name = "EXPR")]
    pub frw_scale: Option<String>,
    /// Curvature index for --frw-scale
    #[arg(long, value_name = "EXPR", default_value = "0")]
    pub frw_k: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric components and line element
    Metric {
        #[command(flatten)]
        common: Common,
    },
    /// Curvature chain
    Geometry {
        #[arg(long, value_enum)]
        what: What,
        #[command(flatten)]
        frw: FrwTemplate,
        /// Keep raw forms
        #[arg(long)]
        no_simplify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Robertson-Walker decomposition
    Frw {
        #[command(flatten)]
        common: Common,
    },
    /// Loci where k diverges, classified
    Singularities {
        /// Grid samples per axis for the numeric scan
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Field-equation right-hand side and residual
    Fieldeq {
        /// Time at which the inner products are taken
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// Random residual points when no --at is given
        #[arg(long, default_value_t = 5)]
        points: usize,
        /// Quadrature order
        #[arg(long, default_value_t = 32)]
        order: usize,
        /// Local densities at --at instead of integrals
        #[arg(long)]
        pointwise: bool,
        /// Product of inner products without the square root
        #[arg(long)]
        unrooted: bool,
        #[command(flatten)]
        frw: FrwTemplate,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate an expression (default: psi) at --at
    Eval {
        #[arg(long, value_name = "EXPR")]
        expr: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate an expression on a grid
    Grid {
        #[arg(long, value_name = "EXPR")]
        expr: Option<String>,
        /// k | psi, used without --expr
        #[arg(long, default_value = "k")]
        of: String,
        /// NAME=MIN:MAX:COUNT[:log], repeatable
        #[arg(long = "axis", value_name = "SPEC")]
        axes: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// List builtin wave functions
    Builtins {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Metric { .. } => "metric",
            Command::Geometry { .. } => "geometry",
            Command::Frw { .. } => "frw",
            Command::Singularities { .. } => "singularities",
            Command::Fieldeq { .. } => "fieldeq",
            Command::Eval { .. } => "eval",
            Command::Grid { .. } => "grid",
            Command::Builtins { .. } => "builtins",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Metric { common }
            | Command::Geometry { common, .. }
            | Command::Frw { common }
            | Command::Singularities { common, .. }
            | Command::Fieldeq { common, .. }
            | Command::Eval { common, .. }
            | Command::Grid { common, .. }
            | Command::Builtins { common } => common,
        }
    }
}
