use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vgprice", version, about = "Variance-Gamma option pricing and fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one option and print a JSON record.
    Price(PriceArgs),
    /// Reproduce the European or American reference table as CSV.
    Table(TableArgs),
    /// Centre weights of the lattice and the FD scheme against excess kurtosis.
    #[command(name = "p3-curve")]
    P3Curve(P3Args),
    /// Method-of-moments VG and Normal fits of a return series.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Tree,
    Fd,
    Quad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Eu,
    Am,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    European,
    American,
}

/// Model parameters; defaults are the reference set.
#[derive(Debug, Clone, Copy, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.06, allow_negative_numbers = true)]
    pub rate: f64,
    #[arg(long, default_value_t = -0.1, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub kappa: f64,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, value_enum, default_value = "eu")]
    pub style: Style,
    #[arg(long = "type", value_enum)]
    pub kind: Kind,
    #[arg(long, allow_negative_numbers = true)]
    pub s0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub strike: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub maturity: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Time steps for the lattice and the FD scheme.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// FD spatial step; defaults to twice the lattice spacing.
    #[arg(long)]
    pub fd_h: Option<f64>,
    /// FD grid half-width in standard deviations of the log-return.
    #[arg(long, default_value_t = 10.0)]
    pub fd_width_sd: f64,
    /// Explicit FD grid: lower log-price bound (needs --fd-x-max and --fd-nodes).
    #[arg(long, allow_negative_numbers = true, requires_all = ["fd_x_max", "fd_nodes"])]
    pub fd_x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["fd_x_min", "fd_nodes"])]
    pub fd_x_max: Option<f64>,
    #[arg(long, requires_all = ["fd_x_min", "fd_x_max"])]
    pub fd_nodes: Option<usize>,
    /// Quadrature truncation in standard deviations.
    #[arg(long, default_value_t = 12.0)]
    pub quad_width_sd: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub quad_tol: f64,
    /// Do not split the quadrature at the density's singular point.
    #[arg(long)]
    pub quad_no_split: bool,
    /// Add the wall-clock time to the JSON record.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct P3Args {
    #[arg(long, allow_negative_numbers = true)]
    pub kbar_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub kbar_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0 / 2000.0)]
    pub dt: f64,
    /// Per-unit-time second cumulant; defaults to the reference parameters.
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column name (or zero-based index) holding the series.
    #[arg(long)]
    pub column: String,
    /// The column holds prices; log-returns are taken.
    #[arg(long, conflicts_with = "returns", required_unless_present = "returns")]
    pub prices: bool,
    /// The column holds log-returns.
    #[arg(long)]
    pub returns: bool,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Write the histogram/density overlay CSV here.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
    /// Observation periods per year; adds annualized parameters to the report.
    #[arg(long)]
    pub annualize: Option<f64>,
    #[arg(long, default_value = "period")]
    pub period_label: String,
}
