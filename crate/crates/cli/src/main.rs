//! `mfdim`: generate measures, estimate dimension functions and spectra,
//! project, and run the projection-law suites.

mod commands;
mod grid;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mfdim", version, about = "Multifractal dimensions of measures and their projections")]
pub struct Cli {
    /// Seed of every random draw.
    #[arg(long, global = true, env = "MFDIM_SEED")]
    pub seed: Option<u64>,
    /// Generator stream; runs with different streams draw independently.
    #[arg(long, global = true, default_value_t = 0)]
    pub streams: u64,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress to standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the depth-d approximation of an IFS measure as CSV.
    Gen(GenArgs),
    /// Estimate dimension functions of a measure over a q-grid.
    Estimate(EstimateArgs),
    /// Project a measure onto a subspace.
    Project(ProjectArgs),
    /// Print s-energies of a measure.
    Energy(EnergyArgs),
    /// Legendre or coarse multifractal spectrum.
    Spectrum(SpectrumArgs),
    /// Run a check suite.
    Check(CheckArgs),
    /// Render a CSV written by another subcommand as SVG.
    Plot(PlotArgs),
}

/// Where a measure comes from: a CSV file or a catalog entry.
#[derive(Debug, Clone, Args, Serialize)]
pub struct MeasureArgs {
    /// Measure CSV (x1,...,xn,weight).
    #[arg(long, conflicts_with = "catalog")]
    #[serde(skip)]
    pub measure: Option<PathBuf>,
    /// Built-in measure: binomial, cantor, uniform_interval, uniform_square,
    /// product_binomial, segment_r3.
    #[arg(long)]
    pub catalog: Option<String>,
    /// Depth of the catalog measure (default: the catalog's).
    #[arg(long, requires = "catalog")]
    pub depth: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// IFS JSON: {"dim", "maps": [{"linear", "translation"}], "probabilities"}.
    #[arg(long, conflicts_with = "catalog", required_unless_present = "catalog")]
    #[serde(skip)]
    pub ifs: Option<PathBuf>,
    /// Built-in IFS instead of a file.
    #[arg(long)]
    pub catalog: Option<String>,
    /// Word depth.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Cap on the number of words expanded exactly.
    #[arg(long, default_value_t = mfdim::measure::DEFAULT_ATOM_BUDGET)]
    pub atom_budget: usize,
    /// Past the budget, sample this many random words instead of failing.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// Greedy packing moments (τ).
    Box,
    /// Integral moments for q > 1, packing otherwise.
    Integral,
    /// Kernel-convolution moments (needs --s, q > 1).
    Conv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyArg {
    BoxLower,
    BoxUpper,
    ConvLower,
    ConvUpper,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    /// q-grid: start:step:end (inclusive), a comma list, or one value.
    #[arg(long, allow_hyphen_values = true)]
    pub q: String,
    /// Radii: default | ladder:BASE:FROM:TO[:STEPS][:abs] | radii:R1,R2,... | JSON.
    /// Catalog measures default to their recommended ladder.
    #[arg(long)]
    pub scales: Option<String>,
    #[arg(long, value_enum, default_value = "box")]
    pub method: EstimateMethod,
    /// Kernel exponent of conv moments and proxies (default: the dimension).
    #[arg(long)]
    pub s: Option<f64>,
    /// Report dyadic cover proxies of this kind instead of plain estimates.
    #[arg(long, value_enum)]
    pub proxy: Option<ProxyArg>,
    /// Deepest dyadic partition of the cover proxies.
    #[arg(long, default_value_t = 2)]
    pub max_depth: u32,
    /// Relative tolerance of the accelerated potential (exact if absent).
    #[arg(long)]
    pub conv_tolerance: Option<f64>,
    /// Ball masses summed atom by atom in index order.
    #[arg(long)]
    pub exact_masses: bool,
    /// Also write the moment series (q,r,value).
    #[arg(long)]
    #[serde(skip)]
    pub series_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    /// Subspace JSON: {"n", "m", "basis"} with orthonormal rows.
    #[arg(long, conflicts_with = "random_subspace", required_unless_present = "random_subspace")]
    #[serde(skip)]
    pub subspace: Option<PathBuf>,
    /// Draw a Haar-random subspace of this dimension (uses --seed).
    #[arg(long)]
    pub random_subspace: Option<usize>,
    /// Write the subspace used as JSON.
    #[arg(long)]
    #[serde(skip)]
    pub subspace_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub source: MeasureArgs,
    /// Exponents: a grid as for --q.
    #[arg(long)]
    pub s: String,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMode {
    /// Legendre conjugate of τ (from --tau or estimated on --q).
    Legendre,
    /// Histogram of local Hölder exponents.
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauColumn {
    Lower,
    Ols,
    Upper,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value = "legendre")]
    pub mode: SpectrumMode,
    #[command(flatten)]
    pub source: MeasureArgs,
    /// Estimate CSV to transform (legendre mode).
    #[arg(long)]
    #[serde(skip)]
    pub tau: Option<PathBuf>,
    /// Estimate column used from --tau.
    #[arg(long, value_enum, default_value = "ols")]
    pub column: TauColumn,
    /// q-grid when τ is estimated here.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// α-grid.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    /// Radii, as for estimate.
    #[arg(long)]
    pub scales: Option<String>,
    /// Bin half-width (coarse mode).
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Local exponents from μ(B(x, r)) instead of μ(B(x, 3r)).
    #[arg(long)]
    pub plain_ball: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    /// Suite JSON: {"specs": [...]}.
    #[serde(skip)]
    pub suite: PathBuf,
    /// JSON report (the table always goes to standard output).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[serde(skip)]
    pub input: PathBuf,
    /// Output SVG (default: the input with an .svg extension).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("mfdim: error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("mfdim: error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("mfdim: error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
