//! `spherestat`: HEALPix map inspection and spherical geostatistics.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 network error,
//! 4 computation error.

mod commands;
mod config;
mod download;
mod error;
mod input;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::input::InputArgs;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "spherestat", version, about = "HEALPix maps and spherical geostatistics")]
pub struct Cli {
    /// TOML config file (default: $SPHERESTAT_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Read angles given on the command line and in window files as degrees.
    #[arg(long, global = true)]
    pub degrees: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Header report of a map or frame.
    Info {
        input: PathBuf,
    },
    /// Random sample of rows, written as a frame.
    Sample {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        size: u64,
    },
    /// Rows inside a window, written as a frame.
    Window {
        #[command(flatten)]
        input: InputArgs,
        /// Window spec JSON.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Empirical covariance.
    Cov(CurveArgs),
    /// Empirical semivariogram.
    Variogram(CurveArgs),
    /// Fit a covariance family to an empirical curve.
    Fit(FitArgs),
    /// Covariance from an angular power spectrum.
    Covps {
        /// Spectrum table with an `l` column and a `C_l` or `D_l` column.
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, default_value_t = 2000)]
        lmax: u32,
        #[arg(long, default_value_t = 201)]
        grid_size: usize,
    },
    /// Histogram entropy in bits.
    Entropy {
        #[command(flatten)]
        input: InputArgs,
        /// Bin count (default: Sturges).
        #[arg(long)]
        bins: Option<usize>,
    },
    /// First Minkowski functional (excursion area).
    Fmf {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Sample Rényi function.
    Renyi {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1.01)]
        q_min: f64,
        #[arg(long, default_value_t = 10.0)]
        q_max: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        box_level: u8,
    },
    /// Stratified heterogeneity q-statistic.
    Qstat {
        #[command(flatten)]
        input: InputArgs,
        /// Window spec JSON for one stratum; repeat per stratum.
        #[arg(long = "strata", required = true)]
        strata: Vec<PathBuf>,
    },
    /// Matched quantiles of two regions.
    Qq {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        region_a: PathBuf,
        #[arg(long)]
        region_b: PathBuf,
        #[arg(long, default_value_t = 101)]
        n: usize,
    },
    /// Mean value by colatitude and by longitude.
    Angdist {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 18)]
        theta_bins: usize,
        #[arg(long, default_value_t = 36)]
        phi_bins: usize,
    },
    /// Render an SVG plot.
    Plot(PlotArgs),
    /// Fetch a Planck map or power spectrum.
    Download(DownloadArgs),
    /// Write a synthetic HEALPix map.
    Mkfits(MkfitsArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest lag in radians.
    #[arg(long)]
    pub max_dist: f64,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Pair budget above which pairs are subsampled.
    #[arg(long)]
    pub max_pairs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Curve written by `cov` or `variogram` (CSV or JSON).
    pub curve: PathBuf,
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value = "equal")]
    pub weights: String,
    /// Treat a CSV curve as this estimator instead of guessing from lag 0.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[arg(long)]
    pub fix_nugget: bool,
    #[arg(long)]
    pub fix_kappa: bool,
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    #[arg(long)]
    pub psi: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub kappa2: Option<f64>,
    #[arg(long)]
    pub nugget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Covariance,
    Variogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Variogram,
    Renyi,
    Angdist,
    Map,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Curve, Rényi table, angdist JSON, or map/frame for `map`.
    pub input: PathBuf,
    /// Fit JSON drawn over a variogram.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "column", short = 'c')]
    pub columns: Vec<String>,
    #[arg(long)]
    pub window: Option<PathBuf>,
    /// Cap on points drawn by `map`.
    #[arg(long, default_value_t = 50_000)]
    pub max_points: u64,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Product {
    Map,
    Powerspectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Foreground {
    Commander,
    Nilc,
    Sevem,
    Smica,
}

impl Foreground {
    pub fn name(self) -> &'static str {
        match self {
            Foreground::Commander => "commander",
            Foreground::Nilc => "nilc",
            Foreground::Sevem => "sevem",
            Foreground::Smica => "smica",
        }
    }
}

#[derive(Debug, Args)]
pub struct DownloadArgs {
    #[arg(value_enum)]
    pub product: Product,
    #[arg(long, value_enum, default_value = "smica")]
    pub foreground: Foreground,
    #[arg(long, default_value_t = 1024, value_parser = clap::builder::PossibleValuesParser::new(["1024", "2048"]).map(|s| s.parse::<u64>().expect("listed")))]
    pub nside: u64,
    /// Power spectrum link number from the config.
    #[arg(long, default_value = "1")]
    pub link: String,
    /// Fail instead of touching the network.
    #[arg(long)]
    pub offline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldKind {
    /// Independent standard normal values.
    Noise,
    /// `cos θ` of the pixel centre.
    Dipole,
    /// The 1-based pixel index.
    Index,
    Constant,
}

#[derive(Debug, Args)]
pub struct MkfitsArgs {
    #[arg(long)]
    pub nside: u64,
    #[arg(long, default_value = "nested")]
    pub ordering: String,
    #[arg(long, value_enum, default_value = "noise")]
    pub field: FieldKind,
    /// Column names.
    #[arg(long, value_delimiter = ',', default_value = "I")]
    pub columns: Vec<String>,
    /// Store 64-bit floats instead of 32-bit.
    #[arg(long)]
    pub double: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spherestat: {e}");
            e.exit_code()
        }
    }
}
