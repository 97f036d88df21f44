use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::Serialize;

use spherestat::fits::{write_fits, ColumnData, ColumnType, Indexing, MapMeta, Table};
use spherestat::frame::{Mode, SkyFrame};
use spherestat::geostat::{
    angular_marginals, cov_from_power_spectrum, default_grid, empirical_covariance, empirical_variogram, entropy,
    first_minkowski, fit_variogram, q_statistic, qq_pairs, renyi_function, sturges_bins, CovarianceModel,
    EmpiricalCurve, Estimator, Family, FitOptions, PairOptions, PowerSpectrum, Weights,
};
use spherestat::healpix::{pixel_center, Resolution, Scheme};
use spherestat::sampling::Sampler;

use crate::config::Config;
use crate::error::{CliError, CliResult, Stage};
use crate::input::{self, InputArgs};
use crate::output::{self, Format};
use crate::{Cli, Command, CurveArgs, EstimatorArg, FieldKind, FitArgs, MkfitsArgs};

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    let out = cli.output.as_deref();
    let fmt = |allowed: &[Format], name: &str| output::choose(cli.format, allowed, name);
    let angle = |x: f64| if cli.degrees { x * PI / 180.0 } else { x };
    let load = |args: &InputArgs| input::load(args, &cfg, cli.seed, cli.degrees);
    match &cli.command {
        Command::Info { input } => {
            fmt(&[Format::Json], "info")?;
            info(input, &cfg, out)
        }
        Command::Sample { input, size } => {
            fmt(&[Format::Csv], "sample")?;
            let args = InputArgs { sample: Some(*size), ..input.clone() };
            input::write_frame(&load(&args)?, out)
        }
        Command::Window { input, spec } => {
            fmt(&[Format::Csv], "window")?;
            let args = InputArgs { window: Some(spec.clone()), ..input.clone() };
            input::write_frame(&load(&args)?, out)
        }
        Command::Cov(a) | Command::Variogram(a) => {
            let estimator = match cli.command {
                Command::Cov(_) => Estimator::Covariance,
                _ => Estimator::Variogram,
            };
            let name = if estimator == Estimator::Covariance { "cov" } else { "variogram" };
            let f = fmt(&[Format::Csv, Format::Json], name)?;
            let curve = curve(a, estimator, &load(&a.input)?, angle(a.max_dist), cli.seed)?;
            match f {
                Format::Json => output::json(&curve, out),
                _ => curve.write_csv(output::sink(out)?).stage("write"),
            }
        }
        Command::Fit(a) => {
            fmt(&[Format::Json], "fit")?;
            let result = fit(a)?;
            output::json(&result, out)
        }
        Command::Covps { spectrum, lmax, grid_size } => {
            let f = fmt(&[Format::Csv, Format::Json], "covps")?;
            let text = fs::read_to_string(spectrum).input(&spectrum.display().to_string())?;
            let ps = PowerSpectrum::parse(&text).input(&spectrum.display().to_string())?;
            let cov = cov_from_power_spectrum(&ps, *lmax, &default_grid(*grid_size)).stage("covps")?;
            for n in &cov.notes {
                eprintln!("note: {n}");
            }
            match f {
                Format::Json => output::json(&cov, out),
                _ => cov.write_csv(output::sink(out)?).stage("write"),
            }
        }
        Command::Entropy { input, bins } => {
            fmt(&[Format::Json], "entropy")?;
            let frame = load(input)?;
            let used = bins.unwrap_or_else(|| sturges_bins(frame.rows()));
            let h = entropy(&frame, input.column(), Some(used)).stage("entropy")?;
            output::json(&Scalar { name: "entropy", value: Some(h), rows: frame.rows(), bins: Some(used), alpha: None }, out)
        }
        Command::Fmf { input, alpha } => {
            fmt(&[Format::Json], "fmf")?;
            let frame = load(input)?;
            let area = first_minkowski(&frame, input.column(), *alpha).stage("fmf")?;
            output::json(&Scalar { name: "fmf", value: Some(area), rows: frame.rows(), bins: None, alpha: Some(*alpha) }, out)
        }
        Command::Renyi { input, q_min, q_max, n, box_level } => {
            let f = fmt(&[Format::Csv, Format::Json], "renyi")?;
            let frame = load(input)?;
            let points = renyi_function(&frame, input.column(), *q_min, *q_max, *n, *box_level).stage("renyi")?;
            match f {
                Format::Json => output::json(&points, out),
                _ => output::csv_rows(&["q", "t"], points.iter().map(|p| [p.q.to_string(), p.t.to_string()]), out),
            }
        }
        Command::Qstat { input, strata } => {
            fmt(&[Format::Json], "qstat")?;
            let frame = load(input)?;
            let sets = strata.iter().map(|p| input::read_windows(p, cli.degrees)).collect::<CliResult<Vec<_>>>()?;
            let q = q_statistic(&frame, input.column(), &sets).stage("qstat")?;
            output::json(&Scalar { name: "qstat", value: q, rows: frame.rows(), bins: None, alpha: None }, out)
        }
        Command::Qq { input, region_a, region_b, n } => {
            let f = fmt(&[Format::Csv, Format::Json], "qq")?;
            let frame = load(input)?;
            let a = input::read_windows(region_a, cli.degrees)?;
            let b = input::read_windows(region_b, cli.degrees)?;
            let pairs = qq_pairs(&frame, input.column(), &a, &b, *n).stage("qq")?;
            let p = |k: usize| if *n == 1 { 0.5 } else { k as f64 / (*n - 1) as f64 };
            match f {
                Format::Json => {
                    let rows: Vec<QqRow> = pairs.iter().enumerate().map(|(k, &(a, b))| QqRow { p: p(k), a, b }).collect();
                    output::json(&rows, out)
                }
                _ => output::csv_rows(
                    &["p", "a", "b"],
                    pairs.iter().enumerate().map(|(k, (a, b))| [p(k).to_string(), a.to_string(), b.to_string()]),
                    out,
                ),
            }
        }
        Command::Angdist { input, theta_bins, phi_bins } => {
            fmt(&[Format::Json], "angdist")?;
            let frame = load(input)?;
            let m = angular_marginals(&frame, input.column(), *theta_bins, *phi_bins).stage("angdist")?;
            output::json(&m, out)
        }
        Command::Plot(a) => {
            fmt(&[Format::Svg], "plot")?;
            let svg = crate::plot::render(a, &cfg, cli.seed, cli.degrees)?;
            output::text_out(&svg, out)
        }
        Command::Download(a) => crate::download::run(a, &cfg, out),
        Command::Mkfits(a) => {
            let path = out.ok_or_else(|| CliError::usage("mkfits needs --output"))?;
            mkfits(a, cli.seed, path)
        }
    }
}

#[derive(Serialize)]
struct Scalar {
    name: &'static str,
    value: Option<f64>,
    rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
}

#[derive(Serialize)]
struct QqRow {
    p: f64,
    a: f64,
    b: f64,
}

#[derive(Serialize)]
struct ColumnInfo {
    name: String,
    #[serde(rename = "type")]
    ty: &'static str,
}

#[derive(Serialize)]
struct Info {
    nside: u64,
    ordering: Scheme,
    rows: u64,
    columns: Vec<ColumnInfo>,
    resolution_arcmin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    indexing: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    covered_area: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    windows: Vec<spherestat::frame::WindowSummary>,
    cards: serde_json::Map<String, serde_json::Value>,
}

fn type_name(t: ColumnType) -> &'static str {
    match t {
        ColumnType::U8 => "uint8",
        ColumnType::I16 => "int16",
        ColumnType::I32 => "int32",
        ColumnType::I64 => "int64",
        ColumnType::F32 => "float32",
        ColumnType::F64 => "float64",
    }
}

fn cards_map(cards: &[(String, String)]) -> serde_json::Map<String, serde_json::Value> {
    cards.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect()
}

fn info(path: &Path, cfg: &Config, out: Option<&Path>) -> CliResult<()> {
    let report = if input::is_fits(path)? {
        let src = input::open(path)?;
        let res = src.resolution();
        Info {
            nside: res.nside(),
            ordering: src.scheme(),
            rows: src.row_count(),
            columns: src.fields().iter().map(|f| ColumnInfo { name: f.name.clone(), ty: type_name(f.ty) }).collect(),
            resolution_arcmin: res.resolution_arcmin(),
            indexing: Some(match src.indexing() {
                Indexing::Implicit { .. } => "implicit",
                Indexing::Explicit => "explicit",
            }),
            mode: None,
            covered_area: src.row_count() as f64 * res.pixel_area(),
            windows: Vec::new(),
            cards: cards_map(&input::header_cards(&src, &cfg.summary.cards)),
        }
    } else {
        let frame = input::read_frame_csv(path)?;
        let s = frame.summarize();
        Info {
            nside: s.nside,
            ordering: s.ordering,
            rows: s.rows as u64,
            columns: frame.names().iter().map(|n| ColumnInfo { name: n.clone(), ty: "float64" }).collect(),
            resolution_arcmin: frame.resolution().resolution_arcmin(),
            indexing: None,
            mode: Some(s.mode),
            covered_area: s.covered_area,
            windows: s.windows,
            cards: cards_map(&s.cards),
        }
    };
    output::json(&report, out)
}

fn curve(a: &CurveArgs, estimator: Estimator, frame: &SkyFrame, max_dist: f64, seed: u64) -> CliResult<EmpiricalCurve> {
    let mut opts = PairOptions { seed, ..PairOptions::default() };
    if let Some(m) = a.max_pairs {
        opts.max_pairs = m;
    }
    let col = a.input.column();
    match estimator {
        Estimator::Covariance => empirical_covariance(frame, col, max_dist, a.bins, &opts).stage("cov"),
        Estimator::Variogram => empirical_variogram(frame, col, max_dist, a.bins, &opts).stage("variogram"),
    }
}

/// Reads a curve back from `cov`/`variogram` output. A CSV whose first lag
/// is 0 is taken as a covariance curve unless `estimator` says otherwise.
pub fn read_curve(path: &Path, estimator: Option<EstimatorArg>) -> CliResult<EmpiricalCurve> {
    let what = path.display().to_string();
    let text = fs::read_to_string(path).input(&what)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{what}: {e}")));
    }
    let mut lags = Vec::new();
    let mut values = Vec::new();
    let mut counts = Vec::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or_default();
    if header.trim() != "lag,value,count" {
        return Err(CliError::usage(format!("{what}: expected header lag,value,count")));
    }
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || CliError::usage(format!("{what}: bad row {}", k + 1));
        if f.len() != 3 {
            return Err(bad());
        }
        lags.push(f[0].parse::<f64>().map_err(|_| bad())?);
        values.push(if f[1] == "NA" { None } else { Some(f[1].parse::<f64>().map_err(|_| bad())?) });
        counts.push(f[2].parse::<u64>().map_err(|_| bad())?);
    }
    if lags.is_empty() {
        return Err(CliError::usage(format!("{what}: no rows")));
    }
    let estimator = match estimator {
        Some(EstimatorArg::Covariance) => Estimator::Covariance,
        Some(EstimatorArg::Variogram) => Estimator::Variogram,
        None if lags[0] == 0.0 => Estimator::Covariance,
        None => Estimator::Variogram,
    };
    let bins = if estimator == Estimator::Covariance { lags.len() - 1 } else { lags.len() };
    let last = *lags.last().expect("non-empty");
    let width = if bins > 0 { 2.0 * last / (2 * bins - 1) as f64 } else { 0.0 };
    Ok(EmpiricalCurve { estimator, lags, values, counts, max_dist: width * bins as f64, bins, subsampled: false })
}

fn fit(a: &FitArgs) -> CliResult<spherestat::geostat::FitResult> {
    let family: Family = a.family.parse::<Family>().input("--family")?;
    let weights: Weights = a.weights.parse::<Weights>().input("--weights")?;
    let curve = read_curve(&a.curve, a.estimator)?;
    let any_init = a.sigma_sq.is_some() || a.psi.is_some() || a.kappa.is_some() || a.kappa2.is_some() || a.nugget.is_some();
    let init = any_init.then(|| {
        let sill = curve.populated().map(|(_, v, _)| v.abs()).fold(0.0, f64::max);
        let max_lag = curve.populated().map(|(h, _, _)| h).fold(0.0, f64::max);
        let mut m = CovarianceModel::new(family, a.sigma_sq.unwrap_or(sill), a.psi.unwrap_or(max_lag / 3.0));
        if let Some(k) = a.kappa {
            m.kappa = k;
        }
        if let Some(k) = a.kappa2 {
            m.kappa2 = k;
        }
        m.nugget = a.nugget.unwrap_or(0.0);
        m
    });
    let opts = FitOptions { weights, fix_nugget: a.fix_nugget, fix_kappa: a.fix_kappa, init };
    fit_variogram(&curve, family, &opts).stage("fit")
}

fn mkfits(a: &MkfitsArgs, seed: u64, path: &Path) -> CliResult<()> {
    let res = Resolution::from_nside(a.nside).input("--nside")?;
    let scheme: Scheme = a.ordering.parse::<Scheme>().input("--ordering")?;
    if a.columns.is_empty() || a.columns.iter().any(|c| c.is_empty()) {
        return Err(CliError::usage("--columns needs non-empty names"));
    }
    let npix = res.npix();
    let columns: Vec<ColumnData> = a
        .columns
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let values: Vec<f64> = match a.field {
                FieldKind::Noise => gaussian(seed.wrapping_add(k as u64), npix as usize),
                FieldKind::Dipole => (1..=npix).map(|p| pixel_center(p, scheme, res).z).collect(),
                FieldKind::Index => (1..=npix).map(|p| p as f64).collect(),
                FieldKind::Constant => vec![1.0; npix as usize],
            };
            if a.double {
                ColumnData::F64(values)
            } else {
                ColumnData::F32(values.into_iter().map(|v| v as f32).collect())
            }
        })
        .collect();
    let table = Table::new(a.columns.clone(), columns).stage("mkfits")?;
    write_fits(&table, MapMeta { resolution: res, scheme }, path).input(&path.display().to_string())
}

/// Standard normal draws by the Box–Muller transform.
fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut s = Sampler::new(seed);
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u1 = 1.0 - s.uniform();
        let u2 = s.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        out.push(r * (2.0 * PI * u2).cos());
        out.push(r * (2.0 * PI * u2).sin());
    }
    out.truncate(n);
    out
}
