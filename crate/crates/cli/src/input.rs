//! Loading maps and frames, window specs, and writing frames back out.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use spherestat::fits::{open_map, MapSource, Value};
use spherestat::frame::{frame_from_map, FrameMeta, RowSelection, SkyFrame};
use spherestat::sphere::SphericalPoint;
use spherestat::window::{Window, WindowSet, WindowSpec};

use crate::config::Config;
use crate::error::{CliError, CliResult, Stage};

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// FITS map, or frame CSV with a `.json` sidecar.
    pub input: PathBuf,
    /// Data column; repeat to keep several (the first is analysed).
    #[arg(long = "column", short = 'c')]
    pub columns: Vec<String>,
    /// Window spec JSON applied before sampling.
    #[arg(long)]
    pub window: Option<PathBuf>,
    /// Simple random sample of this many rows.
    #[arg(long)]
    pub sample: Option<u64>,
}

impl InputArgs {
    pub fn column(&self) -> Option<&str> {
        self.columns.first().map(String::as_str)
    }
}

/// Metadata stored next to a frame CSV as `<file>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(flatten)]
    pub meta: FrameMeta,
    #[serde(default)]
    pub windows: Vec<WindowSpec>,
    #[serde(default)]
    pub cards: Vec<(String, String)>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn is_fits(path: &Path) -> CliResult<bool> {
    let mut head = [0u8; 6];
    let mut f = File::open(path).input(&path.display().to_string())?;
    let n = f.read(&mut head).input(&path.display().to_string())?;
    Ok(n == 6 && &head == b"SIMPLE")
}

pub fn open(path: &Path) -> CliResult<MapSource> {
    open_map(path).input(&path.display().to_string())
}

/// Whitelisted cards from the extension header, falling back to the
/// primary header.
pub fn header_cards(src: &MapSource, keys: &[String]) -> Vec<(String, String)> {
    keys.iter()
        .filter_map(|k| {
            let v = src.header.get(k).or_else(|| src.primary.get(k))?;
            let text = match v {
                Value::Logical(b) => if *b { "T" } else { "F" }.to_string(),
                Value::Integer(i) => i.to_string(),
                Value::Real(r) => r.to_string(),
                Value::Text(s) => s.clone(),
            };
            Some((k.clone(), text))
        })
        .collect()
}

fn map_columns(src: &MapSource, wanted: &[String]) -> CliResult<Vec<String>> {
    if !wanted.is_empty() {
        let names = src.column_names();
        for w in wanted {
            if !names.contains(w) {
                return Err(CliError::usage(format!("no column `{w}`; have {}", names.join(", "))));
            }
        }
        return Ok(wanted.to_vec());
    }
    src.column_names()
        .into_iter()
        .find(|n| !n.eq_ignore_ascii_case("PIXEL"))
        .map(|n| vec![n])
        .ok_or_else(|| CliError::usage("map has no data columns"))
}

pub fn read_frame_csv(path: &Path) -> CliResult<SkyFrame> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).input(&format!("sidecar {}", side.display()))?;
    let meta: Sidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("sidecar {}: {e}", side.display())))?;
    let file = File::open(path).input(&path.display().to_string())?;
    let mut frame = SkyFrame::read_csv(BufReader::new(file), meta.meta).input(&path.display().to_string())?;
    frame.windows = meta
        .windows
        .into_iter()
        .map(Window::try_from)
        .collect::<spherestat::Result<_>>()
        .input(&side.display().to_string())?;
    frame.cards = meta.cards;
    Ok(frame)
}

/// Map or frame, then the optional window, then the optional sample.
pub fn load(args: &InputArgs, cfg: &Config, seed: u64, degrees: bool) -> CliResult<SkyFrame> {
    let window = args.window.as_deref().map(|p| read_windows(p, degrees)).transpose()?;
    let mut frame = if is_fits(&args.input)? {
        let src = open(&args.input)?;
        let cols = map_columns(&src, &args.columns)?;
        let selection = match (args.sample, &window) {
            (Some(size), None) => RowSelection::Sample { size, seed },
            _ => RowSelection::All,
        };
        let mut f = frame_from_map(&src, &selection, &cols).stage("read")?;
        f.cards = header_cards(&src, &cfg.summary.cards);
        if window.is_none() {
            return Ok(f);
        }
        f
    } else {
        let f = read_frame_csv(&args.input)?;
        if args.columns.is_empty() {
            f
        } else {
            f.with_columns(&args.columns).input("--column")?
        }
    };
    if let Some(w) = &window {
        frame = frame.extract_window(w);
        if frame.is_empty() {
            return Err(CliError::Compute { stage: "window", message: "window contains no rows".into() });
        }
    }
    if let Some(size) = args.sample {
        frame = frame.sample(size as usize, seed).stage("sample")?;
    }
    Ok(frame)
}

fn radians(p: SphericalPoint, degrees: bool) -> SphericalPoint {
    if degrees {
        SphericalPoint { theta: p.theta * PI / 180.0, phi: p.phi * PI / 180.0 }
    } else {
        p
    }
}

/// A window spec file: one window object or an array of them.
pub fn read_windows(path: &Path, degrees: bool) -> CliResult<WindowSet> {
    let what = path.display().to_string();
    let text = fs::read_to_string(path).input(&what)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{what}: {e}")))?;
    let specs: Vec<WindowSpec> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|s| vec![s])
    }
    .map_err(|e| CliError::usage(format!("{what}: {e}")))?;
    let windows = specs
        .into_iter()
        .map(|s| match s {
            WindowSpec::Disc { complement, center, r } => WindowSpec::Disc {
                complement,
                center: radians(center, degrees),
                r: if degrees { r * PI / 180.0 } else { r },
            },
            WindowSpec::Polygon { complement, vertices, assumed_convex } => WindowSpec::Polygon {
                complement,
                vertices: vertices.into_iter().map(|v| radians(v, degrees)).collect(),
                assumed_convex,
            },
        })
        .map(Window::try_from)
        .collect::<spherestat::Result<Vec<_>>>()
        .input(&what)?;
    Ok(WindowSet::new(windows))
}

/// Frame CSV to `out` (stdout when `None`); files also get a sidecar.
pub fn write_frame(frame: &SkyFrame, out: Option<&Path>) -> CliResult<()> {
    match out {
        None => {
            let stdout = std::io::stdout();
            frame.write_csv(BufWriter::new(stdout.lock())).stage("write")
        }
        Some(path) => {
            let file = File::create(path).input(&path.display().to_string())?;
            frame.write_csv(BufWriter::new(file)).stage("write")?;
            let side = Sidecar {
                meta: frame.meta(),
                windows: frame.windows.iter().map(Window::to_spec).collect(),
                cards: frame.cards.clone(),
            };
            let mut text = serde_json::to_string_pretty(&side).expect("serializable");
            text.push('\n');
            let mut f = File::create(sidecar_path(path)).input("sidecar")?;
            f.write_all(text.as_bytes()).input("sidecar")
        }
    }
}
