//! Pixel-indexed data frames.
//!
//! A [`SkyFrame`] pairs HEALPix pixel keys with named numeric columns. In
//! [`Mode::Cmb`] every key is unique and positions are pixel centres; in
//! [`Mode::Hp`] keys may repeat and rows may carry their own coordinates.
//! Window membership is decided by pixel centre.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fits::{ByteSource, MapSource};
use crate::healpix::{convert_index, nest_search, pixel_center, Resolution, Scheme};
use crate::sampling::Sampler;
use crate::sphere::{SphericalPoint, UnitVector};
use crate::stats::{mean, quantile_sorted, sorted};
use crate::window::{Window, WindowSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Unique pixel keys.
    Cmb,
    /// Repeated keys allowed.
    Hp,
}

/// Which rows of a map to load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowSelection {
    All,
    /// Strictly increasing 1-based rows.
    Rows(Vec<u64>),
    Sample { size: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Columns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkyFrame {
    res: Resolution,
    scheme: Scheme,
    mode: Mode,
    pixels: Vec<u64>,
    coords: Option<Vec<SphericalPoint>>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    /// Windows this frame was cut from, in the order applied.
    pub windows: Vec<Window>,
    /// Set when binding demoted a cmb frame to hp mode.
    pub demoted: bool,
    /// Header cards carried into summaries.
    pub cards: Vec<(String, String)>,
}

fn duplicate_rows(pixels: &[u64]) -> Vec<usize> {
    let mut first: HashMap<u64, usize> = HashMap::with_capacity(pixels.len());
    let mut dup = HashSet::new();
    for (i, &p) in pixels.iter().enumerate() {
        if let Some(&j) = first.get(&p) {
            dup.insert(j + 1);
            dup.insert(i + 1);
        } else {
            first.insert(p, i);
        }
    }
    let mut rows: Vec<usize> = dup.into_iter().collect();
    rows.sort_unstable();
    rows
}

impl SkyFrame {
    pub fn new(
        res: Resolution,
        scheme: Scheme,
        mode: Mode,
        pixels: Vec<u64>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if let Some(&p) = pixels.iter().find(|&&p| p == 0 || p > res.npix()) {
            return Err(Error::Addressing(format!("pixel {p} invalid at nside {}", res.nside())));
        }
        if names.len() != columns.len() {
            return Err(Error::Schema(format!("{} names for {} columns", names.len(), columns.len())));
        }
        if columns.iter().any(|c| c.len() != pixels.len()) {
            return Err(Error::Schema("column length differs from row count".into()));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Schema("duplicate column names".into()));
        }
        if mode == Mode::Cmb {
            let dup = duplicate_rows(&pixels);
            if !dup.is_empty() {
                return Err(Error::Uniqueness { rows: dup });
            }
        }
        Ok(Self {
            res,
            scheme,
            mode,
            pixels,
            coords: None,
            names,
            columns,
            windows: Vec::new(),
            demoted: false,
            cards: Vec::new(),
        })
    }

    /// Every pixel of the sphere, no data columns.
    pub fn full_sky(res: Resolution, scheme: Scheme) -> Self {
        Self::new(res, scheme, Mode::Cmb, (1..=res.npix()).collect(), Vec::new(), Vec::new()).expect("valid")
    }

    /// Attaches explicit per-row coordinates (hp mode only).
    pub fn with_coords(mut self, coords: Vec<SphericalPoint>) -> Result<Self> {
        if self.mode != Mode::Hp {
            return Err(Error::Domain("explicit coordinates need an hp-mode frame".into()));
        }
        if coords.len() != self.pixels.len() {
            return Err(Error::Schema("coordinate count differs from row count".into()));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn resolution(&self) -> Resolution {
        self.res
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rows(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u64] {
        &self.pixels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::Schema(format!("no column named {name:?}")))
    }

    /// The named column, or the only one when `name` is `None`.
    pub fn data_column(&self, name: Option<&str>) -> Result<&[f64]> {
        match (name, self.columns.len()) {
            (Some(n), _) => self.column(n),
            (None, 1) => Ok(&self.columns[0]),
            (None, 0) => Err(Error::Schema("frame has no data columns".into())),
            (None, _) => Err(Error::Schema(format!("several data columns, choose one of {:?}", self.names))),
        }
    }

    pub fn explicit_coords(&self) -> Option<&[SphericalPoint]> {
        self.coords.as_deref()
    }

    pub fn pixel_centers(&self) -> Vec<UnitVector> {
        self.pixels.par_iter().map(|&p| pixel_center(p, self.scheme, self.res)).collect()
    }

    /// Row positions: explicit coordinates if present, else pixel centres.
    pub fn positions(&self) -> Vec<UnitVector> {
        match &self.coords {
            Some(c) => c.iter().map(SphericalPoint::to_vector).collect(),
            None => self.pixel_centers(),
        }
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.rows() {
            return Err(Error::Schema(format!("column {name:?} has {} values for {} rows", values.len(), self.rows())));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::Schema(format!("duplicate column {name:?}")));
        }
        self.names.push(name.to_string());
        self.columns.push(values);
        Ok(())
    }

    /// Keeps only the named columns, in the given order.
    pub fn with_columns<N: AsRef<str>>(&self, names: &[N]) -> Result<SkyFrame> {
        let columns = names.iter().map(|n| self.column(n.as_ref()).map(<[f64]>::to_vec)).collect::<Result<_>>()?;
        Ok(SkyFrame {
            pixels: self.pixels.clone(),
            coords: self.coords.clone(),
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            columns,
            ..self.clone_meta()
        })
    }

    /// Keeps the given 0-based rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> SkyFrame {
        SkyFrame {
            pixels: rows.iter().map(|&i| self.pixels[i]).collect(),
            coords: self.coords.as_ref().map(|c| rows.iter().map(|&i| c[i]).collect()),
            columns: self.columns.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> SkyFrame {
        SkyFrame {
            res: self.res,
            scheme: self.scheme,
            mode: self.mode,
            pixels: Vec::new(),
            coords: None,
            names: self.names.clone(),
            columns: Vec::new(),
            windows: self.windows.clone(),
            demoted: self.demoted,
            cards: self.cards.clone(),
        }
    }

    /// Re-keys the frame under the other ordering scheme.
    pub fn to_scheme(&self, scheme: Scheme) -> SkyFrame {
        let mut out = self.clone();
        if scheme != self.scheme {
            out.pixels = self.pixels.par_iter().map(|&p| convert_index(p, self.scheme, scheme, self.res)).collect();
            out.scheme = scheme;
        }
        out
    }

    /// Rows whose pixel centre lies in `region`.
    pub fn extract_window(&self, region: &WindowSet) -> SkyFrame {
        let keep: Vec<usize> = self
            .pixels
            .par_iter()
            .enumerate()
            .filter(|(_, &p)| region.contains(&pixel_center(p, self.scheme, self.res)))
            .map(|(i, _)| i)
            .collect();
        let mut out = self.select(&keep);
        out.windows.extend(region.windows.iter().cloned());
        out
    }

    /// Simple random sample of rows without replacement, in row order.
    pub fn sample(&self, size: usize, seed: u64) -> Result<SkyFrame> {
        let rows = Sampler::new(seed).sample_without_replacement(self.rows() as u64, size as u64)?;
        Ok(self.select(&rows.iter().map(|&r| r as usize - 1).collect::<Vec<_>>()))
    }

    /// Distinct pixel count times the pixel area.
    pub fn geo_area(&self) -> f64 {
        let distinct = match self.mode {
            Mode::Cmb => self.pixels.len(),
            Mode::Hp => self.pixels.iter().collect::<HashSet<_>>().len(),
        };
        distinct as f64 * self.res.pixel_area()
    }

    pub fn summarize(&self) -> Summary {
        Summary {
            rows: self.rows(),
            nside: self.res.nside(),
            ordering: self.scheme,
            mode: self.mode,
            windows: self.windows.iter().map(|w| WindowSummary { kind: w.label(), area: w.area() }).collect(),
            covered_area: self.geo_area(),
            cards: self.cards.clone(),
            columns: self
                .names
                .iter()
                .zip(&self.columns)
                .map(|(name, c)| ColumnSummary { name: name.clone(), stats: Quartiles::of(c) })
                .collect(),
        }
    }

    pub fn meta(&self) -> FrameMeta {
        FrameMeta { nside: self.res.nside(), ordering: self.scheme, mode: self.mode }
    }

    /// CSV with columns `pix, theta, phi` and then the data columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["pix".to_string(), "theta".into(), "phi".into()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let centers;
        let points: Vec<SphericalPoint> = match &self.coords {
            Some(c) => c.clone(),
            None => {
                centers = self.pixel_centers();
                centers.iter().map(UnitVector::to_spherical).collect()
            }
        };
        let mut record = Vec::with_capacity(header.len());
        for (i, p) in self.pixels.iter().enumerate() {
            record.clear();
            record.push(p.to_string());
            record.push(points[i].theta.to_string());
            record.push(points[i].phi.to_string());
            record.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`SkyFrame::write_csv`]. Hp frames keep the
    /// stored coordinates; cmb frames derive them from pixel keys.
    pub fn read_csv<R: Read>(input: R, meta: FrameMeta) -> Result<SkyFrame> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < 3 || header[0] != "pix" || header[1] != "theta" || header[2] != "phi" {
            return Err(Error::Schema("CSV must start with pix, theta, phi".into()));
        }
        let names = header[3..].to_vec();
        let mut pixels = Vec::new();
        let mut coords = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k).ok_or_else(|| Error::Parse(format!("row {}: missing field {}", line + 1, k + 1)))
            };
            let num = |k: usize| -> Result<f64> {
                let s = field(k)?;
                s.trim().parse().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", line + 1)))
            };
            let pix = field(0)?;
            pixels.push(pix.trim().parse().map_err(|_| Error::Parse(format!("row {}: bad pixel {pix:?}", line + 1)))?);
            coords.push(SphericalPoint::new(num(1)?, num(2)?)?);
            for (k, col) in columns.iter_mut().enumerate() {
                col.push(num(k + 3)?);
            }
        }
        let frame = SkyFrame::new(Resolution::from_nside(meta.nside)?, meta.ordering, meta.mode, pixels, names, columns)?;
        match meta.mode {
            Mode::Hp => frame.with_coords(coords),
            Mode::Cmb => Ok(frame),
        }
    }
}

/// Loads rows of a map as a cmb-mode frame keyed by pixel.
pub fn frame_from_map<S: ByteSource, N: AsRef<str>>(
    src: &MapSource<S>,
    selection: &RowSelection,
    columns: &[N],
) -> Result<SkyFrame> {
    let (table, rows) = match selection {
        RowSelection::All => {
            let rows: Vec<u64> = (1..=src.row_count()).collect();
            (src.read_rows(&rows, columns)?, rows)
        }
        RowSelection::Rows(rows) => (src.read_rows(rows, columns)?, rows.clone()),
        RowSelection::Sample { size, seed } => src.sample_rows(*size, *seed, columns)?,
    };
    let pixels = src.pixels_of_rows(&rows)?;
    let cols = table.columns.iter().map(|c| c.to_f64()).collect();
    SkyFrame::new(src.resolution(), src.scheme(), Mode::Cmb, pixels, table.names, cols)
}

/// Keys arbitrary points by the pixel found with [`nest_search`].
///
/// With `require_unique` the result is a cmb frame and colliding rows are
/// an error; otherwise it is an hp frame that keeps the input coordinates.
pub fn assign_pixels(
    points: &[SphericalPoint],
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    res: Resolution,
    require_unique: bool,
) -> Result<SkyFrame> {
    let pixels: Vec<u64> = points.par_iter().map(|p| nest_search(&p.to_vector(), res).pixel.index()).collect();
    if require_unique {
        SkyFrame::new(res, Scheme::Nested, Mode::Cmb, pixels, names, columns)
    } else {
        SkyFrame::new(res, Scheme::Nested, Mode::Hp, pixels, names, columns)?.with_coords(points.to_vec())
    }
}

/// Stacks frames by rows, or joins them side by side on identical keys.
pub fn bind_frames(frames: &[SkyFrame], axis: Axis) -> Result<SkyFrame> {
    let first = frames.first().ok_or_else(|| Error::Domain("nothing to bind".into()))?;
    for f in &frames[1..] {
        if f.res != first.res || f.scheme != first.scheme {
            return Err(Error::Addressing("frames differ in resolution or ordering".into()));
        }
    }
    match axis {
        Axis::Rows => {
            if frames.iter().any(|f| f.names != first.names) {
                return Err(Error::Schema("frames have different columns".into()));
            }
            let keep_coords = frames.iter().any(|f| f.coords.is_some());
            let mut out = first.clone_meta();
            out.columns = vec![Vec::new(); first.names.len()];
            let mut coords = Vec::new();
            out.windows.clear();
            for f in frames {
                out.pixels.extend_from_slice(&f.pixels);
                for (dst, src) in out.columns.iter_mut().zip(&f.columns) {
                    dst.extend_from_slice(src);
                }
                if keep_coords {
                    match &f.coords {
                        Some(c) => coords.extend_from_slice(c),
                        None => coords.extend(f.pixel_centers().iter().map(UnitVector::to_spherical)),
                    }
                }
                out.windows.extend(f.windows.iter().cloned());
                out.demoted |= f.demoted;
            }
            let all_cmb = frames.iter().all(|f| f.mode == Mode::Cmb);
            out.mode = if all_cmb && duplicate_rows(&out.pixels).is_empty() { Mode::Cmb } else { Mode::Hp };
            if all_cmb && out.mode == Mode::Hp {
                out.demoted = true;
            }
            if keep_coords && out.mode == Mode::Hp {
                out.coords = Some(coords);
            }
            Ok(out)
        }
        Axis::Columns => {
            if frames.iter().any(|f| f.pixels != first.pixels) {
                return Err(Error::Schema("frames have different pixel keys".into()));
            }
            let mut out = first.clone();
            for f in &frames[1..] {
                for (name, col) in f.names.iter().zip(&f.columns) {
                    out.push_column(name, col.clone())?;
                }
                out.windows.extend(f.windows.iter().cloned());
            }
            Ok(out)
        }
    }
}

/// JSON sidecar describing a CSV frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub nside: u64,
    pub ordering: Scheme,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub kind: String,
    pub area: f64,
}

/// Six-number summary; quartiles by linear interpolation between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(x: &[f64]) -> Option<Quartiles> {
        let s = sorted(x);
        if s.is_empty() {
            return None;
        }
        Some(Quartiles {
            min: s[0],
            q1: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            mean: mean(&s),
            q3: quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub stats: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub nside: u64,
    pub ordering: Scheme,
    pub mode: Mode,
    pub windows: Vec<WindowSummary>,
    pub covered_area: f64,
    pub cards: Vec<(String, String)>,
    pub columns: Vec<ColumnSummary>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Cmb => "cmb",
            Mode::Hp => "hp",
        };
        writeln!(f, "rows: {}  nside: {}  ordering: {}  mode: {mode}", self.rows, self.nside, self.ordering)?;
        writeln!(f, "windows: {}", self.windows.len())?;
        for w in &self.windows {
            writeln!(f, "  {:<14} area {:.6}", w.kind, w.area)?;
        }
        for (k, v) in &self.cards {
            writeln!(f, "{k} = {v}")?;
        }
        writeln!(f, "covered area: {:.6}", self.covered_area)?;
        for c in &self.columns {
            match &c.stats {
                Some(q) => writeln!(
                    f,
                    "{}: min {:.6e}  q1 {:.6e}  median {:.6e}  mean {:.6e}  q3 {:.6e}  max {:.6e}",
                    c.name, q.min, q.q1, q.median, q.mean, q.q3, q.max
                )?,
                None => writeln!(f, "{}: no values", c.name)?,
            }
        }
        Ok(())
    }
}
