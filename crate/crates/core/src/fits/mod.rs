//! HEALPix maps stored as FITS binary tables.
//!
//! [`MapSource`] parses the headers once and then serves rows by byte
//! offset, so selected pixels or random samples are read without touching
//! the rest of the payload. Row indices are 1-based, like pixel indices.

mod header;
mod source;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use header::{Card, Header, Value, BLOCK};
pub use source::{ByteSource, CountingSource, FileSource};

use crate::error::{Error, Result};
use crate::healpix::{Resolution, Scheme};
use crate::sampling::Sampler;

// Upper bound on one contiguous read.
const CHUNK: u64 = 8 << 20;

/// Binary table element types, by TFORM letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    /// `B`
    U8,
    /// `I`
    I16,
    /// `J`
    I32,
    /// `K`
    I64,
    /// `E`
    F32,
    /// `D`
    F64,
}

impl ColumnType {
    pub fn width(self) -> usize {
        match self {
            ColumnType::U8 => 1,
            ColumnType::I16 => 2,
            ColumnType::I32 | ColumnType::F32 => 4,
            ColumnType::I64 | ColumnType::F64 => 8,
        }
    }

    pub fn code(self) -> char {
        match self {
            ColumnType::U8 => 'B',
            ColumnType::I16 => 'I',
            ColumnType::I32 => 'J',
            ColumnType::I64 => 'K',
            ColumnType::F32 => 'E',
            ColumnType::F64 => 'D',
        }
    }

    /// Parses a TFORM value; only a repeat count of 1 is accepted.
    pub fn from_tform(tform: &str) -> Result<Self> {
        let t = tform.trim();
        let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
        let (repeat, rest) = t.split_at(split);
        let unsupported = || Error::UnsupportedFormat(format!("TFORM '{tform}'"));
        if !(repeat.is_empty() || repeat == "1") {
            return Err(unsupported());
        }
        let ty = match rest {
            "B" => ColumnType::U8,
            "I" => ColumnType::I16,
            "J" => ColumnType::I32,
            "K" => ColumnType::I64,
            "E" => ColumnType::F32,
            "D" => ColumnType::F64,
            _ => return Err(unsupported()),
        };
        Ok(ty)
    }
}

/// Typed column values.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    I64(Vec<i64>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

macro_rules! each_column {
    ($self:expr, $v:ident => $body:expr) => {
        match $self {
            ColumnData::U8($v) => $body,
            ColumnData::I16($v) => $body,
            ColumnData::I32($v) => $body,
            ColumnData::I64($v) => $body,
            ColumnData::F32($v) => $body,
            ColumnData::F64($v) => $body,
        }
    };
}

impl ColumnData {
    fn with_capacity(ty: ColumnType, n: usize) -> Self {
        match ty {
            ColumnType::U8 => ColumnData::U8(Vec::with_capacity(n)),
            ColumnType::I16 => ColumnData::I16(Vec::with_capacity(n)),
            ColumnType::I32 => ColumnData::I32(Vec::with_capacity(n)),
            ColumnType::I64 => ColumnData::I64(Vec::with_capacity(n)),
            ColumnType::F32 => ColumnData::F32(Vec::with_capacity(n)),
            ColumnType::F64 => ColumnData::F64(Vec::with_capacity(n)),
        }
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            ColumnData::U8(_) => ColumnType::U8,
            ColumnData::I16(_) => ColumnType::I16,
            ColumnData::I32(_) => ColumnType::I32,
            ColumnData::I64(_) => ColumnType::I64,
            ColumnData::F32(_) => ColumnType::F32,
            ColumnData::F64(_) => ColumnType::F64,
        }
    }

    pub fn len(&self) -> usize {
        each_column!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[allow(clippy::unnecessary_cast)]
    pub fn get(&self, i: usize) -> f64 {
        each_column!(self, v => v[i] as f64)
    }

    #[allow(clippy::unnecessary_cast)]
    pub fn to_f64(&self) -> Vec<f64> {
        each_column!(self, v => v.iter().map(|&x| x as f64).collect())
    }

    fn push_be(&mut self, b: &[u8]) {
        match self {
            ColumnData::U8(v) => v.push(b[0]),
            ColumnData::I16(v) => v.push(i16::from_be_bytes(b.try_into().expect("width"))),
            ColumnData::I32(v) => v.push(i32::from_be_bytes(b.try_into().expect("width"))),
            ColumnData::I64(v) => v.push(i64::from_be_bytes(b.try_into().expect("width"))),
            ColumnData::F32(v) => v.push(f32::from_be_bytes(b.try_into().expect("width"))),
            ColumnData::F64(v) => v.push(f64::from_be_bytes(b.try_into().expect("width"))),
        }
    }

    fn write_be(&self, i: usize, out: &mut Vec<u8>) {
        match self {
            ColumnData::U8(v) => out.push(v[i]),
            ColumnData::I16(v) => out.extend_from_slice(&v[i].to_be_bytes()),
            ColumnData::I32(v) => out.extend_from_slice(&v[i].to_be_bytes()),
            ColumnData::I64(v) => out.extend_from_slice(&v[i].to_be_bytes()),
            ColumnData::F32(v) => out.extend_from_slice(&v[i].to_be_bytes()),
            ColumnData::F64(v) => out.extend_from_slice(&v[i].to_be_bytes()),
        }
    }
}

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    rows: usize,
    pub names: Vec<String>,
    pub columns: Vec<ColumnData>,
}

impl Table {
    /// A table with no columns.
    pub fn empty(rows: usize) -> Self {
        Self { rows, names: Vec::new(), columns: Vec::new() }
    }

    pub fn new(names: Vec<String>, columns: Vec<ColumnData>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Schema(format!("{} names for {} columns", names.len(), columns.len())));
        }
        let rows = columns.first().map_or(0, ColumnData::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Schema("columns differ in length".into()));
        }
        Ok(Self { rows, names, columns })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }
}

/// One binary-table field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: ColumnType,
    /// Byte offset within a row.
    pub offset: usize,
}

/// How rows map to pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    /// Row `k` holds pixel `first + k − 1` (1-based pixel numbers).
    Implicit { first: u64 },
    /// A `PIXEL` column holds 0-based pixel numbers.
    Explicit,
}

/// An opened HEALPix map: parsed headers and byte-offset access to rows.
#[derive(Debug)]
pub struct MapSource<S = FileSource> {
    source: S,
    pub primary: Header,
    pub header: Header,
    data_start: u64,
    row_bytes: u64,
    row_count: u64,
    fields: Vec<Field>,
    resolution: Resolution,
    scheme: Scheme,
    indexing: Indexing,
}

/// Opens a FITS file, reading header blocks only.
pub fn open_map(path: impl AsRef<Path>) -> Result<MapSource<FileSource>> {
    MapSource::new(FileSource::open(path)?)
}

fn read_header<S: ByteSource>(source: &S, mut offset: u64) -> Result<(Header, u64)> {
    let mut header = Header::default();
    let mut block = vec![0u8; BLOCK];
    loop {
        if offset + BLOCK as u64 > source.len() {
            return Err(Error::Parse("header truncated before END".into()));
        }
        source.read_at(offset, &mut block)?;
        offset += BLOCK as u64;
        if header.extend_from_block(&block)? {
            return Ok((header, offset));
        }
    }
}

impl<S: ByteSource> MapSource<S> {
    pub fn new(source: S) -> Result<Self> {
        let (primary, mut offset) = read_header(&source, 0)?;
        if primary.cards.first().map(|c| c.keyword.as_str()) != Some("SIMPLE") {
            return Err(Error::Format("file does not start with SIMPLE".into()));
        }
        offset += header::padded(primary.data_bytes()?);
        let header = loop {
            if offset >= source.len() {
                return Err(Error::Format("no BINTABLE extension".into()));
            }
            let (h, next) = read_header(&source, offset)?;
            if h.text("XTENSION") == Some("BINTABLE") {
                offset = next;
                break h;
            }
            offset = next + header::padded(h.data_bytes()?);
        };

        let row_bytes = header.require_int("NAXIS1")? as u64;
        let row_count = header.require_int("NAXIS2")? as u64;
        let tfields = header.require_int("TFIELDS")?;
        let mut fields = Vec::new();
        let mut width = 0;
        for k in 1..=tfields {
            let tform = header
                .text(&format!("TFORM{k}"))
                .ok_or_else(|| Error::Format(format!("missing TFORM{k}")))?;
            let ty = ColumnType::from_tform(tform)?;
            let name = header.text(&format!("TTYPE{k}")).map_or_else(|| format!("COL{k}"), str::to_string);
            fields.push(Field { name, ty, offset: width });
            width += ty.width();
        }
        if width as u64 != row_bytes {
            return Err(Error::Format(format!("fields take {width} bytes but NAXIS1 = {row_bytes}")));
        }
        if offset + row_bytes * row_count > source.len() {
            return Err(Error::Format("payload truncated".into()));
        }

        let lookup = |k: &str| header.get(k).or_else(|| primary.get(k));
        let resolution = match lookup("NSIDE").and_then(Value::as_i64) {
            Some(n) => Resolution::from_nside(n as u64)?,
            None => infer_resolution(row_count)?,
        };
        let scheme = match lookup("ORDERING").and_then(Value::as_str) {
            Some(o) => o.parse()?,
            None => return Err(Error::Format("missing ORDERING card".into())),
        };
        let explicit = lookup("INDXSCHM").and_then(Value::as_str).is_some_and(|s| s.eq_ignore_ascii_case("EXPLICIT"));
        let indexing = if explicit {
            if !fields.iter().any(|f| f.name.eq_ignore_ascii_case("PIXEL")) {
                return Err(Error::Schema("explicit indexing without a PIXEL column".into()));
            }
            Indexing::Explicit
        } else {
            let first = lookup("FIRSTPIX").and_then(Value::as_i64).unwrap_or(0);
            Indexing::Implicit { first: first as u64 + 1 }
        };

        Ok(Self {
            source,
            primary,
            header,
            data_start: offset,
            row_bytes,
            row_count,
            fields,
            resolution,
            scheme,
            indexing,
        })
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn data_start(&self) -> u64 {
        self.data_start
    }

    pub fn row_bytes(&self) -> u64 {
        self.row_bytes
    }

    pub fn row_count(&self) -> u64 {
        self.row_count
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn column_names(&self) -> Vec<String> {
        self.fields.iter().map(|f| f.name.clone()).collect()
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn nside(&self) -> u64 {
        self.resolution.nside()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn indexing(&self) -> Indexing {
        self.indexing
    }

    /// Byte offset of 1-based row `k`.
    pub fn row_offset(&self, k: u64) -> u64 {
        self.data_start + (k - 1) * self.row_bytes
    }

    fn field(&self, name: &str) -> Result<&Field> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .or_else(|| self.fields.iter().find(|f| f.name.eq_ignore_ascii_case(name)))
            .ok_or_else(|| Error::Schema(format!("no column named {name:?}")))
    }

    /// Reads the given strictly increasing 1-based rows. Only the bytes
    /// between the first and last selected field of the requested rows are
    /// read.
    pub fn read_rows<N: AsRef<str>>(&self, rows: &[u64], columns: &[N]) -> Result<Table> {
        let fields: Vec<Field> = columns.iter().map(|c| self.field(c.as_ref()).cloned()).collect::<Result<_>>()?;
        for (i, &r) in rows.iter().enumerate() {
            if r == 0 || r > self.row_count {
                return Err(Error::Bounds { row: r, rows: self.row_count });
            }
            if i > 0 && rows[i - 1] >= r {
                return Err(Error::Domain("row indices must be strictly increasing".into()));
            }
        }
        if fields.is_empty() {
            return Ok(Table::empty(rows.len()));
        }
        let lo = fields.iter().map(|f| f.offset).min().expect("non-empty") as u64;
        let hi = fields.iter().map(|f| f.offset + f.ty.width()).max().expect("non-empty") as u64;
        let mut data: Vec<ColumnData> = fields.iter().map(|f| ColumnData::with_capacity(f.ty, rows.len())).collect();
        let max_run = (CHUNK / self.row_bytes).max(1);

        let mut buf = Vec::new();
        let mut i = 0;
        while i < rows.len() {
            let mut j = i + 1;
            while j < rows.len() && rows[j] == rows[j - 1] + 1 && ((j - i) as u64) < max_run {
                j += 1;
            }
            let first = rows[i];
            let run = (j - i) as u64;
            let start = self.row_offset(first) + lo;
            let len = (run - 1) * self.row_bytes + (hi - lo);
            buf.resize(len as usize, 0);
            self.source.read_at(start, &mut buf)?;
            for r in 0..run {
                let base = (r * self.row_bytes) as usize;
                for (f, col) in fields.iter().zip(&mut data) {
                    let at = base + f.offset - lo as usize;
                    col.push_be(&buf[at..at + f.ty.width()]);
                }
            }
            i = j;
        }
        Table::new(fields.into_iter().map(|f| f.name).collect(), data)
    }

    /// Reads every row of the named columns.
    pub fn read_all<N: AsRef<str>>(&self, columns: &[N]) -> Result<Table> {
        let rows: Vec<u64> = (1..=self.row_count).collect();
        self.read_rows(&rows, columns)
    }

    /// Simple random sample of `size` rows (see [`Sampler`]); returns the
    /// table and the ascending row indices.
    pub fn sample_rows<N: AsRef<str>>(&self, size: u64, seed: u64, columns: &[N]) -> Result<(Table, Vec<u64>)> {
        if size > self.row_count {
            return Err(Error::Domain(format!("sample of {size} from {} rows", self.row_count)));
        }
        let rows = Sampler::new(seed).sample_without_replacement(self.row_count, size)?;
        Ok((self.read_rows(&rows, columns)?, rows))
    }

    /// 1-based pixel indices of the given rows.
    pub fn pixels_of_rows(&self, rows: &[u64]) -> Result<Vec<u64>> {
        match self.indexing {
            Indexing::Implicit { first } => Ok(rows.iter().map(|r| first + r - 1).collect()),
            Indexing::Explicit => {
                let name = self.field("PIXEL")?.name.clone();
                let t = self.read_rows(rows, &[name])?;
                Ok(t.columns[0].to_f64().into_iter().map(|p| p as u64 + 1).collect())
            }
        }
    }
}

fn infer_resolution(rows: u64) -> Result<Resolution> {
    if rows.is_multiple_of(12) {
        let sq = rows / 12;
        let nside = (sq as f64).sqrt().round() as u64;
        if nside * nside == sq && nside.is_power_of_two() {
            return Resolution::from_nside(nside);
        }
    }
    Err(Error::Format(format!("no NSIDE card and {rows} rows is not a full-sky map")))
}

/// Map metadata written alongside a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapMeta {
    pub resolution: Resolution,
    pub scheme: Scheme,
}

/// Serializes a table as a primary HDU plus a HEALPix BINTABLE.
pub fn encode_fits(table: &Table, meta: MapMeta) -> Result<Vec<u8>> {
    let mut primary = Header::default();
    primary.push("SIMPLE", Value::Logical(true), Some("conforms to FITS standard"));
    primary.push("BITPIX", Value::Integer(8), None);
    primary.push("NAXIS", Value::Integer(0), None);
    primary.push("EXTEND", Value::Logical(true), None);

    let row_bytes: usize = table.columns.iter().map(|c| c.column_type().width()).sum();
    let rows = table.rows() as u64;
    let mut h = Header::default();
    h.push("XTENSION", Value::Text("BINTABLE".into()), Some("binary table extension"));
    h.push("BITPIX", Value::Integer(8), None);
    h.push("NAXIS", Value::Integer(2), None);
    h.push("NAXIS1", Value::Integer(row_bytes as i64), Some("bytes per row"));
    h.push("NAXIS2", Value::Integer(rows as i64), Some("number of rows"));
    h.push("PCOUNT", Value::Integer(0), None);
    h.push("GCOUNT", Value::Integer(1), None);
    h.push("TFIELDS", Value::Integer(table.columns.len() as i64), None);
    for (k, (name, col)) in table.names.iter().zip(&table.columns).enumerate() {
        h.push(&format!("TTYPE{}", k + 1), Value::Text(name.clone()), None);
        h.push(&format!("TFORM{}", k + 1), Value::Text(format!("1{}", col.column_type().code())), None);
    }
    let full_sky = rows == meta.resolution.npix();
    h.push("PIXTYPE", Value::Text("HEALPIX".into()), None);
    h.push("ORDERING", Value::Text(meta.scheme.as_str().to_ascii_uppercase()), None);
    h.push("NSIDE", Value::Integer(meta.resolution.nside() as i64), None);
    h.push("FIRSTPIX", Value::Integer(0), None);
    h.push("LASTPIX", Value::Integer(rows as i64 - 1), None);
    h.push("INDXSCHM", Value::Text("IMPLICIT".into()), None);
    h.push("OBJECT", Value::Text(if full_sky { "FULLSKY" } else { "PARTIAL" }.into()), None);

    let mut out = primary.to_bytes()?;
    out.extend(h.to_bytes()?);
    out.reserve(header::padded(rows * row_bytes as u64) as usize);
    for i in 0..table.rows() {
        for c in &table.columns {
            c.write_be(i, &mut out);
        }
    }
    out.resize(header::padded(out.len() as u64) as usize, 0);
    Ok(out)
}

pub fn write_fits(table: &Table, meta: MapMeta, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_fits(table, meta)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
