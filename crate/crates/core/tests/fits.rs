use std::fs::OpenOptions;
use std::io::Write;

use proptest::prelude::*;
use spherestat::fits::{
    encode_fits, open_map, write_fits, ColumnData, CountingSource, FileSource, Header, MapMeta,
    MapSource, Table, Value, BLOCK,
};
use spherestat::healpix::{Resolution, Scheme};
use spherestat::sampling::Sampler;
use spherestat::Error;

fn primary() -> Header {
    let mut h = Header::default();
    h.push("SIMPLE", Value::Logical(true), None);
    h.push("BITPIX", Value::Integer(8), None);
    h.push("NAXIS", Value::Integer(0), None);
    h.push("EXTEND", Value::Logical(true), None);
    h
}

/// BINTABLE header with one field per `(name, tform)` plus extra cards.
fn bintable(rows: u64, fields: &[(&str, &str, usize)], extra: &[(&str, Value)]) -> Header {
    let mut h = Header::default();
    h.push("XTENSION", Value::Text("BINTABLE".into()), None);
    h.push("BITPIX", Value::Integer(8), None);
    h.push("NAXIS", Value::Integer(2), None);
    h.push("NAXIS1", Value::Integer(fields.iter().map(|f| f.2).sum::<usize>() as i64), None);
    h.push("NAXIS2", Value::Integer(rows as i64), None);
    h.push("PCOUNT", Value::Integer(0), None);
    h.push("GCOUNT", Value::Integer(1), None);
    h.push("TFIELDS", Value::Integer(fields.len() as i64), None);
    for (k, (name, tform, _)) in fields.iter().enumerate() {
        h.push(&format!("TTYPE{}", k + 1), Value::Text(name.to_string()), None);
        h.push(&format!("TFORM{}", k + 1), Value::Text(tform.to_string()), None);
    }
    for (k, v) in extra {
        h.push(k, v.clone(), None);
    }
    h
}

fn headers(rows: u64, fields: &[(&str, &str, usize)], extra: &[(&str, Value)]) -> Vec<u8> {
    let mut out = primary().to_bytes().unwrap();
    out.extend(bintable(rows, fields, extra).to_bytes().unwrap());
    out
}

fn nested(nside: i64) -> Vec<(&'static str, Value)> {
    vec![("ORDERING", Value::Text("NESTED".into())), ("NSIDE", Value::Integer(nside))]
}

/// A map whose I column holds the row index and Q holds minus it.
fn indexed_map(nside: u64) -> (Table, Vec<u8>) {
    let res = Resolution::from_nside(nside).unwrap();
    let n = res.npix() as usize;
    let table = Table::new(
        vec!["I".into(), "Q".into(), "MASK".into()],
        vec![
            ColumnData::F32((1..=n).map(|k| k as f32).collect()),
            ColumnData::F64((1..=n).map(|k| -(k as f64)).collect()),
            ColumnData::I32((1..=n).map(|k| (k % 3) as i32).collect()),
        ],
    )
    .unwrap();
    let bytes = encode_fits(&table, MapMeta { resolution: res, scheme: Scheme::Nested }).unwrap();
    (table, bytes)
}

/// Header plus a zero payload of the right size, stored sparsely.
fn sparse_map(rows: u64, fields: &[(&str, &str, usize)], nside: i64) -> tempfile::NamedTempFile {
    let h = headers(rows, fields, &nested(nside));
    let payload = rows * fields.iter().map(|f| f.2 as u64).sum::<u64>();
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(&h).unwrap();
    f.flush().unwrap();
    let len = h.len() as u64 + payload.div_ceil(BLOCK as u64) * BLOCK as u64;
    OpenOptions::new().write(true).open(f.path()).unwrap().set_len(len).unwrap();
    f
}

/// Every byte read lies inside one of the requested rows.
fn within_rows(m: &MapSource<CountingSource<Vec<u8>>>, rows: &[u64]) -> bool {
    let extents: Vec<(u64, u64)> = rows.iter().map(|&r| (m.row_offset(r), m.row_offset(r) + m.row_bytes())).collect();
    m.source().ranges().into_iter().all(|(a, b)| {
        let mut pos = a;
        while pos < b {
            match extents.iter().find(|&&(s, e)| pos >= s && pos < e) {
                Some(&(_, e)) => pos = e,
                None => return false,
            }
        }
        true
    })
}

#[test]
fn nside_and_ordering_cards() {
    let mut bytes = headers(12 * 64 * 64, &[("I", "1E", 4)], &nested(64));
    bytes.resize(bytes.len() + (12 * 64 * 64 * 4usize).div_ceil(BLOCK) * BLOCK, 0);
    let m = MapSource::new(bytes).unwrap();
    assert_eq!(m.nside(), 64);
    assert_eq!(m.scheme(), Scheme::Nested);
    assert_eq!(m.column_names(), ["I"]);
    assert_eq!(m.data_start() % BLOCK as u64, 0);
}

#[test]
fn nside_inferred_without_card() {
    let mut bytes = headers(48, &[("I", "E", 4)], &[("ORDERING", Value::Text("RING".into()))]);
    bytes.resize(bytes.len() + BLOCK, 0);
    let m = MapSource::new(bytes).unwrap();
    assert_eq!((m.nside(), m.scheme()), (2, Scheme::Ring));

    let mut odd = headers(50, &[("I", "E", 4)], &[("ORDERING", Value::Text("RING".into()))]);
    odd.resize(odd.len() + BLOCK, 0);
    assert!(matches!(MapSource::new(odd), Err(Error::Format(_))));
}

#[test]
fn open_errors() {
    let only_primary = primary().to_bytes().unwrap();
    assert!(matches!(MapSource::new(only_primary), Err(Error::Format(_))));

    let full = headers(12, &[("I", "1E", 4)], &nested(1));
    let truncated = full[..BLOCK + 100].to_vec();
    assert!(matches!(MapSource::new(truncated), Err(Error::Parse(_))));

    let mut bad = headers(12, &[("I", "1A", 1)], &nested(1));
    bad.resize(bad.len() + BLOCK, 0);
    assert!(matches!(MapSource::new(bad), Err(Error::UnsupportedFormat(_))));

    let mut vector = headers(12, &[("I", "1024E", 4096)], &nested(1));
    vector.resize(vector.len() + 20 * BLOCK, 0);
    assert!(matches!(MapSource::new(vector), Err(Error::UnsupportedFormat(_))));

    let short = headers(12, &[("I", "1E", 4)], &nested(1));
    assert!(matches!(MapSource::new(short), Err(Error::Format(_))));
}

#[test]
fn image_extension_is_skipped() {
    let mut bytes = primary().to_bytes().unwrap();
    let mut img = Header::default();
    img.push("XTENSION", Value::Text("IMAGE".into()), None);
    img.push("BITPIX", Value::Integer(-32), None);
    img.push("NAXIS", Value::Integer(2), None);
    img.push("NAXIS1", Value::Integer(100), None);
    img.push("NAXIS2", Value::Integer(10), None);
    bytes.extend(img.to_bytes().unwrap());
    bytes.resize(bytes.len() + 2 * BLOCK, 0xff);
    bytes.extend(bintable(12, &[("I", "1E", 4)], &nested(1)).to_bytes().unwrap());
    let start = bytes.len();
    for k in 1..=12u32 {
        bytes.extend((k as f32).to_be_bytes());
    }
    bytes.resize(start + BLOCK, 0);
    let m = MapSource::new(bytes).unwrap();
    assert_eq!(m.read_all(&["I"]).unwrap().columns[0].to_f64(), (1..=12).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn big_endian_patterns() {
    let mut bytes = headers(12, &[("I", "1E", 4), ("J", "1J", 4), ("D", "1D", 8), ("S", "1I", 2)], &nested(1));
    let start = bytes.len();
    for _ in 0..12 {
        bytes.extend([0x3f, 0x80, 0x00, 0x00]);
        bytes.extend([0xff, 0xff, 0xff, 0xfe]);
        bytes.extend([0x40, 0x09, 0x21, 0xfb, 0x54, 0x44, 0x2d, 0x18]);
        bytes.extend([0x01, 0x02]);
    }
    bytes.resize(start + BLOCK, 0);
    let m = MapSource::new(bytes).unwrap();
    let t = m.read_rows(&[5], &["I", "J", "D", "S"]).unwrap();
    assert_eq!(t.columns[0], ColumnData::F32(vec![1.0]));
    assert_eq!(t.columns[1], ColumnData::I32(vec![-2]));
    assert_eq!(t.columns[2], ColumnData::F64(vec![std::f64::consts::PI]));
    assert_eq!(t.columns[3], ColumnData::I16(vec![258]));
}

#[test]
fn selective_rows_match_full_read() {
    let (table, bytes) = indexed_map(1);
    let m = MapSource::new(CountingSource::new(bytes)).unwrap();
    let all = m.read_all(&["I", "Q", "MASK"]).unwrap();
    assert_eq!(all, table);
    assert_eq!(all.column("I").unwrap().to_f64(), (1..=12).map(f64::from).collect::<Vec<_>>());

    m.source().reset();
    let rows = [1, 2, 4, 7, 11];
    let sel = m.read_rows(&rows, &["I"]).unwrap();
    assert_eq!(sel.column("I").unwrap().to_f64(), [1.0, 2.0, 4.0, 7.0, 11.0]);
    assert!(within_rows(&m, &rows));
    assert_eq!(m.read_rows(&[5], &["I", "Q", "MASK"]).unwrap().column("Q").unwrap().to_f64(), [-5.0]);
}

#[test]
fn row_errors_and_empty_selection() {
    let (_, bytes) = indexed_map(1);
    let m = MapSource::new(bytes).unwrap();
    assert!(matches!(m.read_rows(&[0], &["I"]), Err(Error::Bounds { .. })));
    assert!(matches!(m.read_rows(&[13], &["I"]), Err(Error::Bounds { row: 13, rows: 12 })));
    assert!(matches!(m.read_rows(&[1], &["T"]), Err(Error::Schema(_))));
    assert!(matches!(m.read_rows(&[3, 2], &["I"]), Err(Error::Domain(_))));
    let none: [&str; 0] = [];
    let t = m.read_all(&none).unwrap();
    assert_eq!((t.rows(), t.columns.len()), (12, 0));
    assert_eq!(m.read_all(&["i"]).unwrap().names, ["I"]);
}

#[test]
fn file_round_trip_and_block_arithmetic() {
    let (table, _) = indexed_map(4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.fits");
    let meta = MapMeta { resolution: Resolution::from_nside(4).unwrap(), scheme: Scheme::Ring };
    write_fits(&table, meta, &path).unwrap();
    let m = open_map(&path).unwrap();
    assert_eq!((m.nside(), m.scheme(), m.row_count(), m.row_bytes()), (4, Scheme::Ring, 192, 16));
    assert_eq!(m.read_all(&["I", "Q", "MASK"]).unwrap(), table);
    assert_eq!(m.header.text("PIXTYPE"), Some("HEALPIX"));
    let size = std::fs::metadata(&path).unwrap().len();
    let header_blocks = m.data_start();
    assert_eq!(header_blocks % BLOCK as u64, 0);
    assert_eq!(size, header_blocks + (192u64 * 16).div_ceil(BLOCK as u64) * BLOCK as u64);
    assert_eq!(m.pixels_of_rows(&[1, 192]).unwrap(), [1, 192]);
}

#[test]
fn header_open_reads_no_payload() {
    let f = sparse_map(50_000_000, &[("I", "1E", 4)], 2048);
    let m = MapSource::new(CountingSource::new(FileSource::open(f.path()).unwrap())).unwrap();
    assert_eq!(m.row_count(), 50_000_000);
    assert!(m.source().ranges().iter().all(|&(_, end)| end <= m.data_start()));
    assert!(m.source().bytes_read() <= m.data_start());
}

#[test]
fn sampling_reads_a_small_fraction() {
    let fields = [("I_STOKES", "1E", 4), ("Q_STOKES", "1E", 4), ("U_STOKES", "1E", 4), ("TMASK", "1E", 4), ("PMASK", "1E", 4)];
    let rows = 12 * 1024 * 1024;
    let f = sparse_map(rows, &fields, 1024);
    let m = MapSource::new(CountingSource::new(FileSource::open(f.path()).unwrap())).unwrap();
    m.source().reset();
    let (t, idx) = m.sample_rows(200_000, 42, &["I_STOKES"]).unwrap();
    assert_eq!((t.rows(), idx.len()), (200_000, 200_000));
    let payload = rows * m.row_bytes();
    let fraction = m.source().bytes_read() as f64 / payload as f64;
    println!("sampled 2e5 of {rows} rows, read {:.4}% of payload", 100.0 * fraction);
    assert!(fraction < 0.01);
    let (_, again) = m.sample_rows(200_000, 42, &["I_STOKES"]).unwrap();
    assert_eq!(idx, again);
}

#[test]
fn sample_edge_cases() {
    let (table, bytes) = indexed_map(1);
    let m = MapSource::new(bytes).unwrap();
    let (t, idx) = m.sample_rows(12, 5, &["I", "Q", "MASK"]).unwrap();
    assert_eq!(idx, (1..=12).collect::<Vec<_>>());
    assert_eq!(t, table);
    assert!(matches!(m.sample_rows(13, 5, &["I"]), Err(Error::Domain(_))));
    let expected = Sampler::new(5).sample_without_replacement(12, 4).unwrap();
    assert_eq!(m.sample_rows(4, 5, &["I"]).unwrap().1, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subset_reads_are_restrictions(mask in prop::collection::vec(any::<bool>(), 192), cols in 1usize..4) {
        let (table, bytes) = indexed_map(4);
        let names = ["I", "Q", "MASK"];
        let m = MapSource::new(CountingSource::new(bytes)).unwrap();
        let rows: Vec<u64> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64 + 1).collect();
        m.source().reset();
        let t = m.read_rows(&rows, &names[..cols]).unwrap();
        for (c, name) in names[..cols].iter().enumerate() {
            let full = table.column(name).unwrap();
            for (i, &r) in rows.iter().enumerate() {
                prop_assert_eq!(t.columns[c].get(i).to_bits(), full.get(r as usize - 1).to_bits());
            }
        }
        prop_assert!(within_rows(&m, &rows));
    }
}
