use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use spherestat::fits::{encode_fits, ColumnData, MapMeta, MapSource, Table};
use spherestat::frame::{assign_pixels, bind_frames, frame_from_map, Axis, FrameMeta, Mode, RowSelection, SkyFrame};
use spherestat::healpix::{pixel_center, Resolution, Scheme};
use spherestat::sphere::SphericalPoint;
use spherestat::window::{Window, WindowSet};
use spherestat::Error;

fn res(nside: u64) -> Resolution {
    Resolution::from_nside(nside).unwrap()
}

fn sp(theta: f64, phi: f64) -> SphericalPoint {
    SphericalPoint { theta, phi }
}

fn map(nside: u64, scheme: Scheme) -> MapSource<Vec<u8>> {
    let n = res(nside).npix() as usize;
    let t = Table::new(
        vec!["I".into(), "TMASK".into()],
        vec![ColumnData::F32((1..=n).map(|k| k as f32).collect()), ColumnData::U8(vec![1; n])],
    )
    .unwrap();
    MapSource::new(encode_fits(&t, MapMeta { resolution: res(nside), scheme }).unwrap()).unwrap()
}

/// Full nside frame whose I column is the pixel index.
fn indexed_frame(nside: u64) -> SkyFrame {
    frame_from_map(&map(nside, Scheme::Nested), &RowSelection::All, &["I"]).unwrap()
}

fn annulus() -> WindowSet {
    let c = sp(FRAC_PI_2, 0.0);
    WindowSet::new(vec![Window::disc(c, 0.5).unwrap().complemented(), Window::disc(c, 1.0).unwrap()])
}

#[test]
fn frames_from_map() {
    let m = map(1, Scheme::Ring);
    let f = frame_from_map(&m, &RowSelection::All, &["I"]).unwrap();
    assert_eq!(f.pixels(), (1..=12).collect::<Vec<_>>());
    assert_eq!((f.mode(), f.scheme()), (Mode::Cmb, Scheme::Ring));
    let sel = frame_from_map(&m, &RowSelection::Rows(vec![1, 2, 4, 7, 11]), &["I"]).unwrap();
    assert_eq!(sel.pixels(), [1, 2, 4, 7, 11]);
    assert_eq!(sel.column("I").unwrap(), [1.0, 2.0, 4.0, 7.0, 11.0]);
    let s1 = frame_from_map(&m, &RowSelection::Sample { size: 4, seed: 3 }, &["I"]).unwrap();
    let s2 = frame_from_map(&m, &RowSelection::Sample { size: 4, seed: 3 }, &["I"]).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(s1.rows(), 4);
    assert_eq!(s1.mode(), Mode::Cmb);
}

#[test]
fn assign_centres_and_collisions() {
    let r = res(4);
    let centres: Vec<_> = (1..=r.npix()).map(|p| pixel_center(p, Scheme::Nested, r).to_spherical()).collect();
    let f = assign_pixels(&centres, vec![], vec![], r, true).unwrap();
    assert_eq!(f.pixels(), (1..=r.npix()).collect::<Vec<_>>());

    let c = pixel_center(17, Scheme::Nested, r).to_spherical();
    let pts = vec![c, sp(c.theta + 1e-3, c.phi), sp(0.3, 1.0)];
    let hp = assign_pixels(&pts, vec!["v".into()], vec![vec![1.0, 2.0, 3.0]], r, false).unwrap();
    assert_eq!(hp.mode(), Mode::Hp);
    assert_eq!(&hp.pixels()[..2], [17, 17]);
    assert_eq!(hp.explicit_coords().unwrap(), pts.as_slice());
    assert!((hp.geo_area() - 2.0 * r.pixel_area()).abs() < 1e-15);
    let err = assign_pixels(&pts, vec![], vec![], r, true).unwrap_err();
    assert!(matches!(err, Error::Uniqueness { rows } if rows == [1, 2]));
}

#[test]
fn many_points_at_high_resolution() {
    let mut rng = StdRng::seed_from_u64(1);
    let pts: Vec<_> = (0..13_000)
        .map(|_| sp((1.0 - 2.0 * rng.random::<f64>()).acos(), 2.0 * PI * rng.random::<f64>()))
        .collect();
    let vals = vec![(0..13_000).map(f64::from).collect()];
    let f = assign_pixels(&pts, vec!["pop".into()], vals, res(1024), false).unwrap();
    assert_eq!(f.rows(), 13_000);
    for (p, &pix) in pts.iter().zip(f.pixels()).take(200) {
        let d = pixel_center(pix, Scheme::Nested, res(1024)).distance(&p.to_vector());
        assert!(d < 2.0 * res(1024).pixel_area().sqrt());
    }
}

#[test]
fn disc_extraction_area() {
    let f = indexed_frame(64);
    assert_eq!(f.extract_window(&WindowSet::full()).pixels(), f.pixels());
    let d = f.extract_window(&Window::disc(sp(FRAC_PI_2, 0.0), 1.0).unwrap().into());
    let rel = (d.geo_area() - 2.8884).abs() / 2.8884;
    assert!(rel < 0.02, "relative error {rel}");
    assert_eq!(d.windows.len(), 1);
}

#[test]
fn annulus_covered_area_at_nside_1024() {
    let r = res(1024);
    let f = SkyFrame::full_sky(r, Scheme::Nested);
    let a = f.extract_window(&annulus());
    let area = a.geo_area();
    // one ring of boundary pixels along both circles
    let boundary = 2.0 * PI * (0.5f64.sin() + 1f64.sin()) / r.pixel_area().sqrt();
    println!("annulus covered area {area:.6}, {} pixels", a.rows());
    assert!((area - 2.11917).abs() < boundary * r.pixel_area(), "{area}");
    let s = a.summarize();
    assert_eq!(s.windows.len(), 2);
    assert_eq!(s.windows[0].kind, "minus.disc");
    assert!((s.windows[0].area - 11.7972).abs() < 5e-5);
    assert!((s.windows[1].area - 2.8884).abs() < 5e-5);
    assert_eq!(s.covered_area, area);
}

#[test]
fn sampling_is_spatially_uniform() {
    let f = SkyFrame::full_sky(res(128), Scheme::Nested);
    let bins = 16;
    let bin_of = |p: u64| {
        let phi = pixel_center(p, Scheme::Nested, res(128)).phi();
        ((phi / (2.0 * PI) * bins as f64) as usize).min(bins - 1)
    };
    let mut population = vec![0f64; bins];
    for &p in f.pixels() {
        population[bin_of(p)] += 1.0;
    }
    let n = 100_000;
    let s = f.sample(n, 2024).unwrap();
    assert_eq!(s, f.sample(n, 2024).unwrap());
    let mut observed = vec![0f64; bins];
    for &p in s.pixels() {
        observed[bin_of(p)] += 1.0;
    }
    let total = f.rows() as f64;
    let chi2: f64 = observed
        .iter()
        .zip(&population)
        .map(|(o, pop)| {
            let e = n as f64 * pop / total;
            (o - e).powi(2) / e
        })
        .sum();
    // 99.9% point of chi-square with 15 degrees of freedom
    assert!(chi2 < 37.70, "chi2 = {chi2}");
    assert_eq!(f.sample(f.rows(), 1).unwrap(), f);
    assert!(matches!(f.sample(f.rows() + 1, 1), Err(Error::Domain(_))));
}

#[test]
fn binding() {
    let f = indexed_frame(8);
    let north = f.extract_window(&Window::disc(sp(0.0, 0.0), 0.6).unwrap().into());
    let south = f.extract_window(&Window::disc(sp(PI, 0.0), 0.6).unwrap().into());
    let both = bind_frames(&[north.clone(), south.clone()], Axis::Rows).unwrap();
    assert_eq!(both.rows(), north.rows() + south.rows());
    assert_eq!((both.mode(), both.demoted), (Mode::Cmb, false));

    let twice = bind_frames(&[north.clone(), north.clone()], Axis::Rows).unwrap();
    assert_eq!((twice.mode(), twice.demoted), (Mode::Hp, true));

    let mask = frame_from_map(&map(8, Scheme::Nested), &RowSelection::All, &["TMASK"]).unwrap();
    let wide = bind_frames(&[f.clone(), mask], Axis::Columns).unwrap();
    assert_eq!(wide.names(), ["I", "TMASK"]);
    assert!(matches!(bind_frames(&[f.clone(), f.clone()], Axis::Columns), Err(Error::Schema(_))));
    assert!(matches!(bind_frames(&[f.clone(), north.clone()], Axis::Columns), Err(Error::Schema(_))));
    let other = indexed_frame(4);
    assert!(matches!(bind_frames(&[f.clone(), other], Axis::Rows), Err(Error::Addressing(_))));
    let renamed = frame_from_map(&map(8, Scheme::Nested), &RowSelection::All, &["TMASK"]).unwrap();
    assert!(matches!(bind_frames(&[f, renamed], Axis::Rows), Err(Error::Schema(_))));

    // splitting by provenance recovers the inputs
    let back_north = both.extract_window(&north.windows[0].clone().into());
    assert_eq!(back_north.pixels(), north.pixels());
    assert_eq!(back_north.column("I").unwrap(), north.column("I").unwrap());
}

#[test]
fn csv_round_trip() {
    let f = indexed_frame(2).extract_window(&Window::disc(sp(1.0, 1.0), 1.0).unwrap().into());
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("pix,theta,phi,I\n"));
    let meta: FrameMeta = serde_json::from_str(&serde_json::to_string(&f.meta()).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(f.meta()).unwrap(), serde_json::json!({"nside": 2, "ordering": "nested", "mode": "cmb"}));
    let back = SkyFrame::read_csv(buf.as_slice(), meta).unwrap();
    assert_eq!(back.pixels(), f.pixels());
    assert_eq!(back.column("I").unwrap(), f.column("I").unwrap());

    let pts = vec![sp(0.1, 0.2), sp(0.1000001, 0.2)];
    let hp = assign_pixels(&pts, vec!["v".into()], vec![vec![0.5, -1.25e-7]], res(2), false).unwrap();
    let mut buf = Vec::new();
    hp.write_csv(&mut buf).unwrap();
    let back = SkyFrame::read_csv(buf.as_slice(), hp.meta()).unwrap();
    assert_eq!(back.explicit_coords().unwrap(), pts.as_slice());
    assert_eq!(back.column("v").unwrap(), [0.5, -1.25e-7]);
    assert!(SkyFrame::read_csv("a,b\n1,2\n".as_bytes(), hp.meta()).is_err());
}

#[test]
fn scheme_conversion_keeps_positions() {
    let f = indexed_frame(4).extract_window(&Window::disc(sp(2.0, 4.0), 0.7).unwrap().into());
    let ring = f.to_scheme(Scheme::Ring);
    for (a, b) in f.pixel_centers().iter().zip(ring.pixel_centers()) {
        assert!(a.distance(&b) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extraction_invariants(theta in 0.0f64..PI, phi in 0.0f64..TAU, r1 in 0.05f64..1.5, dr in 0.0f64..1.0) {
        let f = indexed_frame(16);
        let small: WindowSet = Window::disc(sp(theta, phi), r1).unwrap().into();
        let big: WindowSet = Window::disc(sp(theta, phi), (r1 + dr).min(3.1)).unwrap().into();
        let a = f.extract_window(&small);
        let again = a.extract_window(&small);
        prop_assert_eq!(again.pixels(), a.pixels());
        prop_assert!(a.geo_area() <= f.extract_window(&big).geo_area());
        let rest = f.extract_window(&small.complement().unwrap());
        prop_assert_eq!(a.rows() + rest.rows(), f.rows());
        let mut all: Vec<u64> = a.pixels().iter().chain(rest.pixels()).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, f.pixels().to_vec());
        prop_assert_eq!(a.column("I").unwrap().len(), a.rows());
    }
}
