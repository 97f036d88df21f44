use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use spherestat::healpix::{pixel_center, Resolution, Scheme};
use spherestat::sphere::{
    extremal_distance, geodesic_distance, hms_to_degrees, CoordSystem, Coords, Extremum, GeographicPoint,
    SphericalPoint, UnitVector,
};

#[test]
fn hms_examples() {
    assert_eq!(hms_to_degrees(0.0, 0.0, 0.0).unwrap(), 0.0);
    assert_eq!(hms_to_degrees(12.0, 0.0, 0.0).unwrap(), 180.0);
    assert_eq!(hms_to_degrees(6.0, 30.0, 0.0).unwrap(), 97.5);
    assert!(hms_to_degrees(24.0, 0.0, 0.0).is_err());
    assert!(hms_to_degrees(1.0, 60.0, 0.0).is_err());
    assert!(hms_to_degrees(1.0, 0.0, -1.0).is_err());
}

#[test]
fn distance_examples() {
    let x = UnitVector::new(1.0, 0.0, 0.0).unwrap();
    let y = UnitVector::new(0.0, 1.0, 0.0).unwrap();
    assert_eq!(geodesic_distance(&x, &x), 0.0);
    assert!((geodesic_distance(&x, &y) - FRAC_PI_2).abs() < 1e-15);
    assert!((geodesic_distance(&x, &x.antipode()) - PI).abs() < 1e-15);
}

#[test]
fn extremal_examples() {
    let d = extremal_distance(&[UnitVector::NORTH_POLE], Some(&UnitVector::SOUTH_POLE), Extremum::Max).unwrap();
    assert!((d - PI).abs() < 1e-15);
    assert!(extremal_distance(&[], None, Extremum::Max).is_err());
    assert!(extremal_distance(&[UnitVector::NORTH_POLE], None, Extremum::Max).is_err());

    let res = Resolution::from_nside(1).unwrap();
    let centers: Vec<_> = (1..=12).map(|p| pixel_center(p, Scheme::Nested, res)).collect();
    let mut max: f64 = 0.0;
    let mut min = f64::INFINITY;
    for i in 0..12 {
        for j in 0..12 {
            if i != j {
                let d = geodesic_distance(&centers[i], &centers[j]);
                max = max.max(d);
                min = min.min(d);
            }
        }
    }
    assert!((extremal_distance(&centers, None, Extremum::Max).unwrap() - max).abs() < 1e-15);
    assert!((extremal_distance(&centers, None, Extremum::Min).unwrap() - min).abs() < 1e-15);
}

#[test]
fn geographic_conversions() {
    let g = Coords::Geographic { lon: -FRAC_PI_2, lat: 0.25 }.convert(CoordSystem::Spherical).unwrap();
    let Coords::Spherical { theta, phi } = g else { panic!() };
    assert!((theta - (FRAC_PI_2 - 0.25)).abs() < 1e-15);
    assert!((phi - 1.5 * PI).abs() < 1e-15);
    let back = GeographicPoint::from(SphericalPoint { theta, phi });
    assert!((back.lon + FRAC_PI_2).abs() < 1e-15 && (back.lat - 0.25).abs() < 1e-15);
}

fn point() -> impl Strategy<Value = UnitVector> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter_map("zero vector", |(x, y, z)| UnitVector::new(x, y, z).ok())
}

proptest! {
    #[test]
    fn cartesian_round_trip(v in point()) {
        let s = Coords::Cartesian { x: v.x, y: v.y, z: v.z }.convert(CoordSystem::Spherical).unwrap();
        let Coords::Cartesian { x, y, z } = s.convert(CoordSystem::Cartesian).unwrap() else { unreachable!() };
        prop_assert!((x - v.x).abs() < 1e-12 && (y - v.y).abs() < 1e-12 && (z - v.z).abs() < 1e-12);
        let Coords::Geographic { lon, lat } = s.convert(CoordSystem::Geographic).unwrap() else { unreachable!() };
        let again = Coords::Geographic { lon, lat }.convert(CoordSystem::Spherical).unwrap();
        let (Coords::Spherical { theta: t1, phi: p1 }, Coords::Spherical { theta: t2, phi: p2 }) = (s, again) else { unreachable!() };
        prop_assert!((t1 - t2).abs() < 1e-12);
        let dphi = (p1 - p2).abs();
        prop_assert!(dphi < 1e-12 || (dphi - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn spherical_ranges(v in point()) {
        let s = v.to_spherical();
        prop_assert!((0.0..=PI).contains(&s.theta));
        prop_assert!((0.0..2.0 * PI).contains(&s.phi));
    }

    #[test]
    fn metric_axioms(a in point(), b in point(), c in point()) {
        let ab = geodesic_distance(&a, &b);
        prop_assert!((0.0..=PI).contains(&ab));
        prop_assert_eq!(ab, geodesic_distance(&b, &a));
        prop_assert!(geodesic_distance(&a, &a) < 1e-7);
        prop_assert!(geodesic_distance(&a, &c) <= ab + geodesic_distance(&b, &c) + 1e-12);
    }
}
