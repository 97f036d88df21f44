//! HEALPix checks against an independent geometry oracle built from the
//! HEALPix projection plane.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand::rngs::StdRng;
use spherestat::healpix::{
    convert_index, locate, nest_search, pixel_center, PixelId, Resolution, Scheme,
};
use spherestat::sphere::UnitVector;

mod oracle {
    use super::*;

    fn interleave(x: u64, y: u64) -> u64 {
        let mut out = 0;
        for b in 0..32 {
            out |= ((x >> b) & 1) << (2 * b);
            out |= ((y >> b) & 1) << (2 * b + 1);
        }
        out
    }

    /// Inverse HEALPix projection of plane coordinates `(xs, ys)` to (z, phi).
    fn unproject(xs: f64, ys: f64) -> (f64, f64) {
        if ys.abs() <= FRAC_PI_4 {
            (8.0 / (3.0 * PI) * ys, xs.rem_euclid(2.0 * PI))
        } else {
            let sigma = 2.0 - 4.0 * ys.abs() / PI;
            let z = (1.0 - sigma * sigma / 3.0).copysign(ys);
            let col = ((xs.rem_euclid(2.0 * PI)) / FRAC_PI_2).floor().min(3.0);
            let xc = FRAC_PI_4 + col * FRAC_PI_2;
            let phi = if sigma < 1e-15 { 0.0 } else { xc + (xs.rem_euclid(2.0 * PI) - xc) / sigma };
            (z, phi.rem_euclid(2.0 * PI))
        }
    }

    /// Point at fractional coordinates within a 0-based face.
    pub fn face_point(face: u64, fx: f64, fy: f64) -> UnitVector {
        let row = face / 4;
        let col = (face % 4) as f64;
        let (xc, yc) = match row {
            0 => (FRAC_PI_4 + col * FRAC_PI_2, FRAC_PI_4),
            1 => (col * FRAC_PI_2, 0.0),
            _ => (FRAC_PI_4 + col * FRAC_PI_2, -FRAC_PI_4),
        };
        let xs = xc + FRAC_PI_4 * (fx - fy);
        let ys = yc + FRAC_PI_4 * (fx + fy - 1.0);
        let (z, phi) = unproject(xs, ys);
        let s = (1.0 - z * z).max(0.0).sqrt();
        UnitVector { x: s * phi.cos(), y: s * phi.sin(), z }
    }

    /// Nested-order centres: (1-based nested index, centre).
    pub fn nested_centers(nside: u64) -> Vec<(u64, UnitVector)> {
        let ns = nside as f64;
        let mut out = Vec::new();
        for face in 0..12 {
            for x in 0..nside {
                for y in 0..nside {
                    let idx = face * nside * nside + interleave(x, y) + 1;
                    out.push((idx, face_point(face, (x as f64 + 0.5) / ns, (y as f64 + 0.5) / ns)));
                }
            }
        }
        out.sort_by_key(|(i, _)| *i);
        out
    }

    /// Ring index (1-based) for every nested index, by sorting centres on
    /// decreasing z then increasing longitude.
    pub fn ring_of_nested(nside: u64) -> Vec<u64> {
        let centers = nested_centers(nside);
        let mut order: Vec<usize> = (0..centers.len()).collect();
        let key = |v: &UnitVector| {
            let phi = v.y.atan2(v.x).rem_euclid(2.0 * PI);
            ((-v.z * 1e9).round() as i64, phi)
        };
        order.sort_by(|&a, &b| {
            let (za, pa) = key(&centers[a].1);
            let (zb, pb) = key(&centers[b].1);
            za.cmp(&zb).then(pa.partial_cmp(&pb).unwrap())
        });
        let mut ring = vec![0; centers.len()];
        for (rank, &i) in order.iter().enumerate() {
            ring[i] = rank as u64 + 1;
        }
        ring
    }

    /// Boundary samples from the projection plane, corners included.
    pub fn boundary(nested: u64, nside: u64, per_edge: usize) -> Vec<UnitVector> {
        let p0 = nested - 1;
        let face = p0 / (nside * nside);
        let local = p0 % (nside * nside);
        let (mut x, mut y) = (0u64, 0u64);
        for b in 0..32 {
            x |= ((local >> (2 * b)) & 1) << b;
            y |= ((local >> (2 * b + 1)) & 1) << b;
        }
        let ns = nside as f64;
        let corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1), (x, y)];
        let mut out = Vec::new();
        for w in corners.windows(2) {
            for i in 0..per_edge {
                let t = i as f64 / per_edge as f64;
                let fx = (w[0].0 as f64 * (1.0 - t) + w[1].0 as f64 * t) / ns;
                let fy = (w[0].1 as f64 * (1.0 - t) + w[1].1 as f64 * t) / ns;
                out.push(face_point(face, fx, fy));
            }
        }
        out
    }
}

fn res(nside: u64) -> Resolution {
    Resolution::from_nside(nside).unwrap()
}

fn random_unit(rng: &mut StdRng) -> UnitVector {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    UnitVector { x: s * phi.cos(), y: s * phi.sin(), z }
}

fn close(a: &UnitVector, b: &UnitVector, tol: f64) -> bool {
    (a.x - b.x).abs() < tol && (a.y - b.y).abs() < tol && (a.z - b.z).abs() < tol
}

#[test]
fn nested_centers_match_projection_oracle() {
    for nside in [1, 2, 4, 8, 16] {
        for (idx, c) in oracle::nested_centers(nside) {
            let got = pixel_center(idx, Scheme::Nested, res(nside));
            assert!(close(&got, &c, 1e-12), "nside {nside} pixel {idx}: {got:?} vs {c:?}");
        }
    }
}

#[test]
fn ring_ordering_matches_sorted_centers() {
    for nside in [1, 2, 4, 8, 16] {
        let ring = oracle::ring_of_nested(nside);
        for (i, &r) in ring.iter().enumerate() {
            let n = i as u64 + 1;
            assert_eq!(convert_index(n, Scheme::Nested, Scheme::Ring, res(nside)), r, "nside {nside} nested {n}");
        }
    }
}

#[test]
fn first_nested_pixel_at_nside_2() {
    // Oracle value: the southern-most pixel of face 1 sits on ring 3, second in line.
    let oracle = oracle::ring_of_nested(2)[0];
    assert_eq!(oracle, 14);
    assert_eq!(convert_index(1, Scheme::Nested, Scheme::Ring, res(2)), 14);
}

#[test]
fn ring_centers_follow_ring_formulas() {
    for nside in [1u64, 2, 4, 8] {
        let ns = nside as f64;
        let mut idx = 1;
        for ring in 1..4 * nside {
            let (z, count, phase): (f64, u64, Box<dyn Fn(u64) -> f64>) = if ring < nside {
                let i = ring as f64;
                (1.0 - i * i / (3.0 * ns * ns), 4 * ring, Box::new(move |k| PI / (2.0 * i) * (k as f64 - 0.5)))
            } else if ring <= 3 * nside {
                let s = ((ring - nside + 1) % 2) as f64;
                (
                    4.0 / 3.0 - 2.0 * ring as f64 / (3.0 * ns),
                    4 * nside,
                    Box::new(move |k| PI / (2.0 * ns) * (k as f64 - s / 2.0)),
                )
            } else {
                let i = (4 * nside - ring) as f64;
                (-(1.0 - i * i / (3.0 * ns * ns)), 4 * (4 * nside - ring), Box::new(move |k| PI / (2.0 * i) * (k as f64 - 0.5)))
            };
            for k in 1..=count {
                let c = pixel_center(idx, Scheme::Ring, res(nside));
                // the ring starts at the smallest longitude in [0, 2π)
                let mut phis: Vec<f64> = (1..=count).map(|k| phase(k).rem_euclid(2.0 * PI)).collect();
                phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let phi = phis[(k - 1) as usize];
                let s = (1.0 - z * z).sqrt();
                let want = UnitVector { x: s * phi.cos(), y: s * phi.sin(), z };
                assert!(close(&c, &want, 1e-12), "ring {ring} k {k}");
                idx += 1;
            }
        }
        assert_eq!(idx, res(nside).npix() + 1);
    }
}

#[test]
fn ordering_round_trip_is_identity() {
    for order in 0..=6u8 {
        let r = Resolution::from_order(order).unwrap();
        for p in 1..=r.npix() {
            let ring = convert_index(p, Scheme::Nested, Scheme::Ring, r);
            assert_eq!(convert_index(ring, Scheme::Ring, Scheme::Nested, r), p);
            let a = pixel_center(p, Scheme::Nested, r);
            let b = pixel_center(ring, Scheme::Ring, r);
            assert!(close(&a, &b, 1e-12));
        }
    }
}

#[test]
fn isolatitude_rings() {
    for nside in [1u64, 2, 4, 8, 16] {
        let r = res(nside);
        let mut zs: Vec<f64> = (1..=r.npix()).map(|p| pixel_center(p, Scheme::Nested, r).z).collect();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        zs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(zs.len() as u64, 4 * nside - 1);
    }
}

#[test]
fn neighbours_match_adjacency_oracle() {
    for nside in [1u64, 2, 4, 8] {
        let r = res(nside);
        let bounds: Vec<Vec<UnitVector>> = (1..=r.npix()).map(|p| oracle::boundary(p, nside, 4)).collect();
        let centers: Vec<UnitVector> = (1..=r.npix()).map(|p| pixel_center(p, Scheme::Nested, r)).collect();
        let reach = 4.0 * (4.0 * PI / r.npix() as f64).sqrt();
        for p in 1..=r.npix() {
            let i = (p - 1) as usize;
            let mut want: Vec<u64> = (1..=r.npix())
                .filter(|&q| q != p)
                .filter(|&q| centers[i].distance(&centers[(q - 1) as usize]) < reach)
                .filter(|&q| {
                    bounds[i].iter().any(|a| bounds[(q - 1) as usize].iter().any(|b| a.distance(b) < 1e-7))
                })
                .collect();
            want.sort();
            let mut got: Vec<u64> = PixelId::new(p, Scheme::Nested, r)
                .unwrap()
                .neighbours()
                .iter()
                .map(|n| n.index())
                .collect();
            got.sort();
            assert_eq!(got, want, "nside {nside} pixel {p}");
        }
    }
}

#[test]
fn base_pixel_one_neighbours() {
    // Face 1 touches faces 2 and 4 (edges, north), 5 and 6 (edges, equator),
    // face 3 at the pole and face 9 at the equator point.
    let mut got: Vec<u64> = PixelId::new(1, Scheme::Nested, res(1))
        .unwrap()
        .neighbours()
        .iter()
        .map(|n| n.index())
        .collect();
    got.sort();
    assert_eq!(got, vec![2, 3, 4, 5, 6, 9]);
}

#[test]
fn neighbour_counts_and_symmetry() {
    for nside in [4u64, 8, 16] {
        let r = res(nside);
        let mut sevens = 0;
        let lists: Vec<Vec<u64>> = (1..=r.npix())
            .map(|p| PixelId::new(p, Scheme::Nested, r).unwrap().neighbours().iter().map(|n| n.index()).collect())
            .collect();
        for (i, l) in lists.iter().enumerate() {
            assert!(l.len() == 7 || l.len() == 8, "pixel {} has {}", i + 1, l.len());
            if l.len() == 7 {
                sevens += 1;
            }
            for &q in l {
                assert!(lists[(q - 1) as usize].contains(&(i as u64 + 1)));
            }
        }
        assert_eq!(sevens, 24);
    }
}

#[test]
fn ring_scheme_neighbours_are_ring_indices() {
    let r = res(4);
    let p = PixelId::new(77, Scheme::Ring, r).unwrap();
    let nested = p.to_scheme(Scheme::Nested);
    let mut a: Vec<u64> = p.neighbours().iter().map(|n| n.index()).collect();
    let mut b: Vec<u64> = nested
        .neighbours()
        .iter()
        .map(|n| convert_index(n.index(), Scheme::Nested, Scheme::Ring, r))
        .collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

/// Winding test for a point against a closed boundary loop.
fn inside_loop(p: &UnitVector, loop_: &[UnitVector]) -> bool {
    let mut total = 0.0;
    for i in 0..loop_.len() {
        let a = loop_[i];
        let b = loop_[(i + 1) % loop_.len()];
        // tangent-plane angle subtended at p
        let ta = { let d = p.dot(&a); [a.x - d * p.x, a.y - d * p.y, a.z - d * p.z] };
        let tb = { let d = p.dot(&b); [b.x - d * p.x, b.y - d * p.y, b.z - d * p.z] };
        let cross = [ta[1] * tb[2] - ta[2] * tb[1], ta[2] * tb[0] - ta[0] * tb[2], ta[0] * tb[1] - ta[1] * tb[0]];
        let sin = cross[0] * p.x + cross[1] * p.y + cross[2] * p.z;
        let cos = ta[0] * tb[0] + ta[1] * tb[1] + ta[2] * tb[2];
        total += sin.atan2(cos);
    }
    total.abs() > PI
}

/// Inside test for a loop smaller than a hemisphere around `center`.
fn inside_small_loop(p: &UnitVector, loop_: &[UnitVector], center: &UnitVector) -> bool {
    p.dot(center) > 0.0 && inside_loop(p, loop_)
}

#[test]
fn base_boundaries_partition_the_sphere() {
    let r = res(1);
    let loops: Vec<Vec<UnitVector>> =
        (1..=12).map(|p| PixelId::new(p, Scheme::Nested, r).unwrap().boundary(256).unwrap()).collect();
    let centers: Vec<UnitVector> = (1..=12).map(|p| pixel_center(p, Scheme::Nested, r)).collect();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..5000 {
        let v = random_unit(&mut rng);
        let owners: Vec<u64> = (0..12).filter(|&i| inside_small_loop(&v, &loops[i], &centers[i])).map(|i| i as u64 + 1).collect();
        assert_eq!(owners, vec![locate(&v, Scheme::Nested, r)], "{v:?}");
    }
}

#[test]
fn child_boundary_inside_parent() {
    let coarse = res(1);
    let fine = res(2);
    for p in 1..=fine.npix() {
        let child = PixelId::new(p, Scheme::Nested, fine).unwrap();
        let parent = child.ancestor(1).unwrap();
        assert_eq!(parent.resolution(), coarse);
        let outer = parent.boundary(256).unwrap();
        // pull boundary points slightly toward the child centre
        let c = child.center();
        for b in child.boundary(8).unwrap() {
            let v = UnitVector::new(b.x * 0.999 + c.x * 0.001, b.y * 0.999 + c.y * 0.001, b.z * 0.999 + c.z * 0.001).unwrap();
            assert!(inside_small_loop(&v, &outer, &parent.center()), "child {p}");
        }
    }
}

#[test]
fn nest_search_visit_count() {
    let target = UnitVector::new(0.6, 0.8, 0.0).unwrap();
    assert_eq!(nest_search(&target, res(2048)).visited, 56);
    for order in 0..=10u8 {
        let r = Resolution::from_order(order).unwrap();
        assert_eq!(nest_search(&target, r).visited, 12 + 4 * order as u64);
    }
}

fn brute_force_nearest(v: &UnitVector, r: Resolution) -> (u64, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for p in 1..=r.npix() {
        let d = pixel_center(p, Scheme::Nested, r).dot(v);
        if d > best.1 {
            best = (p, d);
        }
    }
    best
}

#[test]
fn nest_search_benchmark_point_matches_linear_scan() {
    let target = UnitVector::new(0.6, 0.8, 0.0).unwrap();
    let r = res(16);
    let (want, _) = brute_force_nearest(&target, r);
    assert_eq!(nest_search(&target, r).pixel.index(), want);
}

#[test]
fn nest_search_finds_own_center() {
    let r = res(16);
    for p in 1..=r.npix() {
        let c = pixel_center(p, Scheme::Nested, r);
        assert_eq!(nest_search(&c, r).pixel.index(), p);
    }
}

#[test]
fn nest_search_within_one_pixel_of_optimum() {
    let mut rng = StdRng::seed_from_u64(2024);
    for nside in [4u64, 16, 64] {
        let r = res(nside);
        let bound = 2.0 * (1.0 - 2.0 * PI / r.npix() as f64).acos();
        let mut exact = 0;
        let mut worst: f64 = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let v = random_unit(&mut rng);
            let got = nest_search(&v, r).pixel;
            let (want, dot) = brute_force_nearest(&v, r);
            let excess = v.distance(&got.center()) - dot.clamp(-1.0, 1.0).acos();
            worst = worst.max(excess);
            if got.index() == want {
                exact += 1;
            }
            assert!(excess <= bound, "nside {nside}: excess {excess} > {bound}");
        }
        println!("nside {nside}: exact-match rate {:.4}, worst excess {worst:.3e} rad (bound {bound:.3e})", exact as f64 / n as f64);
    }
}

proptest! {
    #[test]
    fn hierarchy_consistency(order in 1u8..12, seed in any::<u64>()) {
        let r = Resolution::from_order(order).unwrap();
        let p = seed % r.npix() + 1;
        let px = PixelId::new(p, Scheme::Nested, r).unwrap();
        for c in px.children().unwrap() {
            prop_assert_eq!(c.ancestor(1).unwrap(), px);
        }
        let parent = px.ancestor(1).unwrap();
        prop_assert!(parent.children().unwrap().contains(&px));
    }

    #[test]
    fn scheme_round_trip(order in 0u8..=29, seed in any::<u64>()) {
        let r = Resolution::from_order(order).unwrap();
        let p = seed % r.npix() + 1;
        let ring = convert_index(p, Scheme::Nested, Scheme::Ring, r);
        prop_assert_eq!(convert_index(ring, Scheme::Ring, Scheme::Nested, r), p);
    }

    #[test]
    fn locate_agrees_across_schemes(z in -1.0f64..1.0, phi in 0.0f64..TAU, order in 0u8..20) {
        let r = Resolution::from_order(order).unwrap();
        let s = (1.0 - z * z).sqrt();
        let v = UnitVector { x: s * phi.cos(), y: s * phi.sin(), z };
        let n = locate(&v, Scheme::Nested, r);
        prop_assert_eq!(convert_index(n, Scheme::Nested, Scheme::Ring, r), locate(&v, Scheme::Ring, r));
    }
}

#[test]
fn nest_search_returns_containing_pixel() {
    let mut rng = StdRng::seed_from_u64(5);
    for order in [0u8, 3, 9, 17, 29] {
        let r = Resolution::from_order(order).unwrap();
        for _ in 0..2000 {
            let v = random_unit(&mut rng);
            assert_eq!(nest_search(&v, r).pixel.index(), locate(&v, Scheme::Nested, r));
        }
    }
}
