//! HEALPix pixel addressing.
//!
//! The sphere is split into 12 equal-area base pixels (faces), each
//! subdivided into `nside × nside` pixels. Faces 1–4 cover the north polar
//! region, 5–8 the equatorial belt and 9–12 the south polar region. All
//! public indices are 1-based; internal arithmetic is 0-based.
//!
//! Inside a face a pixel is addressed by `(x, y)` with `x` increasing towards
//! the north-east and `y` towards the north-west. The nested index of a pixel
//! is `face·nside² + interleave(x, y) + 1`.

mod neighbours;
mod search;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::UnitVector;

pub use search::{nest_search, NestSearch};

/// Highest supported resolution order (`nside = 2^29`).
pub const MAX_ORDER: u8 = 29;

// Ring number (in units of nside) of the southern corner of each face.
const JRLL: [i64; 12] = [2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4];
// Longitude index (in units of π/4) of each face centre.
const JPLL: [i64; 12] = [1, 3, 5, 7, 0, 2, 4, 6, 1, 3, 5, 7];

/// A HEALPix resolution, `nside = 2^order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Resolution {
    order: u8,
}

impl Resolution {
    pub fn from_order(order: u8) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::Addressing(format!("order {order} above {MAX_ORDER}")));
        }
        Ok(Self { order })
    }

    pub fn from_nside(nside: u64) -> Result<Self> {
        if nside == 0 || !nside.is_power_of_two() {
            return Err(Error::Addressing(format!("nside {nside} is not a power of two")));
        }
        Self::from_order(nside.trailing_zeros() as u8)
    }

    pub fn nside(&self) -> u64 {
        1 << self.order
    }

    /// `log2(nside)`.
    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn npix(&self) -> u64 {
        npix(self.nside())
    }

    /// Solid angle of every pixel at this resolution.
    pub fn pixel_area(&self) -> f64 {
        4.0 * PI / self.npix() as f64
    }

    /// Approximate linear pixel size in arcminutes.
    pub fn resolution_arcmin(&self) -> f64 {
        self.pixel_area().sqrt().to_degrees() * 60.0
    }

    /// Finer resolution by `k` levels.
    pub fn finer(&self, k: u8) -> Result<Self> {
        Self::from_order(self.order.saturating_add(k))
    }
}

impl TryFrom<u64> for Resolution {
    type Error = Error;
    fn try_from(nside: u64) -> Result<Self> {
        Self::from_nside(nside)
    }
}

impl From<Resolution> for u64 {
    fn from(r: Resolution) -> u64 {
        r.nside()
    }
}

/// `12·nside²`.
pub fn npix(nside: u64) -> u64 {
    12 * nside * nside
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Ring,
    Nested,
}

impl Scheme {
    pub fn other(self) -> Scheme {
        match self {
            Scheme::Ring => Scheme::Nested,
            Scheme::Nested => Scheme::Ring,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ring => "ring",
            Scheme::Nested => "nested",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ring" => Ok(Scheme::Ring),
            "nested" | "nest" => Ok(Scheme::Nested),
            other => Err(Error::Parse(format!("unknown ordering scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A pixel index (1-based) tied to its scheme and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelId {
    index: u64,
    scheme: Scheme,
    res: Resolution,
}

impl PixelId {
    pub fn new(index: u64, scheme: Scheme, res: Resolution) -> Result<Self> {
        if index == 0 || index > res.npix() {
            return Err(Error::Addressing(format!(
                "pixel {index} outside 1..={} at nside {}",
                res.npix(),
                res.nside()
            )));
        }
        Ok(Self { index, scheme, res })
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn resolution(&self) -> Resolution {
        self.res
    }

    /// The same pixel addressed in `target`.
    pub fn to_scheme(&self, target: Scheme) -> PixelId {
        let index = convert_index(self.index, self.scheme, target, self.res);
        PixelId { index, scheme: target, res: self.res }
    }

    pub fn center(&self) -> UnitVector {
        pixel_center(self.index, self.scheme, self.res)
    }

    fn nested0(&self) -> u64 {
        self.to_scheme(Scheme::Nested).index - 1
    }

    /// The pixel `k` levels up the hierarchy, in nested scheme.
    pub fn ancestor(&self, k: u8) -> Result<PixelId> {
        if k > self.res.order {
            return Err(Error::Domain(format!(
                "cannot go {k} levels up from order {}",
                self.res.order
            )));
        }
        let res = Resolution::from_order(self.res.order - k)?;
        Ok(PixelId { index: (self.nested0() >> (2 * k as u32)) + 1, scheme: Scheme::Nested, res })
    }

    /// The four nested sub-pixels one level down.
    pub fn children(&self) -> Result<[PixelId; 4]> {
        let res = Resolution::from_order(self.res.order + 1)?;
        let base = self.nested0() << 2;
        Ok(std::array::from_fn(|i| PixelId { index: base + i as u64 + 1, scheme: Scheme::Nested, res }))
    }

    /// Edge- and corner-adjacent pixels, in this pixel's scheme.
    pub fn neighbours(&self) -> Vec<PixelId> {
        neighbours::neighbours_nested(self.nested0(), self.res)
            .into_iter()
            .map(|n0| {
                PixelId { index: n0 + 1, scheme: Scheme::Nested, res: self.res }.to_scheme(self.scheme)
            })
            .collect()
    }

    /// Points along the pixel's four edges, `4·samples_per_edge` in total.
    pub fn boundary(&self, samples_per_edge: usize) -> Result<Vec<UnitVector>> {
        pixel_boundary(self.nested0(), self.res, samples_per_edge)
    }
}

/// Converts a 1-based index between schemes. Panics on an invalid index;
/// use [`PixelId::new`] to validate first.
pub fn convert_index(index: u64, from: Scheme, to: Scheme, res: Resolution) -> u64 {
    assert!(index >= 1 && index <= res.npix(), "pixel {index} invalid at nside {}", res.nside());
    if from == to {
        return index;
    }
    let p0 = index - 1;
    match from {
        Scheme::Nested => {
            let (f, x, y) = nest_to_xyf(p0, res.order);
            xyf_to_ring(f, x, y, res.nside()) + 1
        }
        Scheme::Ring => {
            let (f, x, y) = ring_to_xyf(p0, res.nside());
            xyf_to_nest(f, x, y, res.order) + 1
        }
    }
}

/// Validating form of [`convert_index`].
pub fn convert_ordering(p: PixelId, target: Scheme) -> PixelId {
    p.to_scheme(target)
}

/// Centre of a pixel (1-based index). Panics on an invalid index.
pub fn pixel_center(index: u64, scheme: Scheme, res: Resolution) -> UnitVector {
    assert!(index >= 1 && index <= res.npix(), "pixel {index} invalid at nside {}", res.nside());
    let nside = res.nside();
    match scheme {
        Scheme::Ring => {
            let (ring, j) = ring_position(index - 1, nside);
            ring_center(ring, j, nside)
        }
        Scheme::Nested => {
            let (f, x, y) = nest_to_xyf(index - 1, res.order);
            let (ring, j) = xyf_ring_position(f, x, y, nside);
            ring_center(ring, j, nside)
        }
    }
}

/// Pixel containing `v` (exact point location, boundaries resolved by the
/// usual half-open HEALPix convention).
pub fn locate(v: &UnitVector, scheme: Scheme, res: Resolution) -> u64 {
    let (f, x, y) = vec_to_xyf(v, res.nside());
    match scheme {
        Scheme::Nested => xyf_to_nest(f, x, y, res.order) + 1,
        Scheme::Ring => xyf_to_ring(f, x, y, res.nside()) + 1,
    }
}

/// Resolution independent ancestor: `floor((p − 1) / 4^k) + 1`.
pub fn ancestor_index(p: u64, k: u32) -> Result<u64> {
    if p == 0 {
        return Err(Error::Addressing("pixel indices start at 1".into()));
    }
    if k >= 32 {
        return Ok(1);
    }
    Ok(((p - 1) >> (2 * k)) + 1)
}

/// Nested children of `p`: `4(p−1)+1 ..= 4(p−1)+4`.
pub fn children_index(p: u64) -> Result<[u64; 4]> {
    if p == 0 {
        return Err(Error::Addressing("pixel indices start at 1".into()));
    }
    let b = (p - 1) << 2;
    Ok([b + 1, b + 2, b + 3, b + 4])
}

/// All nested pixels at order `j2` lying inside pixel `pix` of order `j1`.
pub fn pixel_window(j1: u8, j2: u8, pix: u64) -> Result<Vec<u64>> {
    if j2 < j1 {
        return Err(Error::Domain(format!("target order {j2} coarser than {j1}")));
    }
    let res1 = Resolution::from_order(j1)?;
    Resolution::from_order(j2)?;
    PixelId::new(pix, Scheme::Nested, res1)?;
    let shift = 2 * (j2 - j1) as u32;
    let lo = (pix - 1) << shift;
    let hi = pix << shift;
    Ok((lo + 1..=hi).collect())
}

// ---- bit interleaving ----

fn spread_bits(v: u64) -> u64 {
    let mut x = v & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

fn compact_bits(v: u64) -> u64 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    (x | (x >> 16)) & 0xFFFF_FFFF
}

pub(crate) fn nest_to_xyf(p0: u64, order: u8) -> (usize, u64, u64) {
    let shift = 2 * order as u32;
    let face = (p0 >> shift) as usize;
    let local = p0 & ((1u64 << shift) - 1);
    (face, compact_bits(local), compact_bits(local >> 1))
}

pub(crate) fn xyf_to_nest(face: usize, x: u64, y: u64, order: u8) -> u64 {
    ((face as u64) << (2 * order as u32)) | spread_bits(x) | (spread_bits(y) << 1)
}

// ---- ring scheme ----

/// `(ring, position)` of a 0-based ring index; ring in `1..4·nside`,
/// position 1-based along the ring.
fn ring_position(p0: u64, nside: u64) -> (u64, u64) {
    let ncap = 2 * nside * (nside - 1);
    let npix = npix(nside);
    if p0 < ncap {
        let ring = (1 + (1 + 2 * p0).isqrt()) >> 1;
        (ring, p0 + 1 - 2 * ring * (ring - 1))
    } else if p0 < npix - ncap {
        let ip = p0 - ncap;
        let ring = ip / (4 * nside) + nside;
        (ring, ip % (4 * nside) + 1)
    } else {
        let ip = npix - p0;
        let nr = (1 + (2 * ip - 1).isqrt()) >> 1;
        (4 * nside - nr, 4 * nr + 1 - (ip - 2 * nr * (nr - 1)))
    }
}

fn ring_center(ring: u64, j: u64, nside: u64) -> UnitVector {
    let ns = nside as f64;
    if ring < nside || ring > 3 * nside {
        let north = ring < nside;
        let nr = if north { ring } else { 4 * nside - ring };
        let t = (nr * nr) as f64 / (3.0 * ns * ns); // 1 − |z|
        let z = if north { 1.0 - t } else { t - 1.0 };
        let sth = (t * (2.0 - t)).sqrt();
        let phi = FRAC_PI_2 / nr as f64 * (j as f64 - 0.5);
        let (sp, cp) = phi.sin_cos();
        UnitVector { x: sth * cp, y: sth * sp, z }
    } else {
        let z = (2 * nside as i64 - ring as i64) as f64 * 2.0 / (3.0 * ns);
        // rings with an odd `ring + nside` start at phi = 0
        let offset = if (ring + nside) % 2 == 1 { 1.0 } else { 0.5 };
        let phi = FRAC_PI_2 / ns * (j as f64 - offset);
        UnitVector::from_z_phi(z, phi)
    }
}

fn xyf_ring_position(face: usize, x: u64, y: u64, nside: u64) -> (u64, u64) {
    let ns = nside as i64;
    let (x, y) = (x as i64, y as i64);
    let jr = JRLL[face] * ns - x - y - 1;
    let (nr, kshift) = if jr < ns {
        (jr, 0)
    } else if jr > 3 * ns {
        (4 * ns - jr, 0)
    } else {
        (ns, (jr - ns) & 1)
    };
    let mut jp = (JPLL[face] * nr + x - y + 1 + kshift) / 2;
    if jp > 4 * ns {
        jp -= 4 * ns;
    } else if jp < 1 {
        jp += 4 * ns;
    }
    (jr as u64, jp as u64)
}

fn xyf_to_ring(face: usize, x: u64, y: u64, nside: u64) -> u64 {
    let (ring, jp) = xyf_ring_position(face, x, y, nside);
    let ncap = 2 * nside * (nside - 1);
    let before = if ring < nside {
        2 * ring * (ring - 1)
    } else if ring > 3 * nside {
        let nr = 4 * nside - ring;
        npix(nside) - 2 * nr * (nr + 1)
    } else {
        ncap + (ring - nside) * 4 * nside
    };
    before + jp - 1
}

fn ring_to_xyf(p0: u64, nside: u64) -> (usize, u64, u64) {
    let ns = nside as i64;
    let (ring, iphi) = ring_position(p0, nside);
    let (ring, iphi) = (ring as i64, iphi as i64);
    let (nr, kshift, face) = if ring < ns {
        (ring, 0, ((iphi - 1) / ring) as usize)
    } else if ring > 3 * ns {
        let nr = 4 * ns - ring;
        (nr, 0, 8 + ((iphi - 1) / nr) as usize)
    } else {
        let ire = ring - ns + 1;
        let irm = 2 * ns + 2 - ire;
        let ifm = (iphi - ire / 2 + ns - 1) / ns;
        let ifp = (iphi - irm / 2 + ns - 1) / ns;
        let face = if ifp == ifm {
            ifp | 4
        } else if ifp < ifm {
            ifp
        } else {
            ifm + 8
        };
        (ns, (ring + ns) & 1, face as usize)
    };
    let irt = ring - JRLL[face] * ns + 1;
    let mut ipt = 2 * iphi - JPLL[face] * nr - kshift - 1;
    if ipt >= 2 * ns {
        ipt -= 8 * ns;
    }
    (face, ((ipt - irt) >> 1) as u64, ((-ipt - irt) >> 1) as u64)
}

// ---- continuous geometry ----

/// Point at fractional face coordinates `(fx, fy) ∈ [0, 1]²`.
pub(crate) fn face_point(fx: f64, fy: f64, face: usize) -> UnitVector {
    let jr = JRLL[face] as f64 - fx - fy;
    let (nr, z, sth) = if jr < 1.0 {
        let t = jr * jr / 3.0;
        (jr, 1.0 - t, Some((t * (2.0 - t)).max(0.0).sqrt()))
    } else if jr > 3.0 {
        let nr = 4.0 - jr;
        let t = nr * nr / 3.0;
        (nr, t - 1.0, Some((t * (2.0 - t)).max(0.0).sqrt()))
    } else {
        (1.0, (2.0 - jr) * 2.0 / 3.0, None)
    };
    let mut tmp = JPLL[face] as f64 * nr + fx - fy;
    if tmp < 0.0 {
        tmp += 8.0;
    }
    if tmp >= 8.0 {
        tmp -= 8.0;
    }
    let phi = if nr < 1e-15 { 0.0 } else { 0.25 * PI * tmp / nr };
    match sth {
        Some(s) => {
            let (sp, cp) = phi.sin_cos();
            UnitVector { x: s * cp, y: s * sp, z }
        }
        None => UnitVector::from_z_phi(z, phi),
    }
}

fn vec_to_xyf(v: &UnitVector, nside: u64) -> (usize, u64, u64) {
    let ns = nside as f64;
    let z = v.z;
    let za = z.abs();
    let tt = {
        let t = v.phi() / FRAC_PI_2;
        if t >= 4.0 {
            0.0
        } else {
            t
        }
    };
    let nsi = nside as i64;
    if za <= 2.0 / 3.0 {
        let temp1 = ns * (0.5 + tt);
        let temp2 = ns * (z * 0.75);
        let jp = (temp1 - temp2) as i64;
        let jm = (temp1 + temp2) as i64;
        let ifp = jp / nsi;
        let ifm = jm / nsi;
        let face = if ifp == ifm {
            (ifp | 4) as usize
        } else if ifp < ifm {
            ifp as usize
        } else {
            (ifm + 8) as usize
        };
        let x = jm & (nsi - 1);
        let y = nsi - (jp & (nsi - 1)) - 1;
        (face, x as u64, y as u64)
    } else {
        let ntt = (tt as i64).min(3);
        let tp = tt - ntt as f64;
        let one_minus_za = if za > 0.99 {
            let s2 = v.x * v.x + v.y * v.y;
            s2 / (1.0 + za)
        } else {
            1.0 - za
        };
        let tmp = ns * (3.0 * one_minus_za).sqrt();
        let jp = ((tp * tmp) as i64).min(nsi - 1);
        let jm = (((1.0 - tp) * tmp) as i64).min(nsi - 1);
        if z >= 0.0 {
            (ntt as usize, (nsi - jm - 1) as u64, (nsi - jp - 1) as u64)
        } else {
            (ntt as usize + 8, jp as u64, jm as u64)
        }
    }
}

fn pixel_boundary(p0: u64, res: Resolution, samples: usize) -> Result<Vec<UnitVector>> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample per edge".into()));
    }
    let ns = res.nside() as f64;
    let (face, x, y) = nest_to_xyf(p0, res.order);
    let xc = (x as f64 + 0.5) / ns;
    let yc = (y as f64 + 0.5) / ns;
    let dc = 0.5 / ns;
    let d = 1.0 / (ns * samples as f64);
    let mut out = Vec::with_capacity(4 * samples);
    // east corner → north → west → south, counter-clockwise seen from outside
    for i in 0..samples {
        out.push(face_point(xc + dc - i as f64 * d, yc + dc, face));
    }
    for i in 0..samples {
        out.push(face_point(xc - dc, yc + dc - i as f64 * d, face));
    }
    for i in 0..samples {
        out.push(face_point(xc - dc + i as f64 * d, yc - dc, face));
    }
    for i in 0..samples {
        out.push(face_point(xc + dc, yc - dc + i as f64 * d, face));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(nside: u64) -> Resolution {
        Resolution::from_nside(nside).unwrap()
    }

    #[test]
    fn npix_values() {
        assert_eq!(npix(1024), 12_582_912);
        assert_eq!(npix(1), 12);
        assert_eq!(npix(2048), 12 * 2048 * 2048);
        assert_eq!(res(2048).npix(), 50_331_648);
    }

    #[test]
    fn invalid_resolutions() {
        assert!(Resolution::from_nside(0).is_err());
        assert!(Resolution::from_nside(3).is_err());
        assert!(Resolution::from_order(30).is_err());
        assert!(PixelId::new(0, Scheme::Ring, res(1)).is_err());
        assert!(PixelId::new(13, Scheme::Ring, res(1)).is_err());
    }

    #[test]
    fn pixel_areas() {
        assert!((res(1).pixel_area() - PI / 3.0).abs() < 1e-15);
        assert!((res(2).pixel_area() - PI / 12.0).abs() < 1e-15);
        assert!((res(1024).pixel_area() - 9.987e-7).abs() < 1e-10);
    }

    #[test]
    fn base_pixels_coincide() {
        for p in 1..=12 {
            assert_eq!(convert_index(p, Scheme::Ring, Scheme::Nested, res(1)), p);
        }
    }

    #[test]
    fn first_ring_center() {
        let c = pixel_center(1, Scheme::Ring, res(1));
        let s = c.to_spherical();
        assert!((s.theta - (2.0f64 / 3.0).acos()).abs() < 1e-14);
        assert!((s.phi - PI / 4.0).abs() < 1e-14);
        let last = pixel_center(12, Scheme::Ring, res(1)).to_spherical();
        assert!((last.theta - (-2.0f64 / 3.0).acos()).abs() < 1e-14);
    }

    #[test]
    fn ancestor_chain() {
        let got: Vec<u64> = (1..=5).map(|k| ancestor_index(1000, k).unwrap()).collect();
        assert_eq!(got, vec![250, 63, 16, 4, 1]);
        for k in 0..6 {
            assert_eq!(ancestor_index(1, k).unwrap(), 1);
            assert_eq!(ancestor_index(4u64.pow(k), k).unwrap(), 1);
        }
        assert!(ancestor_index(0, 1).is_err());
    }

    #[test]
    fn ancestor_depth_checked() {
        let p = PixelId::new(7, Scheme::Nested, res(2)).unwrap();
        assert_eq!(p.ancestor(1).unwrap().index(), 2);
        assert!(matches!(p.ancestor(2), Err(Error::Domain(_))));
    }

    #[test]
    fn children_values() {
        assert_eq!(children_index(1).unwrap(), [1, 2, 3, 4]);
        assert_eq!(children_index(250).unwrap(), [997, 998, 999, 1000]);
    }

    #[test]
    fn windows() {
        assert_eq!(pixel_window(1, 5, 1).unwrap(), (1..=256).collect::<Vec<_>>());
        assert_eq!(pixel_window(3, 3, 17).unwrap(), vec![17]);
        assert_eq!(pixel_window(0, 1, 12).unwrap(), vec![45, 46, 47, 48]);
        assert!(pixel_window(2, 1, 1).is_err());
        assert!(pixel_window(0, 1, 13).is_err());
    }

    #[test]
    fn interleave_round_trip() {
        for &(x, y) in &[(0u64, 0u64), (1, 0), (0, 1), (12345, 678), ((1 << 29) - 1, (1 << 29) - 1)] {
            let p = xyf_to_nest(5, x, y, 29);
            assert_eq!(nest_to_xyf(p, 29), (5, x, y));
        }
    }

    #[test]
    fn locate_own_center() {
        for nside in [1, 2, 4, 16] {
            let r = res(nside);
            for p in 1..=r.npix() {
                for s in [Scheme::Ring, Scheme::Nested] {
                    assert_eq!(locate(&pixel_center(p, s, r), s, r), p);
                }
            }
        }
    }

    #[test]
    fn boundary_on_sphere() {
        let p = PixelId::new(5, Scheme::Nested, res(4)).unwrap();
        let b = p.boundary(7).unwrap();
        assert_eq!(b.len(), 28);
        for v in b {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(p.boundary(0).is_err());
    }
}
