//! Points on the unit sphere and the coordinate systems used to address them.
//!
//! Three representations are supported:
//!
//! * [`UnitVector`]: cartesian `(x, y, z)` with unit norm,
//! * [`SphericalPoint`]: colatitude `theta ∈ [0, π]` and longitude `phi ∈ [0, 2π)`,
//! * [`GeographicPoint`]: longitude and latitude, both in radians.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the unit sphere in cartesian form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector {
    pub const NORTH_POLE: UnitVector = UnitVector { x: 0.0, y: 0.0, z: 1.0 };
    pub const SOUTH_POLE: UnitVector = UnitVector { x: 0.0, y: 0.0, z: -1.0 };

    /// Normalizes `(x, y, z)` onto the sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::Domain(format!("non-finite vector ({x}, {y}, {z})")));
        }
        let n = (x * x + y * y + z * z).sqrt();
        if n == 0.0 {
            return Err(Error::Domain("zero vector has no direction".into()));
        }
        Ok(Self { x: x / n, y: y / n, z: z / n })
    }

    /// Builds a unit vector from colatitude and longitude without range checks.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { x: st * cp, y: st * sp, z: ct }
    }

    /// Builds a unit vector from `z = cos(theta)` and longitude.
    pub(crate) fn from_z_phi(z: f64, phi: f64) -> Self {
        let st = ((1.0 - z) * (1.0 + z)).max(0.0).sqrt();
        let (sp, cp) = phi.sin_cos();
        Self { x: st * cp, y: st * sp, z }
    }

    pub fn dot(&self, o: &UnitVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Unnormalized cross product.
    pub fn cross(&self, o: &UnitVector) -> [f64; 3] {
        [
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        ]
    }

    pub fn antipode(&self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn theta(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    /// Longitude in `[0, 2π)`; `0` at the poles.
    pub fn phi(&self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            return 0.0;
        }
        let p = self.y.atan2(self.x);
        if p < 0.0 {
            let q = p + TAU;
            if q >= TAU {
                0.0
            } else {
                q
            }
        } else {
            p
        }
    }

    pub fn to_spherical(&self) -> SphericalPoint {
        SphericalPoint { theta: self.theta(), phi: self.phi() }
    }

    /// Great-circle angle to `other`, in radians.
    pub fn distance(&self, other: &UnitVector) -> f64 {
        geodesic_distance(self, other)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Colatitude/longitude pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    /// Validates `theta ∈ [0, π]` and wraps `phi` into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::Domain(format!("non-finite angles ({theta}, {phi})")));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("colatitude {theta} outside [0, π]")));
        }
        Ok(Self { theta, phi: wrap_longitude(phi) })
    }

    pub fn to_vector(&self) -> UnitVector {
        UnitVector::from_angles(self.theta, self.phi)
    }
}

/// Longitude/latitude pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeographicPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeographicPoint {
    pub fn to_spherical(&self) -> Result<SphericalPoint> {
        if !self.lon.is_finite() || !self.lat.is_finite() {
            return Err(Error::Domain(format!("non-finite angles ({}, {})", self.lon, self.lat)));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.lat) {
            return Err(Error::Domain(format!("latitude {} outside [-π/2, π/2]", self.lat)));
        }
        let theta = FRAC_PI_2 - self.lat;
        // canonical longitude at the poles
        let phi = if theta == 0.0 || theta == PI { 0.0 } else { wrap_longitude(self.lon) };
        Ok(SphericalPoint { theta, phi })
    }
}

impl From<SphericalPoint> for GeographicPoint {
    fn from(p: SphericalPoint) -> Self {
        let lon = if p.phi > PI { p.phi - TAU } else { p.phi };
        GeographicPoint { lon, lat: FRAC_PI_2 - p.theta }
    }
}

/// A point tagged with its coordinate system, for generic conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum Coords {
    Cartesian { x: f64, y: f64, z: f64 },
    Spherical { theta: f64, phi: f64 },
    Geographic { lon: f64, lat: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordSystem {
    Cartesian,
    Spherical,
    Geographic,
}

impl Coords {
    pub fn system(&self) -> CoordSystem {
        match self {
            Coords::Cartesian { .. } => CoordSystem::Cartesian,
            Coords::Spherical { .. } => CoordSystem::Spherical,
            Coords::Geographic { .. } => CoordSystem::Geographic,
        }
    }

    fn to_spherical(self) -> Result<SphericalPoint> {
        match self {
            Coords::Cartesian { x, y, z } => Ok(UnitVector::new(x, y, z)?.to_spherical()),
            Coords::Spherical { theta, phi } => SphericalPoint::new(theta, phi),
            Coords::Geographic { lon, lat } => GeographicPoint { lon, lat }.to_spherical(),
        }
    }

    /// Re-expresses the point in `to`. Cartesian input is normalized first.
    pub fn convert(self, to: CoordSystem) -> Result<Coords> {
        if let (Coords::Cartesian { x, y, z }, CoordSystem::Cartesian) = (self, to) {
            let v = UnitVector::new(x, y, z)?;
            return Ok(Coords::Cartesian { x: v.x, y: v.y, z: v.z });
        }
        let s = self.to_spherical()?;
        Ok(match to {
            CoordSystem::Spherical => Coords::Spherical { theta: s.theta, phi: s.phi },
            CoordSystem::Cartesian => {
                let v = s.to_vector();
                Coords::Cartesian { x: v.x, y: v.y, z: v.z }
            }
            CoordSystem::Geographic => {
                let g = GeographicPoint::from(s);
                Coords::Geographic { lon: g.lon, lat: g.lat }
            }
        })
    }
}

pub(crate) fn wrap_longitude(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Sexagesimal hours, minutes and seconds of right ascension to degrees.
pub fn hms_to_degrees(h: f64, m: f64, s: f64) -> Result<f64> {
    if !(0.0..24.0).contains(&h) || !(0.0..60.0).contains(&m) || !(0.0..60.0).contains(&s) {
        return Err(Error::Domain(format!("invalid time {h}h {m}m {s}s")));
    }
    Ok(15.0 * (h + m / 60.0 + s / 3600.0))
}

/// Great-circle distance `arccos(a·b)` in `[0, π]`, evaluated as
/// `atan2(|a×b|, a·b)`.
pub fn geodesic_distance(a: &UnitVector, b: &UnitVector) -> f64 {
    let c = a.cross(b);
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt().atan2(a.dot(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Max,
    Min,
}

/// Largest or smallest geodesic distance, either pairwise within `points`
/// or between each point and `target`.
pub fn extremal_distance(
    points: &[UnitVector],
    target: Option<&UnitVector>,
    mode: Extremum,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Domain("no points".into()));
    }
    let better = |a: f64, b: f64| match mode {
        Extremum::Max => a > b,
        Extremum::Min => a < b,
    };
    // Compare dot products: distance is monotone decreasing in a·b.
    let mut best: Option<f64> = None;
    let mut take = |d: f64| {
        if best.is_none_or(|b| better(-d, -b)) {
            best = Some(d);
        }
    };
    match target {
        Some(t) => points.iter().for_each(|p| take(p.dot(t))),
        None => {
            if points.len() < 2 {
                return Err(Error::Domain("pairwise distance needs at least two points".into()));
            }
            for (i, a) in points.iter().enumerate() {
                for b in &points[i + 1..] {
                    take(a.dot(b));
                }
            }
        }
    }
    Ok(best.unwrap().clamp(-1.0, 1.0).acos())
}
