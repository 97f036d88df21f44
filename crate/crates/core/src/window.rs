//! Spherical windows: discs (caps) and geodesic polygons, optionally
//! complemented, and their combination into a [`WindowSet`].
//!
//! Regions are closed: points at distance exactly `r` from a disc centre, or
//! on a polygon edge, are inside.
//!
//! Polygons must fit inside an open hemisphere. They are handled in the
//! gnomonic projection about their vertex centroid, where great-circle edges
//! become straight segments; this makes ear clipping and the
//! self-intersection check exact up to rounding.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{SphericalPoint, UnitVector};

const FOUR_PI: f64 = 4.0 * PI;
// Slack for the closed-boundary side tests.
const EDGE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Disc,
    Polygon,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Disc { center: SphericalPoint, axis: UnitVector, radius: f64 },
    Polygon(Polygon),
}

#[derive(Debug, Clone, PartialEq)]
struct Polygon {
    vertices: Vec<SphericalPoint>,
    // counter-clockwise seen from outside the sphere
    ccw: Vec<UnitVector>,
    assumed_convex: bool,
    triangles: Vec<[UnitVector; 3]>,
    area: f64,
}

/// A disc or polygon on the unit sphere, possibly complemented.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    shape: Shape,
    complement: bool,
}

impl Window {
    /// Spherical cap of geodesic radius `radius ∈ (0, π)` around `center`.
    pub fn disc(center: SphericalPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < PI) {
            return Err(Error::Domain(format!("disc radius {radius} outside (0, π)")));
        }
        let center = SphericalPoint::new(center.theta, center.phi)?;
        Ok(Self { shape: Shape::Disc { center, axis: center.to_vector(), radius }, complement: false })
    }

    /// Geodesic polygon through `vertices`. A closing vertex equal to the
    /// first one is dropped.
    pub fn polygon(vertices: Vec<SphericalPoint>, assumed_convex: bool) -> Result<Self> {
        let poly = Polygon::new(vertices, assumed_convex)?;
        Ok(Self { shape: Shape::Polygon(poly), complement: false })
    }

    /// The set-minus complement of this window.
    pub fn complemented(mut self) -> Self {
        self.complement = !self.complement;
        self
    }

    pub fn with_complement(mut self, complement: bool) -> Self {
        self.complement = complement;
        self
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    pub fn kind(&self) -> WindowKind {
        match self.shape {
            Shape::Disc { .. } => WindowKind::Disc,
            Shape::Polygon(_) => WindowKind::Polygon,
        }
    }

    /// Label in the style `disc`, `minus.disc`, `polygon`, `minus.polygon`.
    pub fn label(&self) -> String {
        let base = match self.kind() {
            WindowKind::Disc => "disc",
            WindowKind::Polygon => "polygon",
        };
        if self.complement {
            format!("minus.{base}")
        } else {
            base.to_string()
        }
    }

    /// Analytic area in steradians.
    pub fn area(&self) -> f64 {
        let a = match &self.shape {
            Shape::Disc { radius, .. } => 2.0 * PI * (1.0 - radius.cos()),
            Shape::Polygon(p) => p.area,
        };
        if self.complement {
            FOUR_PI - a
        } else {
            a
        }
    }

    pub fn contains(&self, p: &UnitVector) -> bool {
        let inside = match &self.shape {
            Shape::Disc { axis, radius, .. } => axis.distance(p) <= *radius,
            Shape::Polygon(poly) => poly.contains(p),
        };
        inside != self.complement
    }

    /// Polygon vertices, if this is a polygon.
    pub fn vertices(&self) -> Option<&[SphericalPoint]> {
        match &self.shape {
            Shape::Polygon(p) => Some(&p.vertices),
            Shape::Disc { .. } => None,
        }
    }

    /// Disc centre and radius, if this is a disc.
    pub fn disc_parameters(&self) -> Option<(SphericalPoint, f64)> {
        match &self.shape {
            Shape::Disc { center, radius, .. } => Some((*center, *radius)),
            Shape::Polygon(_) => None,
        }
    }

    /// Splits a polygon into `n − 2` convex triangles with disjoint interiors.
    pub fn triangulate(&self) -> Result<Vec<Window>> {
        let Shape::Polygon(poly) = &self.shape else {
            return Err(Error::Domain("only polygons can be triangulated".into()));
        };
        poly.triangles
            .iter()
            .map(|t| Window::polygon(t.iter().map(|v| v.to_spherical()).collect(), true))
            .collect()
    }

    pub fn to_spec(&self) -> WindowSpec {
        match &self.shape {
            Shape::Disc { center, radius, .. } => {
                WindowSpec::Disc { complement: self.complement, center: *center, r: *radius }
            }
            Shape::Polygon(p) => WindowSpec::Polygon {
                complement: self.complement,
                vertices: p.vertices.clone(),
                assumed_convex: p.assumed_convex,
            },
        }
    }
}

/// Spherical excess of the triangle `abc` (Van Oosterom–Strackee).
pub fn triangle_area(a: &UnitVector, b: &UnitVector, c: &UnitVector) -> f64 {
    let bc = b.cross(c);
    let triple = a.x * bc[0] + a.y * bc[1] + a.z * bc[2];
    let denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * triple.abs().atan2(denom)
}

fn side(a: &UnitVector, b: &UnitVector, p: &UnitVector) -> f64 {
    let n = a.cross(b);
    n[0] * p.x + n[1] * p.y + n[2] * p.z
}

fn inside_convex(ccw: &[UnitVector], p: &UnitVector) -> bool {
    (0..ccw.len()).all(|i| side(&ccw[i], &ccw[(i + 1) % ccw.len()], p) >= -EDGE_EPS)
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross2(q1, q2, p1);
    let d2 = cross2(q1, q2, p2);
    let d3 = cross2(p1, p2, q1);
    let d4 = cross2(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn point_in_triangle_2d(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    cross2(a, b, p) >= 0.0 && cross2(b, c, p) >= 0.0 && cross2(c, a, p) >= 0.0
}

impl Polygon {
    fn new(mut vertices: Vec<SphericalPoint>, assumed_convex: bool) -> Result<Self> {
        for v in &mut vertices {
            *v = SphericalPoint::new(v.theta, v.phi)?;
        }
        if vertices.len() > 3 && vertices.first().map(|v| v.to_vector()) == vertices.last().map(|v| v.to_vector()) {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Geometry(format!("polygon needs at least 3 vertices, got {n}")));
        }
        let vecs: Vec<UnitVector> = vertices.iter().map(|v| v.to_vector()).collect();
        for i in 0..n {
            if vecs[i].distance(&vecs[(i + 1) % n]) < 1e-15 {
                return Err(Error::Geometry(format!("repeated consecutive vertex at position {}", i + 1)));
            }
        }

        let (sx, sy, sz) = vecs.iter().fold((0.0, 0.0, 0.0), |s, v| (s.0 + v.x, s.1 + v.y, s.2 + v.z));
        let centroid = UnitVector::new(sx, sy, sz)
            .map_err(|_| Error::Geometry("polygon is not contained in a hemisphere".into()))?;
        if vecs.iter().any(|v| v.dot(&centroid) <= 1e-12) {
            return Err(Error::Geometry("polygon is not contained in a hemisphere".into()));
        }

        // gnomonic projection about the centroid
        let helper = if centroid.x.abs() < 0.9 { UnitVector::new(1.0, 0.0, 0.0)? } else { UnitVector::new(0.0, 1.0, 0.0)? };
        let e1 = {
            let c = centroid.cross(&helper);
            UnitVector::new(c[0], c[1], c[2])?
        };
        let e2 = {
            let c = centroid.cross(&e1);
            UnitVector::new(c[0], c[1], c[2])?
        };
        // (e1, e2, centroid) is right-handed, so counter-clockwise in the
        // plane is counter-clockwise seen from outside.
        let mut plane: Vec<[f64; 2]> = vecs
            .iter()
            .map(|v| {
                let d = v.dot(&centroid);
                [v.dot(&e1) / d, v.dot(&e2) / d]
            })
            .collect();
        let mut ccw = vecs.clone();

        let signed: f64 = (0..n)
            .map(|i| {
                let (a, b) = (plane[i], plane[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0;
        if signed.abs() < 1e-300 {
            return Err(Error::DegenerateRegion("polygon has zero area".into()));
        }
        if signed < 0.0 {
            plane.reverse();
            ccw.reverse();
        }

        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_cross(plane[i], plane[(i + 1) % n], plane[j], plane[(j + 1) % n]) {
                    return Err(Error::Geometry(format!("edges {} and {} intersect", i + 1, j + 1)));
                }
            }
        }

        if assumed_convex {
            for i in 0..n {
                if cross2(plane[i], plane[(i + 1) % n], plane[(i + 2) % n]) <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "polygon marked convex has a reflex or straight angle at vertex {}",
                        (i + 1) % n + 1
                    )));
                }
            }
        }

        let triangles: Vec<[UnitVector; 3]> =
            ear_clip(&plane)?.into_iter().map(|[a, b, c]| [ccw[a], ccw[b], ccw[c]]).collect();
        let area: f64 = triangles.iter().map(|t| triangle_area(&t[0], &t[1], &t[2])).sum();
        if area <= 1e-15 {
            return Err(Error::DegenerateRegion("polygon has zero area".into()));
        }
        Ok(Self { vertices, ccw, assumed_convex, triangles, area })
    }

    fn contains(&self, p: &UnitVector) -> bool {
        if self.assumed_convex {
            inside_convex(&self.ccw, p)
        } else {
            self.triangles.iter().any(|t| inside_convex(t, p))
        }
    }
}

/// Ear clipping of a simple counter-clockwise polygon; returns index triples.
fn ear_clip(plane: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..plane.len()).collect();
    let mut out = Vec::with_capacity(plane.len() - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (a, b, c) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            if cross2(plane[a], plane[b], plane[c]) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&q| {
                q != a && q != b && q != c && point_in_triangle_2d(plane[q], plane[a], plane[b], plane[c])
            });
            if blocked {
                continue;
            }
            out.push([a, b, c]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return Err(Error::Geometry("polygon could not be triangulated".into()));
        }
    }
    if cross2(plane[idx[0]], plane[idx[1]], plane[idx[2]]) <= 0.0 {
        return Err(Error::DegenerateRegion("collinear remaining vertices".into()));
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

/// A list of windows combined as `(∪ plain windows) ∩ (∩ complemented windows)`.
/// With no plain windows the union term is the whole sphere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowSet {
    pub windows: Vec<Window>,
}

impl WindowSet {
    pub fn new(windows: Vec<Window>) -> Self {
        Self { windows }
    }

    /// The whole sphere.
    pub fn full() -> Self {
        Self::default()
    }

    pub fn contains(&self, p: &UnitVector) -> bool {
        let mut any_plain = false;
        let mut in_union = false;
        for w in &self.windows {
            if w.is_complement() {
                if !w.contains(p) {
                    return false;
                }
            } else {
                any_plain = true;
                in_union = in_union || w.contains(p);
            }
        }
        !any_plain || in_union
    }

    pub fn is_full(&self) -> bool {
        self.windows.is_empty()
    }

    /// Complement of a single-window set; `None` for combinations, whose
    /// complement is not a window set.
    pub fn complement(&self) -> Option<WindowSet> {
        match self.windows.as_slice() {
            [w] => Some(WindowSet::new(vec![w.clone().complemented()])),
            _ => None,
        }
    }

    pub fn to_specs(&self) -> Vec<WindowSpec> {
        self.windows.iter().map(Window::to_spec).collect()
    }

    /// Parses a JSON window spec: either one window object or an array.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let specs: Vec<WindowSpec> = if value.is_array() {
            serde_json::from_value(value)?
        } else {
            vec![serde_json::from_value(value)?]
        };
        Ok(Self::new(specs.into_iter().map(Window::try_from).collect::<Result<_>>()?))
    }
}

impl From<Window> for WindowSet {
    fn from(w: Window) -> Self {
        WindowSet::new(vec![w])
    }
}

/// JSON form of a window. Angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowSpec {
    Disc {
        #[serde(default)]
        complement: bool,
        center: SphericalPoint,
        r: f64,
    },
    Polygon {
        #[serde(default)]
        complement: bool,
        vertices: Vec<SphericalPoint>,
        #[serde(default, rename = "assumedConvex", alias = "assumed_convex")]
        assumed_convex: bool,
    },
}

impl TryFrom<WindowSpec> for Window {
    type Error = Error;
    fn try_from(spec: WindowSpec) -> Result<Self> {
        match spec {
            WindowSpec::Disc { complement, center, r } => Ok(Window::disc(center, r)?.with_complement(complement)),
            WindowSpec::Polygon { complement, vertices, assumed_convex } => {
                Ok(Window::polygon(vertices, assumed_convex)?.with_complement(complement))
            }
        }
    }
}
