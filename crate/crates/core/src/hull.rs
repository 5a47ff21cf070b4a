//! Convex hulls of point clouds in R^2 and R^3 with signed distances.
//!
//! Signed distance is positive inside the hull (distance to the nearest
//! facet) and negative outside (minus the Euclidean distance to the hull).
//! Hulls with empty interior (points, segments, flat polygons in R^3) only
//! ever report values `<= 0`.

use std::collections::HashSet;

use thiserror::Error;

use crate::vector::Vector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("cannot build a hull from an empty point set")]
    Empty,
    #[error("points must all share one dimension (2 or 3)")]
    MixedDimensions,
    #[error("point coordinates must be finite")]
    NonFinite,
}

/// Relative tolerance used for degeneracy and visibility decisions.
const REL_EPS: f64 = 1e-10;

type P2 = [f64; 2];

fn sub2(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross2(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn norm2(a: P2) -> f64 {
    a[0].hypot(a[1])
}

fn closest_on_segment2(p: P2, a: P2, b: P2) -> P2 {
    let ab = sub2(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return a;
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1]]
}

fn closest_on_segment(p: Vector, a: Vector, b: Vector) -> Vector {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Strictly convex polygon with counter-clockwise vertices (at least three).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<P2>,
    /// Unit inward normal and offset of each edge: `n . p - c` is the
    /// distance of `p` inside the edge line.
    lines: Vec<(P2, f64)>,
}

impl Polygon {
    fn from_ccw(vertices: Vec<P2>) -> Self {
        let n = vertices.len();
        let lines = (0..n)
            .map(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let e = sub2(b, a);
                let len = norm2(e);
                let normal = [-e[1] / len, e[0] / len];
                (normal, normal[0] * a[0] + normal[1] * a[1])
            })
            .collect();
        Self { vertices, lines }
    }

    fn depth(&self, p: P2) -> f64 {
        self.lines
            .iter()
            .map(|(n, c)| n[0] * p[0] + n[1] * p[1] - c)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn is_inside(&self, p: P2) -> bool {
        self.depth(p) >= 0.0
    }

    pub fn signed_distance(&self, p: P2) -> f64 {
        let depth = self.depth(p);
        if depth >= 0.0 {
            depth
        } else {
            -norm2(sub2(p, self.closest_on_boundary(p)))
        }
    }

    fn closest_on_boundary(&self, p: P2) -> P2 {
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let q = closest_on_segment2(p, a, b);
            let d = norm2(sub2(p, q));
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    pub fn closest_point(&self, p: P2) -> P2 {
        if self.is_inside(p) {
            p
        } else {
            self.closest_on_boundary(p)
        }
    }

    pub fn area(&self) -> f64 {
        let o = self.vertices[0];
        self.vertices
            .windows(2)
            .map(|w| 0.5 * cross2(o, w[0], w[1]))
            .sum()
    }
}

/// Planar convex hull by Andrew's monotone chain. Returns the hull vertices
/// counter-clockwise with collinear points removed.
pub fn monotone_chain(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<P2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<P2> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross2(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// A convex polygon embedded in a plane of R^3.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPolygon {
    origin: Vector,
    u: Vector,
    v: Vector,
    normal: Vector,
    polygon: Polygon,
}

impl FlatPolygon {
    fn project(&self, p: Vector) -> (P2, f64) {
        let d = p - self.origin;
        ([d.dot(&self.u), d.dot(&self.v)], d.dot(&self.normal))
    }

    fn lift(&self, q: P2) -> Vector {
        self.origin + self.u * q[0] + self.v * q[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Face {
    idx: [usize; 3],
    normal: Vector,
    offset: f64,
}

/// Full-dimensional convex polytope in R^3 with outward triangular facets.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    points: Vec<Vector>,
    faces: Vec<Face>,
}

impl Polytope {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    fn excess(&self, p: Vector) -> f64 {
        self.faces
            .iter()
            .map(|f| f.normal.dot(&p) - f.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn closest_on_boundary(&self, p: Vector) -> Vector {
        let mut best = self.points[self.faces[0].idx[0]];
        let mut best_d = f64::INFINITY;
        for f in &self.faces {
            let [a, b, c] = f.idx.map(|i| self.points[i]);
            let q = closest_on_triangle(p, a, b, c);
            let d = (p - q).norm_squared();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }
}

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision Detection 5.1.5).
fn closest_on_triangle(p: Vector, a: Vector, b: Vector, c: Vector) -> Vector {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Convex hull of a finite point set, classified by affine dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexHull {
    Point(Vector),
    Segment(Vector, Vector),
    /// Full-dimensional hull in R^2.
    Polygon(Polygon),
    /// Coplanar points in R^3.
    Flat(FlatPolygon),
    /// Full-dimensional hull in R^3.
    Polytope(Polytope),
}

impl ConvexHull {
    pub fn from_points(points: &[Vector]) -> Result<Self, HullError> {
        let first = points.first().ok_or(HullError::Empty)?;
        let dim = first.dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(HullError::MixedDimensions);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(HullError::NonFinite);
        }
        let scale = bounding_diameter(points);
        if scale == 0.0 {
            return Ok(Self::Point(*first));
        }
        let eps = REL_EPS * scale;
        match dim {
            2 => Ok(hull_2d(points, eps)),
            _ => Ok(hull_3d(points, eps)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Point(p) | Self::Segment(p, _) => p.dim(),
            Self::Polygon(_) => 2,
            Self::Flat(_) | Self::Polytope(_) => 3,
        }
    }

    /// Signed distance, positive inside.
    pub fn signed_distance(&self, p: Vector) -> f64 {
        match self {
            Self::Point(a) => -p.distance(a),
            Self::Segment(a, b) => -p.distance(&closest_on_segment(p, *a, *b)),
            Self::Polygon(poly) => poly.signed_distance([p.x(), p.y()]),
            Self::Flat(flat) => {
                let (q, h) = flat.project(p);
                let inplane = (-flat.polygon.signed_distance(q)).max(0.0);
                -inplane.hypot(h)
            }
            Self::Polytope(poly) => {
                let excess = poly.excess(p);
                if excess <= 0.0 {
                    -excess
                } else {
                    -p.distance(&poly.closest_on_boundary(p))
                }
            }
        }
    }

    /// Nearest point of the hull to `p` (`p` itself when inside).
    pub fn closest_point(&self, p: Vector) -> Vector {
        match self {
            Self::Point(a) => *a,
            Self::Segment(a, b) => closest_on_segment(p, *a, *b),
            Self::Polygon(poly) => {
                let q = poly.closest_point([p.x(), p.y()]);
                Vector::new2(q[0], q[1])
            }
            Self::Flat(flat) => {
                let (q, _) = flat.project(p);
                flat.lift(flat.polygon.closest_point(q))
            }
            Self::Polytope(poly) => {
                if poly.excess(p) <= 0.0 {
                    p
                } else {
                    poly.closest_on_boundary(p)
                }
            }
        }
    }

    /// Extreme points of the hull.
    pub fn vertices(&self) -> Vec<Vector> {
        match self {
            Self::Point(a) => vec![*a],
            Self::Segment(a, b) => vec![*a, *b],
            Self::Polygon(poly) => poly
                .vertices
                .iter()
                .map(|q| Vector::new2(q[0], q[1]))
                .collect(),
            Self::Flat(flat) => flat.polygon.vertices.iter().map(|&q| flat.lift(q)).collect(),
            Self::Polytope(poly) => {
                let mut idx: Vec<usize> = poly.faces.iter().flat_map(|f| f.idx).collect();
                idx.sort_unstable();
                idx.dedup();
                idx.into_iter().map(|i| poly.points[i]).collect()
            }
        }
    }

    /// Length of the longest hull edge; a measure of sampling resolution.
    pub fn max_edge_length(&self) -> f64 {
        match self {
            Self::Point(_) => 0.0,
            Self::Segment(a, b) => a.distance(b),
            Self::Polygon(poly) => poly
                .edges()
                .map(|(a, b)| norm2(sub2(b, a)))
                .fold(0.0, f64::max),
            Self::Flat(flat) => flat
                .polygon
                .edges()
                .map(|(a, b)| norm2(sub2(b, a)))
                .fold(0.0, f64::max),
            Self::Polytope(poly) => poly
                .faces
                .iter()
                .flat_map(|f| {
                    let [a, b, c] = f.idx.map(|i| poly.points[i]);
                    [a.distance(&b), b.distance(&c), c.distance(&a)]
                })
                .fold(0.0, f64::max),
        }
    }
}

fn bounding_diameter(points: &[Vector]) -> f64 {
    let dim = points[0].dim();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for (k, &v) in p.as_slice().iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    (0..dim)
        .map(|k| (hi[k] - lo[k]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Farthest pair along the principal line through `a` with direction `dir`.
fn extreme_segment(points: &[Vector], a: Vector, dir: Vector) -> ConvexHull {
    let (mut lo, mut hi) = (points[0], points[0]);
    let (mut tlo, mut thi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in points {
        let t = (p - a).dot(&dir);
        if t < tlo {
            tlo = t;
            lo = p;
        }
        if t > thi {
            thi = t;
            hi = p;
        }
    }
    ConvexHull::Segment(lo, hi)
}

fn hull_2d(points: &[Vector], eps: f64) -> ConvexHull {
    let flat: Vec<P2> = points.iter().map(|p| [p.x(), p.y()]).collect();
    let verts = monotone_chain(&flat);
    let poly = (verts.len() >= 3).then(|| Polygon::from_ccw(verts));
    match poly {
        // Width below eps: treat as a segment.
        Some(poly) if poly.area() > eps * diameter_2d(&poly) => ConvexHull::Polygon(poly),
        _ => {
            let a = points[0];
            let far = points
                .iter()
                .copied()
                .max_by(|p, q| p.distance(&a).total_cmp(&q.distance(&a)))
                .unwrap();
            match (far - a).normalized() {
                Some(dir) => extreme_segment(points, a, dir),
                None => ConvexHull::Point(a),
            }
        }
    }
}

/// Bounding-box diagonal, within a factor sqrt(2) of the diameter.
fn diameter_2d(poly: &Polygon) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &poly.vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    norm2(sub2(hi, lo))
}

fn hull_3d(points: &[Vector], eps: f64) -> ConvexHull {
    let argmax = |f: &dyn Fn(&Vector) -> f64| -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let v = f(p);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    };
    let i0 = argmax(&|p: &Vector| -p.x());
    let p0 = points[i0];
    let i1 = argmax(&|p: &Vector| p.distance(&p0));
    let p1 = points[i1];
    let dir = match (p1 - p0).normalized() {
        Some(d) if p0.distance(&p1) > eps => d,
        _ => return ConvexHull::Point(p0),
    };
    let line_dist = |p: &Vector| {
        let d = *p - p0;
        (d - dir * d.dot(&dir)).norm()
    };
    let i2 = argmax(&line_dist);
    if line_dist(&points[i2]) <= eps {
        return extreme_segment(points, p0, dir);
    }
    let p2 = points[i2];
    let normal = (p1 - p0).cross(&(p2 - p0)).normalized().unwrap();
    let plane_dist = |p: &Vector| (*p - p0).dot(&normal).abs();
    let i3 = argmax(&plane_dist);
    if plane_dist(&points[i3]) <= eps {
        let u = dir;
        let v = normal.cross(&u);
        let flat_pts: Vec<P2> = points
            .iter()
            .map(|p| {
                let d = *p - p0;
                [d.dot(&u), d.dot(&v)]
            })
            .collect();
        let verts = monotone_chain(&flat_pts);
        if verts.len() < 3 {
            return extreme_segment(points, p0, dir);
        }
        return ConvexHull::Flat(FlatPolygon {
            origin: p0,
            u,
            v,
            normal,
            polygon: Polygon::from_ccw(verts),
        });
    }

    let make_face = |idx: [usize; 3]| -> Option<Face> {
        let [a, b, c] = idx.map(|i| points[i]);
        let n = (b - a).cross(&(c - a)).normalized()?;
        Some(Face {
            idx,
            normal: n,
            offset: n.dot(&a),
        })
    };

    let centroid = (p0 + p1 + p2 + points[i3]) * 0.25;
    let mut faces: Vec<Face> = Vec::new();
    let tet = [i0, i1, i2, i3];
    for skip in 0..4 {
        let mut idx = [0usize; 3];
        let mut k = 0;
        for (j, &t) in tet.iter().enumerate() {
            if j != skip {
                idx[k] = t;
                k += 1;
            }
        }
        let mut f = make_face(idx).expect("tetrahedron faces are nondegenerate");
        if f.normal.dot(&centroid) - f.offset > 0.0 {
            f = make_face([idx[0], idx[2], idx[1]]).unwrap();
        }
        faces.push(f);
    }

    // Far points first so most interior points are rejected by early faces.
    let mut order: Vec<usize> = (0..points.len()).filter(|i| !tet.contains(i)).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .distance(&centroid)
            .total_cmp(&points[a].distance(&centroid))
            .then(a.cmp(&b))
    });

    for pi in order {
        let p = points[pi];
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.normal.dot(&p) - f.offset > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for &fi in &visible {
            let [a, b, c] = faces[fi].idx;
            edges.insert((a, b));
            edges.insert((b, c));
            edges.insert((c, a));
        }
        // Horizon edges in a stable order for deterministic output.
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &fi in &visible {
            let [a, b, c] = faces[fi].idx;
            for e in [(a, b), (b, c), (c, a)] {
                if !edges.contains(&(e.1, e.0)) {
                    horizon.push(e);
                }
            }
        }
        let visible_set: HashSet<usize> = visible.into_iter().collect();
        let mut kept: Vec<Face> = faces
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !visible_set.contains(i))
            .map(|(_, f)| f)
            .collect();
        for (a, b) in horizon {
            if let Some(f) = make_face([a, b, pi]) {
                kept.push(f);
            }
        }
        faces = kept;
    }

    ConvexHull::Polytope(Polytope {
        points: points.to_vec(),
        faces,
    })
}
