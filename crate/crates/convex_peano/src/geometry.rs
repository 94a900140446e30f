//! Planar convex-region kernel.
//!
//! Regions are closed convex polygons stored counter-clockwise. Circular
//! arcs are replaced by inscribed polygons with `n_arc` segments per full
//! turn, so every arc-related tolerance is a multiple of the sagitta
//! `r * (1 - cos(pi / n_arc))`.
//!
//! Non-convex sets only ever appear as differences of convex regions; they
//! are kept as [`Shape`], a finite union of convex parts.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::Error;

/// Orientation slack in the normalized frame.
pub const EPS_GEOM: f64 = 1e-9;
/// Distance above which two sets count as separated.
pub const EPS_SEP: f64 = 1e-6;
/// Parts of a [`Shape`] thinner than this are treated as measure zero.
pub const WIDTH_TOL: f64 = 1e-7;
pub const DEFAULT_N_ARC: usize = 64;

/// Sagitta of one side of an inscribed `n_arc`-gon of radius `r`.
pub fn arc_tolerance(r: f64, n_arc: usize) -> f64 {
    r * (1.0 - (PI / n_arc as f64).cos())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}
impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}
impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}
impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Orientation of the triple (a, b, c); positive for a left turn.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Closest point to `p` on the segment [a, b].
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let d = b - a;
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(d) / l2).clamp(0.0, 1.0);
    a + d * t
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    (o1 * o2 <= 0.0) && (o3 * o4 <= 0.0) && !(o1 == 0.0 && o2 == 0.0 && o3 == 0.0 && o4 == 0.0)
}

fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    let d1 = a.dist(closest_on_segment(a, c, d));
    let d2 = b.dist(closest_on_segment(b, c, d));
    let d3 = c.dist(closest_on_segment(c, a, b));
    let d4 = d.dist(closest_on_segment(d, a, b));
    d1.min(d2).min(d3).min(d4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point, radius: f64) -> Result<Self, Error> {
        if !(radius > 0.0) || !center.is_finite() {
            return Err(Error::Invalid(format!("disc radius must be positive, got {radius}")));
        }
        Ok(Disc { center, radius })
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.dist(self.center) <= self.radius + tol
    }

    /// Inscribed polygon with `n` vertices, the first one at angle `phase`.
    pub fn polygon(&self, n: usize, phase: f64) -> ConvexRegion {
        let n = n.max(3);
        let verts = (0..n)
            .map(|k| {
                let a = phase + 2.0 * PI * k as f64 / n as f64;
                Point::new(self.center.x + self.radius * a.cos(), self.center.y + self.radius * a.sin())
            })
            .collect();
        ConvexRegion { verts }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtentMode {
    X,
    Y,
    Diameter,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn gap(&self, o: &BBox) -> f64 {
        let dx = (o.min.x - self.max.x).max(self.min.x - o.max.x).max(0.0);
        let dy = (o.min.y - self.max.y).max(self.min.y - o.max.y).max(0.0);
        dx.hypot(dy)
    }
    pub fn contains_box(&self, o: &BBox, tol: f64) -> bool {
        o.min.x >= self.min.x - tol
            && o.min.y >= self.min.y - tol
            && o.max.x <= self.max.x + tol
            && o.max.y <= self.max.y + tol
    }
}

/// Closed convex polygon, counter-clockwise, possibly empty or degenerate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexRegion {
    verts: Vec<Point>,
}

impl ConvexRegion {
    pub fn empty() -> Self {
        ConvexRegion { verts: Vec::new() }
    }

    /// Convex hull of arbitrary points.
    pub fn hull(points: &[Point]) -> Self {
        ConvexRegion { verts: convex_hull(points) }
    }

    /// Accepts a vertex list that is already convex; orientation and
    /// duplicates are repaired, anything else is rejected.
    pub fn from_vertices(points: Vec<Point>) -> Result<Self, Error> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("non-finite vertex".into()));
        }
        let mut pts = points;
        dedup_ring(&mut pts);
        if pts.len() >= 3 && signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        let n = pts.len();
        if n >= 3 {
            for i in 0..n {
                let o = orient(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
                if o < -EPS_GEOM {
                    return Err(Error::Invalid("polygon is not convex".into()));
                }
            }
        }
        Ok(ConvexRegion { verts: pts })
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        ConvexRegion::hull(&[Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.verts
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    /// True when the region has positive area above the shape tolerance.
    pub fn has_interior(&self) -> bool {
        self.verts.len() >= 3 && self.width() > WIDTH_TOL
    }

    pub fn area(&self) -> f64 {
        if self.verts.len() < 3 {
            0.0
        } else {
            signed_area(&self.verts).abs()
        }
    }

    pub fn centroid(&self) -> Option<Point> {
        let n = self.verts.len();
        if n == 0 {
            return None;
        }
        let a = signed_area(&self.verts);
        if n < 3 || a.abs() < 1e-18 {
            let s = self.verts.iter().fold(Point::default(), |acc, &p| acc + p);
            return Some(s * (1.0 / n as f64));
        }
        let o = self.verts[0];
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.verts[i] - o;
            let q = self.verts[(i + 1) % n] - o;
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Some(Point::new(o.x + cx / (6.0 * a), o.y + cy / (6.0 * a)))
    }

    pub fn bbox(&self) -> Option<BBox> {
        let first = *self.verts.first()?;
        let mut b = BBox { min: first, max: first };
        for p in &self.verts {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    /// Minimum over edge directions of the polygon's thickness.
    pub fn width(&self) -> f64 {
        let n = self.verts.len();
        if n < 3 {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            let l = a.dist(b);
            if l == 0.0 {
                continue;
            }
            let h = self.verts.iter().map(|&p| orient(a, b, p) / l).fold(0.0, f64::max);
            best = best.min(h);
        }
        best
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.verts.iter().enumerate() {
            for b in &self.verts[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        d
    }

    pub fn extent(&self, mode: ExtentMode) -> Result<f64, Error> {
        let b = self.bbox().ok_or(Error::EmptyRegion("extent"))?;
        Ok(match mode {
            ExtentMode::X => b.max.x - b.min.x,
            ExtentMode::Y => b.max.y - b.min.y,
            ExtentMode::Diameter => self.diameter(),
        })
    }

    /// Membership with slack `tol` (distance outside the boundary allowed).
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let n = self.verts.len();
        match n {
            0 => false,
            1 => p.dist(self.verts[0]) <= tol,
            2 => p.dist(closest_on_segment(p, self.verts[0], self.verts[1])) <= tol,
            _ => {
                for i in 0..n {
                    let a = self.verts[i];
                    let b = self.verts[(i + 1) % n];
                    let l = a.dist(b);
                    if l > 0.0 && orient(a, b, p) / l < -tol {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Strict interior test: distance to the boundary larger than `tol`.
    pub fn contains_interior(&self, p: Point, tol: f64) -> bool {
        let n = self.verts.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            let l = a.dist(b);
            l == 0.0 || orient(a, b, p) / l > tol
        })
    }

    pub fn contains_region(&self, other: &ConvexRegion, tol: f64) -> bool {
        other.verts.iter().all(|&p| self.contains(p, tol))
    }

    /// Keep the part where `n . p <= c`.
    pub fn clip_line(&self, n: Point, c: f64) -> ConvexRegion {
        if self.verts.is_empty() {
            return ConvexRegion::empty();
        }
        if self.verts.iter().all(|p| n.dot(*p) <= c) {
            return self.clone();
        }
        let len = self.verts.len();
        let mut out = Vec::with_capacity(len + 1);
        for i in 0..len {
            let p = self.verts[i];
            let q = self.verts[(i + 1) % len];
            let fp = n.dot(p) - c;
            let fq = n.dot(q) - c;
            if fp <= 0.0 {
                out.push(p);
            }
            if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                let t = fp / (fp - fq);
                out.push(p + (q - p) * t);
            }
        }
        dedup_ring(&mut out);
        ConvexRegion { verts: out }
    }

    pub fn clip_halfplane(&self, axis: Axis, bound: f64, sense: Sense) -> ConvexRegion {
        let (n, c) = match (axis, sense) {
            (Axis::X, Sense::Le) => (Point::new(1.0, 0.0), bound),
            (Axis::X, Sense::Ge) => (Point::new(-1.0, 0.0), -bound),
            (Axis::Y, Sense::Le) => (Point::new(0.0, 1.0), bound),
            (Axis::Y, Sense::Ge) => (Point::new(0.0, -1.0), -bound),
        };
        self.clip_line(n, c)
    }

    /// Intersection of two convex regions. Returns one of the inputs
    /// unchanged when it already lies inside the other.
    pub fn intersect(&self, other: &ConvexRegion) -> ConvexRegion {
        if self.is_empty() || other.is_empty() {
            return ConvexRegion::empty();
        }
        if other.contains_region(self, 1e-12) {
            return self.clone();
        }
        if self.contains_region(other, 1e-12) {
            return other.clone();
        }
        if let (Some(a), Some(b)) = (self.bbox(), other.bbox()) {
            if a.gap(&b) > 0.0 {
                return ConvexRegion::empty();
            }
        }
        let m = other.verts.len();
        if m < 3 {
            // Degenerate clipper: keep the part of the segment/point inside self.
            return clip_degenerate(other, self);
        }
        let mut cur = self.clone();
        for i in 0..m {
            let a = other.verts[i];
            let b = other.verts[(i + 1) % m];
            let d = b - a;
            if d.norm() == 0.0 {
                continue;
            }
            // inside is left of a->b: cross(d, p - a) >= 0  <=>  n.p <= c
            let n = Point::new(d.y, -d.x);
            cur = cur.clip_line(n, n.dot(a));
            if cur.is_empty() {
                break;
            }
        }
        cur
    }

    pub fn clip_disc(&self, b: &Disc, n_arc: usize) -> ConvexRegion {
        self.intersect(&b.polygon(n_arc, 0.0))
    }

    /// Exact distance between the two regions; `+inf` if either is empty.
    pub fn separation(&self, other: &ConvexRegion) -> f64 {
        if self.is_empty() || other.is_empty() {
            return f64::INFINITY;
        }
        if self.verts.iter().any(|&p| other.contains(p, 0.0)) || other.verts.iter().any(|&p| self.contains(p, 0.0))
        {
            return 0.0;
        }
        let na = self.verts.len();
        let nb = other.verts.len();
        let mut best = f64::INFINITY;
        for i in 0..na {
            let a0 = self.verts[i];
            let a1 = self.verts[(i + 1) % na];
            for j in 0..nb {
                let b0 = other.verts[j];
                let b1 = other.verts[(j + 1) % nb];
                best = best.min(segment_distance(a0, a1, b0, b1));
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
        best
    }

    pub fn separated(&self, other: &ConvexRegion, eps: f64) -> bool {
        if self.is_empty() || other.is_empty() {
            return true;
        }
        if let (Some(a), Some(b)) = (self.bbox(), other.bbox()) {
            if a.gap(&b) > eps {
                return true;
            }
        }
        self.separation(other) > eps
    }

    /// Nearest point of the region to `x`; `x` must lie outside.
    pub fn min_dist_projection(&self, x: Point) -> Result<Point, Error> {
        if self.is_empty() {
            return Err(Error::EmptyRegion("projection"));
        }
        if self.verts.len() >= 3 && self.contains(x, 0.0) {
            return Err(Error::Invalid("point lies inside the region".into()));
        }
        Ok(self.project(x))
    }

    /// Nearest boundary point to `x` (for outside points this is the projection).
    pub fn project(&self, x: Point) -> Point {
        let n = self.verts.len();
        if n == 1 {
            return self.verts[0];
        }
        let mut best = self.verts[0];
        let mut bd = f64::INFINITY;
        for i in 0..n {
            let c = closest_on_segment(x, self.verts[i], self.verts[(i + 1) % n]);
            let d = c.dist(x);
            if d < bd {
                bd = d;
                best = c;
            }
        }
        best
    }

    /// Distance from a point; zero inside.
    pub fn dist_to(&self, x: Point) -> f64 {
        if self.is_empty() {
            return f64::INFINITY;
        }
        if self.verts.len() >= 3 && self.contains(x, 0.0) {
            return 0.0;
        }
        self.project(x).dist(x)
    }

    /// One-sided Hausdorff excess: sup over `self` of distance to `other`.
    pub fn excess_over(&self, other: &ConvexRegion) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        if other.is_empty() {
            return f64::INFINITY;
        }
        self.verts.iter().map(|&p| other.dist_to(p)).fold(0.0, f64::max)
    }

    pub fn hausdorff(&self, other: &ConvexRegion) -> f64 {
        self.excess_over(other).max(other.excess_over(self))
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> ConvexRegion {
        let pts: Vec<Point> = self.verts.iter().map(|&p| f(p)).collect();
        let mut verts = pts;
        if verts.len() >= 3 && signed_area(&verts) < 0.0 {
            verts.reverse();
        }
        ConvexRegion { verts }
    }

    /// Canonical vertex order: start at the lexicographically smallest vertex.
    pub fn canonical(&self) -> ConvexRegion {
        if self.verts.is_empty() {
            return self.clone();
        }
        let k = (0..self.verts.len())
            .min_by(|&i, &j| {
                let (a, b) = (self.verts[i], self.verts[j]);
                a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap())
            })
            .unwrap();
        let mut v = self.verts.clone();
        v.rotate_left(k);
        ConvexRegion { verts: v }
    }

    /// Same set up to `tol` in Hausdorff distance.
    pub fn approx_eq(&self, other: &ConvexRegion, tol: f64) -> bool {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => true,
            (false, false) => self.hausdorff(other) <= tol,
            _ => false,
        }
    }
}

fn clip_degenerate(seg: &ConvexRegion, poly: &ConvexRegion) -> ConvexRegion {
    let v = seg.vertices();
    if v.len() == 1 {
        return if poly.contains(v[0], 0.0) { seg.clone() } else { ConvexRegion::empty() };
    }
    let (a, b) = (v[0], v[1]);
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 1.0;
    let n = poly.verts.len();
    if n < 3 {
        return ConvexRegion::empty();
    }
    for i in 0..n {
        let p = poly.verts[i];
        let q = poly.verts[(i + 1) % n];
        let fa = orient(p, q, a);
        let fb = orient(p, q, b);
        if fa < 0.0 && fb < 0.0 {
            return ConvexRegion::empty();
        }
        if fa < 0.0 {
            lo = lo.max(fa / (fa - fb));
        } else if fb < 0.0 {
            hi = hi.min(fa / (fa - fb));
        }
    }
    if lo > hi {
        return ConvexRegion::empty();
    }
    let mut pts = vec![a + (b - a) * lo, a + (b - a) * hi];
    dedup_ring(&mut pts);
    ConvexRegion { verts: pts }
}

fn signed_area(p: &[Point]) -> f64 {
    let n = p.len();
    let o = p[0];
    let mut s = 0.0;
    for i in 1..n.saturating_sub(1) {
        s += (p[i] - o).cross(p[i + 1] - o);
    }
    0.5 * s
}

fn dedup_ring(p: &mut Vec<Point>) {
    p.dedup_by(|a, b| a.dist(*b) <= 1e-14);
    while p.len() > 1 && p[0].dist(p[p.len() - 1]) <= 1e-14 {
        p.pop();
    }
}

/// Andrew's monotone chain; drops collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    pts.dedup_by(|a, b| a.dist(*b) <= 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Similarity map from the normalized frame to the caller's frame:
/// `q = scale * L(p) + offset`, where `L` swaps the axes (if `axis_swap`)
/// and then negates x (if `x_negate`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    pub scale: f64,
    pub offset: Point,
    pub axis_swap: bool,
    pub x_negate: bool,
}

impl FrameTransform {
    pub const IDENTITY: FrameTransform =
        FrameTransform { scale: 1.0, offset: Point::new(0.0, 0.0), axis_swap: false, x_negate: false };
    /// Reflection (x, y) -> (-x, y).
    pub const REFLECT_X: FrameTransform = FrameTransform { x_negate: true, ..FrameTransform::IDENTITY };
    /// Reflection (x, y) -> (y, x).
    pub const SWAP_XY: FrameTransform = FrameTransform { axis_swap: true, ..FrameTransform::IDENTITY };

    pub fn apply(&self, p: Point) -> Point {
        let (mut x, y) = if self.axis_swap { (p.y, p.x) } else { (p.x, p.y) };
        if self.x_negate {
            x = -x;
        }
        Point::new(self.scale * x + self.offset.x, self.scale * y + self.offset.y)
    }

    pub fn invert(&self, q: Point) -> Point {
        let mut x = (q.x - self.offset.x) / self.scale;
        let y = (q.y - self.offset.y) / self.scale;
        if self.x_negate {
            x = -x;
        }
        if self.axis_swap {
            Point::new(y, x)
        } else {
            Point::new(x, y)
        }
    }
}

pub fn apply_transform(t: &ConvexRegion, f: &FrameTransform) -> ConvexRegion {
    t.map_points(|p| f.apply(p))
}

/// Rescales a domain to diameter 1 centred at the origin. Domains that
/// already have diameter at most 1 inside `[-1, 1]^2` are left alone.
pub fn normalize_domain(raw: &ConvexRegion) -> Result<(ConvexRegion, FrameTransform), Error> {
    if raw.is_empty() || raw.area() <= 1e-12 || !raw.has_interior() {
        return Err(Error::Invalid("degenerate domain".into()));
    }
    let d = raw.diameter();
    let b = raw.bbox().unwrap();
    if d <= 1.0 && b.min.x >= -1.0 && b.min.y >= -1.0 && b.max.x <= 1.0 && b.max.y <= 1.0 {
        return Ok((raw.clone(), FrameTransform::IDENTITY));
    }
    let c = Point::new(0.5 * (b.min.x + b.max.x), 0.5 * (b.min.y + b.max.y));
    let f = FrameTransform { scale: d, offset: c, axis_swap: false, x_negate: false };
    let t = raw.map_points(|q| f.invert(q));
    Ok((t, f))
}

/// Result of [`hull_deficiency`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deficiency {
    pub area: f64,
    pub degenerate: bool,
}

/// Area of the convex hull of a grid sample that the sample leaves
/// uncovered. `spacing` is the grid step the sample was drawn on; a hull
/// point counts as covered when some sample lies within one step of it.
pub fn hull_deficiency(sample: &[Point], spacing: f64) -> Result<Deficiency, Error> {
    if sample.len() < 3 {
        return Err(Error::Invalid(format!("hull_deficiency needs at least 3 points, got {}", sample.len())));
    }
    let hull = ConvexRegion::hull(sample);
    if hull.vertices().len() < 3 || hull.width() <= WIDTH_TOL {
        return Ok(Deficiency { area: 0.0, degenerate: true });
    }
    let b = hull.bbox().unwrap();
    let h = spacing;
    let nx = ((b.max.x - b.min.x) / h).ceil() as i64 + 1;
    let ny = ((b.max.y - b.min.y) / h).ceil() as i64 + 1;
    let mut occupied = std::collections::HashSet::new();
    for p in sample {
        let i = ((p.x - b.min.x) / h).round() as i64;
        let j = ((p.y - b.min.y) / h).round() as i64;
        occupied.insert((i, j));
    }
    let mut uncovered = 0usize;
    for i in 0..nx {
        for j in 0..ny {
            let q = Point::new(b.min.x + i as f64 * h, b.min.y + j as f64 * h);
            if !hull.contains_interior(q, h) {
                continue;
            }
            let hit = (-1..=1).any(|di| (-1..=1).any(|dj| occupied.contains(&(i + di, j + dj))));
            if !hit {
                uncovered += 1;
            }
        }
    }
    Ok(Deficiency { area: uncovered as f64 * h * h, degenerate: false })
}

/// Grid sample of `region` with step `h` plus its vertices.
pub fn grid_sample(region: &ConvexRegion, h: f64) -> Vec<Point> {
    let mut out = Vec::new();
    let Some(b) = region.bbox() else { return out };
    let i0 = (b.min.x / h).floor() as i64;
    let i1 = (b.max.x / h).ceil() as i64;
    let j0 = (b.min.y / h).floor() as i64;
    let j1 = (b.max.y / h).ceil() as i64;
    for i in i0..=i1 {
        for j in j0..=j1 {
            let p = Point::new(i as f64 * h, j as f64 * h);
            if region.contains(p, 0.0) {
                out.push(p);
            }
        }
    }
    out.extend_from_slice(region.vertices());
    out
}

/// Finite union of closed convex parts. Differences of convex regions are
/// decomposed into pairwise interior-disjoint convex parts, so set algebra
/// on differences stays exact up to floating point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Shape {
    parts: Vec<ConvexRegion>,
}

fn negligible(c: &ConvexRegion) -> bool {
    c.verts.len() < 3 || c.width() <= WIDTH_TOL
}

impl Shape {
    pub fn empty() -> Self {
        Shape { parts: Vec::new() }
    }

    pub fn from_convex(c: &ConvexRegion) -> Self {
        if negligible(c) {
            Shape::empty()
        } else {
            Shape { parts: vec![c.clone()] }
        }
    }

    pub fn from_parts(parts: Vec<ConvexRegion>) -> Self {
        Shape { parts: parts.into_iter().filter(|p| !negligible(p)).collect() }
    }

    /// Closure of `a \ b`.
    pub fn difference(a: &ConvexRegion, b: &ConvexRegion) -> Self {
        let mut out = Vec::new();
        subtract_into(a, b, &mut out);
        Shape { parts: out }
    }

    pub fn parts(&self) -> &[ConvexRegion] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(|p| p.area()).sum()
    }

    pub fn bbox(&self) -> Option<BBox> {
        let mut it = self.parts.iter().filter_map(|p| p.bbox());
        let mut b = it.next()?;
        for c in it {
            b.min.x = b.min.x.min(c.min.x);
            b.min.y = b.min.y.min(c.min.y);
            b.max.x = b.max.x.max(c.max.x);
            b.max.y = b.max.y.max(c.max.y);
        }
        Some(b)
    }

    pub fn hull(&self) -> ConvexRegion {
        let pts: Vec<Point> = self.parts.iter().flat_map(|p| p.verts.iter().copied()).collect();
        ConvexRegion::hull(&pts)
    }

    pub fn diameter(&self) -> f64 {
        self.hull().diameter()
    }

    pub fn extent(&self, mode: ExtentMode) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.hull().extent(mode).unwrap_or(0.0)
    }

    pub fn minus(&self, c: &ConvexRegion) -> Shape {
        let mut out = Vec::new();
        let cb = c.bbox();
        for p in &self.parts {
            match (p.bbox(), cb) {
                (Some(pb), Some(cb)) if pb.gap(&cb) > 0.0 => out.push(p.clone()),
                _ => subtract_into(p, c, &mut out),
            }
        }
        Shape { parts: out }
    }

    pub fn minus_shape(&self, other: &Shape) -> Shape {
        let mut cur = self.clone();
        for c in &other.parts {
            if cur.is_empty() {
                break;
            }
            cur = cur.minus(c);
        }
        cur
    }

    pub fn intersect_convex(&self, c: &ConvexRegion) -> Shape {
        Shape::from_parts(self.parts.iter().map(|p| p.intersect(c)).collect())
    }

    pub fn intersect(&self, other: &Shape) -> Shape {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let c = a.intersect(b);
                if !negligible(&c) {
                    out.push(c);
                }
            }
        }
        Shape { parts: out }
    }

    pub fn union(&self, other: &Shape) -> Shape {
        let mut parts = self.parts.clone();
        parts.extend(other.minus_shape(self).parts);
        Shape { parts }
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.parts.iter().any(|c| c.contains(p, tol))
    }

    pub fn separation(&self, other: &Shape) -> f64 {
        let mut best = f64::INFINITY;
        for a in &self.parts {
            for b in &other.parts {
                best = best.min(a.separation(b));
            }
        }
        best
    }

    pub fn separated(&self, other: &Shape, eps: f64) -> bool {
        if self.is_empty() || other.is_empty() {
            return true;
        }
        if let (Some(a), Some(b)) = (self.bbox(), other.bbox()) {
            if a.gap(&b) > eps {
                return true;
            }
        }
        self.parts.iter().all(|a| other.parts.iter().all(|b| a.separated(b, eps)))
    }

    /// `self ⊆ other` up to measure-zero slivers.
    pub fn subset_of(&self, other: &Shape) -> bool {
        self.minus_shape(other).is_empty()
    }

    pub fn subset_of_convex(&self, c: &ConvexRegion) -> bool {
        self.minus(c).is_empty()
    }

    pub fn same_as(&self, other: &Shape) -> bool {
        if self.is_empty() || other.is_empty() {
            return self.is_empty() && other.is_empty();
        }
        if let (Some(a), Some(b)) = (self.bbox(), other.bbox()) {
            let tol = 1e-6;
            if (a.min.x - b.min.x).abs() > tol
                || (a.min.y - b.min.y).abs() > tol
                || (a.max.x - b.max.x).abs() > tol
                || (a.max.y - b.max.y).abs() > tol
            {
                return false;
            }
        }
        self.subset_of(other) && other.subset_of(self)
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point + Copy) -> Shape {
        Shape { parts: self.parts.iter().map(|p| p.map_points(f)).collect() }
    }
}

/// Pushes interior-disjoint convex parts covering `a \ b`.
fn subtract_into(a: &ConvexRegion, b: &ConvexRegion, out: &mut Vec<ConvexRegion>) {
    if negligible(a) {
        return;
    }
    if b.verts.len() < 3 || negligible(b) {
        out.push(a.clone());
        return;
    }
    if let (Some(ab), Some(bb)) = (a.bbox(), b.bbox()) {
        if ab.gap(&bb) > 0.0 {
            out.push(a.clone());
            return;
        }
    }
    if b.contains_region(a, 1e-12) {
        return;
    }
    let m = b.verts.len();
    let mut cur = a.clone();
    for i in 0..m {
        let p = b.verts[i];
        let q = b.verts[(i + 1) % m];
        let d = q - p;
        if d.norm() == 0.0 {
            continue;
        }
        let n = Point::new(d.y, -d.x);
        let c = n.dot(p);
        let outside = cur.clip_line(-n, -c);
        if !negligible(&outside) {
            out.push(outside);
        }
        cur = cur.clip_line(n, c);
        if negligible(&cur) {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ConvexRegion {
        ConvexRegion::rect(0.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn normalize_square_side_four() {
        let raw = ConvexRegion::rect(-2.0, -2.0, 2.0, 2.0);
        let (t, f) = normalize_domain(&raw).unwrap();
        let side = t.extent(ExtentMode::X).unwrap();
        assert!(side <= 1.0 / 2f64.sqrt() + 1e-12);
        assert!((t.diameter() - 1.0).abs() < 1e-12);
        let back = apply_transform(&t, &f);
        assert!(back.hausdorff(&raw) < 1e-12);
    }

    #[test]
    fn normalize_keeps_small_triangle() {
        let tri = ConvexRegion::hull(&[Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(0.0, 0.5)]);
        let (t, f) = normalize_domain(&tri).unwrap();
        assert_eq!(f, FrameTransform::IDENTITY);
        assert_eq!(t, tri);
    }

    #[test]
    fn normalize_rejects_segment() {
        let seg = ConvexRegion::hull(&[Point::new(0.0, 0.0), Point::new(1.0, 1.0)]);
        let err = normalize_domain(&seg).unwrap_err();
        assert!(err.to_string().contains("degenerate domain"));
    }

    #[test]
    fn clip_disc_cases() {
        let sq = unit();
        let big = Disc::new(Point::new(0.0, 0.0), 10.0).unwrap();
        assert!(sq.clip_disc(&big, 64).hausdorff(&sq) < 1e-12);
        let far = Disc::new(Point::new(5.0, 5.0), 0.5).unwrap();
        assert!(sq.clip_disc(&far, 64).is_empty());
        let sq2 = ConvexRegion::rect(-1.0, -1.0, 1.0, 1.0);
        let small = Disc::new(Point::new(0.0, 0.0), 0.5).unwrap();
        let mut last = 0.0;
        for n in [16, 64, 256, 1024] {
            let a = sq2.clip_disc(&small, n).area();
            assert!(a > last);
            last = a;
        }
        assert!((last - PI * 0.25).abs() < 1e-4);
    }

    #[test]
    fn halfplane_cases() {
        let sq = unit();
        let l = sq.clip_halfplane(Axis::X, 0.5, Sense::Le);
        assert!(l.hausdorff(&ConvexRegion::rect(0.0, 0.0, 0.5, 1.0)) < 1e-12);
        assert_eq!(sq.clip_halfplane(Axis::X, 2.0, Sense::Le), sq);
        assert!(sq.clip_halfplane(Axis::X, 2.0, Sense::Ge).is_empty());
    }

    #[test]
    fn extents() {
        let r = ConvexRegion::rect(0.0, 0.0, 0.7, 0.1);
        assert!((r.extent(ExtentMode::X).unwrap() - 0.7).abs() < 1e-12);
        assert!((r.extent(ExtentMode::Diameter).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let pt = ConvexRegion::hull(&[Point::new(0.3, 0.3), Point::new(0.3, 0.3)]);
        assert_eq!(pt.extent(ExtentMode::Diameter).unwrap(), 0.0);
        assert!(ConvexRegion::empty().extent(ExtentMode::X).is_err());
    }

    #[test]
    fn separation_cases() {
        let a = unit();
        let b = ConvexRegion::rect(2.0, 0.0, 3.0, 1.0);
        assert!((a.separation(&b) - 1.0).abs() < 1e-12);
        let c = ConvexRegion::rect(0.5, 0.5, 1.5, 1.5);
        assert_eq!(a.separation(&c), 0.0);
        assert_eq!(a.separation(&ConvexRegion::empty()), f64::INFINITY);
    }

    #[test]
    fn projection_cases() {
        let s = unit();
        let p = s.min_dist_projection(Point::new(2.0, 0.5)).unwrap();
        assert!(p.dist(Point::new(1.0, 0.5)) < 1e-12);
        let p = s.min_dist_projection(Point::new(2.0, 2.0)).unwrap();
        assert!(p.dist(Point::new(1.0, 1.0)) < 1e-12);
        let disc = Disc::new(Point::new(0.0, 0.0), 1.0).unwrap().polygon(64, 0.0);
        let p = disc.min_dist_projection(Point::new(2.0, 0.0)).unwrap();
        assert!(p.dist(Point::new(1.0, 0.0)) <= arc_tolerance(1.0, 64) + 1e-12);
        assert!(s.min_dist_projection(Point::new(0.5, 0.5)).is_err());
    }

    #[test]
    fn transforms() {
        let r = ConvexRegion::rect(0.0, 0.0, 2.0, 1.0);
        let twice = apply_transform(&apply_transform(&r, &FrameTransform::REFLECT_X), &FrameTransform::REFLECT_X);
        assert!(twice.hausdorff(&r) == 0.0);
        let sw = apply_transform(&r, &FrameTransform::SWAP_XY);
        assert!(sw.hausdorff(&ConvexRegion::rect(0.0, 0.0, 1.0, 2.0)) == 0.0);
        assert_eq!(sw.extent(ExtentMode::X).unwrap(), r.extent(ExtentMode::Y).unwrap());
        let id = apply_transform(&r, &FrameTransform::IDENTITY);
        assert_eq!(id.vertices(), r.vertices());
    }

    #[test]
    fn deficiency_cases() {
        let tri = ConvexRegion::hull(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
        let h = 0.01;
        let d = hull_deficiency(&grid_sample(&tri, h), h).unwrap();
        assert!(d.area < 1e-9 && !d.degenerate);
        let mut l = grid_sample(&ConvexRegion::rect(0.0, 0.0, 1.0, 0.3), h);
        l.extend(grid_sample(&ConvexRegion::rect(0.0, 0.0, 0.3, 1.0), h));
        assert!(hull_deficiency(&l, h).unwrap().area > 0.1);
        let col = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        let d = hull_deficiency(&col, h).unwrap();
        assert!(d.degenerate && d.area == 0.0);
        assert!(hull_deficiency(&col[..2], h).is_err());
    }

    #[test]
    fn shape_difference_is_exact() {
        let a = ConvexRegion::rect(0.0, 0.0, 2.0, 1.0);
        let b = ConvexRegion::rect(1.0, -1.0, 3.0, 2.0);
        let d = Shape::difference(&a, &b);
        assert!((d.area() - 1.0).abs() < 1e-12);
        assert!(d.subset_of_convex(&ConvexRegion::rect(0.0, 0.0, 1.0, 1.0)));
        let ring = Shape::difference(&ConvexRegion::rect(0.0, 0.0, 3.0, 3.0), &ConvexRegion::rect(1.0, 1.0, 2.0, 2.0));
        assert!((ring.area() - 8.0).abs() < 1e-12);
        assert!(Shape::difference(&a, &a).is_empty());
        let far = Shape::from_convex(&ConvexRegion::rect(5.0, 0.0, 6.0, 1.0));
        assert!((d.separation(&far) - 4.0).abs() < 1e-12);
    }
}
