//! Support balls, escape components and caps for a fixed radius `rho`,
//! membership tests for the family of `rho`-convex subsets of the domain,
//! and bows.

use serde::Serialize;
use std::f64::consts::PI;

use crate::geometry::{arc_tolerance, ConvexRegion, Disc, Point, DEFAULT_N_ARC, EPS_GEOM};
use crate::{Error, Result};

/// Half-width of the neighbourhood used by [`is_rho_convex_at`].
pub const EPS_LOC: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct RhoFamily {
    pub rho: f64,
    pub domain: ConvexRegion,
    pub n_arc: usize,
}

impl RhoFamily {
    pub fn new(rho: f64, domain: ConvexRegion) -> Result<Self> {
        Self::with_arcs(rho, domain, DEFAULT_N_ARC)
    }

    pub fn with_arcs(rho: f64, domain: ConvexRegion, n_arc: usize) -> Result<Self> {
        if !(rho >= 1.0) {
            return Err(Error::Invalid(format!("rho must be at least 1, got {rho}")));
        }
        if !domain.has_interior() || domain.diameter() > 1.0 + 1e-9 {
            return Err(Error::Invalid("domain must be normalized to diameter at most 1".into()));
        }
        Ok(RhoFamily { rho, domain, n_arc: n_arc.max(8) })
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::with_arcs(rho, self.domain.clone(), self.n_arc)
    }

    /// Slack used when checking a polygonal set against a polygonal cap.
    /// A support line along a chord of an inscribed polygon leaves the next
    /// vertex four sagittas outside the tangent circle, and the cap polygon
    /// itself sits one sagitta inside its circle.
    pub fn cap_tolerance(&self) -> f64 {
        6.0 * arc_tolerance(self.rho, self.n_arc)
    }

    /// Angle by which the normal of an inscribed chord can differ from the
    /// normal of the arc it replaces.
    pub fn normal_slack(&self) -> f64 {
        PI / self.n_arc as f64
    }

    /// Inscribed polygon of the ball with a vertex at angle `phase`.
    pub fn ball(&self, center: Point, phase: f64) -> ConvexRegion {
        Disc { center, radius: self.rho }.polygon(self.n_arc, phase)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cap {
    pub region: ConvexRegion,
    pub source_ball: Disc,
    pub witness: Point,
}

/// Maximal runs of the domain boundary lying outside the convex polygon
/// `ball`, each as a polyline including its crossing points.
fn outside_runs(domain: &ConvexRegion, ball: &ConvexRegion) -> Vec<Vec<Point>> {
    let v = domain.vertices();
    let n = v.len();
    // pieces of each edge outside the ball, as parameter intervals
    let mut pieces: Vec<(Point, Point, bool, bool)> = Vec::new();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let inside = ConvexRegion::hull(&[a, b]).intersect(ball);
        let iv = inside.vertices();
        if iv.is_empty() {
            pieces.push((a, b, true, true));
            continue;
        }
        let d = b - a;
        let len2 = d.dot(d).max(1e-300);
        let mut ts: Vec<f64> = iv.iter().map(|&q| (q - a).dot(d) / len2).collect();
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (lo, hi) = (ts[0].clamp(0.0, 1.0), ts[ts.len() - 1].clamp(0.0, 1.0));
        if lo > 1e-12 {
            pieces.push((a, a + d * lo, true, false));
        }
        if hi < 1.0 - 1e-12 {
            pieces.push((a + d * hi, b, false, true));
        }
    }
    let mut runs: Vec<Vec<Point>> = Vec::new();
    let mut open = false;
    for &(p, q, starts_at_vertex, ends_at_vertex) in &pieces {
        if open && starts_at_vertex {
            runs.last_mut().unwrap().push(q);
        } else {
            runs.push(vec![p, q]);
        }
        open = ends_at_vertex;
    }
    // the walk may have started in the middle of a run that wraps around
    if runs.len() > 1 && open && pieces.first().map_or(false, |f| f.2) {
        let first = runs.remove(0);
        runs.last_mut().unwrap().extend(first.into_iter().skip(1));
    }
    runs
}

/// The support ball of `s` seen from `x` and the cap it cuts: the domain
/// minus the component of `domain \ B` that contains `x`.
pub fn support_cap(s: &ConvexRegion, x: Point, fam: &RhoFamily) -> Result<Cap> {
    if s.is_empty() {
        return Err(Error::EmptyRegion("support_cap"));
    }
    if s.dist_to(x) <= EPS_GEOM {
        return Err(Error::Invalid("support_cap: point lies in the set".into()));
    }
    let p = s.project(x);
    let d = x - p;
    cap_along(p, d * (1.0 / d.norm()), x, fam)
}

/// Cap cut by the ball of radius `rho` touching `p` with outward normal `u`.
fn cap_along(p: Point, u: Point, x: Point, fam: &RhoFamily) -> Result<Cap> {
    let center = p - u * fam.rho;
    let ball = fam.ball(center, u.y.atan2(u.x));
    let inside = fam.domain.intersect(&ball);
    let runs = outside_runs(&fam.domain, &ball);
    if runs.len() > 2 {
        return Err(Error::Invalid(format!("support_cap: {} escape components", runs.len())));
    }
    // each escape component sits in the angular sector of its boundary run
    let angle = |q: Point| (q.y - center.y).atan2(q.x - center.x);
    let ax = angle(x);
    let span_dist = |run: &[Point]| {
        let mut a0 = angle(run[0]);
        let (mut lo, mut hi) = (a0, a0);
        for &q in &run[1..] {
            let mut a = angle(q);
            while a - a0 > PI {
                a -= 2.0 * PI;
            }
            while a0 - a > PI {
                a += 2.0 * PI;
            }
            lo = lo.min(a);
            hi = hi.max(a);
            a0 = a;
        }
        let mid = 0.5 * (lo + hi);
        let mut d = ax - mid;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        d.abs() - 0.5 * (hi - lo)
    };
    let escape = (0..runs.len()).min_by(|&i, &j| span_dist(&runs[i]).partial_cmp(&span_dist(&runs[j])).unwrap());
    let mut pts: Vec<Point> = inside.vertices().to_vec();
    for (i, run) in runs.iter().enumerate() {
        if Some(i) != escape {
            pts.extend_from_slice(run);
        }
    }
    Ok(Cap { region: ConvexRegion::hull(&pts), source_ball: Disc { center, radius: fam.rho }, witness: x })
}

/// Whether some ball of radius `rho` through the boundary point `x`
/// contains `t` near `x`.
pub fn is_rho_convex_at(t: &ConvexRegion, x: Point, fam: &RhoFamily) -> Result<bool> {
    if !t.has_interior() {
        return Err(Error::EmptyRegion("is_rho_convex_at"));
    }
    if t.project(x).dist(x) > EPS_GEOM || t.contains_interior(x, EPS_GEOM) {
        return Err(Error::Invalid("is_rho_convex_at: point is not on the boundary".into()));
    }
    let local = t.intersect(&Disc { center: x, radius: EPS_LOC }.polygon(fam.n_arc, 0.0));
    let tol = arc_tolerance(fam.rho, fam.n_arc);
    let v = t.vertices();
    let n = v.len();
    let outward = |i: usize| {
        let e = v[(i + 1) % n] - v[i];
        Point::new(e.y, -e.x) * (1.0 / e.norm())
    };
    let fits = |nrm: Point| {
        let c = x - nrm * fam.rho;
        local.vertices().iter().all(|&q| q.dist(c) <= fam.rho + tol)
    };
    // a vertex of t at x: sample the normal cone between the adjacent edges
    if let Some(i) = (0..n).find(|&i| v[i].dist(x) <= EPS_GEOM) {
        let a = outward((i + n - 1) % n);
        let b = outward(i);
        let (a0, mut b0) = (a.y.atan2(a.x), b.y.atan2(b.x));
        while b0 < a0 {
            b0 += 2.0 * PI;
        }
        return Ok((0..=32).any(|k| {
            let ang = a0 + (b0 - a0) * k as f64 / 32.0;
            fits(Point::new(ang.cos(), ang.sin()))
        }));
    }
    let i = (0..n)
        .min_by(|&i, &j| {
            let di = crate::geometry::closest_on_segment(x, v[i], v[(i + 1) % n]).dist(x);
            let dj = crate::geometry::closest_on_segment(x, v[j], v[(j + 1) % n]).dist(x);
            di.partial_cmp(&dj).unwrap()
        })
        .unwrap();
    Ok(fits(outward(i)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FRhoReport {
    pub pass: bool,
    pub checked: usize,
    pub witness: Option<Point>,
    /// Largest distance of a vertex of `t` outside a cap.
    pub worst_excess: f64,
    pub tolerance: f64,
}

/// Deterministic points of `domain \ t`, roughly `n` of them.
pub fn exterior_samples(t: &ConvexRegion, domain: &ConvexRegion, n: usize) -> Vec<Point> {
    let Some(b) = domain.bbox() else { return Vec::new() };
    let area = domain.area().max(1e-12);
    let free = (area - t.intersect(domain).area()).max(area * 1e-3);
    let mut h = (free / n.max(1) as f64).sqrt();
    for _ in 0..6 {
        let mut out = Vec::new();
        let nx = ((b.max.x - b.min.x) / h).ceil() as usize + 1;
        let ny = ((b.max.y - b.min.y) / h).ceil() as usize + 1;
        for i in 0..nx {
            for j in 0..ny {
                let p = Point::new(b.min.x + (i as f64 + 0.5) * h, b.min.y + (j as f64 + 0.5) * h);
                if domain.contains(p, 0.0) && t.dist_to(p) > 1e-6 {
                    out.push(p);
                }
            }
        }
        if out.len() >= n || free <= area * 1e-3 {
            if out.len() > n {
                let stride = out.len() as f64 / n as f64;
                out = (0..n).map(|k| out[(k as f64 * stride) as usize]).collect();
            }
            return out;
        }
        h *= 0.6;
    }
    Vec::new()
}

/// Checks `t ⊆ C(t, x)` at sampled exterior points `x`.
pub fn check_f_rho(t: &ConvexRegion, fam: &RhoFamily, n_samples: usize) -> Result<FRhoReport> {
    if t.is_empty() {
        return Err(Error::EmptyRegion("check_f_rho"));
    }
    let tol = fam.cap_tolerance();
    let mut worst: f64 = 0.0;
    let xs = exterior_samples(t, &fam.domain, n_samples);
    for (k, &x) in xs.iter().enumerate() {
        // the polygon only knows its normals up to the chord slack, so the
        // best ball within that cone is used
        let p = t.project(x);
        let d = x - p;
        let a0 = d.y.atan2(d.x);
        let mut excess = f64::INFINITY;
        for step in [0.0, -1.0, 1.0, -0.5, 0.5, -0.25, 0.25, -0.75, 0.75] {
            let a = a0 + step * fam.normal_slack();
            let cap = cap_along(p, Point::new(a.cos(), a.sin()), x, fam)?;
            let e = t.vertices().iter().map(|&q| cap.region.dist_to(q)).fold(0.0, f64::max);
            excess = excess.min(e);
            if excess <= 0.25 * tol {
                break;
            }
        }
        worst = worst.max(excess);
        if excess > tol {
            return Ok(FRhoReport { pass: false, checked: k + 1, witness: Some(x), worst_excess: excess, tolerance: tol });
        }
    }
    Ok(FRhoReport { pass: true, checked: xs.len(), witness: None, worst_excess: worst, tolerance: tol })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Minor arc of radius `rho` from `x` to `y` bulging to the given side of
/// the directed chord.
pub fn bow(x: Point, y: Point, fam: &RhoFamily, side: Side) -> Result<Vec<Point>> {
    let c = x.dist(y);
    if c <= EPS_GEOM {
        return Err(Error::Invalid("bow: coincident endpoints".into()));
    }
    if c >= 2.0 * fam.rho {
        return Err(Error::Invalid("bow: chord is not shorter than the diameter".into()));
    }
    let m = (x + y) * 0.5;
    let dir = (y - x) * (1.0 / c);
    let left = Point::new(-dir.y, dir.x);
    let h = (fam.rho * fam.rho - c * c / 4.0).sqrt();
    let center = match side {
        Side::Left => m - left * h,
        Side::Right => m + left * h,
    };
    let a0 = (x.y - center.y).atan2(x.x - center.x);
    let half = (c / (2.0 * fam.rho)).asin();
    let sweep = 2.0 * half;
    let steps = ((sweep / (2.0 * PI / fam.n_arc as f64)).ceil() as usize).max(2);
    // left bows run clockwise around a center on the right
    let sgn = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    Ok((0..=steps)
        .map(|k| {
            let a = a0 + sgn * sweep * k as f64 / steps as f64;
            if k == steps {
                y
            } else {
                Point::new(center.x + fam.rho * a.cos(), center.y + fam.rho * a.sin())
            }
        })
        .collect())
}

/// `domain ∩` caps of `{y}` seen from each point of `xs` (skipping points
/// too close to `y`).
pub fn cap_intersection(y_of: impl Fn(Point) -> Option<Point>, xs: &[Point], fam: &RhoFamily) -> Result<ConvexRegion> {
    let mut out = fam.domain.clone();
    for &x in xs {
        let Some(y) = y_of(x) else { continue };
        if y.dist(x) <= EPS_GEOM {
            continue;
        }
        let single = ConvexRegion::hull(&[y]);
        let cap = support_cap(&single, x, fam)?;
        out = out.intersect(&cap.region);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(rho: f64, n: usize) -> RhoFamily {
        RhoFamily::with_arcs(rho, ConvexRegion::rect(0.0, 0.0, 0.7, 0.7), n).unwrap()
    }

    #[test]
    fn cap_of_lower_half_contains_it() {
        let f = fam(1.0, 64);
        let s = ConvexRegion::rect(0.0, 0.0, 0.7, 0.35);
        let x = Point::new(0.35, 0.6);
        let cap = support_cap(&s, x, &f).unwrap();
        assert!(!cap.region.contains(x, 0.0));
        assert!(cap.region.contains(s.project(x), 1e-9));
        // s is not rho-convex at its flat top so only the tangent point is guaranteed
        let inside = ConvexRegion::rect(0.32, 0.0, 0.38, 0.35);
        assert!(cap.region.contains_region(&inside, f.cap_tolerance()));
    }

    #[test]
    fn cap_at_corner_uses_projection_direction() {
        let f = fam(1.0, 64);
        let s = ConvexRegion::rect(0.0, 0.0, 0.3, 0.3);
        let x = Point::new(0.5, 0.5);
        let cap = support_cap(&s, x, &f).unwrap();
        let u = (x - Point::new(0.3, 0.3)) * (1.0 / (x - Point::new(0.3, 0.3)).norm());
        let expect = Point::new(0.3, 0.3) - u;
        assert!(cap.source_ball.center.dist(expect) < 1e-12);
        assert!(support_cap(&s, Point::new(0.1, 0.1), &f).is_err());
    }

    #[test]
    fn cap_keeps_the_second_component() {
        let f = RhoFamily::with_arcs(1.0, ConvexRegion::rect(0.0, 0.0, 0.9, 0.1), 64).unwrap();
        let ball = f.ball(Point::new(0.45, -0.85), 0.0);
        assert_eq!(outside_runs(&f.domain, &ball).len(), 2);
        let p = Point::new(0.45, 0.15);
        let cap = cap_along(Point::new(0.45, 0.15), Point::new(0.0, 1.0), Point::new(0.02, 0.095), &f).unwrap();
        assert!(cap.region.contains(Point::new(0.895, 0.095), 1e-12));
        assert!(!cap.region.contains(Point::new(0.005, 0.099), 1e-12));
        assert!(cap.region.contains(Point::new(0.45, 0.05), 1e-12) && p.y > 0.1);
    }

    #[test]
    fn rho_convex_at_examples() {
        let f = fam(1.0, 128);
        let d = f.domain.intersect(&f.ball(Point::new(0.35, -0.6), 0.0));
        let top = d.vertices().iter().copied().max_by(|a, b| a.y.partial_cmp(&b.y).unwrap()).unwrap();
        assert!(is_rho_convex_at(&d, top, &f).unwrap());
        let r = ConvexRegion::rect(0.05, 0.3, 0.65, 0.4);
        assert!(!is_rho_convex_at(&r, Point::new(0.35, 0.4), &f).unwrap());
        assert!(is_rho_convex_at(&r, Point::new(0.65, 0.4), &f).unwrap());
        assert!(is_rho_convex_at(&r, Point::new(0.35, 0.35), &f).is_err());
    }

    #[test]
    fn f_rho_examples() {
        let f = fam(1.0, 64);
        let r = check_f_rho(&f.domain, &f, 50).unwrap();
        assert!(r.pass && r.checked == 0);
        let t = f.domain.intersect(&f.ball(Point::new(0.35, -0.5), 0.0)).intersect(&f.ball(Point::new(-0.6, 0.2), 0.0));
        assert!(check_f_rho(&t, &f, 200).unwrap().pass);
        let flat = ConvexRegion::rect(0.05, 0.3, 0.65, 0.4);
        let r = check_f_rho(&flat, &f, 200).unwrap();
        assert!(!r.pass);
        // larger radius accepts the same set
        let g = fam(40.0, 64);
        assert!(check_f_rho(&t, &g, 200).unwrap().pass);
    }

    #[test]
    fn bow_examples() {
        let f = fam(2.6, 256);
        let x = Point::new(0.0, 0.0);
        let y = Point::new(0.5, 0.0);
        let l = bow(x, y, &f, Side::Left).unwrap();
        let r = bow(x, y, &f, Side::Right).unwrap();
        let sag = 2.6 - (2.6f64 * 2.6 - 0.0625).sqrt();
        let top = l.iter().map(|p| p.y).fold(f64::MIN, f64::max);
        let bot = r.iter().map(|p| p.y).fold(f64::MAX, f64::min);
        assert!((top - sag).abs() < 1e-3 * sag + 1e-6);
        assert!((bot + sag).abs() < 1e-3 * sag + 1e-6);
        assert!(l.first().unwrap().dist(x) < 1e-12 && l.last().unwrap().dist(y) < 1e-12);
        assert!(bow(x, x, &f, Side::Left).is_err());
        assert!(bow(x, Point::new(5.2, 0.0), &f, Side::Left).is_err());
    }
}
