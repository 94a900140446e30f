//! Evaluation of the curve through the level stack: the parameter
//! interval is cut into `M(j)` equal pieces at level `j`, and piece `K`
//! is sent into cell `t(j; K)`.

use serde::Serialize;

use crate::construction::{max_diameter, PartitionLevel};
use crate::geometry::{ConvexRegion, FrameTransform, Point};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct CurvePartition {
    pub levels: Vec<PartitionLevel>,
    /// Normalized domain.
    pub domain: ConvexRegion,
    /// Maps the normalized frame onto the original domain.
    pub transform: FrameTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Point in the original frame.
    pub point: Point,
    /// Diameter of the cell the point was taken from (original frame).
    pub error_radius: f64,
}

/// Image of a parameter interval at one level.
#[derive(Clone, Debug)]
pub struct IntervalImage {
    /// Hull of the covering cells, original frame.
    pub region: ConvexRegion,
    /// Hull of the cells whose parameter pieces lie inside `[a, b]`, if
    /// any; the difference to `region` is the collar of at most two
    /// boundary cells.
    pub inner: Option<ConvexRegion>,
    /// First and last covering cell (1-based).
    pub cells: (usize, usize),
    /// Upper bound on `area(region) - area(union of the cells)`, original
    /// frame.
    pub deficiency: f64,
}

impl CurvePartition {
    pub fn new(levels: Vec<PartitionLevel>, domain: ConvexRegion, transform: FrameTransform) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Invalid("curve partition needs at least one level".into()));
        }
        for w in levels.windows(2) {
            if w[1].m != w[0].m * w[1].m_prime_used {
                return Err(Error::Invalid(format!("level {} count does not refine level {}", w[1].j, w[0].j)));
            }
        }
        Ok(CurvePartition { levels, domain, transform })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> Result<&PartitionLevel> {
        if j == 0 || j > self.levels.len() {
            return Err(Error::Invalid(format!("level {j} beyond depth {}", self.levels.len())));
        }
        Ok(&self.levels[j - 1])
    }

    fn to_original(&self, c: &ConvexRegion) -> ConvexRegion {
        let f = self.transform;
        c.map_points(|p| f.apply(p))
    }

    /// `2 * max d(t(j; K))` in the original frame.
    pub fn continuity_bound(&self, j: usize) -> Result<f64> {
        let l = self.level(j)?;
        Ok(2.0 * self.transform.scale * max_diameter(&l.bases()))
    }
}

fn check_param(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Invalid(format!("parameter {u} outside [0, 1]")));
    }
    Ok(())
}

/// 1-based index of the piece `[(K-1)/M, K/M]` holding `u`.
pub fn cell_index(u: f64, m: usize) -> usize {
    ((u * m as f64).floor() as usize + 1).min(m)
}

/// Centroid of `t(j; K)` with `u` in the `K`-th piece.
pub fn eval_f(cp: &CurvePartition, u: f64, j: usize) -> Result<CurvePoint> {
    check_param(u)?;
    let l = cp.level(j)?;
    let c = &l.souls[cell_index(u, l.m) - 1].base;
    let p = c.centroid().ok_or(Error::EmptyRegion("eval_f"))?;
    Ok(CurvePoint { point: cp.transform.apply(p), error_radius: cp.transform.scale * c.diameter() })
}

/// Grown-hull bound on how much the hull of `cells` exceeds their union.
fn union_deficiency(cells: &[ConvexRegion]) -> (ConvexRegion, f64) {
    let mut h = cells[0].clone();
    let mut bound = 0.0;
    for t in &cells[1..] {
        if h.contains_region(t, 1e-12) {
            continue;
        }
        let mut pts = h.vertices().to_vec();
        pts.extend_from_slice(t.vertices());
        let h2 = ConvexRegion::hull(&pts);
        bound += h2.area() - h.area() - t.area() + t.intersect(&h).area();
        h = h2;
    }
    (h, bound)
}

pub fn image_of_interval(cp: &CurvePartition, a: f64, b: f64, j: usize) -> Result<IntervalImage> {
    check_param(a)?;
    check_param(b)?;
    if a > b {
        return Err(Error::Invalid(format!("empty interval [{a}, {b}]")));
    }
    let l = cp.level(j)?;
    let m = l.m as f64;
    let (ka, kb) = (cell_index(a, l.m), cell_index(b, l.m).max(cell_index(a, l.m)));
    // a right endpoint on a piece boundary does not reach into the next piece
    let kb = if b > a && (b * m).fract() == 0.0 && kb > ka && kb as f64 > b * m { kb - 1 } else { kb };
    let bases = l.bases();
    let (hull, bound) = union_deficiency(&bases[ka - 1..kb]);
    let first_inner = if (ka as f64 - 1.0) / m >= a { ka } else { ka + 1 };
    let last_inner = if kb as f64 / m <= b { kb } else { kb - 1 };
    let inner = (first_inner <= last_inner).then(|| {
        let pts: Vec<Point> = bases[first_inner - 1..last_inner].iter().flat_map(|c| c.vertices().iter().copied()).collect();
        cp.to_original(&ConvexRegion::hull(&pts))
    });
    let s = cp.transform.scale;
    Ok(IntervalImage { region: cp.to_original(&hull), inner, cells: (ka, kb), deficiency: bound * s * s })
}

/// `f` on `n` equally spaced parameters including both ends.
pub fn sample_curve(cp: &CurvePartition, n: usize, j: usize) -> Result<Vec<Point>> {
    if n < 2 {
        return Err(Error::Invalid("sample_curve needs at least two samples".into()));
    }
    (0..n).map(|i| eval_f(cp, i as f64 / (n - 1) as f64, j).map(|c| c.point)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{make_schedule, run, BuildConfig};

    fn partition() -> CurvePartition {
        let h = 0.5 / 2f64.sqrt();
        let sq = ConvexRegion::rect(-h, -h, h, h);
        let sch = make_schedule(2, 0.2).unwrap();
        let r = run(&sq, 2, &sch, &BuildConfig::default()).unwrap();
        CurvePartition::new(r.levels, sq, FrameTransform::IDENTITY).unwrap()
    }

    #[test]
    fn eval_examples() {
        let cp = partition();
        for j in 1..=2 {
            let p = eval_f(&cp, 0.0, j).unwrap();
            assert!(cp.level(j).unwrap().souls[0].base.contains(p.point, 1e-12));
        }
        for u in [0.0, 0.3, 0.77, 1.0] {
            let e1 = eval_f(&cp, u, 1).unwrap().error_radius;
            let e2 = eval_f(&cp, u, 2).unwrap().error_radius;
            assert!(e2 <= e1 + 1e-12);
        }
        assert!(eval_f(&cp, 0.5, 3).is_err());
        assert!(eval_f(&cp, 1.5, 1).is_err());
    }

    #[test]
    fn image_examples() {
        let cp = partition();
        let whole = image_of_interval(&cp, 0.0, 1.0, 2).unwrap();
        assert!(whole.region.hausdorff(&cp.domain) < 1e-9);
        let pt = image_of_interval(&cp, 0.4, 0.4, 2).unwrap();
        assert_eq!(pt.cells.0, pt.cells.1);
        assert!(pt.region.contains(eval_f(&cp, 0.4, 2).unwrap().point, 1e-12));
        let small = image_of_interval(&cp, 0.41, 0.6, 2).unwrap();
        let big = image_of_interval(&cp, 0.3, 0.7, 2).unwrap();
        assert!(big.region.contains_region(&small.region, 1e-9));
        assert!(image_of_interval(&cp, 0.6, 0.4, 2).is_err());
    }

    #[test]
    fn sample_examples() {
        let cp = partition();
        let s = sample_curve(&cp, 2, 2).unwrap();
        assert_eq!(s[0], eval_f(&cp, 0.0, 2).unwrap().point);
        assert_eq!(s[1], eval_f(&cp, 1.0, 2).unwrap().point);
        let s = sample_curve(&cp, 500, 2).unwrap();
        let bound = cp.continuity_bound(2).unwrap();
        assert!(s.windows(2).all(|w| w[0].dist(w[1]) <= bound + 1e-9));
        assert!(sample_curve(&cp, 1, 2).is_err());
    }
}
