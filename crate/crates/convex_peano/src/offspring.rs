//! The offspring of a soul: a population of souls of length `m_prime`
//! whose bases refine the parent base and whose extent along one axis is
//! of order `gamma`.
//!
//! Pipeline (x axis): net of the core, anti-net of the base, both
//! stretched to a common skeleton, the station of the disturbance inserted
//! where the anti-net skeleton has passed it, then `t# = station ⊕ net`
//! and `t⊗ = t# ∩ anti-net`, every entry doubled. The y axis conjugates by
//! the coordinate swap.
//!
//! Stations depend only on the disturbance, nets only on the core and
//! anti-nets only on the base; all three are memoized on those regions so
//! equal inputs give identical outputs across parents.

use serde::Serialize;
use std::rc::Rc;

use crate::geometry::{Axis, BBox, ConvexRegion, FrameTransform, Point, Shape};
use crate::nets_stations::{assemble_net, build_station, net_frame, NetContext, NetFrame, Station};
use crate::seq_algebra::{same_region, Soul};
use crate::{Error, Result};

/// Nondecreasing surjective index map (0-based source indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StretchMap {
    pub targets: Vec<usize>,
    pub source_len: usize,
}

impl StretchMap {
    pub fn new(targets: Vec<usize>, source_len: usize) -> Result<Self> {
        let ok = !targets.is_empty()
            && targets[0] == 0
            && *targets.last().unwrap() + 1 == source_len
            && targets.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1);
        if !ok {
            return Err(Error::Invalid("stretch map must be nondecreasing and surjective".into()));
        }
        Ok(StretchMap { targets, source_len })
    }

    pub fn identity(n: usize) -> Self {
        StretchMap { targets: (0..n).collect(), source_len: n }
    }

    pub fn target_len(&self) -> usize {
        self.targets.len()
    }
}

pub fn stretch<T: Clone>(seq: &[T], map: &StretchMap) -> Result<Vec<T>> {
    if seq.len() != map.source_len {
        return Err(Error::LengthMismatch { left: seq.len(), right: map.source_len });
    }
    Ok(map.targets.iter().map(|&i| seq[i].clone()).collect())
}

/// Stretches of two skeletons to the common length `m + n` whose pointwise
/// gap is at most `gamma`, built from the tails: the larger last element is
/// dropped until both sequences are down to one entry.
pub fn merge_skeletons(chi: &[f64], psi: &[f64], gamma: f64) -> Result<(StretchMap, StretchMap)> {
    let (m, n) = (chi.len(), psi.len());
    if m == 0 || n == 0 {
        return Err(Error::Invalid("merge_skeletons: empty skeleton".into()));
    }
    let tol = 1e-12;
    if (chi[0] - psi[0]).abs() > gamma + tol || (chi[m - 1] - psi[n - 1]).abs() > gamma + tol {
        return Err(Error::Invalid(format!(
            "merge_skeletons: endpoint gap exceeds {gamma} ({}, {})",
            (chi[0] - psi[0]).abs(),
            (chi[m - 1] - psi[n - 1]).abs()
        )));
    }
    let (mut i, mut j) = (m - 1, n - 1);
    let mut pairs = Vec::with_capacity(m + n);
    loop {
        pairs.push((i, j));
        if i == 0 && j == 0 {
            break;
        }
        if j == 0 || (i > 0 && chi[i] >= psi[j]) {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.push((0, 0));
    pairs.reverse();
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| (chi[a] - psi[b]).abs() > gamma + tol) {
        return Err(Error::Invalid(format!("merge_skeletons: gap at ({}, {}) exceeds {gamma}", a + 1, b + 1)));
    }
    let k = StretchMap::new(pairs.iter().map(|p| p.0).collect(), m)?;
    let kp = StretchMap::new(pairs.iter().map(|p| p.1).collect(), n)?;
    Ok((k, kp))
}

/// Informational finding recorded while building; the construction goes
/// on regardless.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: String,
    pub detail: String,
    pub value: f64,
}

/// The result of one offspring call, in the caller's frame.
#[derive(Clone, Debug)]
pub struct Offspring {
    pub souls: Vec<Soul>,
    /// The combined sequence `t⊗` before doubling (length `n̂`).
    pub combined: Vec<ConvexRegion>,
    /// Index (1-based) after which the station was inserted.
    pub l0: usize,
}

impl Offspring {
    pub fn bases(&self) -> Vec<ConvexRegion> {
        self.souls.iter().map(|s| s.base.clone()).collect()
    }
    pub fn disturbances(&self) -> Vec<Shape> {
        self.souls.iter().map(Soul::disturbance).collect()
    }
}

struct Memo<K, V> {
    entries: Vec<(K, Option<BBox>, Rc<V>)>,
}

impl<K, V> Memo<K, V> {
    fn new() -> Self {
        Memo { entries: Vec::new() }
    }
    fn find(&self, bb: Option<BBox>, eq: impl Fn(&K) -> bool) -> Option<Rc<V>> {
        let close = |a: &Option<BBox>| match (a, &bb) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                (a.min.x - b.min.x).abs() <= 1e-6
                    && (a.min.y - b.min.y).abs() <= 1e-6
                    && (a.max.x - b.max.x).abs() <= 1e-6
                    && (a.max.y - b.max.y).abs() <= 1e-6
            }
            _ => false,
        };
        self.entries.iter().find(|(k, b, _)| close(b) && eq(k)).map(|e| e.2.clone())
    }
    fn insert(&mut self, k: K, bb: Option<BBox>, v: V) -> Rc<V> {
        let v = Rc::new(v);
        self.entries.push((k, bb, v.clone()));
        v
    }
}

/// Net (or anti-net) with its skeleton.
#[derive(Clone, Debug)]
pub struct BuiltNet {
    pub stages: Vec<ConvexRegion>,
    pub chi: Vec<f64>,
}

/// Builds offspring for all souls of one level. Call [`prepare`] on every
/// parent first so that the common station length is known, then
/// [`offspring`].
///
/// [`prepare`]: OffspringBuilder::prepare
/// [`offspring`]: OffspringBuilder::offspring
pub struct OffspringBuilder {
    pub ctx: NetContext,
    pub axis: Axis,
    frame: FrameTransform,
    frames: Memo<ConvexRegion, NetFrame>,
    stations: Memo<Shape, Station>,
    nets: Memo<ConvexRegion, BuiltNet>,
    anti_nets: Memo<ConvexRegion, BuiltNet>,
    done: Memo<(ConvexRegion, ConvexRegion), Offspring>,
    n_star: Option<usize>,
    longest_station: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl OffspringBuilder {
    pub fn new(ctx: NetContext, axis: Axis) -> Self {
        let frame = match axis {
            Axis::X => FrameTransform::IDENTITY,
            Axis::Y => FrameTransform::SWAP_XY,
        };
        OffspringBuilder {
            ctx,
            axis,
            frame,
            frames: Memo::new(),
            stations: Memo::new(),
            nets: Memo::new(),
            anti_nets: Memo::new(),
            done: Memo::new(),
            n_star: None,
            longest_station: 1,
            diagnostics: Vec::new(),
        }
    }

    fn to_work(&self, c: &ConvexRegion) -> ConvexRegion {
        let f = self.frame;
        c.map_points(|p| f.apply(p))
    }

    fn from_work(&self, c: &ConvexRegion) -> ConvexRegion {
        let f = self.frame;
        c.map_points(|p| f.invert(p))
    }

    fn note(&mut self, kind: &str, detail: String, value: f64) {
        self.diagnostics.push(Diagnostic { kind: kind.into(), detail, value });
    }

    fn frame_of(&mut self, t: &ConvexRegion) -> Result<Rc<NetFrame>> {
        if let Some(f) = self.frames.find(t.bbox(), |k| same_region(k, t)) {
            return Ok(f);
        }
        let p = &self.ctx.params;
        let f = net_frame(t, p.gamma, p.n0, self.ctx.fam.n_arc)?;
        Ok(self.frames.insert(t.clone(), t.bbox(), f))
    }

    fn station_of(&mut self, d: &Shape, core: &ConvexRegion) -> Result<Rc<Station>> {
        if let Some(s) = self.stations.find(d.bbox(), |k| k.same_as(d)) {
            return Ok(s);
        }
        let s = build_station(d, core, &self.ctx)?;
        if let Some(n) = self.n_star {
            if s.len() > n {
                return Err(Error::Invalid(format!("station of length {} exceeds the level length {n}", s.len())));
            }
        }
        self.longest_station = self.longest_station.max(s.len());
        let gp = self.ctx.params.gamma_prime;
        let max_inc = s
            .ladder
            .windows(2)
            .map(|w| Shape::from_convex(&w[1]).minus(&w[0]).diameter())
            .fold(0.0, f64::max);
        if max_inc > gp {
            self.note("station_increment", format!("station increment {max_inc:.4} exceeds gamma' {gp}"), max_inc);
        }
        Ok(self.stations.insert(d.clone(), d.bbox(), s))
    }

    /// Frames and stations used by the net of `t` (in the working frame).
    fn prepare_net(&mut self, t: &ConvexRegion) -> Result<Vec<Rc<Station>>> {
        let f = self.frame_of(t)?;
        let mut out = Vec::with_capacity(f.coarse.len().saturating_sub(1));
        for l in 1..f.coarse.len() {
            out.push(self.station_of(&f.increments[l], &f.coarse[l - 1])?);
        }
        Ok(out)
    }

    fn reflect(c: &ConvexRegion) -> ConvexRegion {
        c.map_points(|p| Point::new(-p.x, p.y))
    }

    /// First pass: builds every station the soul needs.
    pub fn prepare(&mut self, soul: &Soul) -> Result<()> {
        let t = self.to_work(&soul.base);
        let c = self.to_work(&soul.core);
        self.prepare_net(&c)?;
        self.prepare_net(&Self::reflect(&t))?;
        let d = Shape::difference(&t, &c);
        self.station_of(&d, &c)?;
        Ok(())
    }

    /// Longest station seen so far; the level length once fixed.
    pub fn n_star(&self) -> usize {
        self.n_star.unwrap_or(self.longest_station)
    }

    /// Fixes the common station length (at least the longest station).
    pub fn fix_n_star(&mut self, n: usize) {
        self.n_star = Some(n.max(self.longest_station));
    }

    /// `n1 = (n0 - 1) n_star + 1`.
    pub fn n1(&self) -> usize {
        (self.ctx.params.n0 - 1) * self.n_star() + 1
    }

    /// `m_prime = 2 (2 n1 + n_star)`.
    pub fn m_prime(&self) -> usize {
        2 * (2 * self.n1() + self.n_star())
    }

    fn net_of(&mut self, t: &ConvexRegion) -> Result<Rc<BuiltNet>> {
        if let Some(n) = self.nets.find(t.bbox(), |k| same_region(k, t)) {
            return Ok(n);
        }
        let stations = self.prepare_net(t)?;
        let f = self.frame_of(t)?;
        let refs: Vec<&Station> = stations.iter().map(|s| s.as_ref()).collect();
        let (stages, chi) = assemble_net(&f, &refs, self.n_star());
        Ok(self.nets.insert(t.clone(), t.bbox(), BuiltNet { stages, chi }))
    }

    /// Decreasing anti-net of `t` through the mirrored net.
    fn anti_net_of(&mut self, t: &ConvexRegion) -> Result<Rc<BuiltNet>> {
        if let Some(n) = self.anti_nets.find(t.bbox(), |k| same_region(k, t)) {
            return Ok(n);
        }
        let m = self.net_of(&Self::reflect(t))?;
        let stages: Vec<ConvexRegion> = m.stages.iter().rev().map(Self::reflect).collect();
        let chi: Vec<f64> = m.chi.iter().rev().map(|c| -c).collect();
        Ok(self.anti_nets.insert(t.clone(), t.bbox(), BuiltNet { stages, chi }))
    }

    /// Second pass: the offspring of `soul` in the caller's frame.
    pub fn offspring(&mut self, soul: &Soul) -> Result<Rc<Offspring>> {
        if self.n_star.is_none() {
            self.prepare(soul)?;
            self.fix_n_star(self.longest_station);
        }
        let key_bb = soul.base.bbox();
        if let Some(o) = self.done.find(key_bb, |(b, c)| same_region(b, &soul.base) && same_region(c, &soul.core)) {
            return Ok(o);
        }
        let t = self.to_work(&soul.base);
        let c = self.to_work(&soul.core);
        let gamma = self.ctx.params.gamma;
        let d = Shape::difference(&t, &c);
        let dd = d.diameter();
        if dd > gamma {
            self.note("tau", format!("disturbance diameter {dd:.4} exceeds gamma {gamma}"), dd);
        }
        let plus = self.net_of(&c)?;
        let minus = self.anti_net_of(&t)?;
        let n1 = plus.stages.len();
        let gap = (plus.chi[0] - minus.chi[0]).abs().max((plus.chi[n1 - 1] - minus.chi[n1 - 1]).abs());
        let g = if gap > gamma {
            self.note("skeleton_gap", format!("skeleton endpoint gap {gap:.4} exceeds gamma {gamma}"), gap);
            gap
        } else {
            gamma
        };
        let (kp, km) = merge_skeletons(&plus.chi, &minus.chi, g)?;
        let tp = stretch(&plus.stages, &kp)?;
        let tm = stretch(&minus.stages, &km)?;
        let chim = stretch(&minus.chi, &km)?;
        let two_n1 = tp.len();
        // first index whose anti-net skeleton has passed the disturbance
        let l0 = match d.bbox() {
            None => 1,
            Some(b) => match chim.iter().position(|&x| b.max.x <= x + gamma + 1e-12) {
                Some(i) => i + 1,
                None => {
                    self.note("l0", "disturbance never inside a band; inserted at the end".into(), b.max.x);
                    two_n1
                }
            },
        };
        let st = self.station_of(&d, &c)?;
        let ns = self.n_star();
        let n_hat = two_n1 + ns;
        let src = |i: usize| {
            if i <= l0 {
                i
            } else if i <= l0 + ns {
                l0
            } else {
                i - ns
            }
        };
        let empty = Shape::empty();
        let mut combined = Vec::with_capacity(n_hat);
        for i in 1..=n_hat {
            let s = &tp[src(i) - 1];
            let piece: &Shape = if i <= l0 {
                &empty
            } else if i <= l0 + ns {
                st.stage(i - l0 - 1)
            } else {
                &d
            };
            let sharp = if i == n_hat {
                t.clone()
            } else if piece.is_empty() {
                s.clone()
            } else {
                let mut pts = s.vertices().to_vec();
                pts.extend(piece.parts().iter().flat_map(|p| p.vertices().iter().copied()));
                ConvexRegion::hull(&pts)
            };
            let a = &tm[src(i) - 1];
            let cell = if a.contains_region(&sharp, 0.0) {
                sharp
            } else if sharp.contains_region(a, 0.0) {
                a.clone()
            } else {
                sharp.intersect(a)
            };
            if !cell.has_interior() {
                return Err(Error::Validation {
                    criterion: "offspring".into(),
                    witness: format!("combined cell {i} has empty interior"),
                });
            }
            combined.push(cell);
        }
        let souls = double(&combined);
        let souls: Vec<Soul> = souls
            .into_iter()
            .map(|s| Soul { base: self.from_work(&s.base), core: self.from_work(&s.core) })
            .collect();
        let combined = combined.iter().map(|c| self.from_work(c)).collect();
        let o = Offspring { souls, combined, l0 };
        Ok(self.done.insert((soul.base.clone(), soul.core.clone()), key_bb, o))
    }
}

/// Doubles a sequence of convex sets into a regular soul sequence:
/// equal bases in pairs, cores the meets with the neighbouring pair.
pub fn double(seq: &[ConvexRegion]) -> Vec<Soul> {
    let n = seq.len();
    let meet = |a: &ConvexRegion, b: &ConvexRegion| {
        if a == b || b.contains_region(a, 0.0) {
            a.clone()
        } else {
            a.intersect(b)
        }
    };
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let left = if i == 0 { seq[0].clone() } else { meet(&seq[i], &seq[i - 1]) };
        let right = if i + 1 == n { seq[i].clone() } else { meet(&seq[i], &seq[i + 1]) };
        out.push(Soul { base: seq[i].clone(), core: left });
        out.push(Soul { base: seq[i].clone(), core: right });
    }
    out
}

/// One-shot offspring of a single soul with its own station length.
pub fn make_offspring(soul: &Soul, ctx: NetContext, axis: Axis) -> Result<(Vec<ConvexRegion>, Vec<Shape>)> {
    let mut b = OffspringBuilder::new(ctx, axis);
    let o = b.offspring(soul)?;
    Ok((o.bases(), o.disturbances()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets_stations::compute_params;
    use crate::seq_algebra::{validate_population_of_sets, validate_population_of_souls};

    #[test]
    fn stretch_examples() {
        let s = vec!['a', 'b'];
        assert_eq!(stretch(&s, &StretchMap::identity(2)).unwrap(), s);
        let m = StretchMap::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(stretch(&s, &m).unwrap(), vec!['a', 'a', 'b']);
        assert!(StretchMap::new(vec![0, 2], 3).is_err());
        assert!(StretchMap::new(vec![1, 0], 2).is_err());
        assert!(stretch(&['a'], &m).is_err());
    }

    #[test]
    fn merge_examples() {
        let (k, kp) = merge_skeletons(&[0.5], &[0.6], 0.2).unwrap();
        assert_eq!((k.targets, kp.targets), (vec![0, 0], vec![0, 0]));
        let chi = [0.0, 0.1, 0.2, 0.3];
        let (k, kp) = merge_skeletons(&chi, &chi, 0.1).unwrap();
        assert_eq!(k.target_len(), 8);
        for (a, b) in k.targets.iter().zip(&kp.targets) {
            assert!((chi[*a] - chi[*b]).abs() <= 0.1);
        }
        assert!(merge_skeletons(&[0.0, 0.1], &[0.5, 0.6], 0.2).is_err());
    }

    fn square() -> ConvexRegion {
        let h = 0.5 / 2f64.sqrt();
        ConvexRegion::rect(-h, -h, h, h)
    }

    fn builder(axis: Axis) -> OffspringBuilder {
        let p = compute_params(5.2, 0.125, 0.2 / 2.4).unwrap();
        OffspringBuilder::new(NetContext::new(p, square(), 64, 8).unwrap(), axis)
    }

    #[test]
    fn whole_domain_offspring_is_a_population() {
        let mut b = builder(Axis::Y);
        let soul = Soul::whole(square());
        let o = b.offspring(&soul).unwrap();
        assert_eq!(o.souls.len(), b.m_prime());
        assert!(validate_population_of_souls(&o.souls).unwrap().pass);
        let bases = o.bases();
        let r = validate_population_of_sets(&bases, Some(&square()), 1e-3 * square().area());
        assert!(r.pass, "{r:?}");
        let h = 0.5 / 2f64.sqrt();
        assert!((bases[0].bbox().unwrap().min.y + h).abs() < 1e-9);
        assert!((bases.last().unwrap().bbox().unwrap().max.y - h).abs() < 1e-9);
        let ext = bases.iter().map(|c| c.bbox().unwrap()).map(|b| b.max.y - b.min.y).fold(0.0, f64::max);
        assert!(ext <= 11.0 * 0.125 + 1e-2);
    }

    #[test]
    fn axis_y_is_the_swap_of_axis_x() {
        let t = square().intersect(&ConvexRegion::rect(-1.0, -1.0, 0.2, 0.1));
        let swap = |c: &ConvexRegion| c.map_points(|p| Point::new(p.y, p.x));
        let mut bx = builder(Axis::X);
        let mut by = builder(Axis::Y);
        let ox = bx.offspring(&Soul::whole(swap(&t))).unwrap();
        let oy = by.offspring(&Soul::whole(t)).unwrap();
        assert_eq!(ox.souls.len(), oy.souls.len());
        for (a, b) in ox.souls.iter().zip(&oy.souls) {
            assert!(same_region(&swap(&a.base), &b.base));
        }
    }
}
