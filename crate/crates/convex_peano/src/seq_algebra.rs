//! Souls, set sequences and their algebra, plus the validators for
//! regularity, consistency, populations, dust, anti-dust, filling and
//! refinement.
//!
//! Indices in witnesses and in the public API are 1-based to match the
//! usual way the sequences are written down; storage is 0-based.

use serde::Serialize;
use std::collections::BTreeSet;

use crate::geometry::{grid_sample, BBox, ConvexRegion, Shape, EPS_SEP};
use crate::{Error, Result};

/// Hausdorff tolerance for treating two convex regions as the same set.
pub const EQ_TOL: f64 = 1e-9;

pub type SetSequence = Vec<Shape>;
pub type SoulSequence = Vec<Soul>;

/// A base `t` and its disturbance `t1`, stored through the convex core
/// `t \ t1` so that both convex pieces are available without recomputation.
#[derive(Clone, Debug, PartialEq)]
pub struct Soul {
    pub base: ConvexRegion,
    pub core: ConvexRegion,
}

impl Soul {
    pub fn new(base: ConvexRegion, core: ConvexRegion) -> Result<Self> {
        if !base.has_interior() {
            return Err(Error::Invalid("soul base has empty interior".into()));
        }
        if !core.has_interior() {
            return Err(Error::Invalid("soul base minus disturbance has empty interior".into()));
        }
        if !base.contains_region(&core, 1e-9) {
            return Err(Error::Invalid("soul core is not contained in its base".into()));
        }
        Ok(Soul { base, core })
    }

    /// Soul with empty disturbance.
    pub fn whole(base: ConvexRegion) -> Self {
        Soul { core: base.clone(), base }
    }

    /// Builds a soul from a base and a convex region `keep` whose
    /// intersection with the base is the new core.
    pub fn from_cut(base: &ConvexRegion, keep: &ConvexRegion) -> Result<Self> {
        Soul::new(base.clone(), base.intersect(keep))
    }

    /// Closure of `base \ core`.
    pub fn disturbance(&self) -> Shape {
        if std::ptr::eq(&self.base, &self.core) || self.base == self.core {
            return Shape::empty();
        }
        Shape::difference(&self.base, &self.core)
    }

    pub fn disturbance_diameter(&self) -> f64 {
        self.disturbance().diameter()
    }
}

pub fn same_region(a: &ConvexRegion, b: &ConvexRegion) -> bool {
    a == b || a.approx_eq(b, EQ_TOL)
}

pub fn to_shapes(seq: &[ConvexRegion]) -> SetSequence {
    seq.iter().map(Shape::from_convex).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Fwd,
    Bwd,
}

/// Forward (`t(k) \ t(k-1)`, first entry empty) or backward
/// (`t(k) \ t(k+1)`, last entry empty) differences.
pub fn delta(seq: &[ConvexRegion], dir: Direction) -> SetSequence {
    let m = seq.len();
    (0..m)
        .map(|k| match dir {
            Direction::Fwd if k == 0 => Shape::empty(),
            Direction::Fwd => Shape::difference(&seq[k], &seq[k - 1]),
            Direction::Bwd if k + 1 == m => Shape::empty(),
            Direction::Bwd => Shape::difference(&seq[k], &seq[k + 1]),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexMask {
    Odd,
    Even,
    Explicit(BTreeSet<usize>),
}

impl IndexMask {
    fn keeps(&self, k: usize) -> bool {
        match self {
            IndexMask::Odd => k % 2 == 1,
            IndexMask::Even => k % 2 == 0,
            IndexMask::Explicit(s) => s.contains(&k),
        }
    }
}

/// Entries outside the mask (1-based indices) become empty.
pub fn restrict(seq: &[Shape], mask: &IndexMask) -> Result<SetSequence> {
    if let IndexMask::Explicit(s) = mask {
        if let Some(&bad) = s.iter().find(|&&i| i == 0 || i > seq.len()) {
            return Err(Error::IndexOutOfRange { index: bad, len: seq.len() });
        }
    }
    Ok(seq
        .iter()
        .enumerate()
        .map(|(i, s)| if mask.keeps(i + 1) { s.clone() } else { Shape::empty() })
        .collect())
}

/// First and last entry.
pub fn ends<T: Clone>(seq: &[T]) -> Result<(T, T)> {
    match (seq.first(), seq.last()) {
        (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
        _ => Err(Error::Invalid("ends of an empty sequence".into())),
    }
}

/// Block concatenation with every second block reversed.
pub fn anti_order<T: Clone>(blocks: &[Vec<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(blocks.iter().map(Vec::len).sum());
    for (k, b) in blocks.iter().enumerate() {
        if k % 2 == 0 {
            out.extend(b.iter().cloned());
        } else {
            out.extend(b.iter().rev().cloned());
        }
    }
    out
}

/// Pointwise intersection with a fixed convex region.
pub fn otimes(rbar: &ConvexRegion, s: &[Shape]) -> SetSequence {
    s.iter().map(|x| x.intersect_convex(rbar)).collect()
}

pub fn otimes_shape(rbar: &Shape, s: &[Shape]) -> SetSequence {
    s.iter().map(|x| x.intersect(rbar)).collect()
}

/// Pointwise union.
pub fn oplus(r: &[Shape], s: &[Shape]) -> Result<SetSequence> {
    check_len(r.len(), s.len())?;
    Ok(r.iter().zip(s).map(|(a, b)| a.union(b)).collect())
}

/// Pointwise union of convex entries, merged into convex regions. Fails
/// when some union is not convex.
pub fn oplus_convex(r: &[ConvexRegion], s: &[ConvexRegion], tol: f64) -> Result<Vec<ConvexRegion>> {
    check_len(r.len(), s.len())?;
    let mut out = Vec::with_capacity(r.len());
    for (i, (a, b)) in r.iter().zip(s).enumerate() {
        out.push(convex_union(&[a.clone(), b.clone()], tol).ok_or_else(|| Error::Validation {
            criterion: "oplus".into(),
            witness: format!("union at index {} is not convex", i + 1),
        })?);
    }
    Ok(out)
}

/// Hull of the parts when the union is convex within `tol` in area.
pub fn convex_union(parts: &[ConvexRegion], tol: f64) -> Option<ConvexRegion> {
    let pts: Vec<_> = parts.iter().flat_map(|p| p.vertices().iter().copied()).collect();
    let h = ConvexRegion::hull(&pts);
    let u = Shape::from_parts(parts.to_vec());
    let rest = Shape::from_convex(&h).minus_shape(&u);
    if rest.area() <= tol {
        Some(h)
    } else {
        None
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::LengthMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RelationKind {
    Orthogonal,
    Before,
    Far,
    Embeds,
    Equiv,
    RevEquiv,
}

/// Interiors disjoint: closed sets from the construction meet along
/// boundaries, so emptiness is read up to measure zero.
pub fn orthogonal(r: &[Shape], s: &[Shape]) -> Result<bool> {
    check_len(r.len(), s.len())?;
    Ok(r.iter().zip(s).all(|(a, b)| a.is_empty() || b.is_empty() || a.intersect(b).is_empty()))
}

/// `r(k)` and `s(l)` separated for all `k < l`.
pub fn far(r: &[Shape], s: &[Shape]) -> Result<bool> {
    check_len(r.len(), s.len())?;
    Ok(far_witness(r, s).is_none())
}

pub(crate) fn far_witness(r: &[Shape], s: &[Shape]) -> Option<(usize, usize)> {
    let nz: Vec<usize> = (0..s.len()).filter(|&l| !s[l].is_empty()).collect();
    for (k, a) in r.iter().enumerate() {
        if a.is_empty() {
            continue;
        }
        for &l in nz.iter().filter(|&&l| l > k) {
            if !a.separated(&s[l], EPS_SEP) {
                return Some((k + 1, l + 1));
            }
        }
    }
    None
}

/// `s` consists of the entries of `p` in order, padded with empty sets.
pub fn embeds(s: &[Shape], p: &[Shape]) -> bool {
    let mut j = 0;
    for x in s {
        if j < p.len() && x.same_as(&p[j]) {
            j += 1;
        } else if !x.is_empty() {
            return false;
        }
    }
    j == p.len()
}

fn nonempty(s: &[Shape]) -> Vec<Shape> {
    s.iter().filter(|x| !x.is_empty()).cloned().collect()
}

/// Same nonempty subsequence.
pub fn equiv(r: &[Shape], s: &[Shape]) -> bool {
    let a = nonempty(r);
    let b = nonempty(s);
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.same_as(y))
}

pub fn relate(kind: RelationKind, r: &[Shape], s: &[Shape]) -> Result<bool> {
    match kind {
        RelationKind::Orthogonal => orthogonal(r, s),
        RelationKind::Far => far(r, s),
        RelationKind::Before => {
            // every nonempty entry of r precedes every nonempty entry of s
            let last_r = r.iter().rposition(|x| !x.is_empty());
            let first_s = s.iter().position(|x| !x.is_empty());
            Ok(match (last_r, first_s) {
                (Some(a), Some(b)) => a < b,
                _ => true,
            })
        }
        RelationKind::Embeds => Ok(embeds(r, s)),
        RelationKind::Equiv => Ok(equiv(r, s)),
        RelationKind::RevEquiv => {
            let rev: Vec<Shape> = s.iter().rev().cloned().collect();
            Ok(equiv(r, &rev))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Places `p` (reversed for [`Sign::Minus`]) into block `k` (1-based) of an
/// otherwise empty sequence of `total_blocks` blocks.
pub fn shift_embed(p: &[Shape], k: usize, sign: Sign, total_blocks: usize) -> Result<SetSequence> {
    if k == 0 || k > total_blocks {
        return Err(Error::IndexOutOfRange { index: k, len: total_blocks });
    }
    let m = p.len();
    let mut out = vec![Shape::empty(); m * total_blocks];
    for (i, x) in p.iter().enumerate() {
        let j = match sign {
            Sign::Plus => i,
            Sign::Minus => m - 1 - i,
        };
        out[(k - 1) * m + j] = x.clone();
    }
    Ok(out)
}

/// Uniform grid of bounding boxes for neighbourhood queries.
pub(crate) struct BoxIndex {
    origin: (f64, f64),
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    boxes: Vec<Option<BBox>>,
}

impl BoxIndex {
    pub(crate) fn new(boxes: Vec<Option<BBox>>) -> Self {
        let mut all: Option<BBox> = None;
        for b in boxes.iter().flatten() {
            all = Some(match all {
                None => *b,
                Some(a) => BBox {
                    min: crate::Point::new(a.min.x.min(b.min.x), a.min.y.min(b.min.y)),
                    max: crate::Point::new(a.max.x.max(b.max.x), a.max.y.max(b.max.y)),
                },
            });
        }
        let n = boxes.len().max(1);
        let (origin, cell, nx, ny) = match all {
            None => ((0.0, 0.0), 1.0, 1, 1),
            Some(a) => {
                let w = (a.max.x - a.min.x).max(1e-9);
                let h = (a.max.y - a.min.y).max(1e-9);
                // cells about the size of a typical box keep the number of
                // buckets per box small
                let mut sizes: Vec<f64> =
                    boxes.iter().flatten().map(|b| (b.max.x - b.min.x).max(b.max.y - b.min.y)).collect();
                sizes.sort_by(f64::total_cmp);
                let typical = sizes[sizes.len() / 2];
                let side = (n as f64).sqrt().clamp(1.0, 256.0);
                let cell = (w.max(h) / side).max(typical).max(1e-9);
                let nx = ((w / cell).ceil() as usize).max(1);
                let ny = ((h / cell).ceil() as usize).max(1);
                ((a.min.x, a.min.y), cell, nx, ny)
            }
        };
        let mut idx = BoxIndex { origin, cell, nx, ny, buckets: vec![Vec::new(); nx * ny], boxes: Vec::new() };
        for (i, b) in boxes.iter().enumerate() {
            if let Some(b) = b {
                let (x0, y0, x1, y1) = idx.range(b, 0.0);
                for gx in x0..=x1 {
                    for gy in y0..=y1 {
                        idx.buckets[gy * nx + gx].push(i);
                    }
                }
            }
        }
        idx.boxes = boxes;
        idx
    }

    fn range(&self, b: &BBox, pad: f64) -> (usize, usize, usize, usize) {
        let f = |v: f64, o: f64, n: usize| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (
            f(b.min.x - pad, self.origin.0, self.nx),
            f(b.min.y - pad, self.origin.1, self.ny),
            f(b.max.x + pad, self.origin.0, self.nx),
            f(b.max.y + pad, self.origin.1, self.ny),
        )
    }

    /// Sorted indices whose boxes come within `pad` of `b`.
    pub(crate) fn query(&self, b: &BBox, pad: f64) -> Vec<usize> {
        let (x0, y0, x1, y1) = self.range(b, pad);
        let mut out = Vec::new();
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                out.extend(self.buckets[gy * self.nx + gx].iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
        out.retain(|&i| self.boxes[i].map_or(false, |c| c.gap(b) <= pad));
        out
    }
}

/// Smallest `j >= from` with `x ⊆ s[from..=j]` (0-based).
fn first_cover(x: &Shape, s: &[ConvexRegion], idx: &BoxIndex, from: usize) -> Option<usize> {
    let mut rem = x.clone();
    for i in idx.query(&x.bbox()?, 0.0).into_iter().filter(|&i| i >= from) {
        rem = rem.minus(&s[i]);
        if rem.is_empty() {
            return Some(i);
        }
    }
    None
}

/// Largest `j < to` with `x ⊆ s[j..to]` (0-based).
fn last_cover(x: &Shape, s: &[ConvexRegion], idx: &BoxIndex, to: usize) -> Option<usize> {
    let mut rem = x.clone();
    for i in idx.query(&x.bbox()?, 0.0).into_iter().rev().filter(|&i| i < to) {
        rem = rem.minus(&s[i]);
        if rem.is_empty() {
            return Some(i);
        }
    }
    None
}

/// The relation `q <_s r`: for all `k < l` with `q(k)`, `r(l)` nonempty,
/// one of `q(k) = r(l)`, separated, `q(k) ⊆ s[k+1, l-1]`,
/// `r(l) ⊆ s[k+1, l-1]` holds. Returns the first failing 1-based pair.
///
/// Both inclusions are monotone in the other index, so each set only
/// needs the index at which its running union first covers it.
pub fn precedes_witness(q: &[Shape], r: &[Shape], s: &[ConvexRegion]) -> Result<Option<(usize, usize)>> {
    check_len(q.len(), r.len())?;
    check_len(q.len(), s.len())?;
    let r_idx = BoxIndex::new(r.iter().map(|x| x.bbox()).collect());
    let s_idx = BoxIndex::new(s.iter().map(|x| x.bbox()).collect());
    let mut r_cover: Vec<Option<Option<usize>>> = vec![None; r.len()];
    for (k, qk) in q.iter().enumerate() {
        let Some(qb) = qk.bbox() else { continue };
        // q(k) ⊆ s[k+1..=l-1] exactly when l > q_from
        let q_from = first_cover(qk, s, &s_idx, k + 1).unwrap_or(usize::MAX);
        for l in r_idx.query(&qb, EPS_SEP) {
            if l <= k || r[l].is_empty() {
                continue;
            }
            if l > q_from {
                break;
            }
            let rl = &r[l];
            let r_to = *r_cover[l].get_or_insert_with(|| last_cover(rl, s, &s_idx, l));
            if r_to.map_or(false, |j| j > k) {
                continue;
            }
            if qk.same_as(rl) || qk.separated(rl, EPS_SEP) {
                continue;
            }
            return Ok(Some((k + 1, l + 1)));
        }
    }
    Ok(None)
}

pub fn precedes(q: &[Shape], r: &[Shape], s: &[ConvexRegion]) -> Result<bool> {
    Ok(precedes_witness(q, r, s)?.is_none())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Regular,
    Consistent,
    PopulationOfSouls,
    PopulationOfSets,
    Dust,
    AntiDust,
    Filling,
    Refinement,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Regular => "regular",
            Criterion::Consistent => "consistent",
            Criterion::PopulationOfSouls => "population_of_souls",
            Criterion::PopulationOfSets => "population_of_sets",
            Criterion::Dust => "dust",
            Criterion::AntiDust => "anti_dust",
            Criterion::Filling => "filling",
            Criterion::Refinement => "refinement",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub indices: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub criterion: Criterion,
    pub pass: bool,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    /// Largest measured violation quantity (criterion dependent).
    pub worst: f64,
}

impl Report {
    fn ok(criterion: Criterion, tolerance: f64, worst: f64) -> Self {
        Report { criterion, pass: true, witness: None, tolerance, worst }
    }
    fn fail(criterion: Criterion, tolerance: f64, indices: Vec<usize>, detail: impl Into<String>) -> Self {
        Report {
            criterion,
            pass: false,
            witness: Some(Witness { indices, detail: detail.into() }),
            tolerance,
            worst: f64::NAN,
        }
    }
}

/// One evaluated parent of an offspring map.
#[derive(Clone, Debug)]
pub struct OffspringSample {
    pub parent: Soul,
    pub bases: Vec<ConvexRegion>,
    pub disturbances: Vec<Shape>,
}

pub enum Subject<'a> {
    Souls(&'a [Soul]),
    Sets(&'a [ConvexRegion]),
    Offspring(&'a [OffspringSample]),
    Refinement { parents: &'a [ConvexRegion], children: &'a [ConvexRegion], m_prime: usize },
}

pub fn validate(subject: Subject<'_>, criterion: Criterion, tol: f64) -> Result<Report> {
    match (subject, criterion) {
        (Subject::Souls(s), Criterion::Regular) => Ok(validate_regular(s)),
        (Subject::Souls(s), Criterion::Consistent) => validate_consistent(s),
        (Subject::Souls(s), Criterion::PopulationOfSouls) => validate_population_of_souls(s),
        (Subject::Souls(s), Criterion::PopulationOfSets) => {
            let b: Vec<_> = s.iter().map(|x| x.base.clone()).collect();
            Ok(validate_population_of_sets(&b, None, tol))
        }
        (Subject::Sets(b), Criterion::PopulationOfSets) => Ok(validate_population_of_sets(b, None, tol)),
        (Subject::Offspring(o), Criterion::Dust) => Ok(validate_dust(&odd_masks(o))),
        (Subject::Offspring(o), Criterion::AntiDust) => Ok(validate_anti_dust(&even_masks(o))),
        (Subject::Offspring(o), Criterion::Filling) => {
            let t: Vec<_> = o.iter().map(|x| (x.parent.clone(), x.bases.clone())).collect();
            Ok(validate_filling(&t, tol))
        }
        (Subject::Refinement { parents, children, m_prime }, Criterion::Refinement) => {
            validate_refinement(parents, children, m_prime, tol)
        }
        (_, c) => Err(Error::Invalid(format!("criterion {} does not apply to this subject", c.name()))),
    }
}

fn odd_masks(o: &[OffspringSample]) -> Vec<(Soul, SetSequence)> {
    o.iter().map(|x| (x.parent.clone(), restrict(&x.disturbances, &IndexMask::Odd).unwrap())).collect()
}

fn even_masks(o: &[OffspringSample]) -> Vec<(Soul, SetSequence)> {
    o.iter().map(|x| (x.parent.clone(), restrict(&x.disturbances, &IndexMask::Even).unwrap())).collect()
}

/// Literal check of `t1|_1 = Δ_1 t` and `t1|_{-1} = Δ_{-1} t`.
pub fn validate_regular(souls: &[Soul]) -> Report {
    let c = Criterion::Regular;
    let m = souls.len();
    if m == 0 || m % 2 == 1 {
        return Report::fail(c, 0.0, vec![m], "M odd");
    }
    let bases: Vec<_> = souls.iter().map(|s| s.base.clone()).collect();
    for k in 0..m {
        let one = k + 1;
        let d = souls[k].disturbance();
        let fwd = if k == 0 { Shape::empty() } else { Shape::difference(&bases[k], &bases[k - 1]) };
        let bwd = if k + 1 == m { Shape::empty() } else { Shape::difference(&bases[k], &bases[k + 1]) };
        let (own, other) = if one % 2 == 1 { (fwd, bwd) } else { (bwd, fwd) };
        if !d.same_as(&own) {
            return Report::fail(c, EQ_TOL, vec![one], "disturbance differs from the difference sequence");
        }
        if !other.is_empty() {
            return Report::fail(c, EQ_TOL, vec![one], "masked difference is not empty");
        }
    }
    Report::ok(c, EQ_TOL, 0.0)
}

/// Regularity through the pair decomposition: equal bases in pairs, shared
/// cores across pair boundaries, whole first and last souls.
pub fn regular_decomposed(souls: &[Soul]) -> bool {
    let m = souls.len();
    if m == 0 || m % 2 == 1 {
        return false;
    }
    if !same_region(&souls[0].core, &souls[0].base) || !same_region(&souls[m - 1].core, &souls[m - 1].base) {
        return false;
    }
    for j in 0..m / 2 {
        if !same_region(&souls[2 * j].base, &souls[2 * j + 1].base) {
            return false;
        }
    }
    for j in 1..m / 2 {
        let (a, b) = (&souls[2 * j - 1], &souls[2 * j]);
        let meet = a.base.intersect(&b.base);
        if !same_region(&a.core, &meet) || !same_region(&b.core, &meet) {
            return false;
        }
    }
    true
}

pub fn validate_consistent(souls: &[Soul]) -> Result<Report> {
    let c = Criterion::Consistent;
    let d: Vec<Shape> = souls.iter().map(Soul::disturbance).collect();
    let q = restrict(&d, &IndexMask::Even)?;
    let r = restrict(&d, &IndexMask::Odd)?;
    let bases: Vec<_> = souls.iter().map(|s| s.base.clone()).collect();
    Ok(match precedes_witness(&q, &r, &bases)? {
        None => Report::ok(c, EPS_SEP, 0.0),
        Some((k, l)) => Report::fail(c, EPS_SEP, vec![k, l], "no alternative of the precedence relation holds"),
    })
}

pub fn validate_population_of_souls(souls: &[Soul]) -> Result<Report> {
    let r = validate_regular(souls);
    if !r.pass {
        return Ok(Report { criterion: Criterion::PopulationOfSouls, ..r });
    }
    let c = validate_consistent(souls)?;
    Ok(Report { criterion: Criterion::PopulationOfSouls, ..c })
}

/// Every contiguous union must be convex with nonempty interior. For each
/// start `K` the hull `H` of `t[K..L]` is grown; the area that the hull
/// adds beyond the union is accumulated as an upper bound on
/// `area(hull(U)) - area(U)`. Returns the largest bound in `worst`.
pub fn validate_population_of_sets(bases: &[ConvexRegion], domain: Option<&ConvexRegion>, tol: f64) -> Report {
    let c = Criterion::PopulationOfSets;
    let mut cells: Vec<(usize, &ConvexRegion)> = Vec::new();
    for (i, b) in bases.iter().enumerate() {
        if !b.has_interior() {
            return Report::fail(c, tol, vec![i + 1], "cell has empty interior");
        }
        if cells.last().map_or(true, |(_, p)| *p != b) {
            cells.push((i, b));
        }
    }
    let full = match domain {
        Some(d) => d.area(),
        None => {
            let pts: Vec<_> = bases.iter().flat_map(|b| b.vertices().iter().copied()).collect();
            ConvexRegion::hull(&pts).area()
        }
    };
    let mut worst: f64 = 0.0;
    for k in 0..cells.len() {
        let mut h = cells[k].1.clone();
        let mut area_h = h.area();
        let mut bound = 0.0;
        for &(li, t) in &cells[k + 1..] {
            if h.contains_region(t, 1e-12) {
                continue;
            }
            let mut pts = h.vertices().to_vec();
            pts.extend_from_slice(t.vertices());
            let h2 = ConvexRegion::hull(&pts);
            let a2 = h2.area();
            let step = a2 - area_h - t.area() + t.intersect(&h).area();
            bound += step;
            worst = worst.max(bound);
            if bound > tol {
                return Report {
                    worst: bound,
                    ..Report::fail(c, tol, vec![cells[k].0 + 1, li + 1], format!("union deficiency bound {bound:.3e}"))
                };
            }
            h = h2;
            area_h = a2;
            if (full - area_h).abs() <= 1e-12 * full.max(1.0) {
                break;
            }
        }
    }
    Report::ok(c, tol, worst)
}

/// Dust conditions on `(parent, s(parent))` pairs.
pub fn validate_dust(table: &[(Soul, SetSequence)]) -> Report {
    let c = Criterion::Dust;
    let parts: Vec<(Shape, Shape)> = table.iter().map(|(p, _)| (p.disturbance(), Shape::from_convex(&p.core))).collect();
    let split: Vec<(SetSequence, SetSequence)> = table
        .iter()
        .zip(&parts)
        .map(|((_, s), (d, core))| (otimes_shape(d, s), otimes_shape(core, s)))
        .collect();
    for (i, (a, b)) in split.iter().enumerate() {
        if !orthogonal(a, b).unwrap_or(false) {
            return Report::fail(c, 0.0, vec![i + 1], "condition 1: disturbance and core parts overlap");
        }
        if let Some((k, l)) = far_witness(a, b) {
            return Report::fail(c, EPS_SEP, vec![i + 1, k, l], "condition 2: parts not separated");
        }
    }
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            if parts[i].0.same_as(&parts[j].0) && !equiv(&split[i].0, &split[j].0) {
                return Report::fail(c, EQ_TOL, vec![i + 1, j + 1], "condition 3: equal disturbances, different dust");
            }
            if same_region(&table[i].0.core, &table[j].0.core) && !equiv(&split[i].1, &split[j].1) {
                return Report::fail(c, EQ_TOL, vec![i + 1, j + 1], "condition 4: equal cores, different dust");
            }
        }
    }
    Report::ok(c, EPS_SEP, 0.0)
}

pub fn validate_anti_dust(table: &[(Soul, SetSequence)]) -> Report {
    let c = Criterion::AntiDust;
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            if same_region(&table[i].0.base, &table[j].0.base) && !equiv(&table[i].1, &table[j].1) {
                return Report::fail(c, EQ_TOL, vec![i + 1, j + 1], "condition 5: equal bases, different anti-dust");
            }
        }
    }
    Report::ok(c, EQ_TOL, 0.0)
}

/// Filling conditions. Coverage of the base is checked on a grid sample
/// with spacing `tol`.
pub fn validate_filling(table: &[(Soul, Vec<ConvexRegion>)], tol: f64) -> Report {
    let c = Criterion::Filling;
    let mut worst: f64 = 0.0;
    for (i, (p, q)) in table.iter().enumerate() {
        let pts: Vec<_> = q.iter().flat_map(|x| x.vertices().iter().copied()).collect();
        let h = ConvexRegion::hull(&pts);
        let hd = h.hausdorff(&p.base);
        worst = worst.max(hd);
        if hd > tol {
            return Report::fail(c, tol, vec![i + 1], format!("condition 6: hull of the filling is {hd:.3e} from the base"));
        }
        let idx = BoxIndex::new(q.iter().map(|x| x.bbox()).collect());
        let sample = grid_sample(&p.base, tol.max(1e-3));
        for x in sample {
            let b = BBox { min: x, max: x };
            if !idx.query(&b, 1e-9).into_iter().any(|k| q[k].contains(x, 1e-9)) {
                return Report::fail(c, tol, vec![i + 1], format!("condition 6: point ({:.4}, {:.4}) uncovered", x.x, x.y));
            }
        }
    }
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            let (a, b) = (&table[i], &table[j]);
            if same_region(&a.0.core, &b.0.core) && !same_region(&a.1[0], &b.1[0]) {
                return Report::fail(c, EQ_TOL, vec![i + 1, j + 1], "condition 7: equal cores, different first sets");
            }
            if same_region(&a.0.base, &b.0.base) && !same_region(a.1.last().unwrap(), b.1.last().unwrap()) {
                return Report::fail(c, EQ_TOL, vec![i + 1, j + 1], "condition 8: equal bases, different last sets");
            }
        }
    }
    Report::ok(c, tol, worst)
}

/// Each parent equals the union of its block of `m_prime` children:
/// Hausdorff distance between the parent and the hull of the block.
pub fn validate_refinement(
    parents: &[ConvexRegion],
    children: &[ConvexRegion],
    m_prime: usize,
    tol: f64,
) -> Result<Report> {
    let c = Criterion::Refinement;
    check_len(parents.len() * m_prime, children.len())?;
    let mut worst: f64 = 0.0;
    for (k, p) in parents.iter().enumerate() {
        let block = &children[k * m_prime..(k + 1) * m_prime];
        let pts: Vec<_> = block.iter().flat_map(|x| x.vertices().iter().copied()).collect();
        let hd = ConvexRegion::hull(&pts).hausdorff(p);
        worst = worst.max(hd);
        if hd > tol {
            return Ok(Report {
                worst: hd,
                ..Report::fail(c, tol, vec![k + 1], format!("parent differs from its children by {hd:.3e}"))
            });
        }
    }
    Ok(Report::ok(c, tol, worst))
}
