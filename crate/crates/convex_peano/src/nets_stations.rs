//! Skeletons, nets, anti-nets and stations, with the quantitative
//! parameters that size them.
//!
//! The worst-case counts (`j_cov`, `k_chain`, `n_star`, `n1`) are computed
//! exactly in [`NetParams`]. The builders work adaptively: a station sweeps
//! its disturbance with a grid whose cell size is chosen so that the
//! station has at most `station_cap` stages, and shorter sequences are
//! padded by repetition to a common length.

use serde::Serialize;

use crate::geometry::{Axis, ConvexRegion, Disc, Point, Sense, Shape, EPS_GEOM};
use crate::rho_convex::{check_f_rho, support_cap, RhoFamily};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetParams {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub n0: usize,
    pub delta: f64,
    pub eps_delta: f64,
    pub j_cov: u128,
    pub k_chain: u128,
    pub n_star: u128,
    pub n1: u128,
}

/// `n_star = (k_chain - 1) * j_cov` and `n1 = (n0 - 1) * n_star + 1`.
pub fn counts(n0: u128, k_chain: u128, j_cov: u128) -> (u128, u128) {
    let n_star = k_chain.saturating_sub(1).saturating_mul(j_cov);
    let n1 = n0.saturating_sub(1).saturating_mul(n_star).saturating_add(1);
    (n_star, n1)
}

/// Smallest integer `n` with `n >= 1/gamma + 1`.
pub fn n0_for(gamma: f64) -> usize {
    (1.0 / gamma + 1.0 - 1e-9).ceil() as usize
}

pub fn beta_prime(beta: f64, gamma: f64) -> f64 {
    (2.0 * beta).max(gamma + 1.0 / gamma)
}

pub fn compute_params(beta: f64, gamma: f64, gamma_prime: f64) -> Result<NetParams> {
    for (name, g) in [("gamma", gamma), ("gamma_prime", gamma_prime)] {
        if !(g > 0.0 && g < 0.25) {
            return Err(Error::Invalid(format!("{name} must lie in (0, 1/4), got {g}")));
        }
    }
    if !(beta >= 1.0) {
        return Err(Error::Invalid(format!("beta must be at least 1, got {beta}")));
    }
    let bp = beta_prime(beta, gamma);
    let n0 = n0_for(gamma);
    let side = gamma_prime / (3.0 * 2f64.sqrt());
    let per_axis = (2.0 / side).ceil() as u128;
    let j_cov = per_axis * per_axis;
    // radius ladder bp/2 = rho(1) < ... < rho(j_cov) = bp; gaps are equal so
    // a spread of rungs is enough to locate the minimum
    let rung = |h: u128| 0.5 * bp * (1.0 + (h - 1) as f64 / (j_cov - 1).max(1) as f64);
    let mut delta = f64::INFINITY;
    let probes = 256u128.min(j_cov - 1).max(1);
    for i in 0..probes {
        let h = 2 + i * (j_cov - 2) / probes.max(1);
        let h = h.min(j_cov).max(2);
        delta = delta.min(delta_rho_bar(rung(h - 1), rung(h), gamma_prime)?);
    }
    let eps_delta = eps_of_delta(delta, 0.5 * bp);
    let k_chain = (1.0 / eps_delta + 1.0).ceil().min(u128::MAX as f64) as u128;
    let (n_star, n1) = counts(n0 as u128, k_chain, j_cov);
    Ok(NetParams { gamma, gamma_prime, beta, beta_prime: bp, n0, delta, eps_delta, j_cov, k_chain, n_star, n1 })
}

/// Radius of the farthest point of `B((0,-rho), rho + delta)` outside
/// `B((0,-rho_bar), rho_bar)`.
fn lens_reach(rho: f64, rho_bar: f64, delta: f64) -> f64 {
    let b = (2.0 * rho * delta + delta * delta) / (2.0 * (rho - rho_bar));
    let a2 = rho_bar * rho_bar - (b + rho_bar) * (b + rho_bar);
    (a2.max(0.0) + b * b).sqrt()
}

/// Largest `delta` such that every `z` with `|z| >= gamma_prime/3 - delta`
/// and `d(z, B((0,-rho), rho)) <= delta` lies in `B((0,-rho_bar), rho_bar)`.
pub fn delta_rho_bar(rho: f64, rho_bar: f64, gamma_prime: f64) -> Result<f64> {
    if !(rho >= 1.0 && rho < rho_bar) {
        return Err(Error::Invalid(format!("delta_rho_bar needs 1 <= rho < rho_bar, got {rho}, {rho_bar}")));
    }
    let g = gamma_prime / 3.0;
    let ok = |d: f64| lens_reach(rho, rho_bar, d) < g - d;
    let (mut lo, mut hi) = (0.0, g);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Distance between `B((0,-rho), rho)` and `B(0,1) \ B((0, delta-rho), rho)`.
pub fn eps_of_delta(delta: f64, rho: f64) -> f64 {
    let z = |th: f64| Point::new(rho * th.sin(), delta - rho + rho * th.cos());
    let theta = if z(std::f64::consts::PI).norm() <= 1.0 {
        std::f64::consts::PI
    } else {
        let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if z(mid).norm() <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    (delta * delta + rho * rho + 2.0 * delta * rho * theta.cos()).sqrt() - rho
}

/// Nondecreasing coordinates with steps at most `gamma`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skeleton {
    pub chi: Vec<f64>,
    pub gamma: f64,
}

impl Skeleton {
    pub fn new(chi: Vec<f64>, gamma: f64) -> Result<Self> {
        if chi.is_empty() {
            return Err(Error::Invalid("empty skeleton".into()));
        }
        for w in chi.windows(2) {
            let d = w[1] - w[0];
            if d < -1e-12 || d > gamma + 1e-12 {
                return Err(Error::Invalid(format!("skeleton step {d} outside [0, {gamma}]")));
            }
        }
        Ok(Skeleton { chi, gamma })
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    /// Whether the first and last entries span the x-projection of `t`.
    pub fn spans(&self, t: &ConvexRegion) -> bool {
        let Some(b) = t.bbox() else { return false };
        (self.chi[0] - b.min.x).abs() <= 1e-9 && (self.chi[self.chi.len() - 1] - b.max.x).abs() <= 1e-9
    }

    /// Skeleton of the mirrored sequence: `(-chi(n), ..., -chi(1))`.
    pub fn reflect(&self) -> Skeleton {
        Skeleton { chi: self.chi.iter().rev().map(|c| -c).collect(), gamma: self.gamma }
    }
}

/// Uniform skeleton of length `n` over the x-projection of `t`.
pub fn make_skeleton(t: &ConvexRegion, gamma: f64, n: usize) -> Result<Skeleton> {
    let b = t.bbox().ok_or(Error::EmptyRegion("make_skeleton"))?;
    let ext = b.max.x - b.min.x;
    if n == 0 || (n == 1 && ext > 0.0) || ext > (n.saturating_sub(1)) as f64 * gamma + 1e-12 {
        return Err(Error::Invalid(format!("skeleton of length {n} cannot span extent {ext} with steps {gamma}")));
    }
    let chi = (0..n)
        .map(|l| if n == 1 { b.min.x } else { b.min.x + l as f64 * ext / (n - 1) as f64 })
        .collect();
    Skeleton::new(chi, gamma)
}

fn shape_dist(s: &Shape, x: Point) -> f64 {
    s.parts().iter().map(|p| p.dist_to(x)).fold(f64::INFINITY, f64::min)
}

fn grid_points(region: &ConvexRegion, pad: f64, per_axis: usize) -> Vec<Point> {
    let Some(b) = region.bbox() else { return Vec::new() };
    let per = per_axis.max(2);
    let (x0, y0) = (b.min.x - pad, b.min.y - pad);
    let (w, h) = (b.max.x - b.min.x + 2.0 * pad, b.max.y - b.min.y + 2.0 * pad);
    let mut out = Vec::with_capacity(per * per);
    for i in 0..per {
        for j in 0..per {
            out.push(Point::new(x0 + w * (i as f64 + 0.5) / per as f64, y0 + h * (j as f64 + 0.5) / per as f64));
        }
    }
    out
}

/// One growth step: the intersection of the caps of the points `y` placed
/// `delta` beyond `r` towards sampled far points `x`.
pub fn grow_rho(r: &ConvexRegion, delta: f64, fam: &RhoFamily, sample_step: f64) -> Result<ConvexRegion> {
    if r.contains_region(&fam.domain, 1e-12) {
        return Ok(fam.domain.clone());
    }
    let rep = check_f_rho(r, fam, 60)?;
    if !rep.pass {
        return Err(Error::Validation {
            criterion: "grow_rho".into(),
            witness: format!("start set is not rho-convex near {:?}", rep.witness),
        });
    }
    let per = ((fam.domain.diameter() / sample_step).ceil() as usize).clamp(2, 400);
    let mut s = fam.domain.clone();
    for x in grid_points(&fam.domain, 0.0, per) {
        if !fam.domain.contains(x, 0.0) || r.dist_to(x) <= delta {
            continue;
        }
        let p = r.project(x);
        let u = (x - p) * (1.0 / (x - p).norm());
        let y = ConvexRegion::hull(&[p + u * delta]);
        s = s.intersect(&support_cap(&y, x, fam)?.region);
    }
    Ok(s)
}

/// Increasing chain from `core` to `t` by repeated growth steps, at most
/// `max_len` stages; the last stage is `t`.
pub fn growth_chain(t: &ConvexRegion, core: &ConvexRegion, delta: f64, fam: &RhoFamily, max_len: usize) -> Result<Vec<ConvexRegion>> {
    let mut out = vec![core.clone()];
    let step = (delta / 2.0).max(1e-3);
    while out.len() + 1 < max_len.max(2) {
        let r = out.last().unwrap();
        if t.excess_over(r) <= 1e-9 {
            break;
        }
        let grown = grow_rho(r, delta, fam, step)?.intersect(t);
        let mut pts = grown.vertices().to_vec();
        pts.extend_from_slice(r.vertices());
        out.push(ConvexRegion::hull(&pts).intersect(t));
    }
    if out.last().map_or(true, |r| r != t) {
        if out.len() > 1 && t.excess_over(out.last().unwrap()) <= 1e-9 {
            out.pop();
        }
        out.push(t.clone());
    }
    Ok(out)
}

/// A set between `r ∪ delta_set` and `t` whose part beyond `r` stays near
/// `delta_set`: `r` if there is nothing to add, `t` if everything left is
/// near `delta_set`, otherwise `t` cut by the caps of radius `rho_bar` of
/// `r` seen from sampled points farther than `gamma_prime / 3` from
/// `delta_set`.
pub fn ladder_step(
    r: &ConvexRegion,
    t: &ConvexRegion,
    delta_set: &Shape,
    rho_bar: f64,
    fam: &RhoFamily,
    gamma_prime: f64,
    samples: usize,
) -> Result<ConvexRegion> {
    if delta_set.is_empty() {
        return Ok(r.clone());
    }
    let reach = gamma_prime / 3.0;
    let rest = Shape::from_convex(t).minus(r);
    let far = rest
        .parts()
        .iter()
        .flat_map(|p| {
            let v = p.vertices();
            (0..v.len()).flat_map(move |i| [v[i], (v[i] + v[(i + 1) % v.len()]) * 0.5])
        })
        .map(|q| shape_dist(delta_set, q))
        .fold(0.0, f64::max);
    if far <= reach {
        return Ok(t.clone());
    }
    if r.is_empty() {
        return Ok(delta_set.hull());
    }
    let famb = fam.with_rho(rho_bar)?;
    let mut out = t.clone();
    for x in grid_points(t, reach, samples) {
        if !fam.domain.contains(x, 0.0) || r.dist_to(x) <= EPS_GEOM || shape_dist(delta_set, x) <= reach {
            continue;
        }
        out = out.intersect(&support_cap(r, x, &famb)?.region);
    }
    Ok(out)
}

/// Sweeps the grid cells meeting `diff` in x-major order, growing `start`
/// inside `h` through [`ladder_step`] with the radius rising from `rho_lo`
/// to `rho_hi`. Returns one set per cell plus the start; the last is `h`.
#[allow(clippy::too_many_arguments)]
fn sweep_ladder(
    h: &ConvexRegion,
    start: &ConvexRegion,
    diff: &Shape,
    cell: f64,
    rho: (f64, f64),
    fam: &RhoFamily,
    gamma_prime: f64,
    samples: usize,
) -> Result<Vec<ConvexRegion>> {
    let cells = covering_cells(diff, cell);
    let k = cells.len();
    let mut out = vec![start.clone()];
    let mut r = start.clone();
    for (i, c) in cells.iter().enumerate() {
        if i + 1 == k {
            break;
        }
        let rho_bar = rho.0 + (rho.1 - rho.0) * (i + 1) as f64 / k as f64;
        let delta = diff.intersect_convex(c).minus(&r);
        if !delta.is_empty() {
            let rb = ladder_step(&r, h, &delta, rho_bar, fam, gamma_prime, samples)?;
            let mut pts = r.vertices().to_vec();
            pts.extend_from_slice(rb.vertices());
            pts.extend(delta.parts().iter().flat_map(|p| p.vertices().iter().copied()));
            let grown = ConvexRegion::hull(&pts).intersect(h);
            if !r.contains_region(&grown, 1e-12) {
                r = grown;
            }
        }
        out.push(r.clone());
    }
    out.push(h.clone());
    Ok(out)
}

/// Square cells of side `cell` over the bounding box of `diff` that meet
/// it, in x-major order.
pub fn covering_cells(diff: &Shape, cell: f64) -> Vec<ConvexRegion> {
    let Some(b) = diff.bbox() else { return Vec::new() };
    let nx = (((b.max.x - b.min.x) / cell).ceil() as usize).max(1);
    let ny = (((b.max.y - b.min.y) / cell).ceil() as usize).max(1);
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let x0 = b.min.x + i as f64 * cell;
            let y0 = b.min.y + j as f64 * cell;
            let c = ConvexRegion::rect(x0, y0, x0 + cell, y0 + cell);
            if !diff.intersect_convex(&c).is_empty() {
                out.push(c);
            }
        }
    }
    out
}

/// Net from `core` to `t` over the covering of `t \ core` by cells of
/// diameter `gamma_prime / 3`, radius rising from `beta_prime / 2` to
/// `beta_prime`.
pub fn build_net(t: &ConvexRegion, core: &ConvexRegion, ctx: &NetContext) -> Result<Vec<ConvexRegion>> {
    let diff = Shape::difference(t, core);
    if diff.is_empty() {
        return Ok(vec![t.clone()]);
    }
    let p = &ctx.params;
    sweep_ladder(
        t,
        core,
        &diff,
        p.gamma_prime / (3.0 * 2f64.sqrt()),
        (0.5 * p.beta_prime, p.beta_prime),
        &ctx.fam,
        p.gamma_prime,
        ctx.ladder_samples,
    )
}

/// Shared inputs of the net and station builders.
#[derive(Clone, Debug)]
pub struct NetContext {
    pub params: NetParams,
    /// Family at radius `beta_prime` over the normalized domain.
    pub fam: RhoFamily,
    /// Upper bound on station length; `0` uses cells of diameter
    /// `gamma_prime / 3` without a bound.
    pub station_cap: usize,
    /// Grid resolution per axis for the cap samples of [`ladder_step`].
    pub ladder_samples: usize,
}

impl NetContext {
    pub fn new(params: NetParams, domain: ConvexRegion, n_arc: usize, station_cap: usize) -> Result<Self> {
        let fam = RhoFamily::with_arcs(params.beta_prime, domain, n_arc)?;
        Ok(NetContext { params, fam, station_cap, ladder_samples: 8 })
    }
}

/// Increasing sets from an empty first stage to the disturbance.
#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub disturbance: Shape,
    /// Convex sets `r_k` between the core part of the hull of the
    /// disturbance and that hull.
    pub ladder: Vec<ConvexRegion>,
    /// `r_k ∩ disturbance`; the first is empty and the last is the
    /// disturbance.
    pub stages: Vec<Shape>,
}

impl Station {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Stage `k` (0-based) of the station padded to any length.
    pub fn stage(&self, k: usize) -> &Shape {
        &self.stages[k.min(self.stages.len() - 1)]
    }

    pub fn padded(&self, n: usize) -> Vec<Shape> {
        (0..n.max(self.len())).map(|k| self.stage(k).clone()).collect()
    }
}

/// Station of the disturbance `d`. `core` is the rest of some base; only
/// its part inside the hull of `d` is used, and that part is the same for
/// every base sharing the disturbance.
pub fn build_station(d: &Shape, core: &ConvexRegion, ctx: &NetContext) -> Result<Station> {
    if d.is_empty() {
        return Ok(Station { disturbance: Shape::empty(), ladder: vec![ConvexRegion::empty()], stages: vec![Shape::empty()] });
    }
    let h = d.hull();
    let c_h = h.intersect(core);
    let p = &ctx.params;
    let mut cell = p.gamma_prime / (3.0 * 2f64.sqrt());
    if ctx.station_cap >= 2 {
        while covering_cells(d, cell).len() + 1 > ctx.station_cap {
            cell *= 1.25;
        }
    }
    let ladder = sweep_ladder(&h, &c_h, d, cell, (0.5 * p.beta_prime, p.beta_prime), &ctx.fam, p.gamma_prime, ctx.ladder_samples)?;
    let n = ladder.len();
    let stages = ladder
        .iter()
        .enumerate()
        .map(|(k, r)| {
            if k == 0 {
                Shape::empty()
            } else if k + 1 == n {
                d.clone()
            } else {
                d.intersect_convex(r)
            }
        })
        .collect();
    Ok(Station { disturbance: d.clone(), ladder, stages })
}

/// Outcome of [`validate_net`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetReport {
    pub increasing: bool,
    pub ends_at_target: bool,
    /// Largest `area(hull(stage)) - area(stage)`.
    pub max_deficiency: f64,
    pub max_increment: f64,
    pub f_rho_failures: usize,
    pub pass: bool,
}

/// Checks that `stages` is an increasing sequence of convex sets ending at
/// `target`, with increments of diameter at most `gamma_prime + slack` and
/// every stage passing the sampled rho-convexity test of `fam`.
pub fn validate_net(
    stages: &[Shape],
    target: &ConvexRegion,
    gamma_prime: f64,
    slack: f64,
    fam: &RhoFamily,
    f_samples: usize,
) -> Result<NetReport> {
    let area_tol = 1e-9;
    let mut increasing = true;
    let mut max_def: f64 = 0.0;
    let mut max_inc: f64 = 0.0;
    let mut f_fail = 0;
    let hulls: Vec<ConvexRegion> = stages.iter().map(Shape::hull).collect();
    for (k, s) in stages.iter().enumerate() {
        max_def = max_def.max(hulls[k].area() - s.area());
        if k > 0 {
            if !stages[k - 1].subset_of(s) {
                increasing = false;
            }
            max_inc = max_inc.max(Shape::from_convex(&hulls[k]).minus(&hulls[k - 1]).diameter());
        }
        if f_samples > 0 && !s.is_empty() && !check_f_rho(&hulls[k], fam, f_samples)?.pass {
            f_fail += 1;
        }
    }
    let ends = stages.last().map_or(false, |s| s.same_as(&Shape::from_convex(target)));
    let pass = increasing && ends && max_def <= area_tol && max_inc <= gamma_prime + slack && f_fail == 0;
    Ok(NetReport { increasing, ends_at_target: ends, max_deficiency: max_def, max_increment: max_inc, f_rho_failures: f_fail, pass })
}

/// The sequence `core ∪ stage(l)` a station induces on a base with the
/// given core.
pub fn induced_net(station: &Station, core: &ConvexRegion) -> Vec<Shape> {
    let c = Shape::from_convex(core);
    station.stages.iter().map(|s| c.union(s)).collect()
}

/// Per-axis sandwich `t ∩ (x <= chi + a*gamma) ⊆ s ⊆ (x <= chi + b*gamma)`
/// for nets, or the mirrored form for anti-nets. Returns the first failing
/// 1-based index.
pub fn check_sandwich(t: &ConvexRegion, stages: &[ConvexRegion], chi: &[f64], gamma: f64, a: f64, b: f64, anti: bool) -> Option<usize> {
    let tol = 1e-7;
    for (l, (s, &c)) in stages.iter().zip(chi).enumerate() {
        let (inner, outer_ok) = if anti {
            let inner = t.clip_halfplane(Axis::X, c - a * gamma, Sense::Ge);
            (inner, s.bbox().map_or(true, |bb| bb.min.x >= c - b * gamma - tol))
        } else {
            let inner = t.clip_halfplane(Axis::X, c + a * gamma, Sense::Le);
            (inner, s.bbox().map_or(true, |bb| bb.max.x <= c + b * gamma + tol))
        };
        if !outer_ok || !s.contains_region(&inner, tol) {
            return Some(l + 1);
        }
    }
    None
}

/// The coarse net of `t`: `t(l) = hull(t ∩ B_l ∪ t(l-1))` with the balls
/// `B_l` of radius `gamma/2 + 1/(2 gamma)` whose rightmost point is
/// `chi(l) + 4 gamma`, and `t(n0) = t`.
#[derive(Clone, Debug)]
pub struct NetFrame {
    pub skeleton: Skeleton,
    pub coarse: Vec<ConvexRegion>,
    /// `coarse[l] \ coarse[l-1]`; the first entry is empty.
    pub increments: Vec<Shape>,
}

pub fn clip_radius(gamma: f64) -> f64 {
    gamma / 2.0 + 1.0 / (2.0 * gamma)
}

pub fn net_frame(t: &ConvexRegion, gamma: f64, n0: usize, n_arc: usize) -> Result<NetFrame> {
    let skeleton = make_skeleton(t, gamma, n0)?;
    let rho = clip_radius(gamma);
    let mut coarse: Vec<ConvexRegion> = Vec::with_capacity(n0);
    for (l, &c) in skeleton.chi.iter().enumerate() {
        if l + 1 == n0 {
            coarse.push(t.clone());
            break;
        }
        let ball = Disc { center: Point::new(c + 4.0 * gamma - rho, 0.0), radius: rho }.polygon(n_arc, 0.0);
        let piece = t.intersect(&ball);
        let next = match coarse.last() {
            None => piece,
            Some(prev) if prev.contains_region(&piece, 1e-12) => prev.clone(),
            Some(prev) => {
                let mut pts = prev.vertices().to_vec();
                pts.extend_from_slice(piece.vertices());
                ConvexRegion::hull(&pts)
            }
        };
        let next = if t.excess_over(&next) <= 1e-12 { t.clone() } else { next };
        coarse.push(next);
    }
    let increments = (0..coarse.len())
        .map(|l| if l == 0 || coarse[l] == coarse[l - 1] { Shape::empty() } else { Shape::difference(&coarse[l], &coarse[l - 1]) })
        .collect();
    Ok(NetFrame { skeleton, coarse, increments })
}

/// Interleaves the stations of the increments into the coarse net; the
/// result has length `(n0 - 1) * n_star + 1` and comes with its skeleton.
pub fn assemble_net(frame: &NetFrame, stations: &[&Station], n_star: usize) -> (Vec<ConvexRegion>, Vec<f64>) {
    let n0 = frame.coarse.len();
    let mut stages = Vec::with_capacity((n0 - 1) * n_star + 1);
    let mut chi = Vec::with_capacity(stages.capacity());
    for l in 1..n0 {
        let prev = &frame.coarse[l - 1];
        let st = stations[l - 1];
        let last = st.len() - 1;
        for k in 0..n_star {
            let s = if k >= last {
                frame.coarse[l].clone()
            } else if st.stage(k).is_empty() {
                prev.clone()
            } else {
                let mut pts = prev.vertices().to_vec();
                pts.extend(st.stage(k).parts().iter().flat_map(|p| p.vertices().iter().copied()));
                ConvexRegion::hull(&pts)
            };
            stages.push(s);
            chi.push(frame.skeleton.chi[l - 1]);
        }
    }
    stages.push(frame.coarse[n0 - 1].clone());
    chi.push(frame.skeleton.chi[n0 - 1]);
    (stages, chi)
}
