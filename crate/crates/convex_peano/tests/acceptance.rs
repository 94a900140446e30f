//! Acceptance suite: one PASS/FAIL line per criterion on the normalized
//! square at depth 3 with the default configuration.

use std::process::ExitCode;
use std::time::Instant;

use convex_peano::cli::{sampled_deficiency, ShapeKind, ShapeSpec};
use convex_peano::construction::{
    coverage_gap, distinct_regions, level_extents, make_schedule, max_diameter, run, BuildConfig, Schedule,
};
use convex_peano::curve::{image_of_interval, sample_curve, CurvePartition};
use convex_peano::geometry::{arc_tolerance, grid_sample, hull_deficiency, normalize_domain, Axis, EPS_SEP};
use convex_peano::nets_stations::{build_station, compute_params, induced_net, validate_net, NetContext};
use convex_peano::offspring::OffspringBuilder;
use convex_peano::rho_convex::{check_f_rho, RhoFamily};
use convex_peano::seq_algebra::{
    anti_order, validate, validate_population_of_sets, validate_population_of_souls, Criterion, OffspringSample, Subject,
};
use convex_peano::{ConvexRegion, FrameTransform, Point, Shape, Soul};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEPTH: usize = 3;
const AREA_TOL: f64 = 1e-3;
const N_ARC: usize = 64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Setup {
    domain: ConvexRegion,
    schedule: Schedule,
    cp: CurvePartition,
}

fn setup() -> Setup {
    let raw = ShapeSpec { kind: ShapeKind::Square, size: 1.0, file: None }.resolve(N_ARC).unwrap();
    let (domain, transform) = normalize_domain(&raw).unwrap();
    let schedule = make_schedule(DEPTH, 0.2).unwrap();
    let cfg = BuildConfig { validate: false, ..BuildConfig::default() };
    let r = run(&domain, DEPTH, &schedule, &cfg).unwrap();
    assert!(r.stopped.is_none(), "default build hit the budget");
    let cp = CurvePartition::new(r.levels, domain.clone(), transform).unwrap();
    Setup { domain, schedule, cp }
}

fn random_polygon(rng: &mut ChaCha8Rng, c: Point, r: f64) -> ConvexRegion {
    let n = rng.gen_range(3..9);
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(c.x + rng.gen_range(-r..r), c.y + rng.gen_range(-r..r)))
        .collect();
    ConvexRegion::hull(&pts)
}

/// 1. Every contiguous union of every level is convex.
fn c1(s: &Setup) -> Outcome {
    let tol = AREA_TOL * s.domain.area();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_bound: f64 = 0.0;
    let mut worst_sampled: f64 = 0.0;
    for l in &s.cp.levels {
        let bases = l.bases();
        let r = validate_population_of_sets(&bases, Some(&s.domain), tol);
        if !r.pass {
            return outcome(false, format!("level {}: {:?}", l.j, r.witness));
        }
        worst_bound = worst_bound.max(r.worst);
        // independent check on random ranges through the sampled hull
        for _ in 0..60 {
            let a = rng.gen_range(0..l.m);
            let b = rng.gen_range(a..l.m.min(a + 600));
            let d = sampled_deficiency(&bases[a..=b], 4e-3).unwrap();
            worst_sampled = worst_sampled.max(d);
            if d > tol {
                return outcome(false, format!("level {}: range [{}, {}] sampled deficiency {d:.3e}", l.j, a + 1, b + 1));
            }
        }
    }
    outcome(true, format!("all ranges: bound {worst_bound:.2e}; sampled {worst_sampled:.2e}; tol {tol:.2e}"))
}

/// 2. Each parent is the union of its block of children.
fn c2(s: &Setup) -> Outcome {
    let tol = 2.0 * arc_tolerance(1.0, N_ARC);
    let mut worst: f64 = 0.0;
    for w in s.cp.levels.windows(2) {
        let (p, c) = (w[0].bases(), w[1].bases());
        let m = w[1].m_prime_used;
        for (k, parent) in p.iter().enumerate() {
            let block = &c[k * m..(k + 1) * m];
            let pts: Vec<Point> = block.iter().flat_map(|x| x.vertices().iter().copied()).collect();
            let hd = ConvexRegion::hull(&pts).hausdorff(parent);
            worst = worst.max(hd);
            if hd > tol {
                return outcome(false, format!("(j, K) = ({}, {}): Hausdorff {hd:.3e}", w[0].j, k + 1));
            }
        }
        // every child lies in its parent and every sampled parent point in a child
        for k in [0, p.len() / 2, p.len() - 1] {
            let block = &c[k * m..(k + 1) * m];
            if let Some(i) = block.iter().position(|x| !p[k].contains_region(x, tol)) {
                return outcome(false, format!("(j, K) = ({}, {}): child {} leaves its parent", w[0].j, k + 1, i + 1));
            }
            let distinct = distinct_regions(block);
            for q in grid_sample(&p[k], 5e-3) {
                if !distinct.iter().any(|x| x.contains(q, tol)) {
                    return outcome(false, format!("(j, K) = ({}, {}): ({:.4}, {:.4}) uncovered", w[0].j, k + 1, q.x, q.y));
                }
            }
        }
    }
    outcome(true, format!("worst Hausdorff {worst:.2e}; tol {tol:.2e}"))
}

/// 3. Extents along the axis of the last offspring are at most 11 gamma.
fn c3(s: &Setup) -> Outcome {
    let ext: Vec<(f64, f64)> = s.cp.levels.iter().map(level_extents).collect();
    let mut notes = Vec::new();
    for (i, l) in s.cp.levels.iter().enumerate().skip(1) {
        let p = l.j - 1;
        let g = s.schedule.gamma(p);
        let (v, axis) = if p % 2 == 1 { (ext[i].0, "x") } else { (ext[i].1, "y") };
        notes.push(format!("d_{axis}({}) = {v:.4} <= {:.4}", l.j, 11.0 * g + 1e-2));
        if v > 11.0 * g + 1e-2 {
            return outcome(false, notes.join("; "));
        }
    }
    if let Some(i) = ext.windows(2).position(|w| w[1].0 > w[0].0 + 1e-12 || w[1].1 > w[0].1 + 1e-12) {
        return outcome(false, format!("extents grow between levels {} and {}", i + 1, i + 2));
    }
    notes.push("nonincreasing".into());
    outcome(true, notes.join("; "))
}

/// 4. The cells of every level cover the domain.
fn c4(s: &Setup) -> Outcome {
    let tol = AREA_TOL * s.domain.area();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = s.domain.bbox().unwrap();
    let mut notes = Vec::new();
    for l in &s.cp.levels {
        let cells = l.bases();
        let gap = coverage_gap(&s.domain, &cells, 2e-3);
        // Monte Carlo estimate against the distinct cells, no spatial index
        let distinct = distinct_regions(&cells);
        let (mut inside, mut missed) = (0usize, 0usize);
        while inside < 20_000 {
            let q = Point::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
            if !s.domain.contains(q, 0.0) {
                continue;
            }
            inside += 1;
            if !distinct.iter().any(|c| c.contains(q, 1e-9)) {
                missed += 1;
            }
        }
        let mc = missed as f64 / inside as f64 * s.domain.area();
        notes.push(format!("level {}: grid {gap:.1e}, sampled {mc:.1e}", l.j));
        if gap > tol || mc > tol {
            return outcome(false, notes.join("; "));
        }
    }
    outcome(true, notes.join("; "))
}

fn separated_pair(rng: &mut ChaCha8Rng, kind: usize) -> Option<(ConvexRegion, ConvexRegion)> {
    let c = Point::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
    match kind {
        // nested
        0 => {
            let outer = random_polygon(rng, c, 0.3);
            let pts: Vec<Point> = (0..rng.gen_range(3..7))
                .filter_map(|_| {
                    let q = Point::new(c.x + rng.gen_range(-0.3..0.3), c.y + rng.gen_range(-0.3..0.3));
                    outer.contains(q, 0.0).then_some(q)
                })
                .collect();
            let inner = ConvexRegion::hull(&pts);
            inner.has_interior().then_some((inner, outer))
        }
        // two overlapping slabs of one polygon
        1 => {
            let p = random_polygon(rng, c, 0.3);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let u = Point::new(th.cos(), th.sin());
            let (lo, hi) = p.vertices().iter().fold((f64::MAX, f64::MIN), |(a, b), q| (a.min(u.dot(*q)), b.max(u.dot(*q))));
            let a = rng.gen_range(lo..hi);
            let b = rng.gen_range(lo..a);
            let t = p.clip_line(u, a);
            let tb = p.clip_line(Point::new(-u.x, -u.y), -b);
            Some((t, tb))
        }
        // independent polygons
        _ => Some((random_polygon(rng, c, 0.3), random_polygon(rng, c, 0.3))),
    }
}

/// 5. Separated differences and a common point force a convex union.
fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut accepted, mut drawn, mut convex) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    while accepted < 500 && drawn < 100_000 {
        drawn += 1;
        let Some((t, tb)) = separated_pair(&mut rng, drawn % 3) else { continue };
        if !t.has_interior() || !tb.has_interior() || t.intersect(&tb).is_empty() {
            continue;
        }
        if Shape::difference(&t, &tb).separation(&Shape::difference(&tb, &t)) < EPS_SEP {
            continue;
        }
        accepted += 1;
        let h = 2e-3;
        let d = sampled_deficiency(&[t.clone(), tb.clone()], h).unwrap();
        let pts: Vec<Point> = t.vertices().iter().chain(tb.vertices()).copied().collect();
        let tol = AREA_TOL * ConvexRegion::hull(&pts).area().max(1e-3);
        worst = worst.max(d);
        if d <= tol {
            convex += 1;
        }
    }
    outcome(convex == 500, format!("{convex}/{accepted} convex ({drawn} pairs drawn); worst sampled deficiency {worst:.2e}"))
}

/// 6. Intersections of rho-balls with the domain pass the sampled test; a
/// flat cut does not.
fn c6(domain: &ConvexRegion) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = domain.bbox().unwrap();
    let mut passed = 0;
    let mut built = 0;
    let mut first_fail = None;
    while built < 50 {
        let rho = rng.gen_range(1.0..8.0);
        let fam = RhoFamily::with_arcs(rho, domain.clone(), N_ARC).unwrap();
        let mut t = domain.clone();
        for _ in 0..rng.gen_range(1..4) {
            let p = Point::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let center = Point::new(p.x - rho * th.cos(), p.y - rho * th.sin());
            t = t.intersect(&fam.ball(center, rng.gen_range(0.0..1.0)));
        }
        if t.area() < 0.05 * domain.area() {
            continue;
        }
        built += 1;
        let r = check_f_rho(&t, &fam, 200).unwrap();
        if r.pass {
            passed += 1;
        } else if first_fail.is_none() {
            first_fail = Some(format!("set {built}: excess {:.2e} > {:.2e}", r.worst_excess, r.tolerance));
        }
    }
    let fam = RhoFamily::with_arcs(1.0, domain.clone(), N_ARC).unwrap();
    let flat = domain.clip_line(Point::new(0.0, 1.0), 0.05);
    let flat_fails = !check_f_rho(&flat, &fam, 200).unwrap().pass;
    outcome(
        passed == 50 && flat_fails,
        format!("{passed}/50 ball intersections pass; flat cut rejected: {flat_fails}{}", first_fail.map(|f| format!("; {f}")).unwrap_or_default()),
    )
}

/// 7. Adjacent curve samples stay within twice the largest cell diameter.
fn c7(s: &Setup) -> Outcome {
    let j = s.cp.depth();
    let pts = sample_curve(&s.cp, 4096, j).unwrap();
    let bound = 2.0 * s.cp.transform.scale * max_diameter(&s.cp.level(j).unwrap().bases()) + 1e-2;
    let worst = pts.windows(2).map(|w| w[0].dist(w[1])).fold(0.0, f64::max);
    outcome(worst <= bound, format!("largest step {worst:.4}; bound {bound:.4}"))
}

/// 8. Images of random intervals are convex with interior; the image of
/// `[0, 1]` is the domain.
fn c8(s: &Setup) -> Outcome {
    let j = s.cp.depth();
    let f: FrameTransform = s.cp.transform;
    let scale2 = f.scale * f.scale;
    let area = s.domain.area() * scale2;
    let tol = AREA_TOL * area;
    let level = s.cp.level(j).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut smallest = f64::INFINITY;
    for n in 0..100 {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (a, b) = (a.min(b), a.max(b));
        let img = image_of_interval(&s.cp, a, b, j).unwrap();
        let cells: Vec<ConvexRegion> =
            level.souls[img.cells.0 - 1..img.cells.1].iter().map(|c| c.base.map_points(|p| f.apply(p))).collect();
        let d = sampled_deficiency(&cells, 4e-3 * f.scale).unwrap();
        worst = worst.max(d);
        smallest = smallest.min(img.region.area());
        if d > tol || img.region.area() <= 0.0 {
            return outcome(false, format!("interval {} = [{a:.5}, {b:.5}]: deficiency {d:.3e}, area {:.3e}", n + 1, img.region.area()));
        }
    }
    let whole = image_of_interval(&s.cp, 0.0, 1.0, j).unwrap();
    let full = s.domain.map_points(|p| f.apply(p));
    let diff = (whole.region.area() - full.area()).abs() + (full.area() - whole.region.intersect(&full).area());
    let sample: Vec<Point> = grid_sample(&whole.region, 4e-3 * f.scale);
    let hd = hull_deficiency(&sample, 4e-3 * f.scale).unwrap().area;
    outcome(
        diff <= tol && hd <= tol,
        format!("worst deficiency {worst:.2e}; smallest area {smallest:.3}; image of [0, 1] off by {diff:.2e}; tol {tol:.2e}"),
    )
}

/// Soul with base `domain ∩ B` and core `base ∩ C` for two balls of the
/// family; the core ball cuts a small cap off the base.
fn tau_parent(rng: &mut ChaCha8Rng, fam: &RhoFamily, gamma: f64) -> Option<Soul> {
    let b = fam.domain.bbox().unwrap();
    let rho = fam.rho;
    let ball_through = |p: Point, th: f64| {
        let center = Point::new(p.x - rho * th.cos(), p.y - rho * th.sin());
        fam.ball(center, 0.0)
    };
    let p = Point::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
    let base = fam.domain.intersect(&ball_through(p, rng.gen_range(0.0..std::f64::consts::TAU)));
    if base.area() < 0.2 * fam.domain.area() {
        return None;
    }
    // push a supporting ball inwards until the cut-off cap is small
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let u = Point::new(th.cos(), th.sin());
    let edge = base.vertices().iter().copied().max_by(|a, b| u.dot(*a).total_cmp(&u.dot(*b))).unwrap();
    let mut depth = 0.5 * gamma;
    while depth > 1e-3 {
        let p = edge - u * depth;
        let core = base.intersect(&ball_through(p, th));
        let s = Soul::new(base.clone(), core).ok()?;
        let d = s.disturbance_diameter();
        if d <= gamma && d > 0.0 {
            return Some(s);
        }
        depth *= 0.6;
    }
    None
}

/// 9. Offspring of parents in the soul class satisfy the dust, anti-dust
/// and filling conditions; anti-ordered offspring of a four-term
/// population form a population.
fn c9(s: &Setup) -> Outcome {
    let sch = &s.schedule;
    let (beta, gamma) = (sch.beta(2), sch.gamma(2));
    let params = compute_params(beta, gamma, sch.gamma(3)).unwrap();
    let fam = RhoFamily::with_arcs(beta, s.domain.clone(), N_ARC).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut parents = Vec::new();
    while parents.len() < 14 {
        if let Some(p) = tau_parent(&mut rng, &fam, gamma) {
            parents.push(p);
        }
    }
    // repeated bases, cores and disturbances exercise the equality conditions
    parents.push(parents[0].clone());
    parents.push(Soul::whole(parents[1].base.clone()));
    parents.push(Soul::whole(s.domain.clone()));
    parents.push(Soul::whole(s.domain.clone()));
    parents.push(parents[2].clone());
    parents.push(Soul::whole(parents[3].core.clone()));
    let in_class = parents
        .iter()
        .all(|p| p.disturbance_diameter() <= gamma && check_f_rho(&p.base, &fam, 100).unwrap().pass);
    if !in_class {
        return outcome(false, "a generated parent is outside the soul class");
    }
    let ctx = NetContext::new(params.clone(), s.domain.clone(), N_ARC, 8).unwrap();
    let mut builder = OffspringBuilder::new(ctx, Axis::Y);
    for p in &parents {
        builder.prepare(p).unwrap();
    }
    builder.fix_n_star(0);
    let samples: Vec<OffspringSample> = parents
        .iter()
        .map(|p| {
            let o = builder.offspring(p).unwrap();
            OffspringSample { parent: p.clone(), bases: o.bases(), disturbances: o.disturbances() }
        })
        .collect();
    let tol = 2.0 * arc_tolerance(1.0, N_ARC);
    let mut notes = Vec::new();
    for c in [Criterion::Dust, Criterion::AntiDust, Criterion::Filling] {
        let r = validate(Subject::Offspring(&samples), c, tol).unwrap();
        notes.push(format!("{} {}", c.name(), if r.pass { "ok" } else { "fails" }));
        if !r.pass {
            return outcome(false, format!("{}: {:?}", notes.join(", "), r.witness));
        }
    }

    // four-term population: two overlapping corner cuts of the domain
    let d = s.domain.bbox().unwrap();
    let diag = Point::new(1.0, 1.0) * (1.0 / 2f64.sqrt());
    let corner = |p: Point, dir: Point| {
        let q = p - dir * 0.1;
        fam.ball(Point::new(q.x - beta * dir.x, q.y - beta * dir.y), 0.0)
    };
    let a = s.domain.intersect(&corner(d.max, diag));
    let b = s.domain.intersect(&corner(d.min, diag * -1.0));
    let ab = a.intersect(&b);
    if a.area() > s.domain.area() - 1e-6 || b.area() > s.domain.area() - 1e-6 {
        return outcome(false, "corner cuts left the domain whole");
    }
    let pop = vec![
        Soul::whole(a.clone()),
        Soul::new(a.clone(), ab.clone()).unwrap(),
        Soul::new(b.clone(), ab).unwrap(),
        Soul::whole(b),
    ];
    if !validate_population_of_souls(&pop).unwrap().pass {
        return outcome(false, "the four-term parent population is not a population");
    }
    let blocks: Vec<Vec<Soul>> = pop.iter().map(|p| builder.offspring(p).unwrap().souls.clone()).collect();
    let children = anti_order(&blocks);
    let r = validate_population_of_souls(&children).unwrap();
    notes.push(format!("four-term population: {} children {}", children.len(), if r.pass { "ok" } else { "fail" }));
    outcome(r.pass, format!("{} parents: {}", parents.len(), notes.join(", ")))
}

/// 10. One station serves every base with its disturbance.
fn c10(s: &Setup) -> Outcome {
    let sch = &s.schedule;
    let (beta, gamma, gp) = (sch.beta(2), sch.gamma(2), sch.gamma(3));
    let params = compute_params(beta, gamma, gp).unwrap();
    let fam = RhoFamily::with_arcs(beta, s.domain.clone(), N_ARC).unwrap();
    let ball_through = |p: Point, th: f64| fam.ball(Point::new(p.x - beta * th.cos(), p.y - beta * th.sin()), 0.0);
    let d = s.domain.bbox().unwrap();
    // disturbance: a cap of the lower right corner
    let cut = ball_through(Point::new(d.max.x - 0.04, d.min.y + 0.04), -std::f64::consts::FRAC_PI_4);
    let base = s.domain.clone();
    let core = base.intersect(&cut);
    let dist = Shape::difference(&base, &core);
    let ctx = NetContext::new(params, s.domain.clone(), N_ARC, 0).unwrap();
    let station = build_station(&dist, &core, &ctx).unwrap();
    let net_fam = ctx.fam.clone();
    let mut all_pass = true;
    let mut notes = vec![format!("station of {} stages, disturbance diameter {:.3}", station.len(), dist.diameter())];
    // alternative bases: other corners cut away, the disturbance kept
    let others = [
        (Point::new(d.min.x + 0.05, d.max.y - 0.05), 3.0 * std::f64::consts::FRAC_PI_4),
        (Point::new(d.min.x + 0.08, d.min.y + 0.08), -3.0 * std::f64::consts::FRAC_PI_4),
        (Point::new(d.max.x - 0.1, d.max.y - 0.1), std::f64::consts::FRAC_PI_4),
        (Point::new(0.0, d.max.y - 0.06), std::f64::consts::FRAC_PI_2),
        (Point::new(d.min.x + 0.03, 0.0), std::f64::consts::PI),
    ];
    for (n, (p, th)) in others.iter().enumerate() {
        let alt_base = s.domain.intersect(&ball_through(*p, *th));
        let alt_core = alt_base.intersect(&cut);
        if !Shape::difference(&alt_base, &alt_core).same_as(&dist) {
            return outcome(false, format!("alternative base {} does not share the disturbance", n + 1));
        }
        let stages = induced_net(&station, &alt_core);
        let r = validate_net(&stages, &alt_base, gp, 1e-6, &net_fam, 64).unwrap();
        notes.push(format!("base {}: increment {:.3} {}", n + 1, r.max_increment, if r.pass { "ok" } else { "fails" }));
        all_pass &= r.pass;
    }
    notes.push(format!("increment bound {gp:.4}"));
    outcome(all_pass, notes.join(", "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let s = setup();
    println!("built depth {DEPTH}: M = {:?} in {:.2?}", s.cp.levels.iter().map(|l| l.m).collect::<Vec<_>>(), start.elapsed());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("C1 population convexity", Box::new(|| c1(&s))),
        ("C2 refinement", Box::new(|| c2(&s))),
        ("C3 extent decay", Box::new(|| c3(&s))),
        ("C4 coverage", Box::new(|| c4(&s))),
        ("C5 separated-differences fuzz", Box::new(c5)),
        ("C6 rho-convexity round trip", Box::new(|| c6(&s.domain))),
        ("C7 curve continuity", Box::new(|| c7(&s))),
        ("C8 interval images", Box::new(|| c8(&s))),
        ("C9 offspring axioms", Box::new(|| c9(&s))),
        ("C10 station universality", Box::new(|| c10(&s))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {} ({:.2?})", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed());
    }
    println!("{} of {} criteria passed in {:.2?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
