//! Command line front end: `build`, `render`, `verify` and `eval`, the
//! partition JSON format and the SVG writer.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::{
    axis_for, coverage_gap, distinct_regions, level_extents, make_schedule, max_diameter, run,
    BuildConfig, Mode, PartitionLevel, Schedule,
};
use crate::curve::{image_of_interval, sample_curve, CurvePartition};
use crate::geometry::{arc_tolerance, grid_sample, hull_deficiency, normalize_domain, Axis, Disc, Point};
use crate::seq_algebra::{validate_population_of_sets, validate_population_of_souls, validate_refinement, validate_regular, Report};
use crate::{ConvexRegion, Error, FrameTransform, Soul};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "convex-peano", version, about = "Convex Peano curve partitions: build, render, verify, evaluate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a partition stack and write it as JSON.
    Build(BuildArgs),
    /// Render cells of a partition (and optionally the curve) as SVG.
    Render(RenderArgs),
    /// Run the invariant checks on a partition file.
    Verify(VerifyArgs),
    /// Evaluate the curve at given parameters.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Square,
    Disc,
    Triangle,
    Polygon,
}

/// Domain description before normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    /// Side length (square, triangle) or radius (disc).
    pub size: f64,
    /// Vertex file for `polygon`: a JSON array of `[x, y]` pairs.
    pub file: Option<PathBuf>,
}

impl ShapeSpec {
    pub fn resolve(&self, n_arc: usize) -> Result<ConvexRegion, Error> {
        if !(self.size > 0.0) && self.kind != ShapeKind::Polygon {
            return Err(Error::Invalid("shape size must be positive".into()));
        }
        let s = self.size;
        Ok(match self.kind {
            ShapeKind::Square => ConvexRegion::rect(-0.5 * s, -0.5 * s, 0.5 * s, 0.5 * s),
            ShapeKind::Disc => Disc::new(Point::new(0.0, 0.0), s)?.polygon(n_arc, 0.0),
            ShapeKind::Triangle => {
                let h = s * 3f64.sqrt() / 2.0;
                ConvexRegion::hull(&[Point::new(-0.5 * s, -h / 3.0), Point::new(0.5 * s, -h / 3.0), Point::new(0.0, 2.0 * h / 3.0)])
            }
            ShapeKind::Polygon => {
                let path = self.file.as_ref().ok_or_else(|| Error::Invalid("--polygon-file is required".into()))?;
                let pts: Vec<[f64; 2]> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                ConvexRegion::from_vertices(pts.iter().map(|p| Point::new(p[0], p[1])).collect())?
            }
        })
    }
}

/// Everything that determines a build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub depth: usize,
    pub gamma0: f64,
    pub n_arc: usize,
    /// Area tolerance as a fraction of the domain area.
    pub area_tol: f64,
    pub budget: u128,
    pub mode: Mode,
    pub station_cap: usize,
    /// Seed of the randomized checks; the construction is deterministic.
    pub seed: u64,
    pub validate: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BuildConfig::default();
        RunConfig {
            depth: 3,
            gamma0: 0.2,
            n_arc: b.n_arc,
            area_tol: b.area_tol,
            budget: b.budget,
            mode: b.mode,
            station_cap: b.station_cap,
            seed: 0,
            validate: true,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<(), Error> {
        if !(self.gamma0 > 0.0 && self.gamma0 < 0.25) {
            return Err(Error::Invalid("gamma0 must lie in (0, 1/4)".into()));
        }
        if self.depth == 0 {
            return Err(Error::Invalid("depth must be at least 1".into()));
        }
        if self.n_arc < 8 {
            return Err(Error::Invalid("n_arc must be at least 8".into()));
        }
        if !(self.area_tol > 0.0) {
            return Err(Error::Invalid("area tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            n_arc: self.n_arc,
            station_cap: self.station_cap,
            budget: self.budget,
            mode: self.mode,
            validate: self.validate,
            area_tol: self.area_tol,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct BuildArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub shape: ShapeKind,
    /// Side length (square, triangle) or radius (disc).
    #[arg(long, default_value_t = 1.0)]
    pub size: f64,
    #[arg(long)]
    pub polygon_file: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub gamma0: f64,
    #[arg(long, default_value_t = 64)]
    pub n_arc: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub area_tol: f64,
    /// Largest number of cells on one level.
    #[arg(long, default_value_t = 1e6)]
    pub budget: f64,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeArg,
    /// Upper bound on station length (0 = unbounded).
    #[arg(long, default_value_t = 8)]
    pub station_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the per-level checks during the build.
    #[arg(long)]
    pub no_validate: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Adaptive,
    Strict,
}

#[derive(clap::Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub partition: PathBuf,
    /// Levels to draw (default: the deepest).
    #[arg(long)]
    pub level: Vec<usize>,
    /// Number of curve samples (0 draws no curve).
    #[arg(long, default_value_t = 0)]
    pub curve_samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CheckKind {
    All,
    Regular,
    PopulationOfSouls,
    PopulationOfSets,
    Refinement,
    Coverage,
    Extent,
    Continuity,
    Intervals,
    /// Disturbance diameters and sampled `F_beta` membership; not part of
    /// `all`.
    Tau,
}

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub partition: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub criterion: Vec<CheckKind>,
    /// Area tolerance as a fraction of the domain area.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Seed of the random intervals (default: the one stored in the file).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(clap::Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub partition: PathBuf,
    /// Level to evaluate at (default: the deepest).
    #[arg(long)]
    pub level: Option<usize>,
    /// Parameters in [0, 1].
    #[arg(long, num_args = 1..)]
    pub u: Vec<f64>,
}

// ---------------------------------------------------------------------
// partition file

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// Offspring length used between consecutive levels.
    pub m_prime: Vec<usize>,
    pub transform: FrameTransform,
    /// Normalized domain.
    pub domain: Vec<[f64; 2]>,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellJson {
    #[serde(rename = "K")]
    pub k: usize,
    pub base: Vec<[f64; 2]>,
    /// Convex parts of `base \ core`.
    pub disturbance: Vec<Vec<[f64; 2]>>,
    pub core: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelJson {
    pub j: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub cells: Vec<CellJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub meta: Meta,
    pub levels: Vec<LevelJson>,
}

fn pts(c: &ConvexRegion) -> Vec<[f64; 2]> {
    c.vertices().iter().map(|p| [p.x, p.y]).collect()
}

fn region(v: &[[f64; 2]]) -> Result<ConvexRegion, Error> {
    ConvexRegion::from_vertices(v.iter().map(|p| Point::new(p[0], p[1])).collect())
}

impl PartitionFile {
    pub fn from_run(levels: &[PartitionLevel], schedule: &Schedule, domain: &ConvexRegion, transform: FrameTransform, config: &RunConfig) -> Self {
        let meta = Meta {
            gamma: schedule.gammas.clone(),
            beta: schedule.betas.clone(),
            m_prime: levels.iter().skip(1).map(|l| l.m_prime_used).collect(),
            transform,
            domain: pts(domain),
            config: config.clone(),
        };
        let levels = levels
            .iter()
            .map(|l| LevelJson {
                j: l.j,
                m: l.m,
                cells: l
                    .souls
                    .iter()
                    .enumerate()
                    .map(|(k, s)| CellJson {
                        k: k + 1,
                        base: pts(&s.base),
                        disturbance: s.disturbance().parts().iter().map(pts).collect(),
                        core: pts(&s.core),
                    })
                    .collect(),
            })
            .collect();
        PartitionFile { meta, levels }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule { gammas: self.meta.gamma.clone(), betas: self.meta.beta.clone(), m_primes: Vec::new(), depth: self.levels.len() }
    }

    pub fn to_partition(&self) -> Result<CurvePartition, Error> {
        let mut levels = Vec::with_capacity(self.levels.len());
        for (i, l) in self.levels.iter().enumerate() {
            if l.cells.len() != l.m {
                return Err(Error::Invalid(format!("level {} lists {} cells, M = {}", l.j, l.cells.len(), l.m)));
            }
            let souls = l
                .cells
                .iter()
                .map(|c| Ok(Soul { base: region(&c.base)?, core: region(&c.core)? }))
                .collect::<Result<Vec<_>, Error>>()?;
            let m_prime_used = if i == 0 { 0 } else { *self.meta.m_prime.get(i - 1).ok_or(Error::Invalid("missing m_prime".into()))? };
            levels.push(PartitionLevel { j: l.j, souls, m: l.m, m_prime_used, diagnostics: Vec::new() });
        }
        CurvePartition::new(levels, region(&self.meta.domain)?, self.meta.transform)
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------
// verification

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub level: Option<usize>,
    pub pass: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn from_report(r: Report, level: usize) -> Check {
    from_report_at(r, level, level)
}

/// As [`from_report`], with the witness indices referring to cells of
/// `witness_level`.
fn from_report_at(r: Report, level: usize, witness_level: usize) -> Check {
    Check {
        name: r.criterion.name().into(),
        level: Some(level),
        pass: r.pass,
        worst: r.worst,
        tolerance: r.tolerance,
        witness: r.witness.map(|w| {
            let k: Vec<String> = w.indices.iter().map(|i| i.to_string()).collect();
            format!("(j, K) = ({witness_level}, {}): {}", k.join(", "), w.detail)
        }),
    }
}

/// Sampled hull deficiency of the union of `cells` on a lattice of step `h`.
pub fn sampled_deficiency(cells: &[ConvexRegion], h: f64) -> Result<f64, Error> {
    let mut seen = HashSet::new();
    let mut sample = Vec::new();
    for c in distinct_regions(cells) {
        for p in grid_sample(&c, h) {
            if seen.insert((p.x.to_bits(), p.y.to_bits())) {
                sample.push(p);
            }
        }
    }
    Ok(hull_deficiency(&sample, h)?.area)
}

/// Parameters of the checks of [`verify_partition`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub kinds: Vec<CheckKind>,
    pub area_tol: f64,
    pub seed: u64,
    pub n_arc: usize,
    pub curve_samples: usize,
    pub intervals: usize,
    pub f_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            kinds: vec![CheckKind::All],
            area_tol: 1e-3,
            seed: 0,
            n_arc: 64,
            curve_samples: 4096,
            intervals: 100,
            f_samples: 64,
        }
    }
}

pub fn verify_partition(cp: &CurvePartition, schedule: &Schedule, opt: &VerifyOptions) -> Result<VerifyReport, Error> {
    // membership in the soul class is reported on request only: bounded
    // stations do not keep disturbances below gamma
    let on = |k: CheckKind| opt.kinds.contains(&k) || (k != CheckKind::Tau && opt.kinds.contains(&CheckKind::All));
    let area = cp.domain.area();
    let atol = opt.area_tol * area;
    let mut checks = Vec::new();
    for (i, l) in cp.levels.iter().enumerate() {
        let bases = l.bases();
        if on(CheckKind::Regular) {
            checks.push(from_report(validate_regular(&l.souls), l.j));
        }
        if on(CheckKind::PopulationOfSouls) {
            checks.push(from_report(validate_population_of_souls(&l.souls)?, l.j));
        }
        if on(CheckKind::PopulationOfSets) {
            checks.push(from_report(validate_population_of_sets(&bases, Some(&cp.domain), atol), l.j));
        }
        if on(CheckKind::Refinement) && i > 0 {
            let tol = 2.0 * arc_tolerance(1.0, opt.n_arc);
            checks.push(from_report_at(validate_refinement(&cp.levels[i - 1].bases(), &bases, l.m_prime_used, tol)?, l.j, l.j - 1));
        }
        if on(CheckKind::Coverage) {
            let gap = coverage_gap(&cp.domain, &bases, 2e-3);
            checks.push(Check {
                name: "coverage".into(),
                level: Some(l.j),
                pass: gap <= atol,
                worst: gap,
                tolerance: atol,
                witness: (gap > atol).then(|| format!("uncovered area {gap:.3e}")),
            });
        }
        if on(CheckKind::Tau) {
            let r = crate::construction::check_tau(l, schedule, &cp.domain, opt.n_arc, opt.f_samples)?;
            let pass = r.max_disturbance <= r.gamma + 1e-9 && r.f_beta_failures == 0;
            checks.push(Check {
                name: "tau".into(),
                level: Some(l.j),
                pass,
                worst: r.max_disturbance,
                tolerance: r.gamma,
                witness: (!pass).then(|| {
                    format!("disturbance diameter {:.4}, {} of {} bases fail F_beta", r.max_disturbance, r.f_beta_failures, r.checked)
                }),
            });
        }
    }
    if on(CheckKind::Extent) {
        let ext: Vec<(f64, f64)> = cp.levels.iter().map(level_extents).collect();
        for (i, l) in cp.levels.iter().enumerate().skip(1) {
            let p = l.j - 1;
            let (v, axis) = match axis_for(p) {
                Axis::X => (ext[i].0, "x"),
                Axis::Y => (ext[i].1, "y"),
            };
            let tol = 11.0 * schedule.gamma(p) + 1e-2;
            checks.push(Check {
                name: format!("extent_{axis}"),
                level: Some(l.j),
                pass: v <= tol,
                worst: v,
                tolerance: tol,
                witness: (v > tol).then(|| format!("d_{axis} = {v:.4}")),
            });
        }
        let mono = ext.windows(2).position(|w| w[1].0 > w[0].0 + 1e-12 || w[1].1 > w[0].1 + 1e-12);
        checks.push(Check {
            name: "extent_monotone".into(),
            level: None,
            pass: mono.is_none(),
            worst: 0.0,
            tolerance: 0.0,
            witness: mono.map(|i| format!("extents grow from level {} to {}", i + 1, i + 2)),
        });
    }
    let deepest = cp.depth();
    if on(CheckKind::Continuity) {
        let s = sample_curve(cp, opt.curve_samples, deepest)?;
        let bound = cp.continuity_bound(deepest)? + 1e-2;
        let (worst, at) = s.windows(2).enumerate().map(|(i, w)| (w[0].dist(w[1]), i)).fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
        checks.push(Check {
            name: "continuity".into(),
            level: Some(deepest),
            pass: worst <= bound,
            worst,
            tolerance: bound,
            witness: (worst > bound).then(|| format!("samples {} and {}", at + 1, at + 2)),
        });
    }
    if on(CheckKind::Intervals) {
        checks.extend(check_intervals(cp, deepest, opt)?);
    }
    Ok(VerifyReport { pass: checks.iter().all(|c| c.pass), checks })
}

fn check_intervals(cp: &CurvePartition, j: usize, opt: &VerifyOptions) -> Result<Vec<Check>, Error> {
    let s = cp.transform.scale;
    let area = cp.domain.area() * s * s;
    let tol = opt.area_tol * area;
    let h = 4e-3 * s;
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let level = cp.level(j)?;
    let mut worst: f64 = 0.0;
    let mut smallest = f64::INFINITY;
    let mut bad = None;
    for n in 0..opt.intervals {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (a, b) = (a.min(b), a.max(b));
        let img = image_of_interval(cp, a, b, j)?;
        let f = cp.transform;
        let cells: Vec<ConvexRegion> = level.souls[img.cells.0 - 1..img.cells.1].iter().map(|c| c.base.map_points(|p| f.apply(p))).collect();
        let d = sampled_deficiency(&cells, h)?;
        worst = worst.max(d);
        smallest = smallest.min(img.region.area());
        if bad.is_none() && (d > tol || img.region.area() <= 0.0) {
            bad = Some(format!("interval {} = [{a:.5}, {b:.5}]: deficiency {d:.3e}, area {:.3e}", n + 1, img.region.area()));
        }
    }
    let whole = image_of_interval(cp, 0.0, 1.0, j)?;
    let full = cp.domain.map_points(|p| cp.transform.apply(p));
    let miss = full.area() - whole.region.intersect(&full).area() + (whole.region.area() - full.area()).max(0.0);
    Ok(vec![
        Check {
            name: "interval_convexity".into(),
            level: Some(j),
            pass: bad.is_none(),
            worst,
            tolerance: tol,
            witness: bad,
        },
        Check {
            name: "interval_area".into(),
            level: Some(j),
            pass: smallest > 0.0,
            worst: smallest,
            tolerance: 0.0,
            witness: (smallest <= 0.0).then(|| "interval image without interior".into()),
        },
        Check {
            name: "interval_whole".into(),
            level: Some(j),
            pass: miss <= tol,
            worst: miss,
            tolerance: tol,
            witness: (miss > tol).then(|| format!("image of [0, 1] differs from the domain by area {miss:.3e}")),
        },
    ])
}

// ---------------------------------------------------------------------
// SVG

/// SVG of the requested levels in the normalized frame, plus an optional
/// curve polyline evaluated at the deepest requested level.
pub fn render_svg(cp: &CurvePartition, levels: &[usize], curve_samples: usize) -> Result<String, Error> {
    for &j in levels {
        cp.level(j)?;
    }
    let b = cp.domain.bbox().ok_or(Error::EmptyRegion("render_svg"))?;
    let pad = 0.02 * (b.max.x - b.min.x).max(b.max.y - b.min.y);
    let (x0, y0) = (b.min.x - pad, -b.max.y - pad);
    let (w, h) = (b.max.x - b.min.x + 2.0 * pad, b.max.y - b.min.y + 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x0:.6} {y0:.6} {w:.6} {h:.6}" width="800" height="{:.0}">"#,
        800.0 * h / w
    );
    let stroke = 0.002 * w;
    let n = levels.len().max(1) as f64;
    for (i, &j) in levels.iter().enumerate() {
        let opacity = 0.15 + 0.5 * (i as f64 + 1.0) / n;
        let _ = writeln!(
            s,
            r##"<g id="level-{j}" fill="#4a7ab5" fill-opacity="{opacity:.3}" stroke="#1d2f4a" stroke-width="{:.5}">"##,
            stroke / (i as f64 + 1.0)
        );
        for c in &cp.level(j)?.souls {
            let mut d = String::new();
            for (k, p) in c.base.vertices().iter().enumerate() {
                let _ = write!(d, "{}{:.6} {:.6} ", if k == 0 { "M" } else { "L" }, p.x, -p.y);
            }
            let _ = writeln!(s, r#"<path d="{d}Z"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }
    if curve_samples > 0 {
        let j = levels.iter().copied().max().unwrap_or(cp.depth());
        let inv = cp.transform;
        let mut pts = String::new();
        for p in sample_curve(cp, curve_samples.max(2), j)? {
            let q = inv.invert(p);
            let _ = write!(pts, "{:.6},{:.6} ", q.x, -q.y);
        }
        let _ = writeln!(
            s,
            r##"<polyline class="curve" fill="none" stroke="#c0392b" stroke-width="{:.5}" points="{}"/>"##,
            stroke,
            pts.trim_end()
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

// ---------------------------------------------------------------------
// commands

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_USAGE, message: e.to_string() }
    }
    fn from_build(e: Error) -> Self {
        let code = match e {
            Error::Budget { .. } => EXIT_BUDGET,
            Error::Io(_) | Error::Json(_) => EXIT_USAGE,
            _ => EXIT_VERIFY,
        };
        CliError { code, message: e.to_string() }
    }
}

pub fn cmd_build(args: &BuildArgs) -> Result<String, CliError> {
    let config = RunConfig {
        depth: args.depth,
        gamma0: args.gamma0,
        n_arc: args.n_arc,
        area_tol: args.area_tol,
        budget: if args.budget.is_finite() && args.budget >= 0.0 { args.budget as u128 } else { u128::MAX },
        mode: match args.mode {
            ModeArg::Adaptive => Mode::Adaptive,
            ModeArg::Strict => Mode::Strict,
        },
        station_cap: args.station_cap,
        seed: args.seed,
        validate: !args.no_validate,
    };
    config.check().map_err(CliError::usage)?;
    let spec = ShapeSpec { kind: args.shape, size: args.size, file: args.polygon_file.clone() };
    let raw = spec.resolve(config.n_arc).map_err(CliError::usage)?;
    let (domain, transform) = normalize_domain(&raw).map_err(CliError::usage)?;
    let schedule = make_schedule(config.depth, config.gamma0).map_err(CliError::usage)?;
    let result = run(&domain, config.depth, &schedule, &config.build_config()).map_err(CliError::from_build)?;
    let file = PartitionFile::from_run(&result.levels, &schedule, &domain, transform, &config);
    file.write(&args.out).map_err(CliError::usage)?;
    let mut summary = String::new();
    for l in &result.levels {
        let (dx, dy) = level_extents(l);
        let _ = writeln!(
            summary,
            "level {}: M = {}, m' = {}, max d_x = {dx:.4}, max d_y = {dy:.4}, max d = {:.4}",
            l.j,
            l.m,
            l.m_prime_used,
            max_diameter(&l.bases())
        );
    }
    if let Some(e) = result.stopped {
        return Err(CliError {
            code: EXIT_BUDGET,
            message: format!("{summary}{e}; {} level(s) written to {}", result.levels.len(), args.out.display()),
        });
    }
    Ok(summary)
}

fn load(path: &Path) -> Result<(PartitionFile, CurvePartition), CliError> {
    let f = PartitionFile::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let cp = f.to_partition().map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok((f, cp))
}

pub fn cmd_render(args: &RenderArgs) -> Result<String, CliError> {
    let (_, cp) = load(&args.partition)?;
    let levels = if args.level.is_empty() { vec![cp.depth()] } else { args.level.clone() };
    let svg = render_svg(&cp, &levels, args.curve_samples).map_err(CliError::usage)?;
    std::fs::write(&args.out, svg).map_err(CliError::usage)?;
    Ok(format!("wrote {}\n", args.out.display()))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<String, CliError> {
    let (f, cp) = load(&args.partition)?;
    if !(args.tol > 0.0) {
        return Err(CliError::usage("tolerance must be positive"));
    }
    let opt = VerifyOptions {
        kinds: args.criterion.clone(),
        area_tol: args.tol,
        seed: args.seed.unwrap_or(f.meta.config.seed),
        n_arc: f.meta.config.n_arc,
        ..VerifyOptions::default()
    };
    let report = verify_partition(&cp, &f.schedule(), &opt).map_err(CliError::from_build)?;
    let json = serde_json::to_string_pretty(&report).map_err(CliError::usage)? + "\n";
    if report.pass {
        Ok(json)
    } else {
        Err(CliError { code: EXIT_VERIFY, message: json })
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let (_, cp) = load(&args.partition)?;
    let j = args.level.unwrap_or(cp.depth());
    let out = args
        .u
        .iter()
        .map(|&u| crate::curve::eval_f(&cp, u, j))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::usage)?;
    Ok(serde_json::to_string_pretty(&out).map_err(CliError::usage)? + "\n")
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Render(a) => cmd_render(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            if e.code == EXIT_VERIFY && e.message.starts_with('{') {
                print!("{}", e.message);
            } else {
                eprintln!("error: {}", e.message);
            }
            e.code
        }
    }
}
