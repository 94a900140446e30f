//! Level recursion: schedules, the initial two-term population and the
//! passage from level `j` to level `j + 1` through offspring along
//! alternating axes.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::geometry::{grid_sample, Axis, BBox, ConvexRegion, ExtentMode, DEFAULT_N_ARC};
use crate::nets_stations::{compute_params, NetContext};
use crate::offspring::{Diagnostic, OffspringBuilder};
use crate::rho_convex::{check_f_rho, RhoFamily};
use crate::seq_algebra::{
    anti_order, validate_population_of_sets, validate_population_of_souls, validate_refinement, validate_regular,
    BoxIndex, Report, Soul,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// `gamma(j)` for `j = 1..=depth + 1` (the last entry is the target
    /// scale of the deepest offspring).
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Worst-case offspring lengths `m_prime(j)` for `j = 1..depth`
    /// (saturating).
    pub m_primes: Vec<u128>,
    pub depth: usize,
}

impl Schedule {
    pub fn gamma(&self, j: usize) -> f64 {
        self.gammas[j - 1]
    }
    pub fn beta(&self, j: usize) -> f64 {
        self.betas[j - 1]
    }
}

/// `gamma(j) = min(gamma0, 1/(4j))`, `beta(1) = 1` and
/// `beta(j+1) = max(2 beta(j), gamma(j) + 1/gamma(j))`.
pub fn make_schedule(depth: usize, gamma0: f64) -> Result<Schedule> {
    if !(gamma0 > 0.0 && gamma0 < 0.25) {
        return Err(Error::Invalid("gamma0 must lie in (0, 1/4)".into()));
    }
    if depth == 0 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    let gammas: Vec<f64> = (1..=depth + 1).map(|j| gamma0.min(0.25 / j as f64)).collect();
    let mut betas = vec![1.0];
    for j in 1..=depth {
        let (b, g) = (betas[j - 1], gammas[j - 1]);
        betas.push(f64::max(2.0 * b, g + 1.0 / g));
    }
    let mut m_primes = Vec::new();
    for j in 1..depth {
        let p = compute_params(betas[j - 1], gammas[j - 1], gammas[j])?;
        m_primes.push(p.n1.saturating_mul(2).saturating_add(p.n_star).saturating_mul(2));
    }
    Ok(Schedule { gammas, betas, m_primes, depth })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Stations of bounded length, one common length per level.
    Adaptive,
    /// Worst-case counts; only feasible when they fit the budget.
    Strict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub n_arc: usize,
    /// Upper bound on station length in adaptive mode (`0` = unbounded).
    pub station_cap: usize,
    /// Largest admissible number of cells on one level.
    pub budget: u128,
    pub mode: Mode,
    /// Run the population, refinement and coverage checks on every level.
    pub validate: bool,
    /// Area tolerance as a fraction of the domain area.
    pub area_tol: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            n_arc: DEFAULT_N_ARC,
            station_cap: 8,
            budget: 1_000_000,
            mode: Mode::Adaptive,
            validate: true,
            area_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionLevel {
    pub j: usize,
    pub souls: Vec<Soul>,
    pub m: usize,
    /// Offspring length used to build this level from the previous one
    /// (`0` for the initial level).
    pub m_prime_used: usize,
    pub diagnostics: Vec<Diagnostic>,
}

impl PartitionLevel {
    pub fn bases(&self) -> Vec<ConvexRegion> {
        self.souls.iter().map(|s| s.base.clone()).collect()
    }
}

/// Axis of the offspring that turns level `j` into level `j + 1`.
pub fn axis_for(j: usize) -> Axis {
    if j % 2 == 1 {
        Axis::X
    } else {
        Axis::Y
    }
}

pub fn init_level(domain: &ConvexRegion) -> Result<PartitionLevel> {
    let ok = domain.has_interior() && domain.diameter() <= 1.0 + 1e-9 && {
        let b = domain.bbox().unwrap();
        b.min.x >= -1.0 && b.min.y >= -1.0 && b.max.x <= 1.0 && b.max.y <= 1.0
    };
    if !ok {
        return Err(Error::Invalid("domain not normalized".into()));
    }
    let s = Soul::whole(domain.clone());
    Ok(PartitionLevel { j: 1, souls: vec![s.clone(), s], m: 2, m_prime_used: 0, diagnostics: Vec::new() })
}

/// Builds level `j + 1`. Parents sharing base and core share one
/// offspring, so the level costs one construction per distinct parent.
pub fn next_level(
    level: &PartitionLevel,
    schedule: &Schedule,
    domain: &ConvexRegion,
    cfg: &BuildConfig,
) -> Result<PartitionLevel> {
    let j = level.j;
    if j >= schedule.gammas.len() {
        return Err(Error::Invalid(format!("schedule has no entry for level {}", j + 1)));
    }
    let params = compute_params(schedule.beta(j), schedule.gamma(j), schedule.gamma(j + 1))?;
    let over = |cells: u128| {
        (cells > cfg.budget).then_some(Error::Budget { level: j + 1, cells, budget: cfg.budget })
    };
    let (cap, fixed) = match cfg.mode {
        Mode::Adaptive => (cfg.station_cap, None),
        Mode::Strict => {
            let m_prime = params.n1.saturating_mul(2).saturating_add(params.n_star).saturating_mul(2);
            if let Some(e) = over((level.m as u128).saturating_mul(m_prime)) {
                return Err(e);
            }
            (0, Some(params.n_star as usize))
        }
    };
    let ctx = NetContext::new(params, domain.clone(), cfg.n_arc, cap)?;
    let mut builder = OffspringBuilder::new(ctx, axis_for(j));
    let with_parent = |k: usize, e: Error| Error::Invalid(format!("level {j}, parent {k}: {e}"));
    for (k, s) in level.souls.iter().enumerate() {
        builder.prepare(s).map_err(|e| with_parent(k + 1, e))?;
    }
    builder.fix_n_star(fixed.unwrap_or(0));
    let m_prime = builder.m_prime();
    if let Some(e) = over((level.m as u128).saturating_mul(m_prime as u128)) {
        return Err(e);
    }
    let mut blocks = Vec::with_capacity(level.m);
    for (k, s) in level.souls.iter().enumerate() {
        let o = builder.offspring(s).map_err(|e| with_parent(k + 1, e))?;
        blocks.push(o.souls.clone());
    }
    let souls = anti_order(&blocks);
    let m = souls.len();
    Ok(PartitionLevel { j: j + 1, souls, m, m_prime_used: m_prime, diagnostics: builder.diagnostics })
}

/// Checks of one freshly built level against its parent level.
pub fn validate_level(parent: Option<&PartitionLevel>, level: &PartitionLevel, domain: &ConvexRegion, area_tol: f64, n_arc: usize) -> Result<Vec<Report>> {
    let bases = level.bases();
    let a = domain.area();
    let mut out = vec![validate_regular(&level.souls), validate_population_of_souls(&level.souls)?];
    out.push(validate_population_of_sets(&bases, Some(domain), area_tol * a));
    if let Some(p) = parent {
        let tol = 2.0 * crate::geometry::arc_tolerance(1.0, n_arc);
        out.push(validate_refinement(&p.bases(), &bases, level.m_prime_used, tol)?);
    }
    Ok(out)
}

/// Outcome of [`run`]: the levels that were built and, when the run
/// stopped early, the reason.
#[derive(Debug)]
pub struct RunResult {
    pub levels: Vec<PartitionLevel>,
    pub stopped: Option<Error>,
}

/// Builds levels `1..=depth`. Budget overruns end the run with the
/// levels built so far; validation failures and geometric errors are
/// returned as errors.
pub fn run(domain: &ConvexRegion, depth: usize, schedule: &Schedule, cfg: &BuildConfig) -> Result<RunResult> {
    if depth == 0 || depth > schedule.depth {
        return Err(Error::Invalid(format!("depth must lie in 1..={}", schedule.depth)));
    }
    let mut levels = vec![init_level(domain)?];
    while levels.len() < depth {
        let prev = levels.last().unwrap();
        let next = match next_level(prev, schedule, domain, cfg) {
            Ok(l) => l,
            Err(e @ Error::Budget { .. }) => return Ok(RunResult { levels, stopped: Some(e) }),
            Err(e) => return Err(e),
        };
        if cfg.validate {
            for r in validate_level(Some(prev), &next, domain, cfg.area_tol, cfg.n_arc)? {
                if !r.pass {
                    let w = r.witness.map(|w| format!("{:?}: {}", w.indices, w.detail)).unwrap_or_default();
                    return Err(Error::Validation {
                        criterion: format!("level {} {}", next.j, r.criterion.name()),
                        witness: w,
                    });
                }
            }
            let gap = coverage_gap(domain, &next.bases(), 2e-3);
            if gap > cfg.area_tol * domain.area() {
                return Err(Error::Validation {
                    criterion: format!("level {} coverage", next.j),
                    witness: format!("uncovered area {gap:.3e}"),
                });
            }
        }
        levels.push(next);
    }
    Ok(RunResult { levels, stopped: None })
}

/// Largest x and y extents over the cells of a level.
pub fn level_extents(level: &PartitionLevel) -> (f64, f64) {
    level.souls.iter().fold((0.0, 0.0), |(x, y), s| {
        (
            f64::max(x, s.base.extent(ExtentMode::X).unwrap_or(0.0)),
            f64::max(y, s.base.extent(ExtentMode::Y).unwrap_or(0.0)),
        )
    })
}

pub fn max_diameter(cells: &[ConvexRegion]) -> f64 {
    cells.iter().map(ConvexRegion::diameter).fold(0.0, f64::max)
}

/// Area of the domain missed by the cells, estimated on a grid of step
/// `h` (each uncovered grid point stands for an `h x h` square).
pub fn coverage_gap(domain: &ConvexRegion, cells: &[ConvexRegion], h: f64) -> f64 {
    let distinct = distinct_regions(cells);
    let idx = BoxIndex::new(distinct.iter().map(|c| c.bbox()).collect());
    let sample = grid_sample(domain, h);
    let missed = sample
        .iter()
        .filter(|&&x| {
            let b = BBox { min: x, max: x };
            !idx.query(&b, 1e-9).into_iter().any(|k| distinct[k].contains(x, 1e-9))
        })
        .count();
    missed as f64 * h * h
}

/// The distinct regions of a list, in order of first appearance.
pub fn distinct_regions(cells: &[ConvexRegion]) -> Vec<ConvexRegion> {
    let key = |c: &ConvexRegion| -> Vec<(i64, i64)> {
        c.vertices().iter().map(|p| ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)).collect()
    };
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for c in cells {
        seen.entry(key(c)).or_insert_with(|| {
            out.push(c.clone());
        });
    }
    out
}

/// Membership of a level in the soul class for `(beta, gamma)`: largest
/// disturbance diameter and the number of distinct bases failing the
/// sampled `F_beta` test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauReport {
    pub max_disturbance: f64,
    pub gamma: f64,
    pub f_beta_failures: usize,
    pub checked: usize,
}

pub fn check_tau(level: &PartitionLevel, schedule: &Schedule, domain: &ConvexRegion, n_arc: usize, samples: usize) -> Result<TauReport> {
    let (beta, gamma) = (schedule.beta(level.j), schedule.gamma(level.j));
    let mut max_disturbance: f64 = 0.0;
    for s in &level.souls {
        if s.base != s.core {
            max_disturbance = max_disturbance.max(s.disturbance_diameter());
        }
    }
    let fam = RhoFamily::with_arcs(beta, domain.clone(), n_arc)?;
    let bases = distinct_regions(&level.bases());
    let mut failures = 0;
    for b in &bases {
        if !check_f_rho(b, &fam, samples)?.pass {
            failures += 1;
        }
    }
    Ok(TauReport { max_disturbance, gamma, f_beta_failures: failures, checked: bases.len() })
}
