//! Error norms, grid restriction, observed-order fits and refinement studies.

use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use crate::domain::{Discretization, Grid2D, ObstacleWorld, Problem, SideHint};
use crate::error::{Error, Result};
use crate::factor::FactorFunction;
use crate::geometry::Point;
use crate::oracles::{LinearSpeedProblem, VisibilityOracle};
use crate::solver::{
    fmm_solve, BallInit, CornerFactorKind, FanEntry, Method, SolveResult, SolverConfig,
};

/// `(L∞, L1)` norms of `numeric - reference` over masked nodes; `L1` is weighted by `h²`.
pub fn error_norms(
    numeric: &[f64],
    reference: &[f64],
    mask: &[bool],
    h: f64,
) -> Result<(f64, f64)> {
    if numeric.len() != reference.len() || numeric.len() != mask.len() {
        return Err(Error::Analysis(format!(
            "field sizes differ: {} / {} / {}",
            numeric.len(),
            reference.len(),
            mask.len()
        )));
    }
    let mut count = 0usize;
    let (mut linf, mut sum) = (0.0f64, 0.0f64);
    for ((a, b), &m) in numeric.iter().zip(reference).zip(mask) {
        if !m {
            continue;
        }
        let e = (a - b).abs();
        linf = linf.max(e);
        sum += e;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((linf, h * h * sum))
}

/// Nodes where both fields are finite and the node is part of the solve.
pub fn default_mask(world: &ObstacleWorld, numeric: &[f64], reference: &[f64]) -> Vec<bool> {
    (0..numeric.len())
        .map(|i| !world.is_excluded(i) && numeric[i].is_finite() && reference[i].is_finite())
        .collect()
}

/// Copies fine-grid values at the nodes shared with `coarse`.
pub fn restrict_fine_to_coarse(
    fine: &[f64],
    fine_grid: &Grid2D,
    coarse_grid: &Grid2D,
) -> Result<Vec<f64>> {
    if fine.len() != fine_grid.len() {
        return Err(Error::Analysis("fine field does not match its grid".into()));
    }
    let k = fine_grid.nesting_ratio(coarse_grid).ok_or_else(|| {
        Error::NonNestedGrids(format!(
            "h = {} (origin {}) vs h = {} (origin {})",
            fine_grid.h(),
            fine_grid.origin(),
            coarse_grid.h(),
            coarse_grid.origin()
        ))
    })?;
    let mut out = Vec::with_capacity(coarse_grid.len());
    for j in 0..coarse_grid.ny() {
        for i in 0..coarse_grid.nx() {
            out.push(fine[fine_grid.index(i * k, j * k)]);
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln e` against `ln h` over the last `tail` rows with `e > 0`.
pub fn fit_observed_order(rows: &[(f64, f64)], tail: usize) -> Result<f64> {
    if tail < 2 {
        return Err(Error::Analysis(format!(
            "tail must be at least 2, got {tail}"
        )));
    }
    let window = &rows[rows.len().saturating_sub(tail)..];
    let pts: Vec<(f64, f64)> = window
        .iter()
        .filter(|(h, e)| {
            let ok = *e > 0.0 && e.is_finite() && *h > 0.0;
            if !ok {
                warn!("skipping row h = {h}, e = {e} in order fit");
            }
            ok
        })
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Analysis("fewer than two usable rows".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Analysis("all rows share one grid size".into()));
    }
    Ok(sxy / sxx)
}

/// Problem-level description of a solver method, resolved per grid.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Original,
    /// Cone at the source (minimum of cones for several sources).
    GlobalCone,
    /// Sum of the source cones.
    GlobalSumOfCones,
    /// Source cone plus a cone at a known corner.
    GlobalTwoCones {
        corner: Point,
    },
    SwitchingCones {
        corner: Point,
    },
    /// Source cones restricted to balls of `radius`.
    LocalizedCones {
        radius: f64,
    },
    JustInTime {
        radius: f64,
        corner_factor: CornerFactorKind,
    },
}

/// A labeled method with its source initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyMethod {
    pub label: String,
    pub spec: MethodSpec,
    pub ball: BallInit,
}

impl StudyMethod {
    pub fn new(label: impl Into<String>, spec: MethodSpec) -> Self {
        Self {
            label: label.into(),
            spec,
            ball: BallInit::None,
        }
    }

    pub fn with_ball(mut self, ball: BallInit) -> Self {
        self.ball = ball;
        self
    }

    /// Solver configuration on a particular discretization.
    pub fn config(&self, disc: &Discretization) -> Result<SolverConfig> {
        let cones = disc
            .sources
            .points()
            .iter()
            .map(|&p| Ok((p, disc.speed.eval(p, Some(SideHint::FreeSide))?)))
            .collect::<Result<Vec<_>>>()?;
        let source_factor = || match cones.as_slice() {
            [(p, s)] => FactorFunction::cone(*p, *s),
            many => FactorFunction::MinOfCones(many.to_vec()),
        };
        let method = match &self.spec {
            MethodSpec::Original => Method::Original,
            MethodSpec::GlobalCone => Method::GlobalStatic(source_factor()),
            MethodSpec::GlobalSumOfCones => {
                Method::GlobalStatic(FactorFunction::SumOfCones(cones.clone()))
            }
            MethodSpec::GlobalTwoCones { corner } => {
                let mut list = cones.clone();
                list.push((*corner, disc.speed.eval(*corner, Some(SideHint::FreeSide))?));
                Method::GlobalStatic(FactorFunction::SumOfCones(list))
            }
            MethodSpec::SwitchingCones { corner } => Method::SwitchingCones { corner: *corner },
            MethodSpec::LocalizedCones { radius } => Method::LocalizedStatic(
                cones
                    .iter()
                    .map(|&(p, s)| FanEntry::point_source(p, s, *radius))
                    .collect(),
            ),
            MethodSpec::JustInTime {
                radius,
                corner_factor,
            } => Method::JustInTime {
                radius: *radius,
                corner_factor: *corner_factor,
            },
        };
        let config = SolverConfig::new(method).with_ball(self.ball);
        Ok(match self.spec {
            MethodSpec::GlobalSumOfCones
            | MethodSpec::GlobalTwoCones { .. }
            | MethodSpec::SwitchingCones { .. } => config.tolerant(),
            _ => config,
        })
    }

    pub fn solve(&self, disc: &Discretization) -> Result<SolveResult> {
        fmm_solve(&disc.world, &disc.speed, &disc.sources, &self.config(disc)?)
    }
}

/// Reference solution for a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    /// Closed form for a linear speed field (minimum over sources).
    LinearSpeed,
    /// Exact unit-speed distance around non-permeable obstacles.
    Visibility,
    /// A solve on a finer grid nested with every study grid.
    FineGrid { h: f64, method: StudyMethod },
}

/// Reference values on the nodes of `disc`, or a fine-grid result to restrict from.
enum Reference {
    Pointwise(Box<dyn Fn(Point) -> f64 + Send + Sync>),
    Fine(SolveResult),
}

impl Reference {
    fn build(problem: &Problem, truth: &GroundTruth) -> Result<Self> {
        match truth {
            GroundTruth::LinearSpeed => {
                let oracles = problem
                    .sources
                    .iter()
                    .map(|&s| LinearSpeedProblem::from_field(&problem.speed, s))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Reference::Pointwise(Box::new(move |x| {
                    oracles
                        .iter()
                        .map(|o| o.eval(x))
                        .fold(f64::INFINITY, f64::min)
                })))
            }
            GroundTruth::Visibility => {
                let oracle = VisibilityOracle::new(
                    &problem.sources,
                    &problem.obstacles,
                    problem.min,
                    problem.max,
                )?;
                Ok(Reference::Pointwise(Box::new(move |x| oracle.distance(x))))
            }
            GroundTruth::FineGrid { h, method } => {
                let disc = problem.discretize(*h)?;
                Ok(Reference::Fine(method.solve(&disc)?))
            }
        }
    }

    fn on(&self, grid: &Grid2D) -> Result<Vec<f64>> {
        match self {
            Reference::Pointwise(f) => Ok((0..grid.len())
                .into_par_iter()
                .map(|i| f(grid.node_point(i)))
                .collect()),
            Reference::Fine(r) => restrict_fine_to_coarse(&r.u, &r.grid, grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub linf: f64,
    pub l1: f64,
    /// Wall-clock seconds spent in the solve.
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub method: String,
    pub rows: Vec<ConvergenceRow>,
    pub tail: usize,
    pub order_linf: f64,
    pub order_l1: f64,
}

impl ConvergenceReport {
    pub fn from_rows(
        method: impl Into<String>,
        rows: Vec<ConvergenceRow>,
        tail: usize,
    ) -> Result<Self> {
        let linf: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.linf)).collect();
        let l1: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.l1)).collect();
        let order_linf = fit_observed_order(&linf, tail)?;
        let order_l1 = fit_observed_order(&l1, tail)?;
        Ok(Self {
            method: method.into(),
            rows,
            tail,
            order_linf,
            order_l1,
        })
    }

    /// Order fitted over a different tail.
    pub fn order_over(&self, tail: usize) -> Result<(f64, f64)> {
        let linf: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h, r.linf)).collect();
        let l1: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h, r.l1)).collect();
        Ok((
            fit_observed_order(&linf, tail)?,
            fit_observed_order(&l1, tail)?,
        ))
    }

    pub fn finest(&self) -> &ConvergenceRow {
        self.rows.last().expect("reports have at least two rows")
    }
}

/// Grid sizes `h0 / 2^k` for `k = 0..levels`.
pub fn refinement_schedule(h0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| h0 / (1u64 << k) as f64).collect()
}

/// Solves `problem` with each method on `levels` nested grids and measures the error
/// against `truth`. Independent solves run in parallel; results are ordered by
/// (method, level).
pub fn run_refinement_study(
    problem: &Problem,
    methods: &[StudyMethod],
    h0: f64,
    levels: usize,
    truth: &GroundTruth,
    tail: usize,
) -> Result<Vec<ConvergenceReport>> {
    if levels < 2 {
        return Err(Error::Analysis(format!(
            "need at least two levels, got {levels}"
        )));
    }
    if methods.is_empty() {
        return Err(Error::Analysis("no methods requested".into()));
    }
    let schedule = refinement_schedule(h0, levels);
    let discs = schedule
        .iter()
        .map(|&h| problem.discretize(h))
        .collect::<Result<Vec<_>>>()?;
    let reference = Reference::build(problem, truth)?;
    let refs = discs
        .iter()
        .map(|d| reference.on(&d.grid))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..levels).map(move |l| (m, l)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, l)| {
            let disc = &discs[l];
            let start = Instant::now();
            let result = methods[m].solve(disc)?;
            let runtime = start.elapsed().as_secs_f64();
            let mask = default_mask(&disc.world, &result.u, &refs[l]);
            let (linf, l1) = error_norms(&result.u, &refs[l], &mask, disc.grid.h())?;
            Ok(ConvergenceRow {
                h: disc.grid.h(),
                linf,
                l1,
                runtime,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            ConvergenceReport::from_rows(
                method.label.clone(),
                rows[m * levels..(m + 1) * levels].to_vec(),
                tail,
            )
        })
        .collect()
}
