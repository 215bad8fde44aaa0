//! Dijkstra-like marching for plain, statically factored and just-in-time factored
//! eikonal problems.
//!
//! All methods work with `u` directly. Before a node is updated a factor `T` is chosen for
//! it, and the `tau = u - T` values of its neighbors are formed with that same `T`.

use log::{debug, warn};

use crate::domain::{
    CornerCandidate, Grid2D, NodeClass, ObstacleWorld, Permeability, SourceSet, SpeedField,
};
use crate::error::{Error, Result};
use crate::factor::{
    build_corner_factor, build_permeable_corner_factor, eval_factor, is_regular, FactorFunction,
    SnellAngles,
};
use crate::geometry::{Point, Vec2};
use crate::heap::IndexedMinHeap;
use crate::oracles::line_integrated_time;
use crate::update::{factored_update, unfactored_update, AxisNeighbor, NeighborData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Far,
    Considered,
    Accepted,
    /// Inside a non-permeable obstacle; never solved.
    Excluded,
}

/// A rarefaction fan: factor `factor` is used within `radius` of `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct FanEntry {
    pub center: Point,
    pub factor: FactorFunction,
    pub radius: f64,
    /// Obstacle whose corner spawned the fan.
    pub obstacle: Option<usize>,
    /// Characteristic direction `a` estimated at the corner.
    pub direction: Option<Vec2>,
    pub snell: Option<SnellAngles>,
}

impl FanEntry {
    /// Point-source fan with a cone factor.
    pub fn point_source(center: Point, speed: f64, radius: f64) -> Self {
        Self {
            center,
            factor: FactorFunction::cone(center, speed),
            radius,
            obstacle: None,
            direction: None,
            snell: None,
        }
    }
}

/// Factor built at rarefying corners by the just-in-time method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CornerFactorKind {
    /// Cone+plane at non-permeable corners, cone+2-planes at permeable ones.
    #[default]
    Standard,
    /// Plain cone centered at the corner.
    Cone,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Unfactored fast marching.
    Original,
    /// One factor on the whole domain.
    GlobalStatic(FactorFunction),
    /// Fixed list of localized fans.
    LocalizedStatic(Vec<FanEntry>),
    /// Source cone until `corner` is accepted, then a cone at `corner` everywhere.
    SwitchingCones { corner: Point },
    /// Source cones on balls of `radius`, plus fans discovered at rarefying corners.
    JustInTime {
        radius: f64,
        corner_factor: CornerFactorKind,
    },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Original => "original".into(),
            Method::GlobalStatic(f) => format!("global-{}", f.kind()),
            Method::LocalizedStatic(_) => "localized-static".into(),
            Method::SwitchingCones { .. } => "switching-cones".into(),
            Method::JustInTime { corner_factor, .. } => match corner_factor {
                CornerFactorKind::Standard => "jit".into(),
                CornerFactorKind::Cone => "jit-cone".into(),
            },
        }
    }
}

/// Initialization of a ball around each source (baseline strategies).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BallInit {
    #[default]
    None,
    ZeroOnBall(f64),
    ConeOnBall(f64),
    LineIntegratedBall(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub ball: BallInit,
    /// Relative slack allowed when checking that accepted values never decrease.
    pub causality_tol: f64,
    /// Abort on a decrease; otherwise count it in the stats and carry on.
    pub strict_causality: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ball: BallInit::None,
            causality_tol: 1e-12,
            strict_causality: true,
        }
    }

    /// Baselines with mismatched or switching factors may accept out of order.
    pub fn tolerant(mut self) -> Self {
        self.strict_causality = false;
        self
    }

    pub fn with_ball(mut self, ball: BallInit) -> Self {
        self.ball = ball;
        self
    }

    fn validate(&self, grid: &Grid2D) -> Result<()> {
        let h = grid.h();
        let check_radius = |r: f64, what: &str| -> Result<()> {
            if !(r > 2.0 * h) || !r.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{what} radius {r} must exceed 2h = {}",
                    2.0 * h
                )));
            }
            Ok(())
        };
        match &self.method {
            Method::JustInTime { radius, .. } => check_radius(*radius, "fan")?,
            Method::LocalizedStatic(fans) => {
                for f in fans {
                    check_radius(f.radius, "fan")?;
                }
            }
            _ => {}
        }
        match self.ball {
            BallInit::None => {}
            BallInit::ZeroOnBall(r) | BallInit::ConeOnBall(r) | BallInit::LineIntegratedBall(r) => {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "ball radius {r} must be positive"
                    )));
                }
            }
        }
        if !(self.causality_tol >= 0.0) {
            return Err(Error::InvalidConfig(
                "causality tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Calls to an update kernel.
    pub updates: usize,
    pub accepted: usize,
    pub heap_peak: usize,
    /// Solvable nodes never reached.
    pub unreachable: usize,
    /// Corner candidates examined and found regular.
    pub regular_corners: usize,
    /// Acceptances below an earlier accepted value (tolerant mode only).
    pub causality_violations: usize,
    /// Candidates raised to the accepted front after a fan switched their factor.
    pub front_clamps: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub grid: Grid2D,
    /// Value per node; `+∞` on excluded and unreachable nodes.
    pub u: Vec<f64>,
    pub accepted_order: Vec<usize>,
    /// Fans in effect at the end of the solve (sources first).
    pub fans: Vec<FanEntry>,
    pub stats: SolveStats,
}

impl SolveResult {
    /// Value at the node coinciding with `p`.
    pub fn value_at(&self, p: Point) -> Option<f64> {
        self.grid.locate(p).map(|i| self.u[i])
    }

    /// Fans discovered at obstacle corners.
    pub fn corner_fans(&self) -> impl Iterator<Item = &FanEntry> {
        self.fans.iter().filter(|f| f.obstacle.is_some())
    }
}

/// Factor of the nearest fan whose ball contains `x`; ties go to the earliest fan. A fan
/// spawned at a permeable corner does not apply strictly inside its own obstacle.
pub fn choose_factor(x: Point, x_class: NodeClass, fans: &[FanEntry]) -> &FactorFunction {
    const ZERO: &FactorFunction = &FactorFunction::Zero;
    let mut best: Option<(f64, &FanEntry)> = None;
    for fan in fans {
        let d = (x - fan.center).norm_sq();
        let reach = fan.radius * (1.0 + 1e-12);
        if d > reach * reach {
            continue;
        }
        if let (Some(id), NodeClass::Interior(inside)) = (fan.obstacle, x_class) {
            if id == inside {
                continue;
            }
        }
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, fan));
        }
    }
    best.map_or(ZERO, |(_, f)| &f.factor)
}

/// Estimate of the unit characteristic direction `a = -∇u/|∇u|` at `node` from one-sided
/// differences toward its smaller Accepted neighbor on each axis.
pub fn approximate_characteristic_direction(
    world: &ObstacleWorld,
    u: &[f64],
    status: &[NodeStatus],
    node: usize,
) -> Result<Vec2> {
    let grid = world.grid();
    let h = grid.h();
    let [left, right, down, up] = grid.neighbors(node);
    let usable = |n: Option<usize>| {
        n.filter(|&n| {
            status[n] == NodeStatus::Accepted && u[n].is_finite() && !world.edge_blocked(node, n)
        })
    };
    let axis = |lo: Option<usize>, hi: Option<usize>| -> f64 {
        match (usable(lo), usable(hi)) {
            (Some(l), Some(r)) if u[r] < u[l] => (u[r] - u[node]) / h,
            (Some(l), _) => (u[node] - u[l]) / h,
            (None, Some(r)) => (u[r] - u[node]) / h,
            (None, None) => 0.0,
        }
    };
    let g = Vec2::new(axis(left, right), axis(down, up));
    (-g).normalized().ok_or(Error::DegenerateGradient(node))
}

/// Outcome of examining a corner candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum CornerVerdict {
    Regular,
    Rarefying(FactorFunction),
}

/// Classifies the corner by whether `-a` points into the obstacle, and builds the corner
/// factor for rarefying corners. `speed` is the free-side speed at the corner.
pub fn detect_rarefying_corner(
    corner: &CornerCandidate,
    a: Vec2,
    permeability: Permeability,
    speed: f64,
    kind: CornerFactorKind,
) -> Result<CornerVerdict> {
    if is_regular(a, corner.quadrant) {
        return Ok(CornerVerdict::Regular);
    }
    let factor = match (kind, permeability) {
        (CornerFactorKind::Cone, _) => FactorFunction::cone(corner.point, speed),
        (CornerFactorKind::Standard, Permeability::NonPermeable) => FactorFunction::ConePlane(
            build_corner_factor(corner.point, a, corner.quadrant, speed)?,
        ),
        (_, Permeability::Permeable(f_ob)) => {
            let upsilon = speed / f_ob;
            match build_permeable_corner_factor(corner.point, a, corner.quadrant, upsilon, speed) {
                Ok(f) if f.angles.delta > 0.0 => FactorFunction::ConeTwoPlanes(f),
                Ok(_) => return Ok(CornerVerdict::Regular),
                Err(Error::DegenerateCorner(msg)) => {
                    warn!("corner at {} treated as regular: {msg}", corner.point);
                    return Ok(CornerVerdict::Regular);
                }
                Err(e) => return Err(e),
            }
        }
    };
    Ok(CornerVerdict::Rarefying(factor))
}

/// Values fixed before marching: the source nodes, or every node of the source balls.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSet {
    /// `(node, u)` pairs to be Accepted up front, sorted by value then index.
    pub accepted: Vec<(usize, f64)>,
    /// `(node, u)` pairs to start out Considered.
    pub considered: Vec<(usize, f64)>,
}

/// Initial values for the chosen ball strategy.
pub fn initialize_sources(
    world: &ObstacleWorld,
    speed: &SpeedField,
    speeds: &[f64],
    sources: &SourceSet,
    ball: BallInit,
) -> Result<InitialSet> {
    let grid = world.grid();
    let r = match ball {
        BallInit::None => {
            let mut considered: Vec<(usize, f64)> =
                sources.nodes().iter().map(|&n| (n, 0.0)).collect();
            considered.sort_unstable_by_key(|p| p.0);
            considered.dedup_by_key(|p| p.0);
            return Ok(InitialSet {
                accepted: Vec::new(),
                considered,
            });
        }
        BallInit::ZeroOnBall(r) | BallInit::ConeOnBall(r) | BallInit::LineIntegratedBall(r) => r,
    };
    let h = grid.h();
    let mut values: Vec<(usize, f64)> = Vec::new();
    for (&src, &node) in sources.points().iter().zip(sources.nodes()) {
        let (ci, cj) = grid.coords(node);
        let reach = (r / h).floor() as usize + 1;
        for j in cj.saturating_sub(reach)..=(cj + reach).min(grid.ny() - 1) {
            for i in ci.saturating_sub(reach)..=(ci + reach).min(grid.nx() - 1) {
                let idx = grid.index(i, j);
                let x = grid.point(i, j);
                if world.is_excluded(idx) || x.distance(src) > r * (1.0 + 1e-12) {
                    continue;
                }
                let v = match ball {
                    BallInit::ZeroOnBall(_) => 0.0,
                    BallInit::ConeOnBall(_) => x.distance(src) / speeds[node],
                    BallInit::LineIntegratedBall(_) => line_integrated_time(src, x, speed)?,
                    BallInit::None => unreachable!(),
                };
                values.push((idx, v));
            }
        }
    }
    values.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    values.dedup_by_key(|p| p.0);
    if values.len() <= sources.nodes().len() {
        return Err(Error::BallTooSmall { radius: r });
    }
    values.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(InitialSet {
        accepted: values,
        considered: Vec::new(),
    })
}

/// Factor selection state for one solve.
enum Selector {
    Zero,
    Global(FactorFunction),
    Fans,
    Switching {
        before: FactorFunction,
        after: FactorFunction,
        corner: usize,
        switched: bool,
    },
}

struct Marcher<'a> {
    grid: &'a Grid2D,
    world: &'a ObstacleWorld,
    speeds: Vec<f64>,
    u: Vec<f64>,
    status: Vec<NodeStatus>,
    heap: IndexedMinHeap,
    fans: Vec<FanEntry>,
    selector: Selector,
    stats: SolveStats,
    /// Largest accepted value so far and the slack below it that counts as a drop; only
    /// set when fans can appear mid-march.
    front: Option<(f64, f64)>,
}

impl Marcher<'_> {
    #[inline]
    fn factor_for(&self, x: Point, idx: usize) -> &FactorFunction {
        match &self.selector {
            Selector::Zero => &FactorFunction::Zero,
            Selector::Global(f) => f,
            Selector::Fans => choose_factor(x, self.world.class(idx), &self.fans),
            Selector::Switching {
                before,
                after,
                switched,
                ..
            } => {
                if *switched {
                    after
                } else {
                    before
                }
            }
        }
    }

    /// Recomputes `idx` from its Accepted neighbors; returns the candidate value.
    fn update(&mut self, idx: usize) -> Option<f64> {
        let grid = self.grid;
        let [l, r, d, up] = grid.neighbors(idx);
        let usable = |n: Option<usize>| {
            n.filter(|&n| {
                self.status[n] == NodeStatus::Accepted && !self.world.edge_blocked(idx, n)
            })
        };
        let (l, r, d, up) = (usable(l), usable(r), usable(d), usable(up));
        if l.is_none() && r.is_none() && d.is_none() && up.is_none() {
            return None;
        }
        let x = grid.node_point(idx);
        let f = self.speeds[idx];
        let h = grid.h();
        let factor = self.factor_for(x, idx);
        let result = if factor.is_zero() {
            let pick = |a: Option<usize>, b: Option<usize>| match (a, b) {
                (Some(a), Some(b)) => Some(self.u[a].min(self.u[b])),
                (a, b) => a.or(b).map(|n| self.u[n]),
            };
            unfactored_update(pick(l, r), pick(d, up), h, f)
        } else {
            let (t_node, grad) = eval_factor(factor, x);
            let nb = |n: Option<usize>| {
                n.map(|n| AxisNeighbor::new(self.u[n], factor.value(grid.node_point(n))))
            };
            let data = NeighborData {
                left: nb(l),
                right: nb(r),
                down: nb(d),
                up: nb(up),
            };
            factored_update(&data, grad, t_node, h, f)
        };
        self.stats.updates += 1;
        result.ok().map(|r| r.value)
    }

    fn relax_neighbors(&mut self, node: usize) {
        for n in self.grid.neighbors(node).into_iter().flatten() {
            match self.status[n] {
                NodeStatus::Accepted | NodeStatus::Excluded => continue,
                _ => {}
            }
            if self.world.edge_blocked(node, n) {
                continue;
            }
            if let Some(mut v) = self.update(n) {
                if let Some((front, tol)) = self.front {
                    if v < front - tol * front.abs().max(1.0) {
                        v = front;
                        self.stats.front_clamps += 1;
                    }
                }
                if v < self.u[n] {
                    self.u[n] = v;
                    self.status[n] = NodeStatus::Considered;
                    self.heap.push_or_decrease(n, v);
                }
            }
        }
    }

    fn examine_corner(&mut self, node: usize, kind: CornerFactorKind, radius: f64) -> Result<()> {
        let Some(candidate) = self.world.corner_candidate_at(node).copied() else {
            return Ok(());
        };
        if self.u[node] == 0.0 {
            return Ok(());
        }
        let a = approximate_characteristic_direction(self.world, &self.u, &self.status, node)?;
        let permeability = self.world.obstacles()[candidate.obstacle].permeability;
        let verdict =
            detect_rarefying_corner(&candidate, a, permeability, self.speeds[node], kind)?;
        match verdict {
            CornerVerdict::Regular => self.stats.regular_corners += 1,
            CornerVerdict::Rarefying(factor) => {
                debug!("fan at {} with a = {a}", candidate.point);
                let snell = match &factor {
                    FactorFunction::ConeTwoPlanes(f) => Some(f.angles),
                    _ => None,
                };
                self.fans.push(FanEntry {
                    center: candidate.point,
                    factor,
                    radius,
                    obstacle: Some(candidate.obstacle),
                    direction: Some(a),
                    snell,
                });
            }
        }
        Ok(())
    }
}

/// Solves the eikonal equation on `world` with the configured method.
pub fn fmm_solve(
    world: &ObstacleWorld,
    speed: &SpeedField,
    sources: &SourceSet,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let grid = world.grid();
    config.validate(grid)?;
    let speeds = speed.node_speeds(world)?;
    let n = grid.len();

    let source_cones: Vec<(Point, f64)> = sources
        .points()
        .iter()
        .zip(sources.nodes())
        .map(|(&p, &i)| (p, speeds[i]))
        .collect();
    let source_factor = || match source_cones.as_slice() {
        [(p, s)] => FactorFunction::cone(*p, *s),
        many => FactorFunction::MinOfCones(many.to_vec()),
    };

    let mut fans = Vec::new();
    let selector = match &config.method {
        Method::Original => Selector::Zero,
        Method::GlobalStatic(f) if f.is_zero() => Selector::Zero,
        Method::GlobalStatic(f) => Selector::Global(f.clone()),
        Method::LocalizedStatic(list) => {
            fans = list.clone();
            Selector::Fans
        }
        Method::SwitchingCones { corner } => {
            let idx = grid.locate(*corner).ok_or_else(|| {
                Error::InvalidConfig(format!("switching corner {corner} is not a grid node"))
            })?;
            if world.is_excluded(idx) {
                return Err(Error::InvalidConfig(format!(
                    "switching corner {corner} is inside an obstacle"
                )));
            }
            Selector::Switching {
                before: source_factor(),
                after: FactorFunction::cone(*corner, speeds[idx]),
                corner: idx,
                switched: false,
            }
        }
        Method::JustInTime { radius, .. } => {
            fans = source_cones
                .iter()
                .map(|&(p, s)| FanEntry::point_source(p, s, *radius))
                .collect();
            Selector::Fans
        }
    };

    let status = (0..n)
        .map(|i| {
            if world.is_excluded(i) {
                NodeStatus::Excluded
            } else {
                NodeStatus::Far
            }
        })
        .collect();
    let init = initialize_sources(world, speed, &speeds, sources, config.ball)?;
    let mut m = Marcher {
        grid,
        world,
        speeds,
        u: vec![f64::INFINITY; n],
        status,
        heap: IndexedMinHeap::new(n),
        fans,
        selector,
        stats: SolveStats::default(),
        front: None,
    };
    let mut order = Vec::with_capacity(n);

    for &(idx, v) in &init.considered {
        m.u[idx] = v;
        m.status[idx] = NodeStatus::Considered;
        m.heap.push_or_decrease(idx, v);
    }
    for &(idx, v) in &init.accepted {
        m.u[idx] = v;
        m.status[idx] = NodeStatus::Accepted;
        order.push(idx);
    }
    for &(idx, _) in &init.accepted {
        m.relax_neighbors(idx);
    }

    let jit = match config.method {
        Method::JustInTime {
            radius,
            corner_factor,
        } => Some((corner_factor, radius)),
        _ => None,
    };
    let mut last = f64::NEG_INFINITY;
    while let Some((value, node)) = m.heap.pop() {
        if value < last - config.causality_tol * last.abs().max(1.0) {
            if config.strict_causality {
                return Err(Error::CausalityViolation {
                    node,
                    value,
                    previous: last,
                });
            }
            m.stats.causality_violations += 1;
        }
        last = last.max(value);
        if jit.is_some() {
            m.front = Some((last, config.causality_tol));
        }
        m.status[node] = NodeStatus::Accepted;
        order.push(node);
        if let Some((kind, radius)) = jit {
            m.examine_corner(node, kind, radius)?;
        }
        if let Selector::Switching {
            corner, switched, ..
        } = &mut m.selector
        {
            if node == *corner {
                *switched = true;
            }
        }
        m.relax_neighbors(node);
    }

    m.stats.accepted = order.len();
    m.stats.heap_peak = m.heap.peak();
    m.stats.unreachable = m.status.iter().filter(|s| **s == NodeStatus::Far).count();
    if m.stats.causality_violations > 0 {
        debug!("{} out-of-order acceptances", m.stats.causality_violations);
    }
    if m.stats.unreachable > 0 {
        warn!("{} nodes are unreachable", m.stats.unreachable);
    }
    Ok(SolveResult {
        grid: grid.clone(),
        u: m.u,
        accepted_order: order,
        fans: m.fans,
        stats: m.stats,
    })
}
