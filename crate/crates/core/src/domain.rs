//! Computational domain: the grid, rectangular obstacles, speed fields and sources.
//!
//! Obstacles are open, axis-aligned rectangles whose corners sit on grid nodes. Their
//! boundary belongs to the domain, so trajectories may slide along walls. A node is
//! classified by looking at its four incident grid cells (quadrants): all four inside
//! the obstacle union makes it `Interior`, some makes it `Boundary`, none makes it `Free`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{Point, Vec2};

/// Relative tolerance (in units of `h`) for "this coordinate is a grid node".
pub const ALIGN_TOL: f64 = 1e-9;

/// Uniform Cartesian grid; node `(i, j)` sits at `origin + (i h, j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
    origin: Point,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, h: f64, origin: Point) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes per axis, got {nx}x{ny}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx, ny, h, origin })
    }

    /// Grid covering the rectangle `[min, max]` with spacing `h`; both extents must be
    /// integer multiples of `h`.
    pub fn from_bounds(min: Point, max: Point, h: f64) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) {
            return Err(Error::InvalidGrid(format!("empty domain {min} .. {max}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let cells = |len: f64| -> Result<usize> {
            let n = (len / h).round();
            if (n * h - len).abs() > 1e-6 * h || n < 1.0 {
                return Err(Error::InvalidGrid(format!(
                    "extent {len} is not a multiple of h = {h}"
                )));
            }
            Ok(n as usize)
        };
        let nx = cells(max.x - min.x)? + 1;
        let ny = cells(max.y - min.y)? + 1;
        Self::new(nx, ny, h, min)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Coordinates of the last node.
    pub fn max_corner(&self) -> Point {
        self.point(self.nx - 1, self.ny - 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    #[inline]
    pub fn node_point(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        self.point(i, j)
    }

    /// Fractional grid coordinates of `p`.
    #[inline]
    pub fn fractional(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.h,
            (p.y - self.origin.y) / self.h,
        )
    }

    /// Index of the node coinciding with `p` (within `ALIGN_TOL * h`).
    pub fn locate(&self, p: Point) -> Option<usize> {
        let (fx, fy) = self.fractional(p);
        let (ri, rj) = (fx.round(), fy.round());
        if (fx - ri).abs() > ALIGN_TOL || (fy - rj).abs() > ALIGN_TOL {
            return None;
        }
        if ri < 0.0 || rj < 0.0 || ri >= self.nx as f64 || rj >= self.ny as f64 {
            return None;
        }
        Some(self.index(ri as usize, rj as usize))
    }

    /// Whether `p` lies in the closed bounding box of the grid.
    pub fn contains(&self, p: Point) -> bool {
        let tol = ALIGN_TOL * self.h;
        let hi = self.max_corner();
        p.x >= self.origin.x - tol
            && p.x <= hi.x + tol
            && p.y >= self.origin.y - tol
            && p.y <= hi.y + tol
    }

    /// The (up to) four axis neighbors of `idx` as `[left, right, down, up]`.
    #[inline]
    pub fn neighbors(&self, idx: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(idx);
        [
            (i > 0).then(|| idx - 1),
            (i + 1 < self.nx).then(|| idx + 1),
            (j > 0).then(|| idx - self.nx),
            (j + 1 < self.ny).then(|| idx + self.nx),
        ]
    }

    /// Whether `coarse` is obtained from `self` by keeping every `k`-th node; returns `k`.
    pub fn nesting_ratio(&self, coarse: &Grid2D) -> Option<usize> {
        let ratio = coarse.h / self.h;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-6 {
            return None;
        }
        let k = k as usize;
        let same_origin = (self.origin - coarse.origin).norm() <= ALIGN_TOL * self.h;
        let fits = (coarse.nx - 1) * k == self.nx - 1 && (coarse.ny - 1) * k == self.ny - 1;
        (same_origin && fits).then_some(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permeability {
    NonPermeable,
    /// Slowly permeable: motion inside the obstacle has the given (positive) speed.
    Permeable(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectObstacle {
    pub lo: Point,
    pub hi: Point,
    pub permeability: Permeability,
}

impl RectObstacle {
    pub fn new(lo: Point, hi: Point, permeability: Permeability) -> Self {
        Self {
            lo,
            hi,
            permeability,
        }
    }

    pub fn non_permeable(lo: Point, hi: Point) -> Self {
        Self::new(lo, hi, Permeability::NonPermeable)
    }

    pub fn permeable(lo: Point, hi: Point, speed: f64) -> Self {
        Self::new(lo, hi, Permeability::Permeable(speed))
    }

    pub fn is_permeable(&self) -> bool {
        matches!(self.permeability, Permeability::Permeable(_))
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.lo,
            Point::new(self.hi.x, self.lo.y),
            self.hi,
            Point::new(self.lo.x, self.hi.y),
        ]
    }

    /// Strict containment, shrunk by `eps` on every side.
    pub fn contains_open(&self, p: Point, eps: f64) -> bool {
        p.x > self.lo.x + eps
            && p.x < self.hi.x - eps
            && p.y > self.lo.y + eps
            && p.y < self.hi.y - eps
    }

    /// Containment in the closure, grown by `eps`.
    pub fn contains_closed(&self, p: Point, eps: f64) -> bool {
        p.x >= self.lo.x - eps
            && p.x <= self.hi.x + eps
            && p.y >= self.lo.y - eps
            && p.y <= self.hi.y + eps
    }

    fn validate(&self, index: usize) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidObstacle {
                index,
                reason: "non-finite coordinates".into(),
            });
        }
        if !(self.lo.x < self.hi.x && self.lo.y < self.hi.y) {
            return Err(Error::InvalidObstacle {
                index,
                reason: format!("lo {} must be strictly below hi {}", self.lo, self.hi),
            });
        }
        if let Permeability::Permeable(f) = self.permeability {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidObstacle {
                    index,
                    reason: format!("permeable speed must be positive, got {f}"),
                });
            }
        }
        Ok(())
    }
}

/// Classification of a point relative to the obstacle union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Free,
    Boundary,
    Interior(usize),
}

/// Quadrant of the plane around a node, counterclockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    NorthEast,
    NorthWest,
    SouthWest,
    SouthEast,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::NorthEast,
        Quadrant::NorthWest,
        Quadrant::SouthWest,
        Quadrant::SouthEast,
    ];

    /// Angular sector `[start, end]` (counterclockwise, radians).
    pub fn sector(self) -> (f64, f64) {
        match self {
            Quadrant::NorthEast => (0.0, FRAC_PI_2),
            Quadrant::NorthWest => (FRAC_PI_2, PI),
            Quadrant::SouthWest => (PI, 1.5 * PI),
            Quadrant::SouthEast => (1.5 * PI, TAU),
        }
    }

    /// Offset `(di, dj)` from a node to the lower-left node of the cell in this quadrant.
    fn cell_offset(self) -> (i64, i64) {
        match self {
            Quadrant::NorthEast => (0, 0),
            Quadrant::NorthWest => (-1, 0),
            Quadrant::SouthWest => (-1, -1),
            Quadrant::SouthEast => (0, -1),
        }
    }
}

/// Obstacle corner at which the free domain has interior angle 3π/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerCandidate {
    pub node: usize,
    pub point: Point,
    pub obstacle: usize,
    pub quadrant: Quadrant,
}

impl CornerCandidate {
    /// Angular sector `[θ1, θ2]` occupied by the obstacle at this node.
    pub fn sector(&self) -> (f64, f64) {
        self.quadrant.sector()
    }
}

#[derive(Debug, Clone, Copy)]
struct IndexRect {
    ilo: i64,
    ihi: i64,
    jlo: i64,
    jhi: i64,
}

/// Obstacles rasterized onto a grid.
#[derive(Debug, Clone)]
pub struct ObstacleWorld {
    grid: Grid2D,
    obstacles: Vec<RectObstacle>,
    index_rects: Vec<IndexRect>,
    /// Owner (`id + 1`, 0 when free) of every cell with lower-left node in
    /// `[-1, nx-1] x [-1, ny-1]`.
    cells: Vec<u32>,
    mask: Vec<NodeClass>,
    /// Per node, bit `k` set when the edge to neighbor `k` of `[left, right, down, up]` is
    /// blocked. Empty when no obstacle is non-permeable.
    blocked: Vec<u8>,
    /// Sorted by node.
    corner_candidates: Vec<CornerCandidate>,
}

impl ObstacleWorld {
    /// Rasterizes `obstacles` on `grid`. Corners must coincide with (possibly virtual,
    /// outside-the-domain) grid lines.
    pub fn new(grid: &Grid2D, obstacles: Vec<RectObstacle>) -> Result<Self> {
        let mut index_rects = Vec::with_capacity(obstacles.len());
        for (index, ob) in obstacles.iter().enumerate() {
            ob.validate(index)?;
            let snap = |p: Point| -> Result<(i64, i64)> {
                let (fx, fy) = grid.fractional(p);
                let (ri, rj) = (fx.round(), fy.round());
                if (fx - ri).abs() > ALIGN_TOL || (fy - rj).abs() > ALIGN_TOL {
                    return Err(Error::MisalignedObstacle { index, corner: p });
                }
                Ok((ri as i64, rj as i64))
            };
            let (ilo, jlo) = snap(ob.lo)?;
            let (ihi, jhi) = snap(ob.hi)?;
            index_rects.push(IndexRect { ilo, ihi, jlo, jhi });
        }

        let mut world = Self {
            grid: grid.clone(),
            obstacles,
            index_rects,
            cells: Vec::new(),
            mask: Vec::new(),
            blocked: Vec::new(),
            corner_candidates: Vec::new(),
        };
        world.cells = world.rasterize();
        world.mask = (0..grid.len())
            .map(|idx| world.classify_node(idx))
            .collect();
        world.corner_candidates = world.find_corner_candidates();
        if world.obstacles.iter().any(|o| !o.is_permeable()) {
            world.blocked = (0..grid.len())
                .map(|idx| {
                    grid.neighbors(idx)
                        .iter()
                        .enumerate()
                        .fold(0u8, |bits, (k, n)| match n {
                            Some(n) if world.edge_crosses_wall(idx, *n) => bits | (1 << k),
                            _ => bits,
                        })
                })
                .collect();
        }
        Ok(world)
    }

    /// A world with no obstacles.
    pub fn empty(grid: &Grid2D) -> Self {
        Self::new(grid, Vec::new()).expect("empty obstacle list is always valid")
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn obstacles(&self) -> &[RectObstacle] {
        &self.obstacles
    }

    pub fn mask(&self) -> &[NodeClass] {
        &self.mask
    }

    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        self.mask[idx]
    }

    pub fn corner_candidates(&self) -> &[CornerCandidate] {
        &self.corner_candidates
    }

    #[inline]
    pub fn corner_candidate_at(&self, idx: usize) -> Option<&CornerCandidate> {
        self.corner_candidates
            .binary_search_by_key(&idx, |c| c.node)
            .ok()
            .map(|k| &self.corner_candidates[k])
    }

    /// Whether the node lies strictly inside a non-permeable obstacle (and is not solved for).
    #[inline]
    pub fn is_excluded(&self, idx: usize) -> bool {
        match self.mask[idx] {
            NodeClass::Interior(id) => !self.obstacles[id].is_permeable(),
            _ => false,
        }
    }

    /// Id of the obstacle the node lies strictly inside, if any.
    #[inline]
    pub fn interior_obstacle(&self, idx: usize) -> Option<usize> {
        match self.mask[idx] {
            NodeClass::Interior(id) => Some(id),
            _ => None,
        }
    }

    /// Obstacle owning the grid cell whose lower-left node is `(ci, cj)`; the cell may lie
    /// outside the grid.
    fn rasterize(&self) -> Vec<u32> {
        let (w, hgt) = (self.grid.nx() as i64 + 1, self.grid.ny() as i64 + 1);
        let mut cells = vec![0u32; (w * hgt) as usize];
        // reverse order so the lowest id wins on overlaps
        for (id, r) in self.index_rects.iter().enumerate().rev() {
            let (i0, i1) = (r.ilo.max(-1), r.ihi.min(w - 1));
            let (j0, j1) = (r.jlo.max(-1), r.jhi.min(hgt - 1));
            for cj in j0..j1 {
                let row = ((cj + 1) * w) as usize;
                for ci in i0..i1 {
                    cells[row + (ci + 1) as usize] = id as u32 + 1;
                }
            }
        }
        cells
    }

    /// Obstacle owning the grid cell whose lower-left node is `(ci, cj)`.
    #[inline]
    fn cell_owner(&self, ci: i64, cj: i64) -> Option<usize> {
        let w = self.grid.nx() as i64 + 1;
        if ci < -1 || cj < -1 || ci >= w - 1 || cj >= self.grid.ny() as i64 {
            return self
                .index_rects
                .iter()
                .position(|r| ci >= r.ilo && ci < r.ihi && cj >= r.jlo && cj < r.jhi);
        }
        match self.cells[((cj + 1) * w + ci + 1) as usize] {
            0 => None,
            k => Some(k as usize - 1),
        }
    }

    fn quadrant_owners(&self, i: i64, j: i64) -> [Option<usize>; 4] {
        Quadrant::ALL.map(|q| {
            let (di, dj) = q.cell_offset();
            self.cell_owner(i + di, j + dj)
        })
    }

    fn classify_node(&self, idx: usize) -> NodeClass {
        if self.obstacles.is_empty() {
            return NodeClass::Free;
        }
        let (i, j) = self.grid.coords(idx);
        let (i, j) = (i as i64, j as i64);
        let owners = self.quadrant_owners(i, j);
        let blocked = owners.iter().filter(|o| o.is_some()).count();
        match blocked {
            0 => NodeClass::Free,
            4 => {
                let strict = self
                    .index_rects
                    .iter()
                    .position(|r| i > r.ilo && i < r.ihi && j > r.jlo && j < r.jhi);
                NodeClass::Interior(strict.or(owners[0]).expect("all quadrants owned"))
            }
            _ => NodeClass::Boundary,
        }
    }

    fn find_corner_candidates(&self) -> Vec<CornerCandidate> {
        let (nx, ny) = (self.grid.nx() as i64, self.grid.ny() as i64);
        let mut nodes: Vec<usize> = self
            .index_rects
            .iter()
            .flat_map(|r| {
                [
                    (r.ilo, r.jlo),
                    (r.ihi, r.jlo),
                    (r.ihi, r.jhi),
                    (r.ilo, r.jhi),
                ]
            })
            // all four quadrants must lie inside the domain
            .filter(|&(i, j)| i >= 1 && j >= 1 && i <= nx - 2 && j <= ny - 2)
            .map(|(i, j)| self.grid.index(i as usize, j as usize))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
            .into_iter()
            .filter_map(|node| {
                let (i, j) = self.grid.coords(node);
                let owners = self.quadrant_owners(i as i64, j as i64);
                let mut blocked = Quadrant::ALL
                    .iter()
                    .zip(owners)
                    .filter_map(|(q, o)| o.map(|id| (*q, id)));
                let (quadrant, obstacle) = blocked.next()?;
                if blocked.next().is_some() {
                    return None;
                }
                Some(CornerCandidate {
                    node,
                    point: self.grid.node_point(node),
                    obstacle,
                    quadrant,
                })
            })
            .collect()
    }

    /// Whether the grid edge between adjacent nodes `a` and `b` crosses the interior of a
    /// non-permeable obstacle (only possible for obstacles one cell thick).
    #[inline]
    pub fn edge_blocked(&self, a: usize, b: usize) -> bool {
        if self.blocked.is_empty() {
            return false;
        }
        let k = if b + 1 == a {
            0
        } else if b == a + 1 {
            1
        } else if b < a {
            2
        } else {
            3
        };
        self.blocked[a] & (1 << k) != 0
    }

    fn edge_crosses_wall(&self, a: usize, b: usize) -> bool {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (i, j) = self.grid.coords(lo);
        let (i, j) = (i as i64, j as i64);
        let cells = if hi == lo + 1 {
            [(i, j), (i, j - 1)]
        } else {
            [(i, j), (i - 1, j)]
        };
        cells.iter().all(|&(ci, cj)| {
            self.cell_owner(ci, cj)
                .is_some_and(|id| !self.obstacles[id].is_permeable())
        })
    }

    /// Whether a node participates in the solve.
    #[inline]
    pub fn in_domain(&self, idx: usize) -> bool {
        !self.is_excluded(idx)
    }

    /// Classifies an arbitrary point against the open obstacle rectangles.
    pub fn point_in_obstacles(&self, p: Point) -> Result<NodeClass> {
        point_in_obstacles(p, &self.obstacles, &self.grid)
    }
}

/// Classifies `p` against the union of open rectangles: `Interior` when strictly inside the
/// union, `Boundary` when on the closure of some rectangle, `Free` otherwise.
pub fn point_in_obstacles(
    p: Point,
    obstacles: &[RectObstacle],
    grid: &Grid2D,
) -> Result<NodeClass> {
    if !grid.contains(p) {
        return Err(Error::OutOfDomain(p));
    }
    let eps = ALIGN_TOL * grid.h();
    if let Some(id) = obstacles.iter().position(|o| o.contains_open(p, eps)) {
        return Ok(NodeClass::Interior(id));
    }
    if !obstacles.iter().any(|o| o.contains_closed(p, eps)) {
        return Ok(NodeClass::Free);
    }
    // on some boundary; still interior to the union if every side is covered
    let probe = 1e-6 * grid.h();
    let covered = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(sx, sy)| {
            let q = p + Vec2::new(sx * probe, sy * probe);
            obstacles.iter().position(|o| o.contains_open(q, 0.0))
        })
        .collect::<Vec<_>>();
    if covered.iter().all(Option::is_some) {
        Ok(NodeClass::Interior(covered[0].unwrap()))
    } else {
        Ok(NodeClass::Boundary)
    }
}

/// Side of a permeable-obstacle boundary from which the speed is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideHint {
    FreeSide,
    ObstacleSide,
}

/// Positive speed field `F(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpeedField {
    Constant(f64),
    /// `F(x) = 1/s0 + v · (x - x0)`.
    Linear {
        s0: f64,
        v: Vec2,
        x0: Point,
    },
    /// `F(x, y) = base + amp · sin(2πx) · sin(2πy)`.
    Sinusoidal {
        base: f64,
        amp: f64,
    },
    /// `base` outside, a constant speed inside each listed (open) rectangle.
    WithObstacles {
        base: Box<SpeedField>,
        regions: Vec<(RectObstacle, f64)>,
    },
}

impl SpeedField {
    /// Wraps `base` with the slow speeds of every permeable obstacle in `world`.
    pub fn with_obstacles(base: SpeedField, obstacles: &[RectObstacle]) -> Result<SpeedField> {
        let regions = obstacles
            .iter()
            .filter_map(|o| match o.permeability {
                Permeability::Permeable(f) => Some((*o, f)),
                Permeability::NonPermeable => None,
            })
            .collect::<Vec<_>>();
        if let Some((o, f)) = regions.iter().find(|(_, f)| !(*f > 0.0)) {
            return Err(Error::InvalidSpeed(format!(
                "obstacle at {} has non-positive speed {f}",
                o.lo
            )));
        }
        Ok(SpeedField::WithObstacles {
            base: Box::new(base),
            regions,
        })
    }

    /// The field without permeable-obstacle slowdowns.
    pub fn base(&self) -> &SpeedField {
        match self {
            SpeedField::WithObstacles { base, .. } => base.base(),
            other => other,
        }
    }

    fn raw(&self, p: Point, hint: Option<SideHint>) -> f64 {
        match self {
            SpeedField::Constant(c) => *c,
            SpeedField::Linear { s0, v, x0 } => 1.0 / s0 + v.dot(p - *x0),
            SpeedField::Sinusoidal { base, amp } => {
                base + amp * (TAU * p.x).sin() * (TAU * p.y).sin()
            }
            SpeedField::WithObstacles { base, regions } => {
                let eps = 1e-12 * (1.0 + p.norm());
                if let Some((_, f)) = regions.iter().find(|(o, _)| o.contains_open(p, eps)) {
                    return *f;
                }
                if hint == Some(SideHint::ObstacleSide) {
                    if let Some((_, f)) = regions.iter().find(|(o, _)| o.contains_closed(p, eps)) {
                        return *f;
                    }
                }
                base.raw(p, hint)
            }
        }
    }

    /// Speed at `p`. On a permeable-obstacle boundary the free-side value is returned
    /// unless `hint` asks for the obstacle side.
    pub fn eval(&self, p: Point, hint: Option<SideHint>) -> Result<f64> {
        let f = self.raw(p, hint);
        if f > 0.0 && f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonPositiveSpeed { value: f, at: p })
        }
    }

    /// Per-node speeds: permeable-obstacle interiors take the obstacle speed, excluded
    /// nodes are `NaN`. Fails if any solved node has a non-positive speed or if a
    /// permeable obstacle is not slower than the surrounding free speed.
    pub fn node_speeds(&self, world: &ObstacleWorld) -> Result<Vec<f64>> {
        let grid = world.grid();
        let mut speeds = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let p = grid.node_point(idx);
            let f = match world.class(idx) {
                NodeClass::Interior(id) => match world.obstacles()[id].permeability {
                    Permeability::NonPermeable => f64::NAN,
                    Permeability::Permeable(f_ob) => {
                        let free = self.base().eval(p, Some(SideHint::FreeSide))?;
                        if free / f_ob <= 1.0 {
                            return Err(Error::InvalidSpeed(format!(
                                "permeable obstacle {id} must be slower than the free speed \
                                 ({f_ob} vs {free} at {p})"
                            )));
                        }
                        f_ob
                    }
                },
                _ => self.eval(p, Some(SideHint::FreeSide))?,
            };
            speeds.push(f);
        }
        Ok(speeds)
    }
}

/// Source points, each coinciding with a node of the free domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    points: Vec<Point>,
    nodes: Vec<usize>,
}

impl SourceSet {
    pub fn new(points: Vec<Point>, world: &ObstacleWorld) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one source is required".into(),
            ));
        }
        let grid = world.grid();
        let mut nodes = Vec::with_capacity(points.len());
        for &p in &points {
            let idx = grid.locate(p).ok_or(Error::InvalidSource(p))?;
            if world.is_excluded(idx) {
                return Err(Error::SourceInObstacle(p));
            }
            if matches!(world.class(idx), NodeClass::Interior(_)) {
                return Err(Error::InvalidSource(p));
            }
            nodes.push(idx);
        }
        Ok(Self { points, nodes })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
}

/// Grid-independent problem description: domain box, obstacles, speed and sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub min: Point,
    pub max: Point,
    pub obstacles: Vec<RectObstacle>,
    pub speed: SpeedField,
    pub sources: Vec<Point>,
}

/// A [`Problem`] rasterized at one resolution.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Grid2D,
    pub world: ObstacleWorld,
    pub speed: SpeedField,
    pub sources: SourceSet,
}

impl Problem {
    pub fn discretize(&self, h: f64) -> Result<Discretization> {
        let grid = Grid2D::from_bounds(self.min, self.max, h)?;
        let world = ObstacleWorld::new(&grid, self.obstacles.clone())?;
        let speed = if self.obstacles.iter().any(RectObstacle::is_permeable) {
            SpeedField::with_obstacles(self.speed.base().clone(), &self.obstacles)?
        } else {
            self.speed.clone()
        };
        let sources = SourceSet::new(self.sources.clone(), &world)?;
        Ok(Discretization {
            grid,
            world,
            speed,
            sources,
        })
    }
}
