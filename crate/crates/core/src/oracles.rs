//! Reference solutions: the closed-form linear-speed solution, straight-ray travel
//! times, and exact obstacle-avoiding distances for unit speed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::domain::{ObstacleWorld, RectObstacle, SpeedField};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec2};

/// Point source in the speed field `F(x) = 1/s0 + v · (x - x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSpeedProblem {
    pub x0: Point,
    pub s0: f64,
    pub v: Vec2,
}

impl LinearSpeedProblem {
    pub fn new(x0: Point, s0: f64, v: Vec2) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) || !v.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidSpeed(format!(
                "bad linear speed parameters s0={s0}, v={v}"
            )));
        }
        Ok(Self { x0, s0, v })
    }

    /// The same linear field re-centered at `source`.
    pub fn recentered(&self, source: Point) -> Result<Self> {
        let f = self.speed(source);
        if !(f > 0.0) {
            return Err(Error::NonPositiveSpeed {
                value: f,
                at: source,
            });
        }
        Self::new(source, 1.0 / f, self.v)
    }

    /// Problem for a `SpeedField::Linear` and a source point.
    pub fn from_field(field: &SpeedField, source: Point) -> Result<Self> {
        match field.base() {
            SpeedField::Linear { s0, v, x0 } => Self::new(*x0, *s0, *v)?.recentered(source),
            SpeedField::Constant(c) => Self::new(source, 1.0 / c, Vec2::ZERO),
            other => Err(Error::InvalidSpeed(format!("no closed form for {other:?}"))),
        }
    }

    #[inline]
    pub fn speed(&self, x: Point) -> f64 {
        1.0 / self.s0 + self.v.dot(x - self.x0)
    }

    /// Exact travel time from `x0` to `x`.
    pub fn eval(&self, x: Point) -> f64 {
        let r2 = (x - self.x0).norm_sq();
        let vn = self.v.norm();
        if vn < 1e-14 {
            return self.s0 * r2.sqrt();
        }
        let eps = (0.5 * self.s0 * vn * vn * r2 / self.speed(x)).max(0.0);
        // acosh(1 + eps) without cancellation
        (eps + (eps * (2.0 + eps)).sqrt()).ln_1p() / vn
    }
}

/// Closed-form linear-speed solution.
pub fn eval_linear_speed_solution(p: &LinearSpeedProblem, x: Point) -> f64 {
    p.eval(x)
}

/// Travel time along the straight segment from `x0` to `x`: `∫ |x - x0| / F` by adaptive
/// Simpson quadrature.
pub fn line_integrated_time(x0: Point, x: Point, speed: &SpeedField) -> Result<f64> {
    let len = (x - x0).norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let d = x - x0;
    let f = |t: f64| -> Result<f64> { Ok(len / speed.eval(x0 + d * t, None)?) };
    let (fa, fm, fb) = (f(0.0)?, f(0.5)?, f(1.0)?);
    let whole = (fa + 4.0 * fm + fb) / 6.0;
    simpson(&f, 0.0, 1.0, fa, fm, fb, whole, 1e-12, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Whether the open segment `p`-`q` passes through the interior of `r` (shrunk by `eps`).
fn segment_hits_open_rect(p: Point, q: Point, r: &RectObstacle, eps: f64) -> bool {
    let (lo, hi) = (r.lo + Vec2::new(eps, eps), r.hi - Vec2::new(eps, eps));
    let d = q - p;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (start, delta, min, max) in [(p.x, d.x, lo.x, hi.x), (p.y, d.y, lo.y, hi.y)] {
        if delta == 0.0 {
            if start <= min || start >= max {
                return false;
            }
            continue;
        }
        let (mut a, mut b) = ((min - start) / delta, (max - start) / delta);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 >= t1 {
            return false;
        }
    }
    t1 - t0 > 1e-12
}

#[derive(Debug, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact shortest obstacle-avoiding distance for unit speed, via a visibility graph over
/// the sources and obstacle corners. Paths may touch obstacle boundaries.
#[derive(Debug, Clone)]
pub struct VisibilityOracle {
    obstacles: Vec<RectObstacle>,
    vertices: Vec<Point>,
    dist: Vec<f64>,
    eps: f64,
}

impl VisibilityOracle {
    /// Builds the oracle; permeable obstacles are rejected since their speed is not 1.
    pub fn new(
        sources: &[Point],
        obstacles: &[RectObstacle],
        min: Point,
        max: Point,
    ) -> Result<Self> {
        if let Some(i) = obstacles.iter().position(RectObstacle::is_permeable) {
            return Err(Error::InvalidObstacle {
                index: i,
                reason: "visibility distances need non-permeable obstacles".into(),
            });
        }
        let eps = 1e-10;
        let obstacles = obstacles.to_vec();
        let inside_any = |p: Point| obstacles.iter().any(|o| o.contains_open(p, eps));
        let n_src = sources.len();
        let mut vertices: Vec<Point> = sources.to_vec();
        for o in &obstacles {
            for c in o.corners() {
                let in_box = c.x >= min.x - eps
                    && c.x <= max.x + eps
                    && c.y >= min.y - eps
                    && c.y <= max.y + eps;
                if in_box && !inside_any(c) && !vertices.iter().any(|v| v.distance(c) < eps) {
                    vertices.push(c);
                }
            }
        }
        let mut oracle = Self {
            obstacles,
            vertices,
            dist: Vec::new(),
            eps,
        };
        let n = oracle.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for (s, d) in dist.iter_mut().enumerate().take(n_src) {
            *d = 0.0;
            heap.push(HeapItem(0.0, s));
        }
        while let Some(HeapItem(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            let from = oracle.vertices[v];
            for (w, (&to, dw)) in oracle.vertices.iter().zip(dist.iter_mut()).enumerate() {
                if w == v {
                    continue;
                }
                let nd = d + from.distance(to);
                if nd < *dw && oracle.visible(from, to) {
                    *dw = nd;
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        oracle.dist = dist;
        Ok(oracle)
    }

    /// Convenience constructor from an [`ObstacleWorld`].
    pub fn from_world(sources: &[Point], world: &ObstacleWorld) -> Result<Self> {
        Self::new(
            sources,
            world.obstacles(),
            world.grid().origin(),
            world.grid().max_corner(),
        )
    }

    pub fn visible(&self, p: Point, q: Point) -> bool {
        !self
            .obstacles
            .iter()
            .any(|o| segment_hits_open_rect(p, q, o, self.eps))
    }

    /// Graph vertices (sources first, then admissible corners) and their distances.
    pub fn vertices(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.vertices.iter().copied().zip(self.dist.iter().copied())
    }

    /// Shortest admissible distance from `x` to the nearest source; `+∞` inside an obstacle.
    pub fn distance(&self, x: Point) -> f64 {
        if self.obstacles.iter().any(|o| o.contains_open(x, self.eps)) {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for (v, d) in self.vertices() {
            let cand = d + x.distance(v);
            if cand < best && self.visible(x, v) {
                best = cand;
            }
        }
        best
    }
}

/// One-shot visibility distance from `x` to `sources`.
pub fn visibility_distance(x: Point, sources: &[Point], world: &ObstacleWorld) -> Result<f64> {
    Ok(VisibilityOracle::from_world(sources, world)?.distance(x))
}
