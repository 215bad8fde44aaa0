//! Optimal trajectories by descending the interpolated gradient of a solved field.

use crate::domain::{Grid2D, NodeClass, ObstacleWorld, RectObstacle};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    ReachedSource,
    MaxSteps,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
    pub length: f64,
    pub status: TrajectoryStatus,
    /// Largest increase of the interpolated value over one step.
    pub max_rise: f64,
}

/// Integrator settings; `None` means "derive from h" (step 0.5h, capture radius h).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub step: Option<f64>,
    pub capture: Option<f64>,
    pub max_steps: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            step: None,
            capture: None,
            max_steps: 100_000,
        }
    }
}

/// Gradient at node `idx`: central differences where both neighbors are usable, one-sided
/// otherwise. `None` when `u` is infinite there.
fn node_gradient(u: &[f64], grid: &Grid2D, world: &ObstacleWorld, idx: usize) -> Option<Vec2> {
    let c = u[idx];
    if !c.is_finite() {
        return None;
    }
    let h = grid.h();
    let usable = |n: Option<usize>| {
        n.filter(|&n| u[n].is_finite() && !world.edge_blocked(idx, n))
            .map(|n| u[n])
    };
    let [l, r, d, up] = grid.neighbors(idx);
    let diff = |lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
        (Some(a), Some(b)) => (b - a) / (2.0 * h),
        (Some(a), None) => (c - a) / h,
        (None, Some(b)) => (b - c) / h,
        (None, None) => 0.0,
    };
    Some(Vec2::new(
        diff(usable(l), usable(r)),
        diff(usable(d), usable(up)),
    ))
}

/// Lower-left node of the cell holding `p`, and the offsets inside it.
fn cell_of(grid: &Grid2D, p: Point) -> (usize, usize, f64, f64) {
    let (fx, fy) = grid.fractional(p);
    let i = (fx.floor().max(0.0) as usize).min(grid.nx().saturating_sub(2));
    let j = (fy.floor().max(0.0) as usize).min(grid.ny().saturating_sub(2));
    (
        i,
        j,
        (fx - i as f64).clamp(0.0, 1.0),
        (fy - j as f64).clamp(0.0, 1.0),
    )
}

/// Blends per-corner samples bilinearly, or by inverse distance over the available corners
/// when some are missing.
fn blend<T, F>(grid: &Grid2D, p: Point, mut sample: F, zero: T) -> Option<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: FnMut(usize) -> Option<T>,
{
    let (i, j, tx, ty) = cell_of(grid, p);
    let corners = [
        (i, j, 0.0, 0.0),
        (i + 1, j, 1.0, 0.0),
        (i, j + 1, 0.0, 1.0),
        (i + 1, j + 1, 1.0, 1.0),
    ];
    let values: Vec<(Option<T>, f64, f64)> = corners
        .iter()
        .map(|&(ci, cj, ox, oy)| (sample(grid.index(ci, cj)), ox, oy))
        .collect();
    if values.iter().all(|v| v.0.is_some()) {
        let mut acc = zero;
        for &(v, ox, oy) in &values {
            let w =
                (if ox == 0.0 { 1.0 - tx } else { tx }) * (if oy == 0.0 { 1.0 - ty } else { ty });
            acc = acc + v.unwrap() * w;
        }
        return Some(acc);
    }
    let mut acc = zero;
    let mut total = 0.0;
    for &(v, ox, oy) in &values {
        let Some(v) = v else { continue };
        let dist = ((tx - ox).powi(2) + (ty - oy).powi(2)).sqrt();
        if dist < 1e-12 {
            return Some(v);
        }
        acc = acc + v * (1.0 / dist);
        total += 1.0 / dist;
    }
    (total > 0.0).then(|| acc * (1.0 / total))
}

/// Interpolated gradient of `u` at `p`.
pub fn interpolate_gradient(
    u: &[f64],
    grid: &Grid2D,
    world: &ObstacleWorld,
    p: Point,
) -> Result<Vec2> {
    if !grid.contains(p) {
        return Err(Error::OutOfDomain(p));
    }
    blend(
        grid,
        p,
        |idx| node_gradient(u, grid, world, idx),
        Vec2::ZERO,
    )
    .ok_or_else(|| Error::Trajectory(format!("all cell corners around {p} are infinite")))
}

/// Interpolated value of `u` at `p`, with the same corner rules as the gradient.
pub fn interpolate_value(u: &[f64], grid: &Grid2D, p: Point) -> Option<f64> {
    if !grid.contains(p) {
        return None;
    }
    blend(grid, p, |idx| u[idx].is_finite().then(|| u[idx]), 0.0)
}

/// Pulls `to` out of every non-permeable rectangle by dropping the normal component through
/// the face crossed on the way from `from`.
fn project_out(from: Point, mut to: Point, obstacles: &[RectObstacle]) -> Point {
    for _ in 0..4 {
        let Some(o) = obstacles
            .iter()
            .find(|o| !o.is_permeable() && o.contains_open(to, 0.0))
        else {
            break;
        };
        // entry face: the one whose slab is left last along from -> to
        let d = to - from;
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (axis, (lo, hi, s, v)) in [(o.lo.x, o.hi.x, from.x, d.x), (o.lo.y, o.hi.y, from.y, d.y)]
            .into_iter()
            .enumerate()
        {
            if v == 0.0 {
                continue;
            }
            let t = if v > 0.0 { (lo - s) / v } else { (hi - s) / v };
            if t > best.0 {
                best = (t, axis);
            }
        }
        if best.0 == f64::NEG_INFINITY {
            break;
        }
        if best.1 == 0 {
            to.x = if d.x > 0.0 { o.lo.x } else { o.hi.x };
        } else {
            to.y = if d.y > 0.0 { o.lo.y } else { o.hi.y };
        }
    }
    to
}

/// Follows `-∇u` from `start` with midpoint steps until a source is within the capture radius.
pub fn extract_trajectory(
    u: &[f64],
    grid: &Grid2D,
    world: &ObstacleWorld,
    start: Point,
    sources: &[Point],
    options: TrajectoryOptions,
) -> Result<Trajectory> {
    if u.len() != grid.len() {
        return Err(Error::Trajectory(format!(
            "field has {} values for {} nodes",
            u.len(),
            grid.len()
        )));
    }
    if sources.is_empty() {
        return Err(Error::Trajectory("no sources to descend to".into()));
    }
    if let NodeClass::Interior(id) = world.point_in_obstacles(start)? {
        if !world.obstacles()[id].is_permeable() {
            return Err(Error::Trajectory(format!(
                "start {start} is inside obstacle {id}"
            )));
        }
    }
    let h = grid.h();
    let step = options.step.unwrap_or(0.5 * h);
    let capture = options.capture.unwrap_or(h);
    if !(step > 0.0 && capture >= 0.0) {
        return Err(Error::Trajectory(format!(
            "bad step {step} or capture radius {capture}"
        )));
    }
    let lo = grid.origin();
    let hi = grid.max_corner();
    let clamp = |p: Point| Point::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
    let obstacles = world.obstacles();
    let direction = |p: Point| -> Result<Option<Vec2>> {
        let g = interpolate_gradient(u, grid, world, p)?;
        Ok(if g.norm() < 1e-12 {
            None
        } else {
            Some(-g * (1.0 / g.norm()))
        })
    };
    let captured = |p: Point| sources.iter().copied().find(|s| s.distance(p) <= capture);

    let mut points = vec![start];
    let mut length = 0.0;
    let mut max_rise = 0.0f64;
    let mut x = start;
    let mut ux = interpolate_value(u, grid, x)
        .ok_or_else(|| Error::Trajectory(format!("no finite value near start {start}")))?;
    let mut status = TrajectoryStatus::MaxSteps;
    for _ in 0..options.max_steps {
        if let Some(s) = captured(x) {
            length += x.distance(s);
            points.push(s);
            status = TrajectoryStatus::ReachedSource;
            break;
        }
        let Some(k1) = direction(x)? else {
            status = TrajectoryStatus::Stalled;
            break;
        };
        let mid = project_out(x, clamp(x + k1 * (0.5 * step)), obstacles);
        let Some(k2) = direction(mid)? else {
            status = TrajectoryStatus::Stalled;
            break;
        };
        let next = project_out(x, clamp(x + k2 * step), obstacles);
        let moved = x.distance(next);
        if moved < 1e-3 * step {
            status = TrajectoryStatus::Stalled;
            break;
        }
        if let Some(un) = interpolate_value(u, grid, next) {
            max_rise = max_rise.max(un - ux);
            ux = un;
        }
        length += moved;
        points.push(next);
        x = next;
    }
    Ok(Trajectory {
        points,
        length,
        status,
        max_rise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Problem;
    use crate::domain::SpeedField;
    use crate::solver::{fmm_solve, Method, SolverConfig};

    fn unit_grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 1.0 / (n - 1) as f64, Point::ZERO).unwrap()
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = unit_grid(11);
        let w = ObstacleWorld::empty(&g);
        let u: Vec<f64> = (0..g.len()).map(|i| g.node_point(i).x).collect();
        for p in [
            Point::new(0.33, 0.71),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.5),
        ] {
            let d = interpolate_gradient(&u, &g, &w, p).unwrap();
            assert!((d.x - 1.0).abs() < 1e-12 && d.y.abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn gradient_of_cone_away_from_apex() {
        let g = unit_grid(201);
        let w = ObstacleWorld::empty(&g);
        let u: Vec<f64> = (0..g.len()).map(|i| g.node_point(i).norm()).collect();
        let d = interpolate_gradient(&u, &g, &w, Point::new(0.5, 0.0)).unwrap();
        assert!(
            (d.x - 1.0).abs() < 2.0 * g.h() && d.y.abs() < 2.0 * g.h(),
            "{d:?}"
        );
    }

    #[test]
    fn infinite_corner_is_skipped() {
        let g = unit_grid(3);
        let w = ObstacleWorld::empty(&g);
        let mut u: Vec<f64> = (0..g.len()).map(|i| g.node_point(i).x).collect();
        u[g.index(1, 1)] = f64::INFINITY;
        let d = interpolate_gradient(&u, &g, &w, Point::new(0.25, 0.25)).unwrap();
        assert!(d.is_finite());
        let all_inf = vec![f64::INFINITY; g.len()];
        assert!(interpolate_gradient(&all_inf, &g, &w, Point::new(0.25, 0.25)).is_err());
    }

    #[test]
    fn straight_path_to_source() {
        let p = Problem {
            min: Point::ZERO,
            max: Point::new(1.0, 1.0),
            obstacles: vec![],
            speed: SpeedField::Constant(1.0),
            sources: vec![Point::ZERO],
        };
        let d = p.discretize(1.0 / 200.0).unwrap();
        let cone = crate::factor::FactorFunction::cone(Point::ZERO, 1.0);
        let r = fmm_solve(
            &d.world,
            &d.speed,
            &d.sources,
            &SolverConfig::new(Method::GlobalStatic(cone)),
        )
        .unwrap();
        let t = extract_trajectory(
            &r.u,
            &d.grid,
            &d.world,
            Point::new(0.5, 0.5),
            &[Point::ZERO],
            Default::default(),
        )
        .unwrap();
        assert_eq!(t.status, TrajectoryStatus::ReachedSource);
        assert!(
            (t.length - 0.5f64.sqrt()).abs() < 0.01 * 0.5f64.sqrt(),
            "{}",
            t.length
        );
        let near = extract_trajectory(
            &r.u,
            &d.grid,
            &d.world,
            Point::new(0.001, 0.0),
            &[Point::ZERO],
            Default::default(),
        )
        .unwrap();
        assert_eq!(near.status, TrajectoryStatus::ReachedSource);
        assert!(near.length < 0.002);
    }

    #[test]
    fn projection_stays_outside() {
        let o = RectObstacle::non_permeable(Point::new(0.2, 0.2), Point::new(0.4, 0.4));
        let q = project_out(Point::new(0.1, 0.3), Point::new(0.25, 0.31), &[o]);
        assert_eq!(q, Point::new(0.2, 0.31));
    }
}
