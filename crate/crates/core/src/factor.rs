//! Additive factors `T` and the Snell-law geometry used to build them at obstacle corners.
//!
//! Every branch of every factor is an exact constant-speed eikonal solution (a cone or a
//! plane), so `|∇T| F = 1` wherever `T` is differentiable.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::domain::Quadrant;
use crate::error::{Error, Result};
use crate::geometry::{ccw_angle, Point, Vec2};

/// Angular tolerance for "direction lies on a sector boundary".
pub const ANGLE_TOL: f64 = 1e-9;

/// Corner factor with one cone sector, split along `c` and `-a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConePlane {
    pub center: Point,
    /// Unit characteristic direction at the corner (pointing back toward the source).
    pub a: Vec2,
    /// Unit bisector of the obstacle corner.
    pub c: Vec2,
    pub speed: f64,
    /// Counterclockwise sector boundaries; sector 0 is the cone sector.
    pub bounds: [Vec2; 2],
}

impl ConePlane {
    pub fn in_cone_sector(&self, x: Point) -> bool {
        sector_classify(x, self.center, &self.bounds) == Some(0)
    }
}

/// Which formula a sector of a [`ConeTwoPlanes`] factor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPlaneBranch {
    Cone,
    PlaneB,
    PlaneA,
}

/// Corner factor for a slowly permeable obstacle: cone between `-a` and `-b`, plane
/// `-b` up to `+a`, plane `-a` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeTwoPlanes {
    pub center: Point,
    pub a: Vec2,
    /// Unit refracted direction; `-b` bounds the fan.
    pub b: Vec2,
    pub speed: f64,
    pub bounds: [Vec2; 3],
    pub branches: [TwoPlaneBranch; 3],
    pub angles: SnellAngles,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorFunction {
    Zero,
    Cone {
        center: Point,
        speed: f64,
    },
    ConePlane(ConePlane),
    ConeTwoPlanes(ConeTwoPlanes),
    /// Pointwise minimum of cones `(center, speed)`.
    MinOfCones(Vec<(Point, f64)>),
    /// Sum of cones `(center, speed)`.
    SumOfCones(Vec<(Point, f64)>),
}

#[inline]
fn cone(center: Point, speed: f64, x: Point) -> (f64, Vec2) {
    let d = x - center;
    let r = d.norm();
    if r == 0.0 {
        (0.0, Vec2::ZERO)
    } else {
        (r / speed, d / (r * speed))
    }
}

#[inline]
fn plane(center: Point, dir: Vec2, speed: f64, x: Point) -> (f64, Vec2) {
    (dir.dot(x - center) / speed, dir / speed)
}

impl FactorFunction {
    pub fn cone(center: Point, speed: f64) -> Self {
        FactorFunction::Cone { center, speed }
    }

    /// Fan center, if the factor has a single one.
    pub fn center(&self) -> Option<Point> {
        match self {
            FactorFunction::Zero
            | FactorFunction::MinOfCones(_)
            | FactorFunction::SumOfCones(_) => None,
            FactorFunction::Cone { center, .. } => Some(*center),
            FactorFunction::ConePlane(f) => Some(f.center),
            FactorFunction::ConeTwoPlanes(f) => Some(f.center),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FactorFunction::Zero)
    }

    /// Short label used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            FactorFunction::Zero => "zero",
            FactorFunction::Cone { .. } => "cone",
            FactorFunction::ConePlane(_) => "cone+plane",
            FactorFunction::ConeTwoPlanes(_) => "cone+2planes",
            FactorFunction::MinOfCones(_) => "min-of-cones",
            FactorFunction::SumOfCones(_) => "sum-of-cones",
        }
    }

    #[inline]
    pub fn value(&self, x: Point) -> f64 {
        eval_factor(self, x).0
    }
}

/// Value and gradient of `t` at `x`. Cone gradients at their center are zero.
pub fn eval_factor(t: &FactorFunction, x: Point) -> (f64, Vec2) {
    match t {
        FactorFunction::Zero => (0.0, Vec2::ZERO),
        FactorFunction::Cone { center, speed } => cone(*center, *speed, x),
        FactorFunction::ConePlane(f) => match sector_classify(x, f.center, &f.bounds) {
            None => (0.0, Vec2::ZERO),
            Some(0) => cone(f.center, f.speed, x),
            Some(_) => plane(f.center, -f.a, f.speed, x),
        },
        FactorFunction::ConeTwoPlanes(f) => match sector_classify(x, f.center, &f.bounds) {
            None => (0.0, Vec2::ZERO),
            Some(k) => match f.branches[k] {
                TwoPlaneBranch::Cone => cone(f.center, f.speed, x),
                TwoPlaneBranch::PlaneB => plane(f.center, -f.b, f.speed, x),
                TwoPlaneBranch::PlaneA => plane(f.center, -f.a, f.speed, x),
            },
        },
        FactorFunction::MinOfCones(list) => {
            let mut best = (f64::INFINITY, Vec2::ZERO);
            for &(c, s) in list {
                let v = cone(c, s, x);
                if v.0 < best.0 {
                    best = v;
                }
            }
            if list.is_empty() {
                (0.0, Vec2::ZERO)
            } else {
                best
            }
        }
        FactorFunction::SumOfCones(list) => list.iter().fold((0.0, Vec2::ZERO), |acc, &(c, s)| {
            let v = cone(c, s, x);
            (acc.0 + v.0, acc.1 + v.1)
        }),
    }
}

/// Index of the counterclockwise sector `[dirs[k], dirs[k+1]]` (cyclically) containing the
/// direction of `x - center`; `None` at the center. Seam directions go to the lower index.
pub fn sector_classify(x: Point, center: Point, dirs: &[Vec2]) -> Option<usize> {
    let d = x - center;
    if d.x == 0.0 && d.y == 0.0 || dirs.is_empty() {
        return None;
    }
    let base = dirs[0];
    let theta = pseudo_angle(base, d);
    for (k, &next) in dirs.iter().enumerate().skip(1) {
        if theta <= pseudo_angle(base, next) {
            return Some(k - 1);
        }
    }
    Some(dirs.len() - 1)
}

/// A value in `[0, 4)` that increases with the counterclockwise angle from `base` to `v`
/// (the "diamond angle"); avoids `atan2` in the per-update sector test.
#[inline]
fn pseudo_angle(base: Vec2, v: Vec2) -> f64 {
    let (x, y) = (base.dot(v), base.cross(v));
    if y >= 0.0 {
        if x >= 0.0 {
            y / (x + y)
        } else {
            1.0 - x / (y - x)
        }
    } else if x < 0.0 {
        2.0 - y / (-x - y)
    } else {
        3.0 + x / (x - y)
    }
}

/// Unit vector along an axis-aligned direction, with components snapped to `{-1, 0, 1}`.
fn axis_dir(theta: f64) -> Vec2 {
    let v = Vec2::from_angle(theta);
    Vec2::new(v.x.round(), v.y.round())
}

/// Angles describing the fan at a permeable corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnellAngles {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub upsilon: f64,
}

/// Refracted angle `β` at the far face for incidence `α` and speed ratio `Υ`.
pub fn snell_beta(alpha: f64, upsilon: f64) -> Result<f64> {
    if !(upsilon >= 1.0) || !upsilon.is_finite() {
        return Err(Error::InvalidSpeedRatio(upsilon));
    }
    if upsilon == 1.0 {
        return Ok(FRAC_PI_2 - alpha);
    }
    let s = alpha.sin();
    let q = (upsilon * upsilon - s * s).sqrt();
    Ok(if q >= 1.0 { FRAC_PI_2 } else { q.asin() })
}

/// Opening angle `δ = α + β - π/2` of the fan; round-off below `1e-14` is reported as 0.
pub fn fan_sector_angle(alpha: f64, beta: f64) -> f64 {
    let delta = alpha + beta - FRAC_PI_2;
    if delta <= 1e-14 {
        0.0
    } else {
        delta
    }
}

/// Result of a double refraction through a corner region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refraction {
    pub theta2: f64,
    pub theta3: f64,
    pub total_internal_reflection: bool,
}

/// Angles inside (`θ2`) and after leaving (`θ3`) a slow region entered at incidence `θ1`.
pub fn refract_angles(theta1: f64, upsilon: f64) -> Result<Refraction> {
    if !(upsilon >= 1.0) || !upsilon.is_finite() {
        return Err(Error::InvalidSpeedRatio(upsilon));
    }
    let s1 = theta1.sin();
    let theta2 = (s1 / upsilon).asin();
    if upsilon == 1.0 {
        return Ok(Refraction {
            theta2,
            theta3: FRAC_PI_2 - theta1,
            total_internal_reflection: false,
        });
    }
    let q = (upsilon * upsilon - s1 * s1).sqrt();
    if q >= 1.0 {
        Ok(Refraction {
            theta2,
            theta3: FRAC_PI_2,
            total_internal_reflection: q > 1.0,
        })
    } else {
        Ok(Refraction {
            theta2,
            theta3: q.asin(),
            total_internal_reflection: false,
        })
    }
}

/// Whether `-a` points into (or along a face of) the obstacle quadrant: a regular corner.
pub fn is_regular(a: Vec2, quadrant: Quadrant) -> bool {
    let (start, _) = quadrant.sector();
    let phi = ccw_angle(start, (-a).angle());
    phi <= FRAC_PI_2 + ANGLE_TOL || phi >= TAU - ANGLE_TOL
}

/// Cone+plane factor at a rarefying corner of a non-permeable obstacle.
pub fn build_corner_factor(
    center: Point,
    a: Vec2,
    quadrant: Quadrant,
    speed: f64,
) -> Result<ConePlane> {
    let a = a
        .normalized()
        .ok_or_else(|| Error::DegenerateCorner("zero direction".into()))?;
    if is_regular(a, quadrant) {
        return Err(Error::RegularCorner);
    }
    let (start, end) = quadrant.sector();
    let mid = 0.5 * (start + end);
    let c = Vec2::from_angle(mid);
    let c = Vec2::new(c.x.signum(), c.y.signum()) * std::f64::consts::FRAC_1_SQRT_2;
    let minus_a = -a;
    let cross = minus_a.cross(c);
    if cross.abs() < 1e-12 {
        return Err(Error::DegenerateCorner(
            "characteristic is parallel to the bisector".into(),
        ));
    }
    let bounds = if cross > 0.0 {
        [minus_a, c]
    } else {
        [c, minus_a]
    };
    Ok(ConePlane {
        center,
        a,
        c,
        speed,
        bounds,
    })
}

/// Cone+2-planes factor at a rarefying corner of a permeable obstacle with speed ratio
/// `upsilon`.
pub fn build_permeable_corner_factor(
    center: Point,
    a: Vec2,
    quadrant: Quadrant,
    upsilon: f64,
    speed: f64,
) -> Result<ConeTwoPlanes> {
    let a = a
        .normalized()
        .ok_or_else(|| Error::DegenerateCorner("zero direction".into()))?;
    if !(upsilon > 1.0) {
        return Err(Error::InvalidSpeedRatio(upsilon));
    }
    let (t1, t2) = quadrant.sector();
    // face k runs along ray k; outward normals point away from the quadrant
    let faces = [
        (axis_dir(t1), axis_dir(t1 - FRAC_PI_2)),
        (axis_dir(t2), axis_dir(t2 + FRAC_PI_2)),
    ];
    let first = if faces[1].1.dot(a) > faces[0].1.dot(a) {
        1
    } else {
        0
    };
    let n1 = faces[first].1;
    let (tangent2, n2) = faces[1 - first];
    let alpha = a.dot(n1).clamp(-1.0, 1.0).acos();
    if !(alpha > 1e-12 && alpha < FRAC_PI_2 - 1e-12) {
        return Err(Error::DegenerateCorner(format!(
            "incidence angle {alpha} outside (0, π/2)"
        )));
    }
    let beta = snell_beta(alpha, upsilon)?;
    let delta = fan_sector_angle(alpha, beta);
    let minus_b = n2 * beta.cos() + tangent2 * beta.sin();
    let minus_a = -a;
    use TwoPlaneBranch::*;
    let (bounds, branches) = if minus_a.cross(minus_b) >= 0.0 {
        ([minus_a, minus_b, a], [Cone, PlaneB, PlaneA])
    } else {
        ([minus_b, minus_a, a], [Cone, PlaneA, PlaneB])
    };
    Ok(ConeTwoPlanes {
        center,
        a,
        b: -minus_b,
        speed,
        bounds,
        branches,
        angles: SnellAngles {
            alpha,
            beta,
            delta,
            upsilon,
        },
    })
}
