//! Fixtures shared by the benchmarks in `benches/`.

use fanmarch::analysis::{MethodSpec, StudyMethod};
use fanmarch::{Point, Problem, RectObstacle, SpeedField};

fn wall(lo: (f64, f64), hi: (f64, f64)) -> RectObstacle {
    RectObstacle::non_permeable(Point::new(lo.0, lo.1), Point::new(hi.0, hi.1))
}

/// Unit square, unit speed, source at the origin and one wall with a rarefying corner.
pub fn simple_obstacle() -> Problem {
    Problem {
        min: Point::ZERO,
        max: Point::new(1.0, 1.0),
        obstacles: vec![wall((0.0, 0.2), (0.2, 1.0))],
        speed: SpeedField::Constant(1.0),
        sources: vec![Point::ZERO],
    }
}

/// The six-wall maze of the bundled scenarios.
pub fn maze() -> Problem {
    Problem {
        min: Point::ZERO,
        max: Point::new(1.0, 1.0),
        obstacles: vec![
            wall((0.1, 0.2), (0.2, 0.9)),
            wall((0.3, 0.1), (0.8, 0.2)),
            wall((0.3, 0.3), (0.4, 0.8)),
            wall((0.5, 0.4), (0.9, 0.5)),
            wall((0.5, 0.6), (0.6, 1.0)),
            wall((0.7, 0.6), (0.8, 0.9)),
        ],
        speed: SpeedField::Constant(1.0),
        sources: vec![Point::new(0.6, 0.3)],
    }
}

pub fn methods() -> Vec<StudyMethod> {
    vec![
        StudyMethod::new("original", MethodSpec::Original),
        StudyMethod::new("global-cone", MethodSpec::GlobalCone),
        StudyMethod::new(
            "just-in-time",
            MethodSpec::JustInTime {
                radius: 0.18,
                corner_factor: fanmarch::CornerFactorKind::Standard,
            },
        ),
    ]
}
