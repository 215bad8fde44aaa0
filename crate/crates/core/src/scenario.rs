//! JSON scenario files: problem, solver method, refinement study and output requests.
//!
//! Parsing rejects unknown keys and reports problems with the path of the offending key.
//! Serializing a parsed scenario writes every default explicitly, so parsing the result
//! again gives the same scenario.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    run_refinement_study, ConvergenceReport, GroundTruth, MethodSpec, StudyMethod,
};
use crate::domain::{Problem, RectObstacle, SpeedField};
use crate::error::{Error, Result};
use crate::geometry::{Point, Vec2};
use crate::solver::{BallInit, CornerFactorKind};

/// Fan radius used at rarefying corners when none is given.
pub const DEFAULT_CORNER_RADIUS: f64 = 0.18;
/// Ball radius around point sources when none is given.
pub const DEFAULT_SOURCE_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub speed: SpeedSpec,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    pub sources: Vec<Point>,
    #[serde(default)]
    pub solver: MethodEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub min: Point,
    pub max: Point,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self {
            min: Point::ZERO,
            max: Point::new(1.0, 1.0),
        }
    }
}

/// Grid spacing, given directly or as a node count along x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpeedSpec {
    Constant {
        value: f64,
    },
    /// `1/s0 + v·(x - x0)`.
    Linear {
        s0: f64,
        v: Vec2,
        #[serde(default)]
        x0: Point,
    },
    /// `base + amp·sin(2πx)·sin(2πy)`.
    Sinusoidal {
        base: f64,
        amp: f64,
    },
}

/// Axis-aligned rectangle; a `speed` makes it permeable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub lo: Point,
    pub hi: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Original,
    GlobalCone,
    GlobalSumOfCones,
    GlobalTwoCones,
    SwitchingCones,
    LocalizedCones,
    #[default]
    JustInTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerFactorName {
    #[default]
    Standard,
    Cone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallMode {
    Zero,
    Cone,
    LineIntegrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub mode: BallMode,
    #[serde(default = "default_source_radius")]
    pub radius: f64,
}

fn default_source_radius() -> f64 {
    DEFAULT_SOURCE_RADIUS
}

/// One solver method. Parameters that a method does not use must be absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    #[serde(default)]
    pub method: MethodName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner_factor: Option<CornerFactorName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthKind {
    LinearSpeed,
    Visibility,
    FineGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub kind: TruthKind,
    /// Fine-grid spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Fine-grid method; the scenario's solver by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub h0: f64,
    pub levels: usize,
    #[serde(default = "default_tail")]
    pub tail: usize,
    pub truth: TruthSpec,
    /// Methods to compare; the scenario's solver when empty.
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
}

fn default_tail() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub field_csv: bool,
    #[serde(default = "yes")]
    pub heatmap: bool,
    /// Start points of trajectories to extract after solving.
    #[serde(default)]
    pub trajectories: Vec<Point>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            field_csv: true,
            heatmap: true,
            trajectories: Vec::new(),
        }
    }
}

fn yes() -> bool {
    true
}

/// Resolved refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub methods: Vec<StudyMethod>,
    pub h0: f64,
    pub levels: usize,
    pub tail: usize,
    pub truth: GroundTruth,
}

impl Study {
    pub fn run(&self, problem: &Problem) -> Result<Vec<ConvergenceReport>> {
        run_refinement_study(
            problem,
            &self.methods,
            self.h0,
            self.levels,
            &self.truth,
            self.tail,
        )
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::scenario(
            path,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn finite_point(path: &str, p: Point) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(Error::scenario(path, "coordinates must be finite"))
    }
}

/// Parses and validates a scenario, filling in defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::scenario(
            if path == "." { String::new() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    scenario.normalize()?;
    Ok(scenario)
}

impl Scenario {
    /// Reads and parses a scenario file.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        parse_scenario(&text)
    }

    /// Pretty JSON with every default written out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    fn normalize(&mut self) -> Result<()> {
        let DomainSpec { min, max } = self.domain;
        finite_point("domain.min", min)?;
        finite_point("domain.max", max)?;
        if !(min.x < max.x && min.y < max.y) {
            return Err(Error::scenario(
                "domain",
                "min must lie below and left of max",
            ));
        }
        match (self.grid.h, self.grid.n) {
            (Some(h), None) => positive("grid.h", h)?,
            (None, Some(n)) if n >= 3 => {}
            (None, Some(n)) => {
                return Err(Error::scenario(
                    "grid.n",
                    format!("need at least 3 nodes, got {n}"),
                ))
            }
            _ => return Err(Error::scenario("grid", "give exactly one of `h` and `n`")),
        }
        let h = self.h();
        match self.speed {
            SpeedSpec::Constant { value } => positive("speed.value", value)?,
            SpeedSpec::Linear { s0, v, x0 } => {
                positive("speed.s0", s0)?;
                if !v.is_finite() {
                    return Err(Error::scenario("speed.v", "must be finite"));
                }
                finite_point("speed.x0", x0)?;
            }
            SpeedSpec::Sinusoidal { base, amp } => {
                positive("speed.base", base)?;
                if !(amp.is_finite() && amp.abs() < base) {
                    return Err(Error::scenario(
                        "speed.amp",
                        format!("|amp| must be below base, got {amp}"),
                    ));
                }
            }
        }
        for (k, ob) in self.obstacles.iter().enumerate() {
            for (name, p) in [("lo", ob.lo), ("hi", ob.hi)] {
                let path = format!("obstacles[{k}].{name}");
                finite_point(&path, p)?;
                let off = |c: f64, o: f64| {
                    let f = (c - o) / h;
                    (f - f.round()).abs() > 1e-9
                };
                if off(p.x, min.x) || off(p.y, min.y) {
                    return Err(Error::scenario(
                        path,
                        format!("corner {p} is not on a grid line of spacing {h}"),
                    ));
                }
            }
            if !(ob.lo.x < ob.hi.x && ob.lo.y < ob.hi.y) {
                return Err(Error::scenario(
                    format!("obstacles[{k}]"),
                    "lo must lie below and left of hi",
                ));
            }
            if let Some(s) = ob.speed {
                positive(&format!("obstacles[{k}].speed"), s)?;
            }
        }
        if self.sources.is_empty() {
            return Err(Error::scenario(
                "sources",
                "at least one source is required",
            ));
        }
        for (k, s) in self.sources.iter().enumerate() {
            finite_point(&format!("sources[{k}]"), *s)?;
        }
        self.solver.normalize("solver")?;
        if let Some(study) = &mut self.study {
            positive("study.h0", study.h0)?;
            if study.levels < 2 {
                return Err(Error::scenario("study.levels", "need at least 2 levels"));
            }
            if study.tail < 2 || study.tail > study.levels {
                return Err(Error::scenario(
                    "study.tail",
                    format!("must lie in 2..={}", study.levels),
                ));
            }
            for (k, m) in study.methods.iter_mut().enumerate() {
                m.normalize(&format!("study.methods[{k}]"))?;
            }
            let truth = &mut study.truth;
            match truth.kind {
                TruthKind::FineGrid => {
                    let fh = truth.h.ok_or_else(|| {
                        Error::scenario("study.truth.h", "required for a fine-grid truth")
                    })?;
                    positive("study.truth.h", fh)?;
                    if let Some(m) = &mut truth.method {
                        m.normalize("study.truth.method")?;
                    }
                }
                _ => {
                    if truth.h.is_some() || truth.method.is_some() {
                        return Err(Error::scenario(
                            "study.truth",
                            "`h` and `method` only apply to fine-grid truths",
                        ));
                    }
                }
            }
            if truth.kind == TruthKind::LinearSpeed
                && !matches!(
                    self.speed,
                    SpeedSpec::Linear { .. } | SpeedSpec::Constant { .. }
                )
            {
                return Err(Error::scenario(
                    "study.truth.kind",
                    "linear-speed truth needs a constant or linear speed",
                ));
            }
        }
        Ok(())
    }

    /// Grid spacing of the single-grid solve.
    pub fn h(&self) -> f64 {
        match (self.grid.h, self.grid.n) {
            (Some(h), _) => h,
            (None, Some(n)) => (self.domain.max.x - self.domain.min.x) / (n - 1) as f64,
            (None, None) => f64::NAN,
        }
    }

    pub fn speed_field(&self) -> SpeedField {
        match self.speed {
            SpeedSpec::Constant { value } => SpeedField::Constant(value),
            SpeedSpec::Linear { s0, v, x0 } => SpeedField::Linear { s0, v, x0 },
            SpeedSpec::Sinusoidal { base, amp } => SpeedField::Sinusoidal { base, amp },
        }
    }

    pub fn problem(&self) -> Problem {
        Problem {
            min: self.domain.min,
            max: self.domain.max,
            obstacles: self
                .obstacles
                .iter()
                .map(|o| match o.speed {
                    Some(s) => RectObstacle::permeable(o.lo, o.hi, s),
                    None => RectObstacle::non_permeable(o.lo, o.hi),
                })
                .collect(),
            speed: self.speed_field(),
            sources: self.sources.clone(),
        }
    }

    pub fn method(&self) -> StudyMethod {
        self.solver.resolve()
    }

    /// The refinement study, with optional overrides for the level count and fit window.
    pub fn study(&self, levels: Option<usize>, tail: Option<usize>) -> Result<Study> {
        let spec = self
            .study
            .as_ref()
            .ok_or_else(|| Error::scenario("study", "scenario has no study section"))?;
        let levels = levels.unwrap_or(spec.levels);
        let tail = tail.unwrap_or(spec.tail);
        if levels < 2 || tail < 2 || tail > levels {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= tail <= levels, got tail {tail}, levels {levels}"
            )));
        }
        let methods = if spec.methods.is_empty() {
            vec![self.method()]
        } else {
            spec.methods.iter().map(MethodEntry::resolve).collect()
        };
        let truth = match spec.truth.kind {
            TruthKind::LinearSpeed => GroundTruth::LinearSpeed,
            TruthKind::Visibility => GroundTruth::Visibility,
            TruthKind::FineGrid => GroundTruth::FineGrid {
                h: spec.truth.h.expect("validated"),
                method: spec
                    .truth
                    .method
                    .as_ref()
                    .map_or_else(|| self.method(), MethodEntry::resolve),
            },
        };
        Ok(Study {
            methods,
            h0: spec.h0,
            levels,
            tail,
            truth,
        })
    }
}

impl MethodEntry {
    fn normalize(&mut self, path: &str) -> Result<()> {
        let uses_radius = matches!(
            self.method,
            MethodName::LocalizedCones | MethodName::JustInTime
        );
        let uses_corner = matches!(
            self.method,
            MethodName::GlobalTwoCones | MethodName::SwitchingCones
        );
        let name = serde_json::to_value(self.method).expect("plain enum");
        let name = name.as_str().unwrap_or_default();
        if uses_radius {
            let default = if self.method == MethodName::JustInTime {
                DEFAULT_CORNER_RADIUS
            } else {
                DEFAULT_SOURCE_RADIUS
            };
            let r = *self.radius.get_or_insert(default);
            positive(&format!("{path}.radius"), r)?;
        } else if self.radius.is_some() {
            return Err(Error::scenario(
                format!("{path}.radius"),
                format!("not used by method {name}"),
            ));
        }
        if uses_corner {
            let c = self.corner.ok_or_else(|| {
                Error::scenario(
                    format!("{path}.corner"),
                    format!("required by method {name}"),
                )
            })?;
            finite_point(&format!("{path}.corner"), c)?;
        } else if self.corner.is_some() {
            return Err(Error::scenario(
                format!("{path}.corner"),
                format!("not used by method {name}"),
            ));
        }
        if self.method == MethodName::JustInTime {
            self.corner_factor.get_or_insert_default();
        } else if self.corner_factor.is_some() {
            return Err(Error::scenario(
                format!("{path}.corner_factor"),
                format!("not used by method {name}"),
            ));
        }
        if let Some(b) = &self.ball {
            positive(&format!("{path}.ball.radius"), b.radius)?;
        }
        if self.label.is_none() {
            self.label = Some(name.to_string());
        }
        Ok(())
    }

    /// Study method for this entry; call on normalized entries.
    pub fn resolve(&self) -> StudyMethod {
        let spec = match self.method {
            MethodName::Original => MethodSpec::Original,
            MethodName::GlobalCone => MethodSpec::GlobalCone,
            MethodName::GlobalSumOfCones => MethodSpec::GlobalSumOfCones,
            MethodName::GlobalTwoCones => MethodSpec::GlobalTwoCones {
                corner: self.corner.unwrap_or(Point::ZERO),
            },
            MethodName::SwitchingCones => MethodSpec::SwitchingCones {
                corner: self.corner.unwrap_or(Point::ZERO),
            },
            MethodName::LocalizedCones => MethodSpec::LocalizedCones {
                radius: self.radius.unwrap_or(DEFAULT_SOURCE_RADIUS),
            },
            MethodName::JustInTime => MethodSpec::JustInTime {
                radius: self.radius.unwrap_or(DEFAULT_CORNER_RADIUS),
                corner_factor: match self.corner_factor.unwrap_or_default() {
                    CornerFactorName::Standard => CornerFactorKind::Standard,
                    CornerFactorName::Cone => CornerFactorKind::Cone,
                },
            },
        };
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| format!("{:?}", self.method));
        let ball = match self.ball {
            None => BallInit::None,
            Some(BallSpec {
                mode: BallMode::Zero,
                radius,
            }) => BallInit::ZeroOnBall(radius),
            Some(BallSpec {
                mode: BallMode::Cone,
                radius,
            }) => BallInit::ConeOnBall(radius),
            Some(BallSpec {
                mode: BallMode::LineIntegrated,
                radius,
            }) => BallInit::LineIntegratedBall(radius),
        };
        StudyMethod::new(label, spec).with_ball(ball)
    }
}
