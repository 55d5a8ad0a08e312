//! Scenario files: the JSON schema for problem instances and its mapping
//! onto validated runtime objects. Rationals travel as `"p/q"` strings so
//! configs stay exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Scenario};
use crate::geometry::{GeometryError, Point, SpaceInstance};
use crate::objective::{Objective, ObjectiveError};
use crate::rate::{self, Rat, RateFn};
use crate::schedule::{ScheduleError, ScheduleKind, WeightSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad rational {field}: {value:?}")]
    BadRational { field: &'static str, value: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("declared minimum {declared} does not match the catalog value {actual}")]
    MinimumMismatch { declared: f64, actual: f64 },
    #[error("start has dimension {start}, space has dimension {space}")]
    StartDimension { start: usize, space: usize },
    #[error("objective dimension {objective} does not match space dimension {space}")]
    ObjectiveDimension { objective: usize, space: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: crate::geometry::SpaceKind,
    pub dimension: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// `(weight/2) d^2(y, anchor)`.
    Quadratic { anchor: Vec<f64>, weight: f64 },
    /// `scale * sum |y_i|`.
    L1Norm { scale: f64 },
    /// Indicator of the closed ball.
    BallIndicator { center: Vec<f64>, radius: f64 },
    /// Indicator of the coordinate box.
    BoxIndicator { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScheduleConfig {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    /// Optional divergence-rate override; certified on load as far as the
    /// term cap allows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<RateFn>,
}

/// On-disk scenario. `b` is the asserted distance bound from the start to
/// some minimizer, as an exact rational string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub space: SpaceConfig,
    pub objective: ObjectiveConfig,
    pub schedule: ScheduleConfig,
    pub start: Vec<f64>,
    pub b: String,
    #[serde(default)]
    pub seed: u64,
    /// Declared minimum value; must match the catalog value when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_min_value: Option<f64>,
    /// Replaces the ball-covering total-boundedness modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_override: Option<RateFn>,
}

fn point(coords: &[f64]) -> Result<Point, ConfigError> {
    Ok(Point::new(coords.to_vec())?)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn parse_b(&self) -> Result<Rat, ConfigError> {
        rate::parse_rat(&self.b)
            .map_err(|_| ConfigError::BadRational { field: "b", value: self.b.clone() })
    }

    fn build_objective(&self) -> Result<Objective, ConfigError> {
        Ok(match &self.objective {
            ObjectiveConfig::Quadratic { anchor, weight } => {
                Objective::quadratic(point(anchor)?, *weight)?
            }
            ObjectiveConfig::L1Norm { scale } => Objective::l1_norm(*scale, self.space.dimension)?,
            ObjectiveConfig::BallIndicator { center, radius } => {
                Objective::ball_indicator(point(center)?, *radius)?
            }
            ObjectiveConfig::BoxIndicator { lower, upper } => {
                Objective::box_indicator(point(lower)?, point(upper)?)?
            }
        })
    }

    /// Validate everything and assemble the runtime scenario. The schedule's
    /// divergence rate and weight bound are certified on load (an override
    /// rate is certified as deep as the term cap allows).
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let space = SpaceInstance::euclidean(self.space.dimension)?;
        let objective = self.build_objective()?;
        if let Some(d) = objective.dimension()
            && d != space.dimension()
        {
            return Err(ConfigError::ObjectiveDimension {
                objective: d,
                space: space.dimension(),
            });
        }
        let start = point(&self.start)?;
        if start.dimension() != space.dimension() {
            return Err(ConfigError::StartDimension {
                start: start.dimension(),
                space: space.dimension(),
            });
        }
        if let Some(declared) = self.known_min_value {
            let actual = objective.known_min_value();
            if (declared - actual).abs() > 1e-10 {
                return Err(ConfigError::MinimumMismatch { declared, actual });
            }
        }
        let schedule = match &self.schedule.theta {
            None => WeightSchedule::new(self.schedule.kind.clone())?,
            Some(theta) => {
                let ws = WeightSchedule::with_theta(self.schedule.kind.clone(), theta.clone())?;
                certify_theta_best_effort(&ws)?;
                ws
            }
        };
        schedule.certify_big_m(100)?;
        let b = self.parse_b()?;
        Ok(Scenario::new(
            self.id.clone(),
            space,
            objective,
            schedule,
            start,
            b,
            self.seed,
            self.alpha_override.clone(),
        )?)
    }
}

/// Certify a user-supplied divergence rate up to P = 100, backing off where
/// the prefix to sum would exceed the term cap. At least P <= 2 must be
/// certifiable, otherwise the depth error propagates.
fn certify_theta_best_effort(ws: &WeightSchedule) -> Result<(), ConfigError> {
    let mut max_p = 100u64;
    loop {
        match ws.certify_theta(max_p) {
            Ok(()) => return Ok(()),
            Err(ScheduleError::CertificateDepth { p, .. }) if p > 2 => {
                max_p = p - 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
}
