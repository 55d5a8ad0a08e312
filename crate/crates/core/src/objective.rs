//! Convex lsc proper objectives with evaluable resolvents: a closed-form
//! prox catalog plus a generic strongly convex inner solver for smooth
//! custom objectives.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{GeometryError, Point, SpaceInstance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{what} must be positive, got {value}")]
    NonPositiveParameter { what: &'static str, value: f64 },
    #[error("resolvent parameter gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("box bounds inverted at coordinate {0}")]
    InvertedBox(usize),
    #[error("inner solver did not converge within {iterations} iterations (residual {residual:e})")]
    SolverDidNotConverge { iterations: u64, residual: f64 },
    #[error("claimed minimum {claimed} exceeds sampled value {sampled}")]
    MinimumNotAttained { claimed: f64, sampled: f64 },
}

/// Extended real value: finite or +infinity (indicator functions are
/// first-class here).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn add(self, rhs: f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v + rhs),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }

    /// `self <= rhs + slack`, with +infinity absorbing.
    pub fn le_with_slack(self, rhs: ExtReal, slack: f64) -> bool {
        match (self, rhs) {
            (_, ExtReal::PosInf) => true,
            (ExtReal::PosInf, ExtReal::Finite(_)) => false,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b + slack,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

pub type ValueOracle = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type GradientOracle = Arc<dyn Fn(&Point) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum ObjectiveSpec {
    /// `f(y) = (w/2) d^2(y, a)`.
    Quadratic { anchor: Point, weight: f64 },
    /// `f(y) = c * sum |y_i|`.
    L1Norm { scale: f64, dimension: usize },
    /// Indicator of the closed ball around `center`.
    BallIndicator { center: Point, radius: f64 },
    /// Indicator of the coordinate box `[lower, upper]`.
    BoxIndicator { lower: Point, upper: Point },
    /// Smooth convex objective given by value and gradient oracles with a
    /// gradient Lipschitz constant.
    SmoothCustom { value: ValueOracle, gradient: GradientOracle, lipschitz: f64 },
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveSpec::Quadratic { anchor, weight } => {
                f.debug_struct("Quadratic").field("anchor", anchor).field("weight", weight).finish()
            }
            ObjectiveSpec::L1Norm { scale, dimension } => f
                .debug_struct("L1Norm")
                .field("scale", scale)
                .field("dimension", dimension)
                .finish(),
            ObjectiveSpec::BallIndicator { center, radius } => f
                .debug_struct("BallIndicator")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            ObjectiveSpec::BoxIndicator { lower, upper } => {
                f.debug_struct("BoxIndicator").field("lower", lower).field("upper", upper).finish()
            }
            ObjectiveSpec::SmoothCustom { lipschitz, .. } => {
                f.debug_struct("SmoothCustom").field("lipschitz", lipschitz).finish()
            }
        }
    }
}

const INNER_SOLVER_CAP: u64 = 1_000_000;
const INNER_SOLVER_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Objective {
    spec: ObjectiveSpec,
    known_min_value: f64,
    known_minimizer: Option<Point>,
}

impl Objective {
    pub fn quadratic(anchor: Point, weight: f64) -> Result<Self, ObjectiveError> {
        if !(weight > 0.0) {
            return Err(ObjectiveError::NonPositiveParameter { what: "weight", value: weight });
        }
        Ok(Objective {
            known_minimizer: Some(anchor.clone()),
            spec: ObjectiveSpec::Quadratic { anchor, weight },
            known_min_value: 0.0,
        })
    }

    pub fn l1_norm(scale: f64, dimension: usize) -> Result<Self, ObjectiveError> {
        if !(scale > 0.0) {
            return Err(ObjectiveError::NonPositiveParameter { what: "scale", value: scale });
        }
        if dimension == 0 {
            return Err(GeometryError::ZeroDimension.into());
        }
        Ok(Objective {
            spec: ObjectiveSpec::L1Norm { scale, dimension },
            known_min_value: 0.0,
            known_minimizer: Some(Point::origin(dimension)),
        })
    }

    pub fn ball_indicator(center: Point, radius: f64) -> Result<Self, ObjectiveError> {
        if !(radius > 0.0) {
            return Err(ObjectiveError::NonPositiveParameter { what: "radius", value: radius });
        }
        Ok(Objective {
            known_minimizer: Some(center.clone()),
            spec: ObjectiveSpec::BallIndicator { center, radius },
            known_min_value: 0.0,
        })
    }

    pub fn box_indicator(lower: Point, upper: Point) -> Result<Self, ObjectiveError> {
        if lower.dimension() != upper.dimension() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.dimension(),
                got: upper.dimension(),
            }
            .into());
        }
        for (i, (l, u)) in lower.coords().iter().zip(upper.coords()).enumerate() {
            if l > u {
                return Err(ObjectiveError::InvertedBox(i));
            }
        }
        let mid: Vec<f64> =
            lower.coords().iter().zip(upper.coords()).map(|(l, u)| 0.5 * (l + u)).collect();
        Ok(Objective {
            known_minimizer: Some(Point::new(mid).expect("finite midpoint")),
            spec: ObjectiveSpec::BoxIndicator { lower, upper },
            known_min_value: 0.0,
        })
    }

    pub fn smooth_custom(
        value: ValueOracle,
        gradient: GradientOracle,
        lipschitz: f64,
        known_min_value: f64,
        known_minimizer: Option<Point>,
    ) -> Result<Self, ObjectiveError> {
        if !(lipschitz > 0.0) {
            return Err(ObjectiveError::NonPositiveParameter {
                what: "lipschitz",
                value: lipschitz,
            });
        }
        if let Some(p) = &known_minimizer {
            let at_min = value(p);
            if (at_min - known_min_value).abs() > 1e-10 {
                return Err(ObjectiveError::MinimumNotAttained {
                    claimed: known_min_value,
                    sampled: at_min,
                });
            }
        }
        Ok(Objective {
            spec: ObjectiveSpec::SmoothCustom { value, gradient, lipschitz },
            known_min_value,
            known_minimizer,
        })
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn known_min_value(&self) -> f64 {
        self.known_min_value
    }

    pub fn known_minimizer(&self) -> Option<&Point> {
        self.known_minimizer.as_ref()
    }

    pub fn dimension(&self) -> Option<usize> {
        match &self.spec {
            ObjectiveSpec::Quadratic { anchor, .. } => Some(anchor.dimension()),
            ObjectiveSpec::L1Norm { dimension, .. } => Some(*dimension),
            ObjectiveSpec::BallIndicator { center, .. } => Some(center.dimension()),
            ObjectiveSpec::BoxIndicator { lower, .. } => Some(lower.dimension()),
            ObjectiveSpec::SmoothCustom { .. } => None,
        }
    }

    fn check_dim(&self, y: &Point) -> Result<(), ObjectiveError> {
        if let Some(d) = self.dimension()
            && y.dimension() != d
        {
            return Err(
                GeometryError::DimensionMismatch { expected: d, got: y.dimension() }.into()
            );
        }
        Ok(())
    }

    /// `f(y)` as an extended real; indicators return +infinity outside
    /// their set (with a 1e-9 membership slack for float trajectories).
    pub fn evaluate(&self, y: &Point) -> Result<ExtReal, ObjectiveError> {
        self.check_dim(y)?;
        Ok(match &self.spec {
            ObjectiveSpec::Quadratic { anchor, weight } => {
                let d2: f64 =
                    y.coords().iter().zip(anchor.coords()).map(|(a, b)| (a - b) * (a - b)).sum();
                ExtReal::Finite(0.5 * weight * d2)
            }
            ObjectiveSpec::L1Norm { scale, .. } => {
                ExtReal::Finite(scale * y.coords().iter().map(|c| c.abs()).sum::<f64>())
            }
            ObjectiveSpec::BallIndicator { center, radius } => {
                let d2: f64 =
                    y.coords().iter().zip(center.coords()).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2.sqrt() <= radius + 1e-9 { ExtReal::Finite(0.0) } else { ExtReal::PosInf }
            }
            ObjectiveSpec::BoxIndicator { lower, upper } => {
                let inside = y
                    .coords()
                    .iter()
                    .zip(lower.coords().iter().zip(upper.coords()))
                    .all(|(c, (l, u))| *c >= l - 1e-9 && *c <= u + 1e-9);
                if inside { ExtReal::Finite(0.0) } else { ExtReal::PosInf }
            }
            ObjectiveSpec::SmoothCustom { value, .. } => ExtReal::Finite(value(y)),
        })
    }

    /// The resolvent `J_{gamma f}(x)`: the unique minimizer of
    /// `f(y) + d^2(x,y) / (2 gamma)`.
    pub fn resolvent(
        &self,
        space: &SpaceInstance,
        gamma: f64,
        x: &Point,
    ) -> Result<Point, ObjectiveError> {
        if !(gamma > 0.0) {
            return Err(ObjectiveError::NonPositiveGamma(gamma));
        }
        self.check_dim(x)?;
        match &self.spec {
            ObjectiveSpec::Quadratic { anchor, weight } => {
                let gw = gamma * weight;
                let coords = x
                    .coords()
                    .iter()
                    .zip(anchor.coords())
                    .map(|(xi, ai)| (xi + gw * ai) / (1.0 + gw))
                    .collect();
                Ok(Point::new(coords)?)
            }
            ObjectiveSpec::L1Norm { scale, .. } => {
                let t = gamma * scale;
                let coords = x
                    .coords()
                    .iter()
                    .map(|xi| xi.signum() * (xi.abs() - t).max(0.0))
                    .collect();
                Ok(Point::new(coords)?)
            }
            ObjectiveSpec::BallIndicator { center, radius } => {
                let d = space.distance(x, center)?;
                if d <= *radius {
                    Ok(x.clone())
                } else {
                    let scale = radius / d;
                    let coords = x
                        .coords()
                        .iter()
                        .zip(center.coords())
                        .map(|(xi, ci)| ci + scale * (xi - ci))
                        .collect();
                    Ok(Point::new(coords)?)
                }
            }
            ObjectiveSpec::BoxIndicator { lower, upper } => {
                let coords = x
                    .coords()
                    .iter()
                    .zip(lower.coords().iter().zip(upper.coords()))
                    .map(|(c, (l, u))| c.clamp(*l, *u))
                    .collect();
                Ok(Point::new(coords)?)
            }
            ObjectiveSpec::SmoothCustom { gradient, lipschitz, .. } => {
                // gradient descent on the (1/gamma)-strongly convex prox
                // objective, fixed step 1/(L + 1/gamma)
                let step = 1.0 / (lipschitz + 1.0 / gamma);
                let mut y = x.coords().to_vec();
                for _ in 0..INNER_SOLVER_CAP {
                    let g = gradient(&Point::new(y.clone())?);
                    let mut moved = 0.0f64;
                    for i in 0..y.len() {
                        let delta = -step * (g[i] + (y[i] - x.coords()[i]) / gamma);
                        y[i] += delta;
                        moved += delta * delta;
                    }
                    if moved.sqrt() < INNER_SOLVER_TOL {
                        return Ok(Point::new(y)?);
                    }
                }
                let g = gradient(&Point::new(y.clone())?);
                let residual = g
                    .iter()
                    .zip(y.iter().zip(x.coords()))
                    .map(|(gi, (yi, xi))| {
                        let r = gi + (yi - xi) / gamma;
                        r * r
                    })
                    .sum::<f64>()
                    .sqrt();
                Err(ObjectiveError::SolverDidNotConverge { iterations: INNER_SOLVER_CAP, residual })
            }
        }
    }

    /// Brute-force optimality oracle for a claimed resolvent output: checks
    /// `f(y) + d^2(x,y)/2gamma <= f(z) + d^2(x,z)/2gamma + 1e-8` over random
    /// `z` in a ball around `x` and over 100 grid points on each coordinate
    /// geodesic through `y`.
    pub fn prox_certificate<R: Rng>(
        &self,
        space: &SpaceInstance,
        gamma: f64,
        x: &Point,
        y: &Point,
        samples: usize,
        rng: &mut R,
    ) -> Result<bool, ObjectiveError> {
        if !(gamma > 0.0) {
            return Err(ObjectiveError::NonPositiveGamma(gamma));
        }
        let prox_val = |z: &Point| -> Result<ExtReal, ObjectiveError> {
            let d = space.distance(x, z)?;
            Ok(self.evaluate(z)?.add(d * d / (2.0 * gamma)))
        };
        let at_y = prox_val(y)?;
        let span = 2.0 * space.distance(x, y)? + 1.0;
        let dim = x.dimension();
        for _ in 0..samples {
            let coords: Vec<f64> =
                (0..dim).map(|i| x.coords()[i] + rng.random_range(-span..span)).collect();
            let z = Point::new(coords)?;
            if !at_y.le_with_slack(prox_val(&z)?, 1e-8) {
                return Ok(false);
            }
        }
        for axis in 0..dim {
            for step in 0..100 {
                let t = -span + 2.0 * span * (step as f64) / 99.0;
                let mut coords = y.coords().to_vec();
                coords[axis] += t;
                let z = Point::new(coords)?;
                if !at_y.le_with_slack(prox_val(&z)?, 1e-8) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}
