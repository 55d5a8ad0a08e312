//! Metric-space abstraction: points, the metric, geodesic convex
//! combinations, and a modulus of total boundedness for closed Euclidean
//! balls. Every other module consumes only `distance` and `combine`, so
//! further geodesic instances can be added here without touching them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rate::{Nat, Rat, RateFn, rat_to_string};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate at index {0}")]
    NonFiniteCoordinate(usize),
    #[error("geodesic parameter t = {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("ball radius must be positive, got {0}")]
    NonPositiveRadius(String),
}

/// A point of the space, as a finite coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        for (i, c) in coords.iter().enumerate() {
            if !c.is_finite() {
                return Err(GeometryError::NonFiniteCoordinate(i));
            }
        }
        Ok(Point(coords))
    }

    pub fn origin(dimension: usize) -> Self {
        Point(vec![0.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean,
}

/// A CAT(0) space instance. Only the flat Euclidean case ships.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceInstance {
    dimension: usize,
    kind: SpaceKind,
}

impl SpaceInstance {
    pub fn euclidean(dimension: usize) -> Result<Self, GeometryError> {
        if dimension == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        Ok(SpaceInstance { dimension, kind: SpaceKind::Euclidean })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    fn check(&self, p: &Point) -> Result<(), GeometryError> {
        if p.dimension() != self.dimension {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dimension,
                got: p.dimension(),
            });
        }
        Ok(())
    }

    /// The metric `d`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64, GeometryError> {
        self.check(x)?;
        self.check(y)?;
        let s: f64 = x.0.iter().zip(&y.0).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(s.sqrt())
    }

    /// The geodesic point `(1-t)x + tw`.
    pub fn combine(&self, x: &Point, w: &Point, t: f64) -> Result<Point, GeometryError> {
        self.check(x)?;
        self.check(w)?;
        if !(0.0..=1.0).contains(&t) || t.is_nan() {
            return Err(GeometryError::ParameterOutOfRange(t));
        }
        let coords = x.0.iter().zip(&w.0).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        Ok(Point(coords))
    }
}

/// Least rational `p/q` with `q <= 16` and `(p/q)^2 >= dimension`; an exact
/// upper bound on `sqrt(dimension)` used by the ball covering count.
pub fn sqrt_upper_bound(dimension: usize) -> Rat {
    let d = BigInt::from(dimension);
    let mut best: Option<Rat> = None;
    for q in 1i64..=16 {
        let qi = BigInt::from(q);
        // smallest p with p^2 >= d * q^2
        let target = &d * &qi * &qi;
        let mut p = target.sqrt();
        if &p * &p < target {
            p += 1;
        }
        let cand = Rat::new(p, qi);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.expect("q range nonempty")
}

/// Modulus of total boundedness for the closed ball of radius `b`:
/// `alpha(k) = R^dimension` with `R = ceil(2 b (k+1) sigma)`, counting the
/// cells of a cubical grid of diameter at most `1/(k+1)` covering the ball.
/// Among any `alpha(k)+1` points of the ball, two share a cell and hence lie
/// within `1/(k+1)` of each other.
pub fn ball_total_boundedness_modulus(
    dimension: usize,
    b: &Rat,
) -> Result<RateFn, GeometryError> {
    if dimension == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    if !b.is_positive() {
        return Err(GeometryError::NonPositiveRadius(rat_to_string(b)));
    }
    let sigma = sqrt_upper_bound(dimension);
    let two_b_sigma = BigRational::from_integer(2.into()) * b * sigma;
    let scale = RateFn::constant_rat(two_b_sigma).expect("positive");
    let k_plus_1 = RateFn::var().add(&RateFn::constant(1));
    let cells_per_axis = scale.mul(&k_plus_1).ceil();
    Ok(cells_per_axis.pow(&RateFn::constant(dimension as u64)))
}

/// Grid-cell index of a point of the ball of radius `b`, for the level-`k`
/// covering behind [`ball_total_boundedness_modulus`]. Test helper for the
/// pigeonhole oracle.
pub fn covering_cell(b: f64, k: u64, p: &Point) -> Vec<u64> {
    let sigma = {
        use num_traits::ToPrimitive;
        sqrt_upper_bound(p.dimension()).to_f64().unwrap()
    };
    let r = (2.0 * b * (k as f64 + 1.0) * sigma).ceil();
    let side = 2.0 * b / r;
    p.coords()
        .iter()
        .map(|c| {
            let idx = ((c + b) / side).floor();
            (idx.max(0.0) as u64).min(r as u64 - 1)
        })
        .collect()
}

pub fn alpha_value(alpha: &RateFn, k: u64) -> Nat {
    alpha.eval(&Nat::from(k)).expect("closed form total on naturals")
}
