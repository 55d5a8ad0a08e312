//! Runs the proximal point algorithm `x_{n+1} = J_{gamma_n f} x_n`, records
//! the trajectory, and monitors the per-step inequalities that the
//! quantitative moduli are derived from.

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, Point, SpaceInstance};
use crate::objective::{Objective, ObjectiveError};
use crate::rate::{Nat, Rat, RateFn, rat_to_string};
use crate::schedule::WeightSchedule;

pub const STEP_CAP: u64 = 1_000_000;
pub const AF_LEVEL_CAP: u64 = 10_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("resolvent failed at step {step}: {source}")]
    Resolvent {
        step: u64,
        #[source]
        source: ObjectiveError,
    },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("requested {0} steps, beyond the cap of {STEP_CAP}")]
    StepCapExceeded(u64),
    #[error("approximate-point level {0} beyond the cap of {AF_LEVEL_CAP}")]
    AfLevelCapExceeded(u64),
    #[error("start is {distance} from the known minimizer, beyond the asserted bound b = {b}")]
    BoundViolated { distance: f64, b: String },
}

/// A full problem instance: space, objective, weights, start, the bound `b`,
/// and a seed for the sampling-based validations.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub space: SpaceInstance,
    pub objective: Objective,
    pub schedule: WeightSchedule,
    pub start: Point,
    pub b: Rat,
    pub seed: u64,
    /// Replaces the ball-covering modulus of total boundedness when present
    /// (used for desk-scale metastability bounds).
    pub alpha_override: Option<RateFn>,
    unverified_b: bool,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: String,
        space: SpaceInstance,
        objective: Objective,
        schedule: WeightSchedule,
        start: Point,
        b: Rat,
        seed: u64,
        alpha_override: Option<RateFn>,
    ) -> Result<Self, EngineError> {
        let unverified_b = match objective.known_minimizer() {
            Some(p) => {
                let d = space.distance(&start, p)?;
                let b_f = b.to_f64().unwrap_or(f64::INFINITY);
                if d > b_f + 1e-12 {
                    return Err(EngineError::BoundViolated { distance: d, b: rat_to_string(&b) });
                }
                false
            }
            None => true,
        };
        Ok(Scenario { id, space, objective, schedule, start, b, seed, alpha_override, unverified_b })
    }

    /// True when no known minimizer exists and `b` is only user-asserted.
    pub fn unverified_b(&self) -> bool {
        self.unverified_b
    }

    pub fn gamma_f64(&self, n: u64) -> f64 {
        self.schedule.gamma(&Nat::from(n)).to_f64().expect("weights fit in f64")
    }
}

/// Residuals of the four per-step inequalities, each nonnegative (up to the
/// 1e-9 float slack) when the inequality holds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonitorRecord {
    pub step: u64,
    /// `d(x_n,p) + d(p, J_{gamma_n} p) - d(x_{n+1}, p)`.
    pub fejer: f64,
    /// `[d2(x_n,p) - d2(x_{n+1},p) - d2(x_n,x_{n+1})] - 2 gamma_n (f(x_{n+1}) - min f)`.
    pub descent_gap: f64,
    /// `[d2(x_n,p) - d2(x_{n+1},p)] - d2(x_n, x_{n+1})`.
    pub step_square: f64,
    /// `d2(x_0,p) / (2 sum_{i<=n} gamma_i) - (f(x_{n+1}) - min f)`.
    pub value_gap: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    points: Vec<Point>,
    values: Vec<f64>,
    monitors: Vec<MonitorRecord>,
    /// `cum_gamma[n] = sum_{i <= n} gamma_i`, accumulated in f64; the
    /// monitors carry a 1e-9 additive slack for exactly this reason.
    cum_gamma: Vec<f64>,
}

impl Trajectory {
    fn start(sc: &Scenario) -> Result<Self, EngineError> {
        let v0 = match sc.objective.evaluate(&sc.start)? {
            crate::objective::ExtReal::Finite(v) => v,
            crate::objective::ExtReal::PosInf => f64::INFINITY,
        };
        Ok(Trajectory {
            points: vec![sc.start.clone()],
            values: vec![v0],
            monitors: Vec::new(),
            cum_gamma: Vec::new(),
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn monitors(&self) -> &[MonitorRecord] {
        &self.monitors
    }

    /// Number of completed iteration steps (`points` holds one more entry).
    pub fn steps(&self) -> u64 {
        (self.points.len() - 1) as u64
    }

    /// Extend the iteration up to `steps` total steps. Already-computed
    /// prefixes are reused; monitors are appended when the objective has a
    /// known minimizer.
    pub fn extend_to(&mut self, sc: &Scenario, steps: u64) -> Result<(), EngineError> {
        if steps > STEP_CAP {
            return Err(EngineError::StepCapExceeded(steps));
        }
        while self.steps() < steps {
            let n = self.steps();
            let gamma = sc.gamma_f64(n);
            let x_n = self.points[n as usize].clone();
            let x_next = sc
                .objective
                .resolvent(&sc.space, gamma, &x_n)
                .map_err(|source| EngineError::Resolvent { step: n, source })?;
            let value = sc
                .objective
                .evaluate(&x_next)?
                .finite()
                .expect("resolvent output lies in the domain");
            let prev = self.cum_gamma.last().copied().unwrap_or(0.0);
            self.cum_gamma.push(prev + gamma);
            self.points.push(x_next);
            self.values.push(value);
            if sc.objective.known_minimizer().is_some() {
                let record = monitor_step(sc, n, self)?.expect("minimizer present");
                self.monitors.push(record);
            }
        }
        Ok(())
    }

    /// `sum_{i <= n} gamma_i` for a completed step `n`.
    pub fn gamma_prefix_sum(&self, n: u64) -> f64 {
        self.cum_gamma[n as usize]
    }

    /// CSV export: one row per iterate, monitor residuals on the row of the
    /// step they close (blank on the start row and without a minimizer).
    pub fn to_csv(&self) -> String {
        let dim = self.points[0].dimension();
        let mut out = String::from("step");
        for i in 0..dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",f,fejer,descent_gap,step_square,value_gap\n");
        for (n, (p, v)) in self.points.iter().zip(&self.values).enumerate() {
            out.push_str(&n.to_string());
            for c in p.coords() {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{v}"));
            if n >= 1 && n - 1 < self.monitors.len() {
                let m = &self.monitors[n - 1];
                out.push_str(&format!(
                    ",{},{},{},{}",
                    m.fejer, m.descent_gap, m.step_square, m.value_gap
                ));
            } else {
                out.push_str(",,,,");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "points": self.points,
            "values": self.values,
            "monitors": self.monitors,
        })
    }
}

/// Run the proximal point algorithm for `steps` steps from the scenario
/// start.
pub fn run(sc: &Scenario, steps: u64) -> Result<Trajectory, EngineError> {
    let mut traj = Trajectory::start(sc)?;
    traj.extend_to(sc, steps)?;
    Ok(traj)
}

/// Membership in `AF_k`: `d(y, J_{gamma_i f} y) <= 1/(k+1)` for all `i <= k`
/// (with the 1e-10 float slack).
pub fn af_membership(sc: &Scenario, y: &Point, k: u64) -> Result<bool, EngineError> {
    if k > AF_LEVEL_CAP {
        return Err(EngineError::AfLevelCapExceeded(k));
    }
    let threshold = 1.0 / (k as f64 + 1.0) + 1e-10;
    for i in 0..=k {
        let j = sc
            .objective
            .resolvent(&sc.space, sc.gamma_f64(i), y)
            .map_err(|source| EngineError::Resolvent { step: i, source })?;
        if sc.space.distance(y, &j)? > threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Residual record for the transition `x_n -> x_{n+1}`; `None` when the
/// objective carries no known minimizer.
pub fn monitor_step(
    sc: &Scenario,
    n: u64,
    traj: &Trajectory,
) -> Result<Option<MonitorRecord>, EngineError> {
    let Some(p) = sc.objective.known_minimizer() else {
        return Ok(None);
    };
    let x_n = &traj.points[n as usize];
    let x_next = &traj.points[n as usize + 1];
    let gamma = sc.gamma_f64(n);
    let d_n = sc.space.distance(x_n, p)?;
    let d_next = sc.space.distance(x_next, p)?;
    let d_step = sc.space.distance(x_n, x_next)?;
    let f_next = traj.values[n as usize + 1];
    let gap = f_next - sc.objective.known_min_value();

    let j_p = sc
        .objective
        .resolvent(&sc.space, gamma, p)
        .map_err(|source| EngineError::Resolvent { step: n, source })?;
    let fejer = d_n + sc.space.distance(p, &j_p)? - d_next;
    let descent_gap = (d_n * d_n - d_next * d_next - d_step * d_step) - 2.0 * gamma * gap;
    let step_square = (d_n * d_n - d_next * d_next) - d_step * d_step;

    let d0 = sc.space.distance(&traj.points[0], p)?;
    let value_gap = d0 * d0 / (2.0 * traj.gamma_prefix_sum(n)) - gap;

    Ok(Some(MonitorRecord { step: n, fejer, descent_gap, step_square, value_gap }))
}
