//! Proximal point algorithm on CAT(0) spaces with fully quantitative
//! moduli: exact rate functions, certified weight schedules, the
//! metastability bounds, and an empirical certification harness.

pub mod config;
pub mod engine;
pub mod geometry;
pub mod moduli;
pub mod objective;
pub mod rate;
pub mod schedule;
pub mod verify;

pub use config::{ConfigError, ScenarioConfig};
pub use engine::{EngineError, MonitorRecord, Scenario, Trajectory};
pub use geometry::{GeometryError, Point, SpaceInstance, SpaceKind};
pub use moduli::{BoundContext, ModuliError};
pub use objective::{ExtReal, Objective, ObjectiveError, ObjectiveSpec};
pub use rate::{Nat, Rat, RateError, RateExpr, RateFn};
pub use schedule::{ScheduleError, ScheduleKind, WeightSchedule};
pub use verify::{CounterexampleFn, TrialReport, VerifyError, VerifyOptions};
