//! Metastability witness search and empirical certification of the rates
//! Psi and Omega: for each (scenario, k, g) trial, find the smallest window
//! start N whose window [N, N + g(N)] oscillates by at most 1/(k+1), and
//! compare it against the exact big-integer bound.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{self, EngineError, Scenario, Trajectory};
use crate::geometry::{self, GeometryError};
use crate::moduli::{self, BoundContext, ModuliError};
use crate::rate::{Nat, RateFn};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Moduli(#[from] ModuliError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("bound recursion needs {needed} iterations, beyond the guard of {guard} (use force to override)")]
    IterationGuard { needed: String, guard: u64 },
    #[error("counterexample function value g({n}) does not fit the trajectory cap")]
    WindowTooLarge { n: u64 },
    #[error("unrecognized counterexample function spec {0:?}")]
    BadCounterexample(String),
}

/// Catalog of counterexample functions `g` used to sample the universally
/// quantified function in the metastability statement. All entries are
/// nondecreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CounterexampleFn {
    Constant(u64),
    /// `g(n) = n + c`.
    IdentityPlus(u64),
    /// `g(n) = 2n + 1`.
    Doubling,
    /// Finite table, normalized to its running max and extended as constant
    /// past the end.
    Table(Vec<u64>),
}

impl CounterexampleFn {
    pub fn table(values: Vec<u64>) -> Self {
        let mut normalized = values;
        if normalized.is_empty() {
            normalized.push(0);
        }
        for i in 1..normalized.len() {
            normalized[i] = normalized[i].max(normalized[i - 1]);
        }
        CounterexampleFn::Table(normalized)
    }

    /// The four-entry default grid.
    pub fn catalog() -> Vec<CounterexampleFn> {
        vec![
            CounterexampleFn::Constant(1),
            CounterexampleFn::IdentityPlus(1),
            CounterexampleFn::Doubling,
            CounterexampleFn::table(vec![3, 1, 4, 1, 5]),
        ]
    }

    pub fn value(&self, n: u64) -> u64 {
        match self {
            CounterexampleFn::Constant(c) => *c,
            CounterexampleFn::IdentityPlus(c) => n + c,
            CounterexampleFn::Doubling => 2 * n + 1,
            CounterexampleFn::Table(t) => t[(n as usize).min(t.len() - 1)],
        }
    }

    /// The same function in the closed-form grammar (monotone by
    /// construction), for exact evaluation inside the bound recursions.
    pub fn rate_fn(&self) -> RateFn {
        match self {
            CounterexampleFn::Constant(c) => RateFn::constant(*c),
            CounterexampleFn::IdentityPlus(c) => RateFn::var().add(&RateFn::constant(*c)),
            CounterexampleFn::Doubling => {
                RateFn::var().mul(&RateFn::constant(2)).add(&RateFn::constant(1))
            }
            CounterexampleFn::Table(t) => {
                // step_j(n) = v_j * (1 monus (j monus n)): equals v_j once
                // n >= j and 0 before; the table is the max of its steps
                let mut acc = RateFn::constant(t[0]);
                for (j, v) in t.iter().enumerate().skip(1) {
                    let gate = RateFn::constant(1)
                        .monus_fn(&RateFn::constant(j as u64).monus_fn(&RateFn::var()));
                    let step = RateFn::constant(*v).mul(&gate);
                    acc = acc.max_fn(&step);
                }
                acc
            }
        }
    }

    /// Parse the shorthand emitted by [`describe`](Self::describe):
    /// `const:N`, `idplus:N`, `doubling`, `table:a,b,c`.
    pub fn parse(spec: &str) -> Result<Self, VerifyError> {
        let spec = spec.trim();
        let bad = || VerifyError::BadCounterexample(spec.to_string());
        if spec == "doubling" {
            return Ok(CounterexampleFn::Doubling);
        }
        if let Some(c) = spec.strip_prefix("const:") {
            return Ok(CounterexampleFn::Constant(c.parse().map_err(|_| bad())?));
        }
        if let Some(c) = spec.strip_prefix("idplus:") {
            return Ok(CounterexampleFn::IdentityPlus(c.parse().map_err(|_| bad())?));
        }
        if let Some(t) = spec.strip_prefix("table:") {
            let values =
                t.split(',').map(|v| v.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
            return Ok(CounterexampleFn::table(values));
        }
        Err(bad())
    }

    pub fn describe(&self) -> String {
        match self {
            CounterexampleFn::Constant(c) => format!("const:{c}"),
            CounterexampleFn::IdentityPlus(c) => format!("idplus:{c}"),
            CounterexampleFn::Doubling => "doubling".to_string(),
            CounterexampleFn::Table(t) => format!(
                "table:{}",
                t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Largest window start the witness search will try.
    pub search_cap: u64,
    /// Refuse bound recursions needing more than this many unrollings.
    pub iter_guard: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { search_cap: 10_000, iter_guard: 100_000 }
    }
}

/// Outcome of one certification trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub scenario: String,
    pub rate: &'static str,
    pub k: u64,
    pub g: String,
    pub witness_n: Option<u64>,
    /// The exact bound (Psi or Omega), as a decimal string.
    pub bound: String,
    pub holds: bool,
    pub window_checks: u64,
    pub wall_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Assemble the quantitative context of a scenario: `b` and the schedule's
/// certified rates, with `alpha` from the Euclidean ball covering unless the
/// scenario overrides it.
pub fn bound_context(sc: &Scenario) -> Result<BoundContext, VerifyError> {
    let alpha = match &sc.alpha_override {
        Some(a) => a.clone(),
        None => geometry::ball_total_boundedness_modulus(sc.space.dimension(), &sc.b)?,
    };
    Ok(BoundContext::new(
        sc.b.clone(),
        sc.schedule.theta().clone(),
        sc.schedule.big_m().clone(),
        alpha,
    )?)
}

fn window_ok(
    sc: &Scenario,
    traj: &Trajectory,
    n: u64,
    width: u64,
    threshold: f64,
    checks: &mut u64,
) -> Result<bool, VerifyError> {
    let pts = &traj.points()[n as usize..=(n + width) as usize];
    // cheap sound pass: the bounding-box diagonal dominates every pairwise
    // distance
    let dim = pts[0].dimension();
    let mut diag2 = 0.0f64;
    for c in 0..dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in pts {
            lo = lo.min(p.coords()[c]);
            hi = hi.max(p.coords()[c]);
        }
        diag2 += (hi - lo) * (hi - lo);
    }
    *checks += 1;
    if diag2.sqrt() <= threshold {
        return Ok(true);
    }
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            *checks += 1;
            if sc.space.distance(&pts[i], &pts[j])? > threshold {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest `N <= search_cap` with `d(x_i, x_j) <= 1/(k+1)` for all
/// `i, j in [N, N + g(N)]`; the trajectory is extended lazily.
pub fn find_metastability_witness(
    sc: &Scenario,
    traj: &mut Trajectory,
    k: u64,
    g: &CounterexampleFn,
    search_cap: u64,
) -> Result<Option<u64>, VerifyError> {
    let mut checks = 0u64;
    find_witness_inner(sc, traj, k, g, search_cap, false, &mut checks)
}

fn find_witness_inner(
    sc: &Scenario,
    traj: &mut Trajectory,
    k: u64,
    g: &CounterexampleFn,
    search_cap: u64,
    require_af: bool,
    checks: &mut u64,
) -> Result<Option<u64>, VerifyError> {
    let threshold = 1.0 / (k as f64 + 1.0) + 1e-9;
    for n in 0..=search_cap {
        let width = g.value(n);
        let end = n.checked_add(width).ok_or(VerifyError::WindowTooLarge { n })?;
        if end > engine::STEP_CAP {
            return Err(VerifyError::WindowTooLarge { n });
        }
        traj.extend_to(sc, end)?;
        if !window_ok(sc, traj, n, width, threshold, checks)? {
            continue;
        }
        if require_af {
            let mut all = true;
            for i in n..=end {
                *checks += 1;
                if !resolvent_displacements_ok(sc, &traj.points()[i as usize], k, threshold)? {
                    all = false;
                    break;
                }
            }
            if !all {
                continue;
            }
        }
        return Ok(Some(n));
    }
    Ok(None)
}

fn resolvent_displacements_ok(
    sc: &Scenario,
    y: &crate::geometry::Point,
    k: u64,
    threshold: f64,
) -> Result<bool, VerifyError> {
    for d in 0..=k {
        let j = sc
            .objective
            .resolvent(&sc.space, sc.gamma_f64(d), y)
            .map_err(EngineError::Objective)?;
        if sc.space.distance(y, &j)? > threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

fn guarded_iterations(alpha: &RateFn, arg: &Nat, guard: u64) -> Result<(), VerifyError> {
    use num_traits::ToPrimitive;
    let needed = alpha.eval(arg).map_err(ModuliError::Rate)?;
    if needed.to_u64().map(|v| v > guard).unwrap_or(true) {
        return Err(VerifyError::IterationGuard { needed: needed.to_string(), guard });
    }
    Ok(())
}

fn certify(
    sc: &Scenario,
    k: u64,
    g: &CounterexampleFn,
    opts: &VerifyOptions,
    omega: bool,
) -> Result<TrialReport, VerifyError> {
    let started = Instant::now();
    let ctx = bound_context(sc)?;
    let k_nat = Nat::from(k);
    let iter_arg = if omega { &k_nat * 8u32 + 7u32 } else { &k_nat * 4u32 + 3u32 };
    guarded_iterations(&ctx.alpha, &iter_arg, opts.iter_guard)?;
    let g_rate = g.rate_fn();
    let bound = if omega {
        moduli::omega_rate(&ctx, &k_nat, &g_rate)?
    } else {
        moduli::psi_rate(&ctx, &k_nat, &g_rate)?
    };

    let mut traj = engine::run(sc, 0)?;
    let mut checks = 0u64;
    let witness = find_witness_inner(sc, &mut traj, k, g, opts.search_cap, omega, &mut checks)?;
    let holds = witness.map(|n| Nat::from(n) <= bound).unwrap_or(false);
    Ok(TrialReport {
        scenario: sc.id.clone(),
        rate: if omega { "omega" } else { "psi" },
        k,
        g: g.describe(),
        witness_n: witness,
        bound: bound.to_string(),
        holds,
        window_checks: checks,
        wall_ms: started.elapsed().as_millis(),
        warning: sc.unverified_b().then(|| "unverified-b".to_string()),
    })
}

/// Certify the metastability rate Psi on one trial.
pub fn certify_psi(
    sc: &Scenario,
    k: u64,
    g: &CounterexampleFn,
    opts: &VerifyOptions,
) -> Result<TrialReport, VerifyError> {
    certify(sc, k, g, opts, false)
}

/// Certify the rate Omega: the witness window must additionally consist of
/// `k`-approximate fixed points.
pub fn certify_omega(
    sc: &Scenario,
    k: u64,
    g: &CounterexampleFn,
    opts: &VerifyOptions,
) -> Result<TrialReport, VerifyError> {
    certify(sc, k, g, opts, true)
}
