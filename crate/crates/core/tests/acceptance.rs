//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::panic::{AssertUnwindSafe, catch_unwind, resume_unwind};
use std::path::PathBuf;

use num_traits::ToPrimitive;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use proxmeta::engine::{self, Trajectory};
use proxmeta::geometry::Point;
use proxmeta::moduli;
use proxmeta::rate::{Nat, Rat, nat, rat};
use proxmeta::verify::{self, CounterexampleFn, VerifyOptions};
use proxmeta::{Objective, RateFn, Scenario, ScenarioConfig, SpaceInstance};

fn criterion(n: u32, name: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {n}: PASS — {name}"),
        Err(e) => {
            println!("criterion {n}: FAIL — {name}");
            resume_unwind(e);
        }
    }
}

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn shipped_scenarios() -> Vec<Scenario> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .expect("scenarios directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    assert!(paths.len() >= 10, "shipped suite has at least 10 scenarios");
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).unwrap();
            ScenarioConfig::from_json(&text)
                .and_then(|cfg| cfg.to_scenario())
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()))
        })
        .collect()
}

fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec()).unwrap()
}

fn objective_catalog() -> Vec<Objective> {
    vec![
        Objective::quadratic(pt(&[2.0, 0.0]), 1.0).unwrap(),
        Objective::quadratic(pt(&[0.0, -1.0]), 0.5).unwrap(),
        Objective::l1_norm(1.0, 2).unwrap(),
        Objective::l1_norm(0.25, 2).unwrap(),
        Objective::ball_indicator(pt(&[0.5, 0.5]), 1.0).unwrap(),
        Objective::box_indicator(pt(&[-1.0, -2.0]), pt(&[1.0, 2.0])).unwrap(),
    ]
}

#[test]
fn criterion_01_resolvent_correctness() {
    criterion(1, "resolvent optimality and nonexpansiveness on 10^4 random trials", || {
        let s = SpaceInstance::euclidean(2).unwrap();
        let catalog = objective_catalog();
        let gammas = [0.1, 1.0, 10.0];
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for trial in 0..10_000 {
            let f = &catalog[trial % catalog.len()];
            let gamma = gammas[trial % 3];
            let x = pt(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
            let y = pt(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
            let jx = f.resolvent(&s, gamma, &x).unwrap();
            let jy = f.resolvent(&s, gamma, &y).unwrap();
            assert!(
                s.distance(&jx, &jy).unwrap() <= s.distance(&x, &y).unwrap() + 1e-10,
                "nonexpansiveness failed: {f:?} gamma={gamma}"
            );
            assert!(
                f.prox_certificate(&s, gamma, &x, &jx, 20, &mut rng).unwrap(),
                "prox certificate failed: {f:?} gamma={gamma} x={x:?}"
            );
        }
    });
}

#[test]
fn criterion_02_fixed_point_iff_minimizer() {
    criterion(2, "fixed points of every resolvent are exactly the minimizers", || {
        let s = SpaceInstance::euclidean(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        for f in objective_catalog() {
            let p = f.known_minimizer().unwrap().clone();
            for gamma in [0.1, 1.0, 10.0] {
                let jp = f.resolvent(&s, gamma, &p).unwrap();
                assert!(s.distance(&jp, &p).unwrap() <= 1e-9, "{f:?} gamma={gamma}");
            }
            // converse on samples: any near-fixed point is a near-minimizer
            for _ in 0..2000 {
                let x = pt(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
                for gamma in [0.1, 1.0, 10.0] {
                    let jx = f.resolvent(&s, gamma, &x).unwrap();
                    if s.distance(&x, &jx).unwrap() <= 1e-9 {
                        let v = f.evaluate(&x).unwrap().finite().unwrap();
                        assert!(v <= f.known_min_value() + 1e-9, "{f:?} x={x:?}");
                    }
                }
            }
        }
    });
}

/// The shipped suite plus programmatic variants, for the wider monitor sweep.
fn monitor_scenarios() -> Vec<Scenario> {
    let mut scenarios = shipped_scenarios();
    let mk = |id: &str, obj: Objective, kind: proxmeta::ScheduleKind, start: &[f64], b: Rat| {
        Scenario::new(
            id.to_string(),
            SpaceInstance::euclidean(start.len()).unwrap(),
            obj,
            proxmeta::WeightSchedule::new(kind).unwrap(),
            pt(start),
            b,
            1,
            Some(RateFn::constant(2)),
        )
        .unwrap()
    };
    use proxmeta::ScheduleKind::*;
    scenarios.push(mk(
        "v-quad-heavy",
        Objective::quadratic(pt(&[0.0, 0.0]), 4.0).unwrap(),
        Constant { c: rat(1, 4) },
        &[0.3, -0.4],
        rat(1, 2),
    ));
    scenarios.push(mk(
        "v-quad-anchor",
        Objective::quadratic(pt(&[-1.0, 1.0]), 1.0).unwrap(),
        Linear { c: rat(1, 3) },
        &[1.0, 1.0],
        rat(2, 1),
    ));
    scenarios.push(mk(
        "v-quad-harm",
        Objective::quadratic(pt(&[0.0]), 2.0).unwrap(),
        Harmonic { c: rat(3, 2) },
        &[0.9],
        rat(1, 1),
    ));
    scenarios.push(mk(
        "v-l1-small",
        Objective::l1_norm(0.1, 2).unwrap(),
        Constant { c: rat(1, 2) },
        &[0.5, 0.5],
        rat(1, 1),
    ));
    scenarios.push(mk(
        "v-l1-harm",
        Objective::l1_norm(1.0, 1).unwrap(),
        Harmonic { c: rat(1, 1) },
        &[-0.8],
        rat(1, 1),
    ));
    scenarios.push(mk(
        "v-ball-out",
        Objective::ball_indicator(pt(&[1.0, 1.0]), 0.25).unwrap(),
        Constant { c: rat(2, 1) },
        &[3.0, 1.0],
        rat(2, 1),
    ));
    scenarios.push(mk(
        "v-ball-lin",
        Objective::ball_indicator(pt(&[0.0, 0.0]), 1.0).unwrap(),
        Linear { c: rat(1, 1) },
        &[0.0, 2.0],
        rat(2, 1),
    ));
    scenarios.push(mk(
        "v-box-corner",
        Objective::box_indicator(pt(&[0.0, 0.0]), pt(&[1.0, 1.0])).unwrap(),
        Constant { c: rat(1, 1) },
        &[0.9, 0.1],
        rat(1, 1),
    ));
    scenarios.push(mk(
        "v-box-harm",
        Objective::box_indicator(pt(&[-2.0]), pt(&[2.0])).unwrap(),
        Harmonic { c: rat(2, 1) },
        &[1.5],
        rat(2, 1),
    ));
    assert!(scenarios.len() >= 20);
    scenarios
}

#[test]
fn criterion_03_per_step_inequality_monitors() {
    criterion(3, "all four per-step residuals nonnegative over 20 scenarios x 200 steps", || {
        for sc in monitor_scenarios() {
            let traj = engine::run(&sc, 200).unwrap();
            assert_eq!(traj.monitors().len(), 200, "{}", sc.id);
            for m in traj.monitors() {
                for (label, r) in [
                    ("fejer", m.fejer),
                    ("descent_gap", m.descent_gap),
                    ("step_square", m.step_square),
                    ("value_gap", m.value_gap),
                ] {
                    assert!(r >= -1e-9, "{}: {label} = {r} at step {}", sc.id, m.step);
                }
            }
            for n in 0..200usize {
                assert!(
                    traj.values()[n + 1] <= traj.values()[n] + 1e-10,
                    "{}: values increased at step {n}",
                    sc.id
                );
            }
        }
    });
}

#[test]
fn criterion_04_liminf_modulus() {
    criterion(4, "a small step d(x_N, x_{N+1}) occurs inside every [L, Delta_b(k,L)]", || {
        for sc in shipped_scenarios() {
            let mut traj = engine::run(&sc, 0).unwrap();
            for k in 0..=10u64 {
                for l in [0u64, 10, 50] {
                    let delta = moduli::delta_liminf(&sc.b, &nat(k), &nat(l));
                    let delta = delta.to_u64().expect("desk-scale");
                    traj.extend_to(&sc, delta + 1).unwrap();
                    let threshold = 1.0 / (k as f64 + 1.0) + 1e-10;
                    let found = (l..=delta).any(|n| {
                        sc.space
                            .distance(&traj.points()[n as usize], &traj.points()[n as usize + 1])
                            .unwrap()
                            <= threshold
                    });
                    assert!(found, "{}: no small step in [{l}, {delta}] for k={k}", sc.id);
                }
            }
        }
    });
}

#[test]
fn criterion_05_value_convergence_rate() {
    criterion(5, "f(x_n) - min f <= 1/(k+1) for all sampled n >= beta(k)", || {
        for sc in shipped_scenarios() {
            let ctx = verify::bound_context(&sc).unwrap();
            let mut traj = engine::run(&sc, 0).unwrap();
            for k in 0..=10u64 {
                let beta = moduli::beta_rate(&ctx.b, &ctx.theta, &nat(k)).unwrap();
                let Some(beta) = beta.to_u64().filter(|b| *b <= 100_000) else {
                    continue; // deep harmonic rates are skipped by design
                };
                let threshold = 1.0 / (k as f64 + 1.0) + 1e-9;
                for n in [beta, beta + 7, beta + 97] {
                    traj.extend_to(&sc, n).unwrap();
                    let gap = traj.values()[n as usize] - sc.objective.known_min_value();
                    assert!(gap <= threshold, "{}: gap {gap} at n={n}, k={k}", sc.id);
                }
            }
        }
    });
}

#[test]
fn criterion_06_approximate_fixed_point_modulus() {
    criterion(6, "forward search finds N <= Phi(k) with af_membership(x_N, k)", || {
        for sc in shipped_scenarios() {
            let ctx = verify::bound_context(&sc).unwrap();
            let mut traj = engine::run(&sc, 0).unwrap();
            for k in 0..=8u64 {
                let phi = moduli::approx_point_modulus(&ctx, &nat(k)).unwrap();
                let mut witness = None;
                for n in 0..=2_000u64 {
                    traj.extend_to(&sc, n).unwrap();
                    if engine::af_membership(&sc, &traj.points()[n as usize], k).unwrap() {
                        witness = Some(n);
                        break;
                    }
                }
                let n = witness.unwrap_or_else(|| panic!("{}: no af point for k={k}", sc.id));
                assert!(Nat::from(n) <= phi, "{}: N={n} > Phi({k})={phi}", sc.id);
            }
        }
    });
}

#[test]
fn criterion_07_fejer_and_closedness_sampled() {
    criterion(7, "uniform Fejer and closedness moduli hold on 10^3 sampled points", || {
        let sc = shipped_scenarios().into_iter().find(|s| s.id == "quad-constant").unwrap();
        let p = sc.objective.known_minimizer().unwrap().clone();
        let mut traj = engine::run(&sc, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(107);

        // uniform Fejer: q in AF_{chi(n,m,r)} keeps windows almost monotone
        for _ in 0..500 {
            let n = rng.random_range(0..=20u64);
            let m = rng.random_range(0..=20u64);
            let r = rng.random_range(0..=10u64);
            let level = moduli::fejer_modulus(&nat(n), &nat(m), &nat(r)).to_u64().unwrap();
            // for this quadratic with gamma = 1, d(q, J q) = |q - p| / 2, so
            // radius 1.8/(level+1) keeps q inside AF_level
            let radius = 1.8 / (level as f64 + 1.0);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let rho = rng.random_range(0.0..radius);
            let q = pt(&[p.coords()[0] + rho * angle.cos(), p.coords()[1] + rho * angle.sin()]);
            assert!(engine::af_membership(&sc, &q, level).unwrap());
            traj.extend_to(&sc, n + m).unwrap();
            let d_n = sc.space.distance(&traj.points()[n as usize], &q).unwrap();
            for l in 0..=m {
                let d_nl = sc.space.distance(&traj.points()[(n + l) as usize], &q).unwrap();
                assert!(
                    d_nl <= d_n + 1.0 / (r as f64 + 1.0) + 1e-9,
                    "Fejer violated at n={n} l={l} r={r}"
                );
            }
        }

        // uniform closedness: q in AF_{2k+1}, d(p', q) <= 1/(4k+4) => p' in AF_k
        for _ in 0..500 {
            let k = rng.random_range(0..=10u64);
            let q_radius = 1.8 / (2.0 * k as f64 + 2.0);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let rho = rng.random_range(0.0..q_radius);
            let q = pt(&[p.coords()[0] + rho * angle.cos(), p.coords()[1] + rho * angle.sin()]);
            assert!(engine::af_membership(&sc, &q, 2 * k + 1).unwrap());
            let step = rng.random_range(0.0..1.0 / (4.0 * k as f64 + 4.0));
            let angle2 = rng.random_range(0.0..std::f64::consts::TAU);
            let p2 = pt(&[q.coords()[0] + step * angle2.cos(), q.coords()[1] + step * angle2.sin()]);
            assert!(
                engine::af_membership(&sc, &p2, k).unwrap(),
                "closedness violated at k={k}"
            );
        }
    });
}

#[test]
fn criterion_08_metastability_certification_grid() {
    criterion(8, "Psi (k <= 5) and Omega (k <= 3) certified over the full scenario x g grid", || {
        let opts = VerifyOptions::default();
        let scenarios = shipped_scenarios();
        assert!(scenarios.len() >= 10);
        for sc in &scenarios {
            for g in CounterexampleFn::catalog() {
                for k in 0..=5u64 {
                    let report = verify::certify_psi(sc, k, &g, &opts).unwrap();
                    assert!(
                        report.holds,
                        "{}: psi trial failed at k={k} g={} witness={:?} bound={}",
                        sc.id,
                        g.describe(),
                        report.witness_n,
                        report.bound
                    );
                }
                for k in 0..=3u64 {
                    let report = verify::certify_omega(sc, k, &g, &opts).unwrap();
                    assert!(
                        report.holds,
                        "{}: omega trial failed at k={k} g={}",
                        sc.id,
                        g.describe()
                    );
                }
            }
        }
    });
}

// ---- naive oracle interpreter for criterion 9 ----------------------------

/// Plain-loop transcription of the bound recursions, sharing no code with
/// the library: rationals only for the ceilings, explicit scans everywhere.
mod oracle {
    use super::*;

    pub struct Inputs {
        pub b: Rat,
        pub theta: Box<dyn Fn(u64) -> u64>,
        pub big_m: u64,
        pub alpha: u64,
    }

    fn ceil_rat(r: &Rat) -> u64 {
        r.ceil().to_integer().to_u64().expect("small oracle values")
    }

    pub fn delta(b: &Rat, k: u64, l: u64) -> u64 {
        let k1 = Rat::from_integer((k + 1).into());
        let lead = ceil_rat(&(b * b * &k1 * &k1));
        (lead + l).saturating_sub(1)
    }

    pub fn beta(inp: &Inputs, k: u64) -> u64 {
        let k1 = Rat::from_integer((k + 1).into());
        let arg = ceil_rat(&(&inp.b * &inp.b * k1 / Rat::from_integer(2.into())));
        let mut best = 0;
        for i in 0..=arg {
            best = best.max((inp.theta)(i));
        }
        best + 1
    }

    pub fn chi(g: &CounterexampleFn, n: u64, r: u64) -> u64 {
        let mut best = 0;
        for i in 0..=n {
            let gi = g.value(i);
            best = best.max((i + gi).saturating_sub(1)).max(gi * (r + 1));
        }
        best
    }

    pub fn phi(inp: &Inputs, k: u64) -> u64 {
        let k1 = Rat::from_integer((k + 1).into());
        let lead = ceil_rat(&(&inp.b * &inp.b * &k1 * &k1));
        let inner = ceil_rat(&(Rat::from_integer(2.into())
            * &k1
            * &k1
            * Rat::from_integer(inp.big_m.into())));
        lead + beta(inp, inner.saturating_sub(1))
    }

    pub fn psi(inp: &Inputs, k: u64, g: &CounterexampleFn) -> u64 {
        let mut v = 0;
        for _ in 0..inp.alpha {
            v = phi(inp, chi(g, v, 4 * k + 3));
        }
        v
    }

    pub fn omega(inp: &Inputs, k: u64, g: &CounterexampleFn) -> u64 {
        let mut v = 0;
        for _ in 0..inp.alpha {
            v = phi(inp, (2 * k + 1).max(chi(g, v, 8 * k + 8)));
        }
        v
    }
}

#[test]
fn criterion_09_differential_against_naive_oracle() {
    criterion(9, "library moduli match the naive oracle interpreter on 200 random inputs", || {
        // paired (closure, closed-form) divergence rates
        let thetas: Vec<(Box<dyn Fn() -> Box<dyn Fn(u64) -> u64>>, RateFn)> = vec![
            (
                Box::new(|| Box::new(|p: u64| p.saturating_sub(1))),
                RateFn::var().monus_fn(&RateFn::constant(1)),
            ),
            (Box::new(|| Box::new(|p: u64| 2 * p)), RateFn::var().mul(&RateFn::constant(2))),
            (
                Box::new(|| Box::new(|p: u64| p * p + 1)),
                RateFn::var().mul(&RateFn::var()).add(&RateFn::constant(1)),
            ),
        ];
        let bs = [rat(1, 1), rat(3, 2), rat(2, 1), rat(9, 4)];
        let gs = [
            CounterexampleFn::Constant(0),
            CounterexampleFn::Constant(2),
            CounterexampleFn::IdentityPlus(1),
            CounterexampleFn::table(vec![3, 1, 4]),
            CounterexampleFn::Doubling,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        for trial in 0..200 {
            let alpha = rng.random_range(0..=2u64);
            // the oracle's explicit scans need the second unrolling to stay
            // within u64 range, so deep trials use the tamest parameters
            let (b, theta_pick, big_m, k, g) = if alpha == 2 {
                (rat(1, 1), 0, 1, rng.random_range(0..=1u64), &gs[rng.random_range(0..4)])
            } else {
                (
                    bs[rng.random_range(0..bs.len())].clone(),
                    rng.random_range(0..thetas.len()),
                    rng.random_range(1..=2u64),
                    rng.random_range(0..=3u64),
                    &gs[rng.random_range(0..gs.len())],
                )
            };
            let (theta_mk, theta_fn) = &thetas[theta_pick];
            let l = rng.random_range(0..=5u64);

            let inp = oracle::Inputs {
                b: b.clone(),
                theta: theta_mk(),
                big_m,
                alpha,
            };
            let ctx = moduli::BoundContext::new(
                b.clone(),
                theta_fn.clone(),
                RateFn::constant(big_m),
                RateFn::constant(alpha),
            )
            .unwrap();

            assert_eq!(
                moduli::delta_liminf(&b, &nat(k), &nat(l)),
                nat(oracle::delta(&b, k, l)),
                "delta mismatch at trial {trial}"
            );
            assert_eq!(
                moduli::beta_rate(&b, theta_fn, &nat(k)).unwrap(),
                nat(oracle::beta(&inp, k)),
                "beta mismatch at trial {trial}"
            );
            assert_eq!(
                moduli::chi_g_sup(&g.rate_fn(), &nat(k), &nat(l)).unwrap(),
                nat(oracle::chi(g, k, l)),
                "chi mismatch at trial {trial}"
            );
            assert_eq!(
                moduli::approx_point_modulus(&ctx, &nat(k)).unwrap(),
                nat(oracle::phi(&inp, k)),
                "phi mismatch at trial {trial}"
            );
            assert_eq!(
                moduli::psi_rate(&ctx, &nat(k), &g.rate_fn()).unwrap(),
                nat(oracle::psi(&inp, k, g)),
                "psi mismatch at trial {trial}"
            );
            assert_eq!(
                moduli::omega_rate(&ctx, &nat(k), &g.rate_fn()).unwrap(),
                nat(oracle::omega(&inp, k, g)),
                "omega mismatch at trial {trial}"
            );
        }
    });
}

#[test]
fn criterion_10_hand_checked_bounds() {
    criterion(10, "Psi = 2 and Omega = 8 on the hand-unrolled configuration", || {
        let sc = shipped_scenarios().into_iter().find(|s| s.id == "hand-check").unwrap();
        let ctx = verify::bound_context(&sc).unwrap();
        let g0 = RateFn::constant(0);
        assert_eq!(moduli::psi_rate(&ctx, &nat(0), &g0).unwrap(), nat(2));
        assert_eq!(moduli::omega_rate(&ctx, &nat(0), &g0).unwrap(), nat(8));
    });
}

// keep the Trajectory import exercised even if criteria reorganize
#[allow(dead_code)]
fn _type_check(t: &Trajectory) -> usize {
    t.points().len()
}
