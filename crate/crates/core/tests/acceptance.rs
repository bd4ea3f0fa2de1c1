//! Acceptance suite. Every test prints one `PASS`/`FAIL` line for its criterion.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_6, PI};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use gtnav_core::batch::{run_batch, run_manifest, RunManifest};
use gtnav_core::config::default_gamma;
use gtnav_core::cost::{phi_goal, phi_obs, phi_smooth, total_cost, GoalEstimate};
use gtnav_core::geometry::{angle_diff, step_kinematics};
use gtnav_core::metrics::{closest_pedestrian_distance, path_length_ratio, path_regularity, Condition};
use gtnav_core::nash::{solve_nash, verify_equilibrium, NashGame, Player};
use gtnav_core::plan::roll_out;
use gtnav_core::planner::Branch;
use gtnav_core::scenario::Scenario;
use gtnav_core::scenario_config::load_scenario;
use gtnav_core::sim::{run_episode, Episode, SimConfig};
use gtnav_core::stats::{bootstrap, kruskal_wallis, levene, mann_whitney, mean, median_spread, Group};
use gtnav_core::synth::{corridor_junction, empty_arena, open_crossing, CrowdGenerator};
use gtnav_core::{ActionPlan, AgentId, AgentState, GameConfig, ObstacleGrid, Trajectory, Vec2};

const METRIC_SEED: u64 = 20240611;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Prints the criterion line and fails the test on `Err`.
fn criterion(n: u32, title: &str, check: impl FnOnce() -> Result<String, String>) {
    match check() {
        Ok(detail) => println!("PASS criterion {n} ({title}): {detail}"),
        Err(why) => {
            println!("FAIL criterion {n} ({title}): {why}");
            panic!("criterion {n} failed: {why}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: {a} vs {b} (tolerance {tol})"))
}

// 1 ---------------------------------------------------------------------

fn random_game(rng: &mut ChaCha8Rng, n: usize) -> (Vec<AgentState>, ObstacleGrid) {
    let states = (0..n)
        .map(|i| {
            let bearing = rng.random_range(-PI..PI);
            let r = rng.random_range(1.0..3.0);
            let p = Vec2::new(r * bearing.cos(), r * bearing.sin());
            let aim = Vec2::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
            let id = if i == 0 {
                AgentId::Robot
            } else {
                AgentId::Human(i as u32)
            };
            AgentState::new(id, p, (aim - p).angle(), rng.random_range(0.6..1.4))
        })
        .collect();
    let mut grid = ObstacleGrid::covering(Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0), 0.5).unwrap();
    if rng.random_bool(0.4) {
        let (ix, iy) = (rng.random_range(6..14), rng.random_range(6..14));
        for d in 0..3 {
            grid.set_occupied(ix + d, iy, true);
        }
    }
    (states, grid)
}

/// Minimum penalized cost over every plan in the action set, found by plain
/// enumeration, and the plans attaining it.
fn enumerate_best(game: &NashGame<'_>, id: AgentId, joint: &gtnav_core::nash::JointStrategy) -> (f64, Vec<ActionPlan>) {
    let cfg = game.config();
    let heading = game.player(id).unwrap().state.heading;
    let k = cfg.action_set.len();
    let total = k.pow(cfg.horizon as u32);
    let mut scored = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let offsets: Vec<f64> = (0..cfg.horizon)
            .map(|_| {
                let u = cfg.action_set[c % k];
                c /= k;
                u
            })
            .collect();
        let plan = ActionPlan::from_offsets(heading, &offsets);
        let e = game.evaluate(id, &plan, joint).unwrap();
        scored.push((e.cost.total + cfg.infeasibility_penalty * e.violations as f64, plan));
    }
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.abs().max(1.0);
    (
        best,
        scored.into_iter().filter(|s| s.0 <= best + tol).map(|s| s.1).collect(),
    )
}

#[test]
fn criterion_01_nash_matches_exhaustive_enumeration() {
    criterion(1, "Nash correctness", || {
        let started = Instant::now();
        let cfg = GameConfig {
            horizon: 2,
            gamma: default_gamma(2),
            ..GameConfig::default()
        };
        ensure(cfg.action_set.len() == 7, || "action set must have 7 offsets".into())?;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut converged, mut interacting) = (0, 0);
        for case in 0..30 {
            let n = if case % 2 == 0 { 2 } else { 3 };
            let (states, grid) = random_game(&mut rng, n);
            let players: Vec<Player> = states.into_iter().map(|s| Player::new(s, &grid, &cfg)).collect();
            let game = NashGame::new(players, &grid, &cfg).unwrap();
            let start = game.first_estimation();
            let (joint, report) = solve_nash(&game, &start).unwrap();
            if !report.converged {
                continue;
            }
            converged += 1;
            if joint.plans != start.plans {
                interacting += 1;
            }
            ensure(verify_equilibrium(&joint, &game).unwrap(), || {
                format!("case {case}: not an equilibrium")
            })?;
            for p in game.players() {
                let id = p.id();
                let (best, argmins) = enumerate_best(&game, id, &joint);
                let mine = &joint.plans[&id];
                let e = game.evaluate(id, mine, &joint).unwrap();
                let cost = e.cost.total + cfg.infeasibility_penalty * e.violations as f64;
                close(
                    cost,
                    best,
                    1e-9 * best.abs().max(1.0),
                    &format!("case {case} {id} cost"),
                )?;
                ensure(argmins.iter().any(|a| a == mine), || {
                    format!("case {case} {id}: plan not among the minimizers")
                })?;
            }
        }
        let elapsed = started.elapsed();
        ensure(converged >= 27, || format!("only {converged}/30 solves converged"))?;
        ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
        Ok(format!(
            "{converged}/30 converged, {interacting} moved off the first estimate, all match enumeration, {:.2} s",
            elapsed.as_secs_f64()
        ))
    });
}

// 2 ---------------------------------------------------------------------

fn robot_clearance(ep: &Episode) -> f64 {
    let robot = ep.robot().expect("robot trajectory");
    let mut d = f64::INFINITY;
    for (_, ped) in ep.pedestrians() {
        for &(k, p) in robot.samples() {
            if let Some(q) = ped.at(k) {
                d = d.min(p.distance(q));
            }
        }
    }
    d
}

#[test]
fn criterion_02_safety_invariant() {
    criterion(2, "safety invariant", || {
        let cfg = SimConfig::default();
        let beta = cfg.planner.game.beta;
        let mut scenes = CrowdGenerator::crossing().batch("safety", 48, 5).unwrap();
        scenes.push(load_scenario(&fixtures().join("plaza.toml")).unwrap());
        scenes.push(load_scenario(&fixtures().join("crossing.toml")).unwrap());
        let (mut all_feasible, mut flagged, mut min_clear) = (0, 0, f64::INFINITY);
        for s in &scenes {
            let ep = run_episode(s, Condition::GameTheoretic, &cfg).unwrap();
            for r in ep.log.robot_rows() {
                ensure(!r.violation || r.feasible == Some(false), || {
                    format!("{}: violation at tick {} on a tick reported feasible", s.name, r.tick)
                })?;
                if r.feasible == Some(false) {
                    flagged += 1;
                }
            }
            if ep.all_feasible() {
                all_feasible += 1;
                let d = robot_clearance(&ep);
                ensure(d >= beta, || {
                    format!("{}: all ticks feasible but clearance {d} < {beta}", s.name)
                })?;
                min_clear = min_clear.min(d);
            }
        }
        ensure(scenes.len() == 50, || "batch must hold 50 episodes".into())?;
        Ok(format!(
            "50 episodes, {all_feasible} fully feasible with min clearance {min_clear:.3} m >= {beta}, {flagged} ticks flagged infeasible"
        ))
    });
}

// 3 ---------------------------------------------------------------------

#[test]
fn criterion_03_branch_arbitration() {
    criterion(3, "branch arbitration", || {
        let cfg = SimConfig::default();
        let corridor = run_episode(&corridor_junction().unwrap(), Condition::GameTheoretic, &cfg).unwrap();
        let decel: Vec<_> = corridor
            .log
            .robot_rows()
            .filter(|r| r.branch == Some(Branch::Decelerate))
            .collect();
        ensure(!decel.is_empty(), || "corridor: Decelerate never selected".into())?;
        for r in &decel {
            let (d, n) = (
                r.decel_cost.ok_or("missing decel cost")?,
                r.nash_cost.ok_or("missing nash cost")?,
            );
            ensure(d <= n, || {
                format!("corridor tick {}: decel cost {d} > nash cost {n}", r.tick)
            })?;
        }

        let open = run_episode(&open_crossing().unwrap(), Condition::GameTheoretic, &cfg).unwrap();
        let count = |b: Branch| open.log.robot_rows().filter(|r| r.branch == Some(b)).count();
        let (nash, dec) = (count(Branch::NashGame), count(Branch::Decelerate));
        ensure(nash > dec, || {
            format!("open crossing: NashGame {nash} ticks vs Decelerate {dec}")
        })?;
        Ok(format!(
            "corridor: Decelerate on {} ticks, each at or below the Nash cost; open crossing: NashGame {nash} ticks, Decelerate {dec}",
            decel.len()
        ))
    });
}

// 4, 5 ------------------------------------------------------------------

struct MetricBatch {
    pr: BTreeMap<Condition, Vec<f64>>,
    cpd: BTreeMap<Condition, Vec<f64>>,
    elapsed: Duration,
    scenes: usize,
}

fn metric_batch() -> MetricBatch {
    let started = Instant::now();
    let scenes = CrowdGenerator::walkway().batch("walkway", 24, METRIC_SEED).unwrap();
    for s in &scenes {
        assert!(
            (3..=8).contains(&s.tracks.len()),
            "{} has {} pedestrians",
            s.name,
            s.tracks.len()
        );
    }
    let conds = [Condition::GameTheoretic, Condition::Vfh];
    let out = run_batch(&scenes, &conds, &SimConfig::default(), METRIC_SEED).unwrap();
    let mut pr: BTreeMap<Condition, Vec<f64>> = BTreeMap::new();
    let mut cpd: BTreeMap<Condition, Vec<f64>> = BTreeMap::new();
    for o in &out {
        pr.entry(o.summary.condition).or_default().push(o.summary.pr.unwrap());
        cpd.entry(o.summary.condition).or_default().push(o.summary.cpd.unwrap());
    }
    MetricBatch {
        pr,
        cpd,
        elapsed: started.elapsed(),
        scenes: scenes.len(),
    }
}

#[test]
fn criterion_04_metric_ordering() {
    criterion(4, "metric ordering", || {
        let b = metric_batch();
        let (gt, vfh) = (Condition::GameTheoretic, Condition::Vfh);
        let (pr_gt, pr_vfh) = (mean(&b.pr[&gt]), mean(&b.pr[&vfh]));
        let (cpd_gt, cpd_vfh) = (mean(&b.cpd[&gt]), mean(&b.cpd[&vfh]));
        ensure(b.scenes >= 20, || "fewer than 20 scenes".into())?;
        ensure(pr_gt > pr_vfh, || format!("mean PR GT {pr_gt} <= VFH {pr_vfh}"))?;
        ensure(cpd_gt > cpd_vfh, || format!("mean CPD GT {cpd_gt} <= VFH {cpd_vfh}"))?;
        ensure(b.elapsed < Duration::from_secs(300), || format!("took {:?}", b.elapsed))?;
        Ok(format!(
            "{} scenes: PR GT {pr_gt:.4} > VFH {pr_vfh:.4}, CPD GT {cpd_gt:.4} > VFH {cpd_vfh:.4}, {:.1} s",
            b.scenes,
            b.elapsed.as_secs_f64()
        ))
    });
}

#[test]
fn criterion_05_variability_direction() {
    criterion(5, "variability direction", || {
        let b = metric_batch();
        let (gt, vfh) = (&b.pr[&Condition::GameTheoretic], &b.pr[&Condition::Vfh]);
        let (s_gt, s_vfh) = (median_spread(gt), median_spread(vfh));
        let bf = levene(&[Group::new("GT", gt), Group::new("VFH", vfh)]).map_err(|e| e.to_string())?;
        ensure(s_vfh > s_gt, || format!("PR spread VFH {s_vfh} <= GT {s_gt}"))?;
        Ok(format!(
            "PR spread VFH {s_vfh:.4} > GT {s_gt:.4} (Brown-Forsythe W = {:.3}, p = {:.3})",
            bf.statistic, bf.p_value
        ))
    });
}

// 6 ---------------------------------------------------------------------

#[test]
fn criterion_06_empty_scene_optimality() {
    criterion(6, "empty-scene optimality", || {
        let s: Scenario = empty_arena(Vec2::new(1.0, 1.0), Vec2::new(9.0, 5.0), 1.0).unwrap();
        let ep = run_episode(&s, Condition::GameTheoretic, &SimConfig::default()).unwrap();
        let robot = ep.robot().unwrap();
        let plr = path_length_ratio(robot).map_err(|e| e.to_string())?;
        let pr = path_regularity(robot).map_err(|e| e.to_string())?;
        ensure(plr >= 0.999 && pr >= 0.999, || format!("PLR {plr}, PR {pr}"))?;
        Ok(format!("PLR {plr:.12}, PR {pr:.12}"))
    });
}

// 7 ---------------------------------------------------------------------

fn traj(points: &[(f64, f64)]) -> Trajectory {
    Trajectory::from_points(0, points.iter().map(|&(x, y)| Vec2::new(x, y)), 0.5).unwrap()
}

#[test]
fn criterion_07_metric_identities() {
    criterion(7, "metric identities", || {
        let plr = |t: &[(f64, f64)]| path_length_ratio(&traj(t)).unwrap();
        let pr = |t: &[(f64, f64)]| path_regularity(&traj(t)).unwrap();
        close(
            plr(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.5, 0.0)]),
            1.0,
            1e-9,
            "PLR straight",
        )?;
        close(
            plr(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]),
            2f64.sqrt() / 2.0,
            1e-9,
            "PLR right angle",
        )?;
        close(
            plr(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]),
            0.0,
            1e-9,
            "PLR loop",
        )?;
        close(
            pr(&[(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (2.0, 2.0)]),
            1.0,
            1e-9,
            "PR collinear",
        )?;
        close(
            pr(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]),
            0.5,
            1e-9,
            "PR 90 degree turn",
        )?;
        close(
            pr(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
            0.0,
            1e-9,
            "PR back and forth",
        )?;

        let robot = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        let still = traj(&[(0.0, 3.0); 5]);
        close(
            closest_pedestrian_distance(&robot, &[&still], 6.0).unwrap(),
            0.5,
            1e-9,
            "CPD static",
        )?;

        // one pedestrian closes to 0.5 m at tick 3, the other stays 2 m away
        let near = traj(&[(3.0, 3.5), (3.0, 2.5), (3.0, 1.5), (3.0, 0.5), (3.0, 1.5)]);
        let far = traj(&[(0.0, -2.0), (1.0, -2.0), (2.0, -2.0), (3.0, -2.0), (4.0, -2.0)]);
        let cpd = closest_pedestrian_distance(&robot, &[&near, &far], 10.0).unwrap();
        let mut scan = f64::INFINITY;
        for &(k, p) in robot.samples() {
            for o in [&near, &far] {
                scan = scan.min(p.distance(o.at(k).unwrap()));
            }
        }
        close(cpd, 0.05, 1e-9, "CPD approach")?;
        close(cpd, scan / 10.0, 1e-12, "CPD exhaustive scan")?;
        let meet = traj(&[(4.0, 2.0), (3.0, 1.0), (2.0, 0.0), (1.0, -1.0), (0.0, -2.0)]);
        close(
            closest_pedestrian_distance(&robot, &[&meet], 10.0).unwrap(),
            0.0,
            1e-9,
            "CPD coincident",
        )?;
        Ok("PLR, PR and CPD examples exact to 1e-9; CPD equals the exhaustive scan".into())
    });
}

// 8 ---------------------------------------------------------------------

#[derive(Deserialize)]
struct StatsCase {
    groups: Vec<Vec<f64>>,
    kruskal: [f64; 2],
    levene: [f64; 2],
    mann_whitney: [f64; 2],
}

#[derive(Deserialize)]
struct StatsReference {
    cases: Vec<StatsCase>,
}

#[test]
fn criterion_08_statistics_reference() {
    criterion(8, "statistics oracle equivalence", || {
        let text = std::fs::read_to_string(fixtures().join("stats_reference.json")).map_err(|e| e.to_string())?;
        let r: StatsReference = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure(r.cases.len() == 20, || {
            format!("{} datasets, expected 20", r.cases.len())
        })?;
        let mut worst: f64 = 0.0;
        for (i, c) in r.cases.iter().enumerate() {
            let names: Vec<String> = (0..c.groups.len()).map(|k| format!("g{k}")).collect();
            let g: Vec<Group> = c.groups.iter().zip(&names).map(|(v, n)| Group::new(n, v)).collect();
            let kw = kruskal_wallis(&g).map_err(|e| e.to_string())?;
            let lv = levene(&g).map_err(|e| e.to_string())?;
            let mw = mann_whitney(g[0], g[1]).map_err(|e| e.to_string())?;
            for (name, got, want) in [("H", kw, c.kruskal), ("W", lv, c.levene), ("U", mw, c.mann_whitney)] {
                close(got.statistic, want[0], 1e-6, &format!("dataset {i} {name}"))?;
                close(got.p_value, want[1], 1e-4, &format!("dataset {i} {name} p"))?;
                worst = worst.max((got.p_value - want[1]).abs());
            }
        }
        Ok(format!("20 datasets match; largest p difference {worst:.2e}"))
    });
}

// 9 ---------------------------------------------------------------------

#[test]
fn criterion_09_determinism() {
    criterion(9, "determinism", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let manifest = format!(
            "seed = 11\noutput = \"out\"\nconditions = [\"HO\", \"GT\", \"VFH\"]\nscenarios = [\"{}\", \"{}\"]\n\n\
             [[synthetic]]\npreset = \"crossing\"\ncount = 3\n",
            fixtures().join("plaza.toml").display(),
            fixtures().join("crossing.toml").display()
        );
        let mut tables = Vec::new();
        for run in ["a", "b"] {
            let base = dir.path().join(run);
            std::fs::create_dir_all(&base).unwrap();
            let m = RunManifest::parse(&manifest, "m.toml", &base).map_err(|e| e.to_string())?;
            run_manifest(&m).map_err(|e| e.to_string())?;
            tables.push((
                std::fs::read(base.join("out/metrics.tsv")).unwrap(),
                std::fs::read(base.join("out/stats.json")).unwrap(),
            ));
        }
        ensure(tables[0].0 == tables[1].0, || "metric tables differ".into())?;
        ensure(tables[0].1 == tables[1].1, || "stats reports differ".into())?;

        let data: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 * 0.1).collect();
        let a = bootstrap(&data, 15, 200, 99, mean).map_err(|e| e.to_string())?;
        let b = bootstrap(&data, 15, 200, 99, mean).map_err(|e| e.to_string())?;
        ensure(a.iter().map(|x| x.to_bits()).eq(b.iter().map(|x| x.to_bits())), || {
            "bootstrap not bit-stable".into()
        })?;
        Ok(format!(
            "two manifest runs give byte-identical metric tables ({} bytes); bootstrap bit-stable over 200 draws",
            tables[0].0.len()
        ))
    });
}

// 10 --------------------------------------------------------------------

#[test]
fn criterion_10_kinematics_and_cost() {
    criterion(10, "kinematics and cost", || {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let p = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let (h, v, dt) = (
                rng.random_range(-PI..PI),
                rng.random_range(0.0..2.0),
                rng.random_range(0.1..2.0),
            );
            let q = step_kinematics(p, h, v, dt).unwrap();
            close((q - p).norm(), v * dt, 1e-12, "step displacement")?;
        }
        let q = step_kinematics(Vec2::ZERO, FRAC_PI_6, 2.0, 0.5).unwrap();
        close(q.x, FRAC_PI_6.cos(), 1e-12, "step x")?;
        close(q.y, 0.5, 1e-12, "step y")?;

        let cfg = GameConfig::default();
        let mut grid = ObstacleGrid::covering(Vec2::new(-6.0, -6.0), Vec2::new(6.0, 6.0), 0.5).unwrap();
        grid.set_occupied(15, 14, true);
        grid.set_occupied(9, 4, true);
        let occupied: Vec<Vec2> = (0..grid.width())
            .flat_map(|ix| (0..grid.height()).map(move |iy| (ix, iy)))
            .filter(|&(ix, iy)| grid.is_occupied(ix, iy))
            .map(|(ix, iy)| grid.cell_center(ix, iy))
            .collect();
        for _ in 0..100 {
            let start = AgentState::new(
                AgentId::Human(1),
                Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
                rng.random_range(-PI..PI),
                rng.random_range(0.0..1.5),
            );
            let offsets: Vec<f64> = (0..cfg.horizon)
                .map(|_| cfg.action_set[rng.random_range(0..7)])
                .collect();
            let plan = ActionPlan::from_offsets(start.heading, &offsets);
            let goal = GoalEstimate {
                goal_point: Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
            };
            let c = total_cost(&plan, &start, &goal, &grid, &cfg, true).unwrap();
            let g = phi_goal(&plan, &start, &goal, &cfg).unwrap();
            let s = phi_smooth(&plan, start.heading, &cfg).unwrap();
            let o = phi_obs(&plan, &start, &grid, &cfg).unwrap().value;
            ensure(c.total == g + s + o, || {
                "total is not the exact sum of its terms".into()
            })?;
            ensure(c.goal_term == g && c.smooth_term == s && c.obstacle_term == o, || {
                "term mismatch".into()
            })?;

            // independent recomputation of each term
            let pts: Vec<Vec2> = roll_out(&start, &plan, &cfg).unwrap().points().collect();
            let mut prev = start.heading;
            let (mut g2, mut s2, mut o2) = (0.0, 0.0, 0.0);
            for k in 0..cfg.horizon {
                let p = pts[k + 1];
                g2 += cfg.gamma[k] * p.distance(goal.goal_point);
                s2 += (1.0 - cfg.gamma[k]) * angle_diff(plan.headings[k], prev).abs();
                prev = plan.headings[k];
                let d = occupied.iter().map(|c| p.distance(*c)).fold(f64::INFINITY, f64::min);
                o2 += cfg.rho / d.max(0.25);
            }
            close(g, g2, 1e-12, "goal term")?;
            close(s, s2, 1e-12, "smooth term")?;
            close(o, o2, 1e-12, "obstacle term")?;
        }

        let walker = AgentState::new(AgentId::Human(1), Vec2::ZERO, 0.0, 1.0);
        let goal = GoalEstimate {
            goal_point: Vec2::new(4.8, 0.0),
        };
        let hand = phi_goal(&ActionPlan::straight(0.0, 4), &walker, &goal, &cfg).unwrap();
        close(hand, 0.6 * 3.6 + 0.7 * 2.4 + 0.8 * 1.2, 1e-9, "gamma hand-sum")?;
        close(hand, 4.8, 1e-9, "gamma hand-sum")?;
        let turn = phi_smooth(&ActionPlan::from_offsets(0.0, &[FRAC_PI_6, 0.0, 0.0, 0.0]), 0.0, &cfg).unwrap();
        close(turn, 0.4 * FRAC_PI_6, 1e-12, "single turn")?;
        Ok(format!(
            "step norm exact to 1e-12; total = sum of terms on 100 random plans; gamma hand-sum {hand}"
        ))
    });
}
