//! Fixed-tick episode simulation: pedestrians replay their recorded tracks and
//! the robot, if any, follows the selected planner.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::episode_log::{EpisodeLog, LogRow};
use crate::error::{Error, Result};
use crate::geometry::{AgentId, AgentState, Trajectory, Vec2};
use crate::metrics::Condition;
use crate::planner::{plan_tick, PlannerConfig, TickInput};
use crate::scenario::Scenario;
use crate::vfh::{vfh_tick, VfhConfig, VfhState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub planner: PlannerConfig,
    pub vfh: VfhConfig,
    /// Episodes with a robot stop after this multiple of the longer of the
    /// replay duration and the robot's straight-line travel time.
    pub tick_cap_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let planner = PlannerConfig::default();
        let vfh = VfhConfig::with_beta(planner.game.beta);
        Self {
            planner,
            vfh,
            tick_cap_factor: 3.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.planner.validate()?;
        self.vfh.validate()?;
        if !(self.tick_cap_factor > 0.0 && self.tick_cap_factor.is_finite()) {
            return Err(Error::Config("tick_cap_factor must be positive".into()));
        }
        Ok(())
    }

    /// Executive tick length: one replanning period.
    pub fn tick_dt(&self) -> f64 {
        self.planner.game.tick_dt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GoalReached,
    ReplayExhausted,
    TickCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub scenario: String,
    pub condition: Condition,
    pub tick_dt: f64,
    pub trajectories: BTreeMap<AgentId, Trajectory>,
    pub log: EpisodeLog,
    pub termination: Termination,
}

impl Episode {
    pub fn robot(&self) -> Option<&Trajectory> {
        self.trajectories.get(&AgentId::Robot)
    }

    pub fn pedestrians(&self) -> impl Iterator<Item = (&AgentId, &Trajectory)> {
        self.trajectories.iter().filter(|(id, _)| **id != AgentId::Robot)
    }

    /// True when every robot decision in the log was feasible.
    pub fn all_feasible(&self) -> bool {
        self.log.robot_rows().all(|r| r.feasible != Some(false))
    }
}

struct Recorder {
    tick_dt: f64,
    points: BTreeMap<AgentId, Vec<(i64, Vec2)>>,
    log: EpisodeLog,
}

impl Recorder {
    fn humans(&mut self, tick: i64, time: f64, humans: &[AgentState]) {
        for h in humans {
            self.points.entry(h.id).or_default().push((tick, h.position));
            self.log.push(LogRow::state(
                tick,
                time,
                h.id,
                h.position.x,
                h.position.y,
                h.heading,
                h.speed,
            ));
        }
    }

    fn finish(self) -> Result<(BTreeMap<AgentId, Trajectory>, EpisodeLog)> {
        let mut trajectories = BTreeMap::new();
        for (id, pts) in self.points {
            trajectories.insert(id, Trajectory::new(pts, self.tick_dt)?);
        }
        Ok((trajectories, self.log))
    }
}

/// Simulates one episode of `scenario` under `condition`.
pub fn run_episode(scenario: &Scenario, condition: Condition, cfg: &SimConfig) -> Result<Episode> {
    cfg.validate()?;
    let dt = cfg.tick_dt();
    let t0 = scenario.start_time();
    let mut rec = Recorder {
        tick_dt: dt,
        points: BTreeMap::new(),
        log: EpisodeLog::default(),
    };
    let time_of = |k: i64| t0 + k as f64 * dt;

    if condition == Condition::HumansOnly {
        let last = ((scenario.end_time() - t0) / dt + 1e-9).floor() as i64;
        for k in 0..=last {
            let t = time_of(k);
            rec.humans(k, t, &scenario.humans_at(t));
        }
        let (trajectories, log) = rec.finish()?;
        return Ok(Episode {
            scenario: scenario.name.clone(),
            condition,
            tick_dt: dt,
            trajectories,
            log,
            termination: Termination::ReplayExhausted,
        });
    }

    let mission = scenario
        .robot
        .as_ref()
        .ok_or_else(|| Error::Config(format!("scenario `{}` has no robot mission", scenario.name)))?;
    let speed = match mission.speed {
        Some(v) => v,
        None => scenario.mean_pedestrian_speed().ok_or_else(|| {
            Error::Config(format!(
                "scenario `{}` has no moving pedestrians; set the robot speed explicitly",
                scenario.name
            ))
        })?,
    };
    let travel = mission.start.distance(mission.goal) / speed;
    let max_ticks = (cfg.tick_cap_factor * scenario.replay_duration().max(travel) / dt).ceil() as i64;
    let beta = cfg.planner.game.beta;
    let grid = scenario.obstacles();

    let mut robot = AgentState::new(
        AgentId::Robot,
        mission.start,
        (mission.goal - mission.start).angle(),
        speed,
    );
    let mut pending = LogRow::state(0, t0, AgentId::Robot, 0.0, 0.0, 0.0, 0.0);
    let mut vfh_state = VfhState::default();
    let mut robot_pts = Vec::new();
    let mut reached = false;
    let termination;
    let mut k = 0i64;
    loop {
        let t = time_of(k);
        let humans = scenario.humans_at(t);
        rec.humans(k, t, &humans);
        let nearest = humans
            .iter()
            .map(|h| h.position.distance(robot.position))
            .fold(f64::INFINITY, f64::min);
        robot_pts.push((k, robot.position));
        rec.log.push(LogRow {
            tick: k,
            time: t,
            x: robot.position.x,
            y: robot.position.y,
            heading: robot.heading,
            speed: robot.speed,
            violation: nearest < beta,
            ..pending.clone()
        });
        if reached {
            termination = Termination::GoalReached;
            break;
        }
        if k >= max_ticks {
            termination = Termination::TickCap;
            break;
        }
        pending = LogRow::state(k + 1, 0.0, AgentId::Robot, 0.0, 0.0, 0.0, 0.0);
        match condition {
            Condition::GameTheoretic => {
                let input = TickInput {
                    robot: robot.clone(),
                    goal: mission.goal,
                    robot_speed: speed,
                    humans: &humans,
                    grid,
                };
                match plan_tick(&input, &cfg.planner, dt)? {
                    Some(out) => {
                        let r = &out.robot;
                        pending.branch = Some(r.branch);
                        pending.cost = Some([r.cost.goal_term, r.cost.smooth_term, r.cost.obstacle_term, r.cost.total]);
                        pending.nash_cost = r.nash_cost;
                        pending.decel_cost = r.decel_cost;
                        pending.feasible = Some(r.feasible);
                        robot = out.next_robot;
                        reached = out.reached_goal;
                    }
                    None => reached = true,
                }
            }
            Condition::Vfh => {
                let out = vfh_tick(&robot, mission.goal, speed, &humans, grid, &cfg.vfh, &mut vfh_state, dt);
                robot = out.next;
                reached = out.reached_goal;
            }
            Condition::HumansOnly => unreachable!("handled above"),
        }
        k += 1;
    }
    let (mut trajectories, log) = rec.finish()?;
    trajectories.insert(AgentId::Robot, Trajectory::new(robot_pts, dt)?);
    Ok(Episode {
        scenario: scenario.name.clone(),
        condition,
        tick_dt: dt,
        trajectories,
        log,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RobotSpec, Track};
    use approx::assert_abs_diff_eq;

    fn empty_mission() -> Scenario {
        Scenario::from_tracks(
            "empty",
            BTreeMap::new(),
            Some(RobotSpec {
                start: Vec2::new(0.0, 0.0),
                goal: Vec2::new(6.0, 0.0),
                speed: Some(1.0),
            }),
        )
        .unwrap()
    }

    #[test]
    fn empty_scene_goes_straight_and_arrives() {
        let s = empty_mission();
        let cfg = SimConfig::default();
        for cond in [Condition::GameTheoretic, Condition::Vfh] {
            let ep = run_episode(&s, cond, &cfg).unwrap();
            assert_eq!(ep.termination, Termination::GoalReached, "{cond}");
            let r = ep.robot().unwrap();
            assert!(r.points().all(|p| p.y.abs() < 1e-12));
            assert_eq!(r.last().unwrap().1, Vec2::new(6.0, 0.0));
            // 6 m at 0.5 m per tick
            assert_eq!(r.len(), 13);
        }
    }

    #[test]
    fn replay_only_passes_tracks_through() {
        let mut tracks = BTreeMap::new();
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.5).collect();
        let pts: Vec<Vec2> = (0..5).map(|k| Vec2::new(k as f64 * 0.6, 1.0)).collect();
        tracks.insert(AgentId::Human(1), Track::new(times, pts.clone()).unwrap());
        let s = Scenario::from_tracks("r", tracks, None).unwrap();
        let ep = run_episode(&s, Condition::HumansOnly, &SimConfig::default()).unwrap();
        let t = &ep.trajectories[&AgentId::Human(1)];
        assert_eq!(t.len(), 5);
        for ((_, p), q) in t.samples().iter().zip(&pts) {
            assert_abs_diff_eq!(p.x, q.x, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, q.y, epsilon = 1e-12);
        }
        assert!(run_episode(&s, Condition::GameTheoretic, &SimConfig::default()).is_err());
    }

    #[test]
    fn head_on_pedestrian_is_avoided() {
        let mut tracks = BTreeMap::new();
        let times: Vec<f64> = (0..=25).map(|k| k as f64 * 0.4).collect();
        let pts: Vec<Vec2> = (0..=25).map(|k| Vec2::new(10.0 - k as f64 * 0.4, 0.0)).collect();
        tracks.insert(AgentId::Human(1), Track::new(times, pts).unwrap());
        let s = Scenario::from_tracks(
            "headon",
            tracks,
            Some(RobotSpec {
                start: Vec2::new(0.0, 0.0),
                goal: Vec2::new(10.0, 0.0),
                speed: Some(1.0),
            }),
        )
        .unwrap();
        let ep = run_episode(&s, Condition::GameTheoretic, &SimConfig::default()).unwrap();
        assert_eq!(ep.termination, Termination::GoalReached);
        assert!(ep.all_feasible());
        assert!(ep.log.robot_rows().all(|r| !r.violation));
        assert!(ep.robot().unwrap().points().any(|p| p.y.abs() > 0.1));
    }

    #[test]
    fn episodes_are_deterministic() {
        let s = empty_mission();
        let cfg = SimConfig::default();
        let a = run_episode(&s, Condition::GameTheoretic, &cfg).unwrap();
        let b = run_episode(&s, Condition::GameTheoretic, &cfg).unwrap();
        assert_eq!(a.log.to_tsv(), b.log.to_tsv());
    }
}
