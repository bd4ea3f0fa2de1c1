//! Receding-horizon robot planner: group recognition, straight-line first
//! estimation, collision checking, branch arbitration between the game
//! solution and deceleration, and the robot update.

mod decel;
mod groups;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use decel::{decelerate_options, deceleration_pattern, DecelOutcome};
pub use groups::{recognize_groups, EffectiveAgent, GroupAssignment};

use crate::config::{CollisionSampling, GameConfig};
use crate::constraints::{step_clear, step_separated};
use crate::cost::CostBreakdown;
use crate::error::{Error, Result};
use crate::geometry::{advance, AgentId, AgentKind, AgentState, Vec2};
use crate::grid::ObstacleGrid;
use crate::nash::{tie_tolerance, BestResponseReport, Evaluation, JointStrategy, NashGame, Player};
use crate::plan::ActionPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    NashGame,
    Decelerate,
    IndividualOptimization,
    KeepStraight,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::NashGame => "nash",
            Branch::Decelerate => "decelerate",
            Branch::IndividualOptimization => "individual",
            Branch::KeepStraight => "straight",
        })
    }
}

impl FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nash" => Ok(Branch::NashGame),
            "decelerate" => Ok(Branch::Decelerate),
            "individual" => Ok(Branch::IndividualOptimization),
            "straight" => Ok(Branch::KeepStraight),
            _ => Err(Error::InputDomain(format!("unknown branch `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CollisionFlags {
    pub c_obs: bool,
    pub c_agents: bool,
    /// Earliest offending tick (1-based horizon tick).
    pub first_collision_tick: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerTickResult {
    pub chosen_plan: ActionPlan,
    pub branch: Branch,
    pub cost: CostBreakdown,
    /// Heading and speed factor of the first plan step.
    pub executed_action: (f64, f64),
    /// Whether the chosen plan satisfies every hard constraint in the planner's model.
    pub feasible: bool,
    /// Penalized cost of the game candidate, when it was considered.
    pub nash_cost: Option<f64>,
    /// Penalized cost of the best deceleration pattern, when it was considered.
    pub decel_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub game: GameConfig,
    /// Largest heading difference, radians, for two pedestrians to count as a group.
    pub group_heading_tolerance: f64,
    /// Robot body radius, meters; kept clear of every vital space.
    pub robot_radius: f64,
    /// Extra clearance on top of the body radius, meters.
    pub robot_margin: f64,
    pub decel_patterns: usize,
    /// Also compute decisions for pedestrians; only the robot's is executed.
    pub plan_for_humans: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            game: GameConfig {
                collision_sampling: CollisionSampling::Continuous,
                ..GameConfig::default()
            },
            group_heading_tolerance: std::f64::consts::FRAC_PI_6,
            robot_radius: 0.3,
            robot_margin: 0.1,
            decel_patterns: 16,
            plan_for_humans: true,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        if !(self.group_heading_tolerance >= 0.0) {
            return Err(Error::Config("group_heading_tolerance must be nonnegative".into()));
        }
        if !(self.robot_margin >= 0.0 && self.robot_margin.is_finite()) {
            return Err(Error::Config("robot_margin must be nonnegative".into()));
        }
        if !(self.robot_radius >= 0.0 && self.robot_radius.is_finite()) {
            return Err(Error::Config("robot_radius must be nonnegative".into()));
        }
        if self.decel_patterns < 1 {
            return Err(Error::Config("decel_patterns must be at least 1".into()));
        }
        Ok(())
    }
}

/// Straight plans for every player of the game.
pub fn first_estimation(game: &NashGame<'_>) -> JointStrategy {
    game.first_estimation()
}

/// Rolls out `joint` and reports whether `agent` loses separation with any
/// other player or touches an occupied cell.
pub fn check_collisions(agent: AgentId, joint: &JointStrategy, game: &NashGame<'_>) -> Result<CollisionFlags> {
    let rolls = game.rollouts(joint)?;
    let mine = rolls
        .get(&agent)
        .ok_or_else(|| Error::InputDomain(format!("agent {agent} is not a player")))?;
    let mode = game.config().collision_sampling;
    let mut flags = CollisionFlags::default();
    for k in 0..game.config().horizon {
        let mut hit = false;
        for (&other, q) in &rolls {
            if other == agent {
                continue;
            }
            let req = game.required_separation(agent, other).unwrap_or(game.config().beta);
            if !step_separated(mode, mine[k], mine[k + 1], q[k], q[k + 1], req) {
                flags.c_agents = true;
                hit = true;
            }
        }
        if !step_clear(mode, mine[k], mine[k + 1], game.grid()) {
            flags.c_obs = true;
            hit = true;
        }
        if hit && flags.first_collision_tick.is_none() {
            flags.first_collision_tick = Some(k + 1);
        }
    }
    Ok(flags)
}

/// Equilibrium of the current game, solved at most once per tick.
#[derive(Debug, Default)]
pub struct NashCache {
    solved: Option<(JointStrategy, BestResponseReport)>,
}

impl NashCache {
    pub fn get(
        &mut self,
        game: &NashGame<'_>,
        initial: &JointStrategy,
    ) -> Result<&(JointStrategy, BestResponseReport)> {
        if self.solved.is_none() {
            self.solved = Some(game.solve(initial)?);
        }
        Ok(self.solved.as_ref().expect("just solved"))
    }

    pub fn report(&self) -> Option<&BestResponseReport> {
        self.solved.as_ref().map(|s| &s.1)
    }
}

fn penalized(ev: &Evaluation, cfg: &GameConfig) -> f64 {
    ev.cost.total + cfg.infeasibility_penalty * ev.violations as f64
}

fn result(plan: ActionPlan, branch: Branch, ev: Evaluation) -> PlannerTickResult {
    let executed_action = (plan.headings[0], plan.speed_factors[0]);
    PlannerTickResult {
        chosen_plan: plan,
        branch,
        cost: ev.cost,
        executed_action,
        feasible: ev.feasible(),
        nash_cost: None,
        decel_cost: None,
    }
}

/// Picks the plan for `agent` given its collision flags on the straight
/// first estimate `joint`.
///
/// With an agent conflict, the game solution and the best deceleration
/// pattern compete and the lower cost wins; a tie keeps the game solution.
/// With only an obstacle conflict the agent optimizes alone. Otherwise the
/// straight plan is kept.
///
/// The controlled robot's candidates are always checked against the straight
/// predictions of everyone else, since pedestrians do not actually follow
/// their game plans. A game plan that conflicts with those predictions is
/// replaced by the robot's best response to them.
pub fn compute_solution(
    agent: AgentId,
    joint: &JointStrategy,
    flags: &CollisionFlags,
    game: &NashGame<'_>,
    cache: &mut NashCache,
    decel_patterns: usize,
) -> Result<PlannerTickResult> {
    let cfg = game.config();
    let player = game
        .player(agent)
        .ok_or_else(|| Error::InputDomain(format!("agent {agent} is not a player")))?;
    let is_robot = player.state.kind == AgentKind::ControlledRobot;

    if flags.c_agents {
        let (sol, _) = cache.get(game, joint)?;
        let mut gt_plan = sol.plans[&agent].clone();
        let reference = if is_robot { joint } else { sol };
        let mut gt_eval = game.evaluate(agent, &gt_plan, reference)?;
        if is_robot && !gt_eval.feasible() {
            let br = game.best_response(agent, joint)?;
            gt_eval = Evaluation {
                cost: br.cost,
                violations: br.violations,
            };
            gt_plan = br.plan;
        }
        let tick = flags.first_collision_tick.unwrap_or(1);
        let dec = decelerate_options(agent, joint, tick, game, decel_patterns)?;
        let gt_score = penalized(&gt_eval, cfg);
        let dec_score = penalized(&dec.evaluation, cfg);
        let mut out = if dec_score < gt_score - tie_tolerance(gt_score) {
            result(dec.plan, Branch::Decelerate, dec.evaluation)
        } else {
            result(gt_plan, Branch::NashGame, gt_eval)
        };
        out.nash_cost = Some(gt_score);
        out.decel_cost = Some(dec_score);
        return Ok(out);
    }

    if flags.c_obs {
        let mut solo = player.clone();
        solo.obstacle_term_active = true;
        let alone = NashGame::new(vec![solo.clone()], game.grid(), cfg)?;
        let br = alone.best_response(agent, &alone.first_estimation())?;
        let mut plan = br.plan;
        let mut ev = game.evaluate(agent, &plan, joint)?;
        if is_robot && !ev.feasible() {
            // same candidates, now also constrained by the pedestrians' predictions
            let mut players: Vec<Player> = game.players().iter().filter(|p| p.id() != agent).cloned().collect();
            players.push(solo);
            let constrained = NashGame::new(players, game.grid(), cfg)?;
            let br = constrained.best_response(agent, joint)?;
            plan = br.plan;
            ev = Evaluation {
                cost: br.cost,
                violations: br.violations,
            };
        }
        return Ok(result(plan, Branch::IndividualOptimization, ev));
    }

    let plan = joint.plans[&agent].clone();
    let ev = game.evaluate(agent, &plan, joint)?;
    Ok(result(plan, Branch::KeepStraight, ev))
}

/// What the planner sees at one replanning instant.
#[derive(Debug, Clone)]
pub struct TickInput<'a> {
    pub robot: AgentState,
    pub goal: Vec2,
    /// Cruise speed of the robot.
    pub robot_speed: f64,
    pub humans: &'a [AgentState],
    pub grid: &'a ObstacleGrid,
}

#[derive(Debug, Clone)]
pub struct TickOutcome {
    pub groups: GroupAssignment,
    pub flags: BTreeMap<AgentId, CollisionFlags>,
    pub decisions: BTreeMap<AgentId, PlannerTickResult>,
    pub robot: PlannerTickResult,
    pub nash_report: Option<BestResponseReport>,
    /// Robot state after executing its first action for `exec_dt` seconds.
    pub next_robot: AgentState,
    pub reached_goal: bool,
}

/// The robot as a game player: heading toward its goal, true goal, cruise speed.
pub fn robot_player(input: &TickInput<'_>, cfg: &PlannerConfig) -> Player {
    let bearing = (input.goal - input.robot.position).angle();
    let mut state = AgentState::new(AgentId::Robot, input.robot.position, bearing, input.robot_speed);
    state.kind = AgentKind::ControlledRobot;
    let mut p = Player::new(state, input.grid, &cfg.game)
        .with_goal(input.goal)
        .with_margin(cfg.robot_radius + cfg.robot_margin);
    p.radius = cfg.game.beta;
    p
}

/// One replanning step. Returns `None` when the robot already stands on its goal.
pub fn plan_tick(input: &TickInput<'_>, cfg: &PlannerConfig, exec_dt: f64) -> Result<Option<TickOutcome>> {
    if input.robot.position.distance(input.goal) < 1e-9 {
        return Ok(None);
    }
    if !(input.robot_speed > 0.0 && input.robot_speed.is_finite()) {
        return Err(Error::Config("robot speed must be positive".into()));
    }
    let groups = recognize_groups(input.humans, cfg.game.beta, cfg.group_heading_tolerance);
    let mut players = vec![robot_player(input, cfg)];
    for a in &groups.effective_agents {
        players.push(Player::new(a.state.clone(), input.grid, &cfg.game).with_radius(a.radius));
    }
    let game = NashGame::new(players, input.grid, &cfg.game)?;
    let joint = game.first_estimation();
    let mut cache = NashCache::default();
    let mut flags = BTreeMap::new();
    let mut decisions = BTreeMap::new();
    for p in game.players() {
        if p.id() != AgentId::Robot && !cfg.plan_for_humans {
            continue;
        }
        let f = check_collisions(p.id(), &joint, &game)?;
        let r = compute_solution(p.id(), &joint, &f, &game, &mut cache, cfg.decel_patterns)?;
        flags.insert(p.id(), f);
        decisions.insert(p.id(), r);
    }
    let robot = decisions[&AgentId::Robot].clone();

    let (heading, factor) = robot.executed_action;
    let speed = input.robot_speed * factor;
    let remaining = input.robot.position.distance(input.goal);
    let (position, reached_goal) = if speed > 0.0 && remaining <= speed * exec_dt {
        (input.goal, true)
    } else {
        (advance(input.robot.position, heading, speed, exec_dt), false)
    };
    let mut next_robot = AgentState::new(AgentId::Robot, position, heading, speed);
    next_robot.kind = AgentKind::ControlledRobot;

    Ok(Some(TickOutcome {
        groups,
        flags,
        decisions,
        robot,
        nash_report: cache.report().cloned(),
        next_robot,
        reached_goal,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn robot_at(x: f64, y: f64) -> AgentState {
        AgentState::new(AgentId::Robot, Vec2::new(x, y), 0.0, 1.0)
    }

    fn h(id: u32, x: f64, y: f64, heading: f64, speed: f64) -> AgentState {
        AgentState::new(AgentId::Human(id), Vec2::new(x, y), heading, speed)
    }

    #[test]
    fn empty_scene_moves_along_goal_ray() {
        let grid = ObstacleGrid::empty();
        let cfg = PlannerConfig::default();
        let input = TickInput {
            robot: robot_at(0.0, 0.0),
            goal: Vec2::new(4.8, 0.0),
            robot_speed: 1.0,
            humans: &[],
            grid: &grid,
        };
        let out = plan_tick(&input, &cfg, 0.5).unwrap().unwrap();
        assert_eq!(out.robot.branch, Branch::KeepStraight);
        assert_eq!(out.robot.executed_action, (0.0, 1.0));
        assert_abs_diff_eq!(out.next_robot.position.x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.next_robot.position.y, 0.0, epsilon = 1e-12);
        assert!(out.nash_report.is_none());
    }

    #[test]
    fn at_goal_is_noop() {
        let grid = ObstacleGrid::empty();
        let input = TickInput {
            robot: robot_at(1.0, 1.0),
            goal: Vec2::new(1.0, 1.0),
            robot_speed: 1.0,
            humans: &[],
            grid: &grid,
        };
        assert!(plan_tick(&input, &PlannerConfig::default(), 0.5).unwrap().is_none());
    }

    #[test]
    fn converging_rollouts_flag_tick() {
        // straight rollouts meet head-on; gap 5.0 − 2·1.2·k drops below 0.6 at tick 2
        let cfg = GameConfig::default();
        let grid = ObstacleGrid::empty();
        let game = NashGame::new(
            vec![
                Player::new(h(1, 0.0, 0.0, 0.0, 1.0), &grid, &cfg),
                Player::new(h(2, 5.0, 0.0, PI, 1.0), &grid, &cfg),
            ],
            &grid,
            &cfg,
        )
        .unwrap();
        let f = check_collisions(AgentId::Human(1), &game.first_estimation(), &game).unwrap();
        assert!(f.c_agents);
        assert!(!f.c_obs);
        assert_eq!(f.first_collision_tick, Some(2));
    }

    #[test]
    fn rollout_through_cell_flags_obstacle() {
        let cfg = GameConfig {
            collision_sampling: CollisionSampling::Continuous,
            ..GameConfig::default()
        };
        let mut grid = ObstacleGrid::new(100, 20, 0.1, Vec2::new(0.0, -1.0)).unwrap();
        grid.fill_rect(Vec2::new(2.0, -1.0), Vec2::new(2.2, 1.0));
        let game = NashGame::new(vec![Player::new(h(1, 0.0, 0.0, 0.0, 1.0), &grid, &cfg)], &grid, &cfg).unwrap();
        let f = check_collisions(AgentId::Human(1), &game.first_estimation(), &game).unwrap();
        assert!(f.c_obs);
        assert!(!f.c_agents);
        // cell band at x ∈ [2.0, 2.2) is first entered at tick 2 (x = 2.4)
        assert_eq!(f.first_collision_tick, Some(2));

        let mut cache = NashCache::default();
        let r = compute_solution(AgentId::Human(1), &game.first_estimation(), &f, &game, &mut cache, 16).unwrap();
        assert_eq!(r.branch, Branch::IndividualOptimization);
    }

    #[test]
    fn oncoming_pedestrian_triggers_arbitration() {
        let grid = ObstacleGrid::empty();
        let cfg = PlannerConfig::default();
        let humans = [h(1, 5.0, 0.0, PI, 1.0)];
        let input = TickInput {
            robot: robot_at(0.0, 0.0),
            goal: Vec2::new(10.0, 0.0),
            robot_speed: 1.0,
            humans: &humans,
            grid: &grid,
        };
        let out = plan_tick(&input, &cfg, 0.5).unwrap().unwrap();
        let r = &out.robot;
        assert!(matches!(r.branch, Branch::NashGame | Branch::Decelerate));
        assert!(r.feasible);
        let (gt, dec) = (r.nash_cost.unwrap(), r.decel_cost.unwrap());
        match r.branch {
            Branch::Decelerate => assert!(dec < gt),
            _ => assert!(gt <= dec + tie_tolerance(dec)),
        }
        assert_eq!(r.executed_action.0, r.chosen_plan.headings[0]);
        assert_eq!(r.executed_action.1, r.chosen_plan.speed_factors[0]);
    }

    #[test]
    fn branch_names_round_trip() {
        for b in [
            Branch::NashGame,
            Branch::Decelerate,
            Branch::IndividualOptimization,
            Branch::KeepStraight,
        ] {
            assert_eq!(b.to_string().parse::<Branch>().unwrap(), b);
        }
    }
}
