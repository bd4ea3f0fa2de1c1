//! Per-agent navigation cost: goal attraction, heading smoothness and the
//! soft obstacle penalty, plus the straight-ray goal estimate.

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::error::Result;
use crate::geometry::{advance, angle_diff, AgentState, Vec2};
use crate::grid::ObstacleGrid;
use crate::plan::{rollout_points, ActionPlan};

/// Estimated goal point of an agent within the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalEstimate {
    pub goal_point: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub goal_term: f64,
    pub smooth_term: f64,
    pub obstacle_term: f64,
    pub total: f64,
    /// Some obstacle distance was clamped to half a cell.
    pub obstacle_saturated: bool,
}

impl CostBreakdown {
    pub fn new(goal_term: f64, smooth_term: f64, obstacle_term: f64, obstacle_saturated: bool) -> Self {
        Self {
            goal_term,
            smooth_term,
            obstacle_term,
            total: goal_term + smooth_term + obstacle_term,
            obstacle_saturated,
        }
    }
}

/// Obstacle penalty plus whether the distance clamp engaged.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObstacleTerm {
    pub value: f64,
    pub saturated: bool,
}

/// Projects the agent along its observed heading for the whole horizon.
pub fn estimate_goal(agent: &AgentState, cfg: &GameConfig) -> GoalEstimate {
    let reach = agent.speed * cfg.horizon as f64 * cfg.dt;
    GoalEstimate {
        goal_point: agent.position + Vec2::from_angle(agent.heading) * reach,
    }
}

#[inline]
pub(crate) fn goal_step(gamma: f64, p: Vec2, goal: Vec2) -> f64 {
    gamma * p.distance(goal)
}

#[inline]
pub(crate) fn smooth_step(gamma: f64, heading: f64, prev_heading: f64) -> f64 {
    (1.0 - gamma) * angle_diff(heading, prev_heading).abs()
}

/// `ρ / ‖p − p_obs‖` with the denominator clamped to half a cell.
#[inline]
pub(crate) fn obstacle_step(rho: f64, p: Vec2, grid: &ObstacleGrid) -> ObstacleTerm {
    if rho == 0.0 {
        return ObstacleTerm::default();
    }
    match grid.nearest_obstacle_point(p) {
        None => ObstacleTerm::default(),
        Some(obs) => {
            let floor = 0.5 * grid.cell_size();
            let d = p.distance(obs);
            ObstacleTerm {
                value: rho / d.max(floor),
                saturated: d < floor,
            }
        }
    }
}

/// Weighted distance of the rolled-out positions to the goal estimate.
pub fn phi_goal(plan: &ActionPlan, start: &AgentState, goal: &GoalEstimate, cfg: &GameConfig) -> Result<f64> {
    plan.validate(start.heading, cfg)?;
    let pts = rollout_points(start.position, start.speed, plan, cfg.dt);
    Ok(pts[1..]
        .iter()
        .zip(&cfg.gamma)
        .map(|(&p, &g)| goal_step(g, p, goal.goal_point))
        .sum())
}

/// Complementarily weighted absolute heading changes; angle differences wrap onto (−π, π].
pub fn phi_smooth(plan: &ActionPlan, start_heading: f64, cfg: &GameConfig) -> Result<f64> {
    plan.validate(start_heading, cfg)?;
    let mut prev = start_heading;
    Ok(plan
        .headings
        .iter()
        .zip(&cfg.gamma)
        .map(|(&h, &g)| {
            let c = smooth_step(g, h, prev);
            prev = h;
            c
        })
        .sum())
}

/// Inverse-distance penalty to the nearest occupied cell at every horizon step.
pub fn phi_obs(plan: &ActionPlan, start: &AgentState, grid: &ObstacleGrid, cfg: &GameConfig) -> Result<ObstacleTerm> {
    plan.validate(start.heading, cfg)?;
    let pts = rollout_points(start.position, start.speed, plan, cfg.dt);
    let mut out = ObstacleTerm::default();
    for &p in &pts[1..] {
        let t = obstacle_step(cfg.rho, p, grid);
        out.value += t.value;
        out.saturated |= t.saturated;
    }
    Ok(out)
}

/// Whether the straight first-estimate path of `start` runs into an occupied cell.
/// The obstacle term only applies when it does.
pub fn obstacle_term_active(start: &AgentState, grid: &ObstacleGrid, cfg: &GameConfig) -> bool {
    first_estimate_obstacle(start, grid, cfg).is_some()
}

/// The obstacle point the straight first estimate runs into, if any.
pub fn first_estimate_obstacle(start: &AgentState, grid: &ObstacleGrid, cfg: &GameConfig) -> Option<Vec2> {
    if !grid.has_obstacles() {
        return None;
    }
    let mut pts = Vec::with_capacity(cfg.horizon + 1);
    let mut p = start.position;
    pts.push(p);
    for _ in 0..cfg.horizon {
        p = advance(p, start.heading, start.speed, cfg.dt);
        pts.push(p);
    }
    grid.first_hit_on_path(&pts)
        .map(|(_, hit)| grid.nearest_obstacle_point(hit).unwrap_or(hit))
}

/// Sum of the three terms; the obstacle term contributes only when `obstacle_term_active`.
pub fn total_cost(
    plan: &ActionPlan,
    start: &AgentState,
    goal: &GoalEstimate,
    grid: &ObstacleGrid,
    cfg: &GameConfig,
    obstacle_term_active: bool,
) -> Result<CostBreakdown> {
    let g = phi_goal(plan, start, goal, cfg)?;
    let s = phi_smooth(plan, start.heading, cfg)?;
    let o = if obstacle_term_active {
        phi_obs(plan, start, grid, cfg)?
    } else {
        ObstacleTerm::default()
    };
    Ok(CostBreakdown::new(g, s, o.value, o.saturated))
}
