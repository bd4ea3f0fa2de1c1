//! Horizon-length heading plans and their kinematic rollouts.

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::geometry::{advance, angle_diff, normalize_angle, AgentState, Trajectory, Vec2};

/// Absolute headings (and speed factors) for each step of the horizon.
///
/// Step `k` moves the agent from tick `k` to tick `k + 1` with heading
/// `headings[k]` at `speed * speed_factors[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub headings: Vec<f64>,
    pub speed_factors: Vec<f64>,
}

impl ActionPlan {
    /// Keep `heading` for `horizon` steps at full speed.
    pub fn straight(heading: f64, horizon: usize) -> Self {
        Self {
            headings: vec![normalize_angle(heading); horizon],
            speed_factors: vec![1.0; horizon],
        }
    }

    /// Accumulate heading offsets starting from `start_heading`.
    pub fn from_offsets(start_heading: f64, offsets: &[f64]) -> Self {
        let mut h = start_heading;
        let headings = offsets
            .iter()
            .map(|&u| {
                h = normalize_angle(h + u);
                h
            })
            .collect();
        Self {
            headings,
            speed_factors: vec![1.0; offsets.len()],
        }
    }

    pub fn with_speed_factors(mut self, factors: Vec<f64>) -> Self {
        self.speed_factors = factors;
        self
    }

    pub fn horizon(&self) -> usize {
        self.headings.len()
    }

    /// Per-step heading changes, wrapped onto (−π, π].
    pub fn offsets(&self, start_heading: f64) -> Vec<f64> {
        let mut prev = start_heading;
        self.headings
            .iter()
            .map(|&h| {
                let u = angle_diff(h, prev);
                prev = h;
                u
            })
            .collect()
    }

    /// Checks lengths, speed-factor range and action-set membership of every offset.
    pub fn validate(&self, start_heading: f64, cfg: &GameConfig) -> Result<()> {
        if self.headings.len() != cfg.horizon || self.speed_factors.len() != cfg.horizon {
            return Err(Error::InputDomain(format!(
                "plan has {} headings and {} speed factors, horizon is {}",
                self.headings.len(),
                self.speed_factors.len(),
                cfg.horizon
            )));
        }
        if self.speed_factors.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InputDomain("speed factors must lie in [0, 1]".into()));
        }
        if self.headings.iter().any(|h| !h.is_finite()) {
            return Err(Error::InputDomain("non-finite heading in plan".into()));
        }
        for (k, u) in self.offsets(start_heading).into_iter().enumerate() {
            if cfg.action_index(u).is_none() {
                return Err(Error::InputDomain(format!(
                    "heading offset {u:.6} at step {k} is not in the action set"
                )));
            }
        }
        Ok(())
    }
}

/// Positions at ticks `0..=horizon`, starting at `start`.
pub(crate) fn rollout_points(start: Vec2, speed: f64, plan: &ActionPlan, dt: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(plan.horizon() + 1);
    let mut p = start;
    out.push(p);
    for (&h, &f) in plan.headings.iter().zip(&plan.speed_factors) {
        p = advance(p, h, speed * f, dt);
        out.push(p);
    }
    out
}

/// Applies the kinematic step once per plan entry; returns `horizon + 1` samples.
pub fn roll_out(start: &AgentState, plan: &ActionPlan, cfg: &GameConfig) -> Result<Trajectory> {
    start.validate()?;
    plan.validate(start.heading, cfg)?;
    Trajectory::from_points(0, rollout_points(start.position, start.speed, plan, cfg.dt), cfg.dt)
}

/// Headings reachable in one step: `current + u` for every offset in the action set.
pub fn candidate_headings(current_heading: f64, cfg: &GameConfig) -> Vec<f64> {
    cfg.action_set
        .iter()
        .map(|&u| normalize_angle(current_heading + u))
        .collect()
}
