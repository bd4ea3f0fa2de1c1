//! Model parameters shared by the cost function, the equilibrium solver and the planner.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the hard constraints are sampled between decision ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionSampling {
    /// Positions at decision ticks only.
    #[default]
    Ticks,
    /// Ticks plus the midpoint of every step.
    Midpoint,
    /// Exact minimum distance along each linear step; obstacles sampled at half-cell spacing.
    Continuous,
}

/// The seven heading offsets {−π/2, −π/3, −π/6, 0, π/6, π/3, π/2}.
pub fn default_action_set() -> Vec<f64> {
    vec![-PI / 2.0, -PI / 3.0, -PI / 6.0, 0.0, PI / 6.0, PI / 3.0, PI / 2.0]
}

/// Goal/smoothness balance per horizon step. The four-step schedule is
/// (0.6, 0.7, 0.8, 1.0); other horizons interpolate linearly from 0.6 to 1.0.
pub fn default_gamma(horizon: usize) -> Vec<f64> {
    match horizon {
        0 => Vec::new(),
        1 => vec![1.0],
        4 => vec![0.6, 0.7, 0.8, 1.0],
        n => (0..n).map(|k| 0.6 + 0.4 * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Decision step, seconds.
    pub dt: f64,
    /// Number of decision steps in the horizon.
    pub horizon: usize,
    /// Vital-space radius, meters.
    pub beta: f64,
    /// Obstacle weight.
    pub rho: f64,
    pub gamma: Vec<f64>,
    /// Heading offsets, radians. Must be symmetric and contain 0.
    pub action_set: Vec<f64>,
    pub max_br_iterations: usize,
    pub replan_hz: f64,
    pub collision_sampling: CollisionSampling,
    /// Penalty per violated step-constraint when no feasible plan exists.
    pub infeasibility_penalty: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            dt: 1.2,
            horizon: 4,
            beta: 0.6,
            rho: 1.0,
            gamma: default_gamma(4),
            action_set: default_action_set(),
            max_br_iterations: 20,
            replan_hz: 2.0,
            collision_sampling: CollisionSampling::Ticks,
            infeasibility_penalty: 1e6,
        }
    }
}

impl GameConfig {
    /// Default configuration with a different horizon and matching γ schedule.
    pub fn with_horizon(horizon: usize) -> Self {
        Self {
            horizon,
            gamma: default_gamma(horizon),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be nonnegative, got {}", self.rho));
        }
        if self.gamma.len() != self.horizon {
            return bad(format!(
                "gamma has {} entries but horizon is {}",
                self.gamma.len(),
                self.horizon
            ));
        }
        if self.gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return bad("gamma weights must lie in [0, 1]".into());
        }
        if self.action_set.is_empty() || !self.action_set.contains(&0.0) {
            return bad("action set must contain 0".into());
        }
        for &u in &self.action_set {
            if !u.is_finite() || !self.action_set.iter().any(|&w| (w + u).abs() < 1e-12) {
                return bad(format!("action set is not symmetric about 0 (offset {u})"));
            }
        }
        if self.max_br_iterations == 0 {
            return bad("max_br_iterations must be at least 1".into());
        }
        if !(self.replan_hz > 0.0 && self.replan_hz.is_finite()) {
            return bad(format!("replan_hz must be positive, got {}", self.replan_hz));
        }
        if !(self.infeasibility_penalty > 0.0) {
            return bad("infeasibility penalty must be positive".into());
        }
        Ok(())
    }

    /// Executive tick length, `1 / replan_hz`.
    pub fn tick_dt(&self) -> f64 {
        1.0 / self.replan_hz
    }

    /// Index of `offset` in the action set, within 1e-9 rad.
    pub fn action_index(&self, offset: f64) -> Option<usize> {
        self.action_set.iter().position(|&u| (u - offset).abs() < 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = GameConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.gamma, vec![0.6, 0.7, 0.8, 1.0]);
        assert_eq!(cfg.action_set.len(), 7);
        assert_eq!(cfg.tick_dt(), 0.5);
    }

    #[test]
    fn gamma_interpolates_for_other_horizons() {
        assert_eq!(default_gamma(2), vec![0.6, 1.0]);
        let g = default_gamma(3);
        assert!((g[1] - 0.8).abs() < 1e-15);
        assert_eq!(default_gamma(1), vec![1.0]);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let mut cfg = GameConfig::default();
        cfg.gamma.pop();
        assert!(cfg.validate().is_err());

        let cfg = GameConfig {
            action_set: vec![0.0, 0.3],
            ..GameConfig::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = GameConfig {
            action_set: vec![-0.3, 0.3],
            ..GameConfig::default()
        };
        assert!(cfg.validate().is_err());

        let cfg = GameConfig {
            beta: 0.0,
            ..GameConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
