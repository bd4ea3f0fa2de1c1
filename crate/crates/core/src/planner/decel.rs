//! Speed-scaling alternatives to swerving.

use crate::error::{Error, Result};
use crate::geometry::AgentId;
use crate::nash::{tie_tolerance, Evaluation, JointStrategy, NashGame};
use crate::plan::ActionPlan;

#[derive(Debug, Clone, PartialEq)]
pub struct DecelOutcome {
    pub plan: ActionPlan,
    pub evaluation: Evaluation,
    /// Chosen pattern `k`; the speed factor from the collision step on is `k / (patterns − 1)`.
    pub pattern: usize,
    pub feasible: bool,
    /// Every pattern with its evaluation, from the highest `k` down.
    pub scored: Vec<(usize, Evaluation)>,
}

/// Keeps `base` and scales speed by `k / (patterns − 1)` from step
/// `collision_tick − 1` on.
pub fn deceleration_pattern(base: &ActionPlan, collision_tick: usize, k: usize, patterns: usize) -> ActionPlan {
    let factor = if patterns > 1 {
        k as f64 / (patterns - 1) as f64
    } else {
        1.0
    };
    let from = collision_tick.saturating_sub(1);
    let factors = (0..base.horizon())
        .map(|j| if j >= from { factor } else { 1.0 })
        .collect();
    base.clone().with_speed_factors(factors)
}

/// Scores every deceleration pattern of the agent's current plan in `joint`
/// against the other plans, and returns the cheapest feasible one. Patterns
/// are tried from no deceleration down to a full stop, so equal costs keep the
/// milder pattern. Without a feasible pattern the least-penalized one is
/// returned with `feasible = false`.
pub fn decelerate_options(
    agent: AgentId,
    joint: &JointStrategy,
    collision_tick: usize,
    game: &NashGame<'_>,
    patterns: usize,
) -> Result<DecelOutcome> {
    if patterns == 0 {
        return Err(Error::Config("at least one deceleration pattern is needed".into()));
    }
    let base = joint
        .plans
        .get(&agent)
        .ok_or_else(|| Error::InputDomain(format!("no plan for {agent}")))?;
    let penalty = game.config().infeasibility_penalty;
    let mut scored = Vec::with_capacity(patterns);
    let mut best: Option<(usize, ActionPlan, Evaluation)> = None;
    let mut best_infeasible: Option<(usize, ActionPlan, Evaluation)> = None;
    for k in (0..patterns).rev() {
        let plan = deceleration_pattern(base, collision_tick, k, patterns);
        let ev = game.evaluate(agent, &plan, joint)?;
        scored.push((k, ev));
        let slot = if ev.feasible() { &mut best } else { &mut best_infeasible };
        let score = ev.cost.total + penalty * ev.violations as f64;
        let replace = match slot {
            None => true,
            Some((_, _, b)) => {
                let bs = b.cost.total + penalty * b.violations as f64;
                score < bs - tie_tolerance(bs)
            }
        };
        if replace {
            *slot = Some((k, plan, ev));
        }
    }
    let feasible = best.is_some();
    let (pattern, plan, evaluation) = best.or(best_infeasible).expect("at least one pattern");
    Ok(DecelOutcome {
        plan,
        evaluation,
        pattern,
        feasible,
        scored,
    })
}
