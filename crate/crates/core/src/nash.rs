//! Sequential best-response search for a pure-strategy Nash equilibrium over
//! the agents' discrete heading plans.
//!
//! Every player chooses one offset sequence from `action_set^horizon`. A best
//! response is found by exhaustive depth-first enumeration, pruning prefixes
//! that violate a hard constraint or whose partial cost already exceeds the
//! best complete plan. Players update in id order (robot first) until a full
//! pass changes nothing, a joint strategy repeats, or the pass budget runs out.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashSet};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::constraints::{step_clear, step_separated};
use crate::cost::{
    estimate_goal, goal_step, obstacle_step, obstacle_term_active, smooth_step, CostBreakdown, GoalEstimate,
};
use crate::error::{Error, Result};
use crate::geometry::{advance, normalize_angle, AgentId, AgentState, Vec2};
use crate::grid::ObstacleGrid;
use crate::plan::{rollout_points, ActionPlan};

/// Relative tolerance under which two plan costs count as tied.
pub const COST_TIE_TOLERANCE: f64 = 1e-9;

/// One participant of the navigation game.
#[derive(Debug, Clone, PartialEq)]
pub struct Player {
    pub state: AgentState,
    pub goal: GoalEstimate,
    /// Vital radius; a pair must stay `max(radius_i, radius_j)` apart.
    pub radius: f64,
    /// Extra clearance added on top of the vital radius for pairs involving this player.
    pub margin: f64,
    pub obstacle_term_active: bool,
}

impl Player {
    /// A pedestrian with the straight-ray goal estimate and radius `beta`.
    pub fn new(state: AgentState, grid: &ObstacleGrid, cfg: &GameConfig) -> Self {
        let goal = estimate_goal(&state, cfg);
        let active = obstacle_term_active(&state, grid, cfg);
        Self {
            state,
            goal,
            radius: cfg.beta,
            margin: 0.0,
            obstacle_term_active: active,
        }
    }

    pub fn with_goal(mut self, goal: Vec2) -> Self {
        self.goal = GoalEstimate { goal_point: goal };
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn id(&self) -> AgentId {
        self.state.id
    }

    fn required_separation(&self, other: &Player) -> f64 {
        self.radius.max(other.radius) + self.margin.max(other.margin)
    }
}

/// One plan per player plus the pass counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStrategy {
    pub plans: BTreeMap<AgentId, ActionPlan>,
    pub iteration: usize,
}

impl JointStrategy {
    /// Straight, full-speed plans for every player.
    pub fn straight<'p>(players: impl IntoIterator<Item = &'p Player>, horizon: usize) -> Self {
        Self {
            plans: players
                .into_iter()
                .map(|p| (p.id(), ActionPlan::straight(p.state.heading, horizon)))
                .collect(),
            iteration: 0,
        }
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for (id, plan) in &self.plans {
            id.hash(&mut h);
            for (a, f) in plan.headings.iter().zip(&plan.speed_factors) {
                a.to_bits().hash(&mut h);
                f.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// A best-response plan with its cost. `feasible` is false when every
/// candidate violates a hard constraint and the penalized fallback was used.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub plan: ActionPlan,
    pub offsets: Vec<usize>,
    pub cost: CostBreakdown,
    pub feasible: bool,
    pub violations: usize,
}

impl BestResponse {
    /// Cost plus the infeasibility penalty for each violated step-constraint.
    pub fn penalized_cost(&self, cfg: &GameConfig) -> f64 {
        self.cost.total + cfg.infeasibility_penalty * self.violations as f64
    }
}

/// Cost and constraint status of a given plan against fixed opponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub cost: CostBreakdown,
    pub violations: usize,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseReport {
    pub converged: bool,
    pub iterations_used: usize,
    pub cycle_detected: bool,
    pub per_agent_cost: BTreeMap<AgentId, CostBreakdown>,
    /// Players whose final plan is the penalized fallback.
    pub infeasible_agents: Vec<AgentId>,
}

/// Players, static obstacles and parameters of one game instance.
#[derive(Debug, Clone)]
pub struct NashGame<'a> {
    players: Vec<Player>,
    /// Action indices by increasing |offset|; good plans are found first and tighten the bound.
    search_order: Vec<usize>,
    grid: &'a ObstacleGrid,
    cfg: &'a GameConfig,
}

struct Leaf {
    cost: CostBreakdown,
    abs_offset: f64,
    offsets: Vec<usize>,
    violations: usize,
}

impl<'a> NashGame<'a> {
    pub fn new(mut players: Vec<Player>, grid: &'a ObstacleGrid, cfg: &'a GameConfig) -> Result<Self> {
        cfg.validate()?;
        players.sort_by_key(|p| p.id());
        if players.windows(2).any(|w| w[0].id() == w[1].id()) {
            return Err(Error::InputDomain("duplicate player id".into()));
        }
        for p in &players {
            p.state.validate()?;
        }
        let mut search_order: Vec<usize> = (0..cfg.action_set.len()).collect();
        search_order.sort_by(|&a, &b| {
            cfg.action_set[a]
                .abs()
                .total_cmp(&cfg.action_set[b].abs())
                .then(a.cmp(&b))
        });
        Ok(Self {
            players,
            search_order,
            grid,
            cfg,
        })
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, id: AgentId) -> Option<&Player> {
        self.players.iter().find(|p| p.id() == id)
    }

    pub fn config(&self) -> &GameConfig {
        self.cfg
    }

    pub fn grid(&self) -> &ObstacleGrid {
        self.grid
    }

    /// Required distance between two players: the larger vital radius plus the larger margin.
    pub fn required_separation(&self, a: AgentId, b: AgentId) -> Option<f64> {
        Some(self.player(a)?.required_separation(self.player(b)?))
    }

    /// Positions at ticks `0..=horizon` of every player under `joint`.
    pub fn rollouts(&self, joint: &JointStrategy) -> Result<BTreeMap<AgentId, Vec<Vec2>>> {
        self.players
            .iter()
            .map(|p| {
                let plan = joint
                    .plans
                    .get(&p.id())
                    .ok_or_else(|| Error::InputDomain(format!("joint strategy has no plan for {}", p.id())))?;
                Ok((
                    p.id(),
                    rollout_points(p.state.position, p.state.speed, plan, self.cfg.dt),
                ))
            })
            .collect()
    }

    /// Straight plans for every player.
    pub fn first_estimation(&self) -> JointStrategy {
        JointStrategy::straight(&self.players, self.cfg.horizon)
    }

    fn index_of(&self, id: AgentId) -> Result<usize> {
        self.players
            .iter()
            .position(|p| p.id() == id)
            .ok_or_else(|| Error::InputDomain(format!("agent {id} is not a player")))
    }

    /// Rolled-out positions and required separation of every opponent of `me`.
    fn opponents(&self, me: usize, joint: &JointStrategy) -> Result<Vec<(Vec<Vec2>, f64)>> {
        let mut out = Vec::with_capacity(self.players.len().saturating_sub(1));
        for (j, p) in self.players.iter().enumerate() {
            if j == me {
                continue;
            }
            let plan = joint
                .plans
                .get(&p.id())
                .ok_or_else(|| Error::InputDomain(format!("joint strategy has no plan for {}", p.id())))?;
            if plan.horizon() != self.cfg.horizon {
                return Err(Error::InputDomain(format!("plan of {} has the wrong horizon", p.id())));
            }
            out.push((
                rollout_points(p.state.position, p.state.speed, plan, self.cfg.dt),
                self.players[me].required_separation(p),
            ));
        }
        Ok(out)
    }

    /// Number of violated step-constraints of `pts` against the opponents.
    fn step_violations(&self, k: usize, a0: Vec2, a1: Vec2, opponents: &[(Vec<Vec2>, f64)]) -> usize {
        let mode = self.cfg.collision_sampling;
        let mut v = 0;
        for (q, req) in opponents {
            if !step_separated(mode, a0, a1, q[k], q[k + 1], *req) {
                v += 1;
            }
        }
        if !step_clear(mode, a0, a1, self.grid) {
            v += 1;
        }
        v
    }

    /// Cost and violation count of `plan` for player `id`, others fixed at `joint`.
    pub fn evaluate(&self, id: AgentId, plan: &ActionPlan, joint: &JointStrategy) -> Result<Evaluation> {
        let me = self.index_of(id)?;
        let opponents = self.opponents(me, joint)?;
        let player = &self.players[me];
        if plan.horizon() != self.cfg.horizon || plan.speed_factors.len() != self.cfg.horizon {
            return Err(Error::InputDomain("plan has the wrong horizon".into()));
        }
        let pts = rollout_points(player.state.position, player.state.speed, plan, self.cfg.dt);
        let (mut g, mut s, mut o, mut sat) = (0.0, 0.0, 0.0, false);
        let mut prev = player.state.heading;
        let mut violations = 0;
        for k in 0..self.cfg.horizon {
            let gamma = self.cfg.gamma[k];
            g += goal_step(gamma, pts[k + 1], player.goal.goal_point);
            s += smooth_step(gamma, plan.headings[k], prev);
            prev = plan.headings[k];
            if player.obstacle_term_active {
                let t = obstacle_step(self.cfg.rho, pts[k + 1], self.grid);
                o += t.value;
                sat |= t.saturated;
            }
            violations += self.step_violations(k, pts[k], pts[k + 1], &opponents);
        }
        Ok(Evaluation {
            cost: CostBreakdown::new(g, s, o, sat),
            violations,
        })
    }

    /// Exact best response of `id` to the other plans in `joint`.
    pub fn best_response(&self, id: AgentId, joint: &JointStrategy) -> Result<BestResponse> {
        let me = self.index_of(id)?;
        let opponents = self.opponents(me, joint)?;
        let mut leaves = Vec::new();
        let mut bound = f64::INFINITY;
        let mut prefix = Vec::with_capacity(self.cfg.horizon);
        self.search(
            me,
            &opponents,
            true,
            &mut prefix,
            SearchState::root(&self.players[me]),
            &mut bound,
            &mut leaves,
        );
        let feasible = !leaves.is_empty();
        if !feasible {
            bound = f64::INFINITY;
            self.search(
                me,
                &opponents,
                false,
                &mut prefix,
                SearchState::root(&self.players[me]),
                &mut bound,
                &mut leaves,
            );
        }
        let penalty = self.cfg.infeasibility_penalty;
        let chosen =
            select_leaf(&leaves, |l| l.cost.total + penalty * l.violations as f64).expect("action set is nonempty");
        let offsets: Vec<f64> = chosen.offsets.iter().map(|&i| self.cfg.action_set[i]).collect();
        Ok(BestResponse {
            plan: ActionPlan::from_offsets(self.players[me].state.heading, &offsets),
            offsets: chosen.offsets.clone(),
            cost: chosen.cost,
            feasible,
            violations: chosen.violations,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        me: usize,
        opponents: &[(Vec<Vec2>, f64)],
        prune_infeasible: bool,
        prefix: &mut Vec<usize>,
        st: SearchState,
        bound: &mut f64,
        leaves: &mut Vec<Leaf>,
    ) {
        let k = prefix.len();
        let cfg = self.cfg;
        let player = &self.players[me];
        if k == cfg.horizon {
            let cost = CostBreakdown::new(st.goal, st.smooth, st.obstacle, st.saturated);
            let score = cost.total + cfg.infeasibility_penalty * st.violations as f64;
            if score < *bound {
                *bound = score;
            }
            leaves.push(Leaf {
                cost,
                abs_offset: st.abs_offset,
                offsets: prefix.clone(),
                violations: st.violations,
            });
            return;
        }
        let gamma = cfg.gamma[k];
        for &i in &self.search_order {
            let u = cfg.action_set[i];
            let heading = normalize_angle(st.heading + u);
            let pos = advance(st.position, heading, player.state.speed * 1.0, cfg.dt);
            let violations = self.step_violations(k, st.position, pos, opponents);
            if prune_infeasible && violations > 0 {
                continue;
            }
            let mut next = SearchState {
                position: pos,
                heading,
                goal: st.goal + goal_step(gamma, pos, player.goal.goal_point),
                smooth: st.smooth + smooth_step(gamma, heading, st.heading),
                obstacle: st.obstacle,
                saturated: st.saturated,
                abs_offset: st.abs_offset + u.abs(),
                violations: st.violations + violations,
            };
            if player.obstacle_term_active {
                let t = obstacle_step(cfg.rho, pos, self.grid);
                next.obstacle += t.value;
                next.saturated |= t.saturated;
            }
            // every term is nonnegative, so a partial score past the bound cannot win
            let partial = next.goal + next.smooth + next.obstacle + cfg.infeasibility_penalty * next.violations as f64;
            if partial > *bound + tie_tolerance(*bound) {
                continue;
            }
            prefix.push(i);
            self.search(me, opponents, prune_infeasible, prefix, next, bound, leaves);
            prefix.pop();
        }
    }

    /// Runs best-response passes from `initial` until no plan changes.
    pub fn solve(&self, initial: &JointStrategy) -> Result<(JointStrategy, BestResponseReport)> {
        let mut joint = initial.clone();
        for p in &self.players {
            if !joint.plans.contains_key(&p.id()) {
                return Err(Error::InputDomain(format!(
                    "initial strategy lacks a plan for {}",
                    p.id()
                )));
            }
        }
        let mut seen = HashSet::new();
        seen.insert(joint.fingerprint());
        let mut converged = false;
        let mut cycle = false;
        let mut infeasible = BTreeMap::new();
        let mut passes = 0;
        while passes < self.cfg.max_br_iterations {
            passes += 1;
            let mut changed = false;
            for p in &self.players {
                let br = self.best_response(p.id(), &joint)?;
                infeasible.insert(p.id(), !br.feasible);
                if joint.plans[&p.id()] != br.plan {
                    joint.plans.insert(p.id(), br.plan);
                    changed = true;
                }
            }
            joint.iteration = passes;
            if !changed {
                converged = true;
                break;
            }
            if !seen.insert(joint.fingerprint()) {
                cycle = true;
                break;
            }
        }
        let mut per_agent_cost = BTreeMap::new();
        for p in &self.players {
            let ev = self.evaluate(p.id(), &joint.plans[&p.id()], &joint)?;
            per_agent_cost.insert(p.id(), ev.cost);
        }
        let report = BestResponseReport {
            converged,
            iterations_used: passes,
            cycle_detected: cycle,
            per_agent_cost,
            infeasible_agents: infeasible
                .into_iter()
                .filter(|&(_, bad)| bad)
                .map(|(id, _)| id)
                .collect(),
        };
        Ok((joint, report))
    }

    /// True iff no player has a feasible candidate plan that strictly lowers its
    /// own cost (beyond the tie tolerance) with the others held fixed.
    pub fn verify_equilibrium(&self, joint: &JointStrategy) -> Result<bool> {
        for (me, p) in self.players.iter().enumerate() {
            let plan = joint
                .plans
                .get(&p.id())
                .ok_or_else(|| Error::InputDomain(format!("joint strategy lacks a plan for {}", p.id())))?;
            let current = self.evaluate(p.id(), plan, joint)?;
            let opponents = self.opponents(me, joint)?;
            let mut leaves = Vec::new();
            let mut bound = f64::INFINITY;
            self.search(
                me,
                &opponents,
                true,
                &mut Vec::new(),
                SearchState::root(p),
                &mut bound,
                &mut leaves,
            );
            let Some(best) = leaves.iter().map(|l| l.cost.total).min_by(f64::total_cmp) else {
                continue;
            };
            if !current.feasible() {
                return Ok(false);
            }
            if best < current.cost.total - tie_tolerance(current.cost.total) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Clone, Copy)]
struct SearchState {
    position: Vec2,
    heading: f64,
    goal: f64,
    smooth: f64,
    obstacle: f64,
    saturated: bool,
    abs_offset: f64,
    violations: usize,
}

impl SearchState {
    fn root(p: &Player) -> Self {
        Self {
            position: p.state.position,
            heading: p.state.heading,
            goal: 0.0,
            smooth: 0.0,
            obstacle: 0.0,
            saturated: false,
            abs_offset: 0.0,
            violations: 0,
        }
    }
}

pub(crate) fn tie_tolerance(reference: f64) -> f64 {
    if reference.is_finite() {
        COST_TIE_TOLERANCE * (1.0 + reference.abs())
    } else {
        0.0
    }
}

/// Tie-breaking: lowest score; among scores within tolerance of it, smallest
/// total absolute offset; then the lexicographically smallest index sequence.
fn select_leaf(leaves: &[Leaf], score: impl Fn(&Leaf) -> f64) -> Option<&Leaf> {
    let min = leaves.iter().map(&score).min_by(f64::total_cmp)?;
    let tol = tie_tolerance(min);
    let tied = || leaves.iter().filter(|l| score(l) <= min + tol);
    let min_abs = tied().map(|l| l.abs_offset).min_by(f64::total_cmp)?;
    tied()
        .filter(|l| l.abs_offset <= min_abs + 1e-12)
        .min_by(|a, b| a.offsets.cmp(&b.offsets))
}

/// Convenience wrapper: best response of `agent` in `game`.
pub fn best_response(agent: AgentId, joint: &JointStrategy, game: &NashGame<'_>) -> Result<BestResponse> {
    game.best_response(agent, joint)
}

/// Convenience wrapper around [`NashGame::solve`].
pub fn solve_nash(game: &NashGame<'_>, initial: &JointStrategy) -> Result<(JointStrategy, BestResponseReport)> {
    game.solve(initial)
}

/// Convenience wrapper around [`NashGame::verify_equilibrium`].
pub fn verify_equilibrium(joint: &JointStrategy, game: &NashGame<'_>) -> Result<bool> {
    game.verify_equilibrium(joint)
}
