//! Hard constraints: vital-space separation between agents and staying out of
//! occupied cells.

use crate::config::CollisionSampling;
use crate::error::{Error, Result};
use crate::geometry::{AgentId, Trajectory, Vec2};
use crate::grid::ObstacleGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationReport {
    pub ok: bool,
    /// Earliest `(tick, other agent)` closer than the vital radius.
    pub first_violation: Option<(i64, AgentId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClearanceReport {
    pub ok: bool,
    pub first_violation: Option<i64>,
}

/// Verifies `‖p_i(t) − p_j(t)‖ ≥ beta` at every shared tick against every other trajectory.
/// All trajectories must cover the same tick range with the same `dt`.
pub fn check_agent_separation(
    traj: &Trajectory,
    others: &[(AgentId, &Trajectory)],
    beta: f64,
) -> Result<SeparationReport> {
    for (id, other) in others {
        if other.len() != traj.len()
            || other.first().map(|s| s.0) != traj.first().map(|s| s.0)
            || other.last().map(|s| s.0) != traj.last().map(|s| s.0)
            || other.dt != traj.dt
        {
            return Err(Error::InputDomain(format!(
                "trajectory of {id} does not share the tick range of the checked agent"
            )));
        }
    }
    let mut first: Option<(i64, AgentId)> = None;
    for (k, &(tick, p)) in traj.samples().iter().enumerate() {
        for (id, other) in others {
            let (otick, q) = other.samples()[k];
            if otick != tick {
                return Err(Error::InputDomain(format!("tick mismatch with {id}")));
            }
            if p.distance(q) < beta {
                first = Some((tick, *id));
                break;
            }
        }
        if first.is_some() {
            break;
        }
    }
    Ok(SeparationReport {
        ok: first.is_none(),
        first_violation: first,
    })
}

/// Verifies that no sampled position lies in an occupied cell.
pub fn check_obstacle_clearance(traj: &Trajectory, grid: &ObstacleGrid) -> ClearanceReport {
    let first = traj
        .samples()
        .iter()
        .find(|&&(_, p)| grid.is_occupied_at(p))
        .map(|&(t, _)| t);
    ClearanceReport {
        ok: first.is_none(),
        first_violation: first,
    }
}

/// Minimum distance between two points moving linearly over the same interval,
/// from `(a0, b0)` to `(a1, b1)`.
pub fn min_distance_linear(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    let r0 = a0 - b0;
    let dr = (a1 - a0) - (b1 - b0);
    let denom = dr.norm_squared();
    let s = if denom > 0.0 {
        (-r0.dot(dr) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (r0 + dr * s).norm()
}

/// Distance check for one step of two agents under the given sampling mode.
/// The step runs from `(a0, b0)` to `(a1, b1)`; the start is not checked.
#[inline]
pub(crate) fn step_separated(mode: CollisionSampling, a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2, required: f64) -> bool {
    match mode {
        CollisionSampling::Ticks => a1.distance(b1) >= required,
        CollisionSampling::Midpoint => {
            a1.distance(b1) >= required && a0.lerp(a1, 0.5).distance(b0.lerp(b1, 0.5)) >= required
        }
        CollisionSampling::Continuous => a1.distance(b1) >= required && min_distance_linear(a0, a1, b0, b1) >= required,
    }
}

/// Obstacle check for one step under the given sampling mode; the start is not checked.
#[inline]
pub(crate) fn step_clear(mode: CollisionSampling, a0: Vec2, a1: Vec2, grid: &ObstacleGrid) -> bool {
    match mode {
        CollisionSampling::Ticks => !grid.is_occupied_at(a1),
        CollisionSampling::Midpoint => !grid.is_occupied_at(a1) && !grid.is_occupied_at(a0.lerp(a1, 0.5)),
        CollisionSampling::Continuous => !grid.segment_hits(a0, a1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(start: Vec2, vel: Vec2, n: usize) -> Trajectory {
        Trajectory::from_points(0, (0..n).map(|k| start + vel * k as f64), 1.0).unwrap()
    }

    #[test]
    fn parallel_lines_are_separated() {
        let beta = 0.6;
        let a = line(Vec2::ZERO, Vec2::new(1.0, 0.0), 5);
        let b = line(Vec2::new(0.0, 2.0 * beta), Vec2::new(1.0, 0.0), 5);
        let r = check_agent_separation(&a, &[(AgentId::Human(2), &b)], beta).unwrap();
        assert!(r.ok);
        assert_eq!(r.first_violation, None);
    }

    #[test]
    fn head_on_violation_tick() {
        // 8 m apart closing at 2 m/tick: gaps 8, 6, 4, 2, 0 → first gap < 3 at tick 3
        let a = line(Vec2::ZERO, Vec2::new(1.0, 0.0), 5);
        let b = line(Vec2::new(8.0, 0.0), Vec2::new(-1.0, 0.0), 5);
        let r = check_agent_separation(&a, &[(AgentId::Human(9), &b)], 3.0).unwrap();
        assert!(!r.ok);
        assert_eq!(r.first_violation, Some((3, AgentId::Human(9))));
        // with beta 0.6 the crossing happens at tick 4
        let r = check_agent_separation(&a, &[(AgentId::Human(9), &b)], 0.6).unwrap();
        assert_eq!(r.first_violation, Some((4, AgentId::Human(9))));
    }

    #[test]
    fn vacuous_and_mismatched() {
        let a = line(Vec2::ZERO, Vec2::new(1.0, 0.0), 5);
        assert!(check_agent_separation(&a, &[], 0.6).unwrap().ok);
        let short = line(Vec2::ZERO, Vec2::new(1.0, 0.0), 4);
        assert!(check_agent_separation(&a, &[(AgentId::Human(1), &short)], 0.6).is_err());
    }

    #[test]
    fn clearance_cases() {
        let empty = ObstacleGrid::new(20, 20, 1.0, Vec2::ZERO).unwrap();
        let path = line(Vec2::new(0.5, 5.5), Vec2::new(1.0, 0.0), 8);
        assert!(check_obstacle_clearance(&path, &empty).ok);

        let mut g = empty.clone();
        g.set_occupied(3, 5, true); // tick 3 is at (3.5, 5.5)
        let r = check_obstacle_clearance(&path, &g);
        assert_eq!(r.first_violation, Some(3));

        // obstacle row directly above the path: hugging but outside
        let mut wall = empty.clone();
        for ix in 0..20 {
            wall.set_occupied(ix, 6, true);
        }
        assert!(check_obstacle_clearance(&path, &wall).ok);
    }

    #[test]
    fn linear_min_distance() {
        // crossing paths meet at the midpoint
        let d = min_distance_linear(
            Vec2::new(-1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, -1.0),
            Vec2::new(0.0, 1.0),
        );
        assert!(d < 1e-12);
        // ticks-only misses the crossing; continuous catches it
        let (a0, a1, b0, b1) = (
            Vec2::new(-1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(-1.0, 0.0),
        );
        assert!(!step_separated(CollisionSampling::Continuous, a0, a1, b0, b1, 0.5));
        assert!(!step_separated(CollisionSampling::Midpoint, a0, a1, b0, b1, 0.5));
        // swapping places: both endpoints are 2 m apart but they pass through each other
        assert!(step_separated(CollisionSampling::Ticks, a0, a1, b0, b1, 0.5));
        let (b0, b1) = (Vec2::new(1.0, 0.0), Vec2::new(3.0, 0.0));
        assert_eq!(min_distance_linear(a0, a1, b0, b1), 2.0);
    }

    proptest! {
        #[test]
        fn separation_is_symmetric(
            ax in -5.0..5.0f64, ay in -5.0..5.0f64, avx in -1.0..1.0f64, avy in -1.0..1.0f64,
            bx in -5.0..5.0f64, by in -5.0..5.0f64, bvx in -1.0..1.0f64, bvy in -1.0..1.0f64,
            beta in 0.1..2.0f64,
        ) {
            let a = line(Vec2::new(ax, ay), Vec2::new(avx, avy), 6);
            let b = line(Vec2::new(bx, by), Vec2::new(bvx, bvy), 6);
            let ab = check_agent_separation(&a, &[(AgentId::Human(2), &b)], beta).unwrap();
            let ba = check_agent_separation(&b, &[(AgentId::Human(1), &a)], beta).unwrap();
            prop_assert_eq!(ab.ok, ba.ok);
            prop_assert_eq!(ab.first_violation.map(|v| v.0), ba.first_violation.map(|v| v.0));
        }

        #[test]
        fn continuous_min_is_below_sampled(
            a0x in -3.0..3.0f64, a0y in -3.0..3.0f64, a1x in -3.0..3.0f64, a1y in -3.0..3.0f64,
            b0x in -3.0..3.0f64, b0y in -3.0..3.0f64, b1x in -3.0..3.0f64, b1y in -3.0..3.0f64,
        ) {
            let (a0, a1, b0, b1) = (Vec2::new(a0x, a0y), Vec2::new(a1x, a1y), Vec2::new(b0x, b0y), Vec2::new(b1x, b1y));
            let m = min_distance_linear(a0, a1, b0, b1);
            for k in 0..=20 {
                let s = k as f64 / 20.0;
                prop_assert!(m <= a0.lerp(a1, s).distance(b0.lerp(b1, s)) + 1e-12);
            }
        }
    }
}
