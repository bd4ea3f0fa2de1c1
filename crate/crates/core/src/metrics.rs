//! Path-quality metrics: path length ratio, path regularity and closest
//! pedestrian distance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, Trajectory, Vec2};

/// Experimental condition of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Humans only.
    #[serde(rename = "HO")]
    HumansOnly,
    /// Humans and the game-theoretic robot.
    #[serde(rename = "GT")]
    GameTheoretic,
    /// Humans and the VFH+ robot.
    #[serde(rename = "VFH")]
    Vfh,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::HumansOnly, Condition::GameTheoretic, Condition::Vfh];

    pub fn label(self) -> &'static str {
        match self {
            Condition::HumansOnly => "HO",
            Condition::GameTheoretic => "GT",
            Condition::Vfh => "VFH",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HO" => Ok(Condition::HumansOnly),
            "GT" => Ok(Condition::GameTheoretic),
            "VFH" => Ok(Condition::Vfh),
            _ => Err(Error::Config(format!(
                "unknown condition `{s}` (expected HO, GT or VFH)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenario: String,
    pub condition: Condition,
    pub plr: f64,
    pub pr: f64,
    pub cpd: f64,
}

/// Straight-line start-to-end distance over traveled length.
pub fn path_length_ratio(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::UndefinedMetric(
            "path length ratio needs at least two samples".into(),
        ));
    }
    let length = traj.length();
    if length <= 0.0 {
        return Err(Error::UndefinedMetric("path length is zero".into()));
    }
    let (first, last) = (traj.first().expect("nonempty").1, traj.last().expect("nonempty").1);
    Ok((first.distance(last) / length).min(1.0))
}

/// `1 − Σ|turn| / (π·(n − 2))` over the interior vertices of the path with
/// repeated positions removed, clamped to [0, 1]. A path that never turns
/// (including one that only pauses) scores 1.
pub fn path_regularity(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::UndefinedMetric(
            "path regularity needs at least three samples".into(),
        ));
    }
    let mut pts: Vec<Vec2> = Vec::with_capacity(traj.len());
    for p in traj.points() {
        if pts.last().is_none_or(|q: &Vec2| q.distance(p) > 1e-12) {
            pts.push(p);
        }
    }
    if pts.len() < 3 {
        return Ok(1.0);
    }
    let turning: f64 = pts
        .windows(3)
        .map(|w| angle_diff((w[2] - w[1]).angle(), (w[1] - w[0]).angle()).abs())
        .sum();
    Ok((1.0 - turning / (PI * (pts.len() - 2) as f64)).clamp(0.0, 1.0))
}

/// Smallest robot–pedestrian distance over the ticks they share, divided by
/// the arena diagonal.
pub fn closest_pedestrian_distance(
    robot: &Trajectory,
    pedestrians: &[&Trajectory],
    arena_diagonal: f64,
) -> Result<f64> {
    if !(arena_diagonal > 0.0 && arena_diagonal.is_finite()) {
        return Err(Error::InputDomain("arena diagonal must be positive".into()));
    }
    if pedestrians.is_empty() {
        return Err(Error::UndefinedMetric("no pedestrians".into()));
    }
    let d = min_distance(robot, pedestrians)
        .ok_or_else(|| Error::UndefinedMetric("robot shares no tick with any pedestrian".into()))?;
    Ok(d / arena_diagonal)
}

/// Smallest distance between `robot` and any pedestrian at a shared tick.
pub fn min_distance(robot: &Trajectory, pedestrians: &[&Trajectory]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for &(tick, p) in robot.samples() {
        for ped in pedestrians {
            if let Some(q) = ped.at(tick) {
                let d = p.distance(q);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn traj(pts: &[(f64, f64)]) -> Trajectory {
        Trajectory::from_points(0, pts.iter().map(|&(x, y)| Vec2::new(x, y)), 0.5).unwrap()
    }

    #[test]
    fn plr_cases() {
        assert_abs_diff_eq!(
            path_length_ratio(&traj(&[(0.0, 0.0), (1.0, 0.0), (2.5, 0.0)])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let corner = path_length_ratio(&traj(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])).unwrap();
        assert_abs_diff_eq!(corner, std::f64::consts::SQRT_2 / 2.0, epsilon = 1e-12);
        let loop_ = path_length_ratio(&traj(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)])).unwrap();
        assert_abs_diff_eq!(loop_, 0.0, epsilon = 1e-12);
        assert!(matches!(
            path_length_ratio(&traj(&[(1.0, 1.0), (1.0, 1.0)])),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn pr_cases() {
        assert_abs_diff_eq!(
            path_regularity(&traj(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            path_regularity(&traj(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        let zigzag = traj(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        assert_abs_diff_eq!(path_regularity(&zigzag).unwrap(), 0.0, epsilon = 1e-12);
        assert!(path_regularity(&traj(&[(0.0, 0.0), (1.0, 0.0)])).is_err());
        // pauses do not count as turns
        let paused = traj(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_abs_diff_eq!(path_regularity(&paused).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cpd_cases() {
        let robot = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        let still = traj(&[(0.0, 2.0); 5]);
        assert_abs_diff_eq!(
            closest_pedestrian_distance(&robot, &[&still], 10.0).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        // second pedestrian comes within 0.5 m at tick 3
        let a = traj(&[(0.0, 5.0), (1.0, 5.0), (2.0, 5.0), (3.0, 5.0), (4.0, 5.0)]);
        let b = traj(&[(3.0, 3.0), (3.0, 2.0), (3.0, 1.0), (3.0, 0.5), (3.0, -0.5)]);
        assert_abs_diff_eq!(
            closest_pedestrian_distance(&robot, &[&a, &b], 10.0).unwrap(),
            0.05,
            epsilon = 1e-12
        );
        let same = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        assert_eq!(closest_pedestrian_distance(&robot, &[&same], 10.0).unwrap(), 0.0);
        assert!(matches!(
            closest_pedestrian_distance(&robot, &[], 10.0),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn condition_labels() {
        for c in Condition::ALL {
            assert_eq!(c.label().parse::<Condition>().unwrap(), c);
        }
        assert!("XX".parse::<Condition>().is_err());
    }

    proptest! {
        #[test]
        fn plr_at_most_one(pts in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..20)) {
            let t = traj(&pts);
            if let Ok(v) = path_length_ratio(&t) {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn pr_rigid_and_scale_invariant(
            pts in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..12),
            rot in -3.0..3.0f64, s in 0.1..10.0f64, dx in -5.0..5.0f64,
        ) {
            let t = traj(&pts);
            let moved: Vec<(f64, f64)> = pts
                .iter()
                .map(|&(x, y)| (s * (x * rot.cos() - y * rot.sin()) + dx, s * (x * rot.sin() + y * rot.cos())))
                .collect();
            let a = path_regularity(&t).unwrap();
            let b = path_regularity(&traj(&moved)).unwrap();
            prop_assert!((a - b).abs() < 1e-6);
        }

        #[test]
        fn cpd_rigid_invariant(
            r in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 4),
            p in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 4),
            rot in -3.0..3.0f64, dx in -5.0..5.0f64,
        ) {
            let f = |v: &Vec<(f64, f64)>| -> Vec<(f64, f64)> {
                v.iter().map(|&(x, y)| (x * rot.cos() - y * rot.sin() + dx, x * rot.sin() + y * rot.cos())).collect()
            };
            let a = closest_pedestrian_distance(&traj(&r), &[&traj(&p)], 20.0).unwrap();
            let b = closest_pedestrian_distance(&traj(&f(&r)), &[&traj(&f(&p))], 20.0).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let half = closest_pedestrian_distance(&traj(&r), &[&traj(&p)], 40.0).unwrap();
            prop_assert!((a - 2.0 * half).abs() < 1e-12);
        }
    }
}
