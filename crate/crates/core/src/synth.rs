//! Synthetic scenes: random crossing crowds, a corridor with a side junction,
//! an open crossing and an empty arena.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AgentId, Vec2};
use crate::grid::ObstacleGrid;
use crate::scenario::{RobotSpec, Scenario, Track};

/// Samples a straight walk from `from` to `to` at `speed`, one point every
/// `frame_dt` seconds starting at `t0`, always ending exactly at `to`.
pub fn straight_track(from: Vec2, to: Vec2, speed: f64, t0: f64, frame_dt: f64) -> Result<Track> {
    if !(speed > 0.0 && frame_dt > 0.0) {
        return Err(Error::InputDomain("speed and frame_dt must be positive".into()));
    }
    let total = from.distance(to) / speed;
    let n = (total / frame_dt).floor() as usize;
    let mut times = Vec::with_capacity(n + 2);
    let mut points = Vec::with_capacity(n + 2);
    for k in 0..=n {
        let t = k as f64 * frame_dt;
        times.push(t0 + t);
        points.push(from.lerp(to, if total > 0.0 { t / total } else { 1.0 }));
    }
    if total - n as f64 * frame_dt > 1e-9 {
        times.push(t0 + total);
        points.push(to);
    }
    Track::new(times, points)
}

/// Parameters of the random crowd generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrowdGenerator {
    /// Side of the square arena, meters.
    pub arena: f64,
    pub min_pedestrians: usize,
    pub max_pedestrians: usize,
    pub speed_range: (f64, f64),
    pub robot_speed: f64,
    /// Robot start and goal sit this far inside the left and right edges.
    pub robot_inset: f64,
    pub frame_dt: f64,
    /// Pedestrians never appear closer than this to the robot's start.
    pub spawn_clearance: f64,
    /// Share of pedestrians crossing the robot's line; the rest walk along it.
    pub crossing_share: f64,
    /// Share of the along-line walkers that come toward the robot.
    pub counterflow_share: f64,
    /// Half-width of the window, seconds, around the robot's passage in
    /// which a pedestrian reaches its meeting point.
    pub timing_jitter: f64,
}

impl Default for CrowdGenerator {
    fn default() -> Self {
        Self {
            arena: 14.0,
            min_pedestrians: 3,
            max_pedestrians: 8,
            speed_range: (0.8, 1.3),
            robot_speed: 1.0,
            robot_inset: 2.0,
            frame_dt: 0.4,
            spawn_clearance: 2.5,
            crossing_share: 0.75,
            counterflow_share: 1.0,
            timing_jitter: 2.5,
        }
    }
}

impl CrowdGenerator {
    /// Most pedestrians cross the robot's line; the rest come toward it.
    pub fn crossing() -> Self {
        Self::default()
    }

    /// Walkway traffic: everyone walks along the robot's line, half of them
    /// toward it.
    pub fn walkway() -> Self {
        Self {
            crossing_share: 0.0,
            counterflow_share: 0.5,
            timing_jitter: 3.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.arena > 2.0 * self.robot_inset && self.robot_inset > 0.0) {
            return Err(Error::Config("arena must be wider than twice the robot inset".into()));
        }
        if self.min_pedestrians == 0 || self.min_pedestrians > self.max_pedestrians {
            return Err(Error::Config("pedestrian count range is empty".into()));
        }
        let (lo, hi) = self.speed_range;
        if !(lo > 0.0 && hi >= lo) || !(self.robot_speed > 0.0 && self.frame_dt > 0.0) {
            return Err(Error::Config("speeds and frame_dt must be positive".into()));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.crossing_share) || !unit.contains(&self.counterflow_share) {
            return Err(Error::Config("flow shares must lie in [0, 1]".into()));
        }
        if !(self.timing_jitter >= 0.0) {
            return Err(Error::Config("timing_jitter must be nonnegative".into()));
        }
        Ok(())
    }

    fn robot(&self) -> RobotSpec {
        let mid = 0.5 * self.arena;
        RobotSpec {
            start: Vec2::new(self.robot_inset, mid),
            goal: Vec2::new(self.arena - self.robot_inset, mid),
            speed: Some(self.robot_speed),
        }
    }

    /// Where the line through `c` along `dir` leaves the arena, moving forward.
    fn exit_point(&self, c: Vec2, dir: Vec2) -> Vec2 {
        let (lo, hi) = (0.05, self.arena - 0.05);
        let mut s = f64::INFINITY;
        for (p, d) in [(c.x, dir.x), (c.y, dir.y)] {
            if d > 1e-12 {
                s = s.min((hi - p) / d);
            } else if d < -1e-12 {
                s = s.min((lo - p) / d);
            }
        }
        c + dir * s
    }

    /// One random scene. The same seed always yields the same scene.
    pub fn generate(&self, name: &str, seed: u64) -> Result<Scenario> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let robot = self.robot();
        let n = rng.random_range(self.min_pedestrians..=self.max_pedestrians);
        let mut tracks = BTreeMap::new();
        let mut id = 1u32;
        let mut attempts = 0;
        while tracks.len() < n {
            attempts += 1;
            if attempts > 1000 {
                return Err(Error::Config("could not place pedestrians".into()));
            }
            let speed = rng.random_range(self.speed_range.0..=self.speed_range.1);
            let cx = rng.random_range(robot.start.x + 2.0..robot.goal.x - 1.0);
            let c = Vec2::new(cx, robot.start.y + rng.random_range(-1.0..1.0));
            let heading = if rng.random_bool(self.crossing_share) {
                let side = if rng.random_bool(0.5) { FRAC_PI_2 } else { -FRAC_PI_2 };
                side + rng.random_range(-0.6..0.6)
            } else if rng.random_bool(self.counterflow_share) {
                PI + rng.random_range(-0.4..0.4)
            } else {
                rng.random_range(-0.4..0.4)
            };
            let dir = Vec2::from_angle(heading);
            let entry = self.exit_point(c, -dir);
            let exit = self.exit_point(c, dir);
            // the robot reaches x = cx at about this time
            let t_cross =
                (cx - robot.start.x) / self.robot_speed + rng.random_range(-self.timing_jitter..=self.timing_jitter);
            let mut t0 = t_cross - entry.distance(c) / speed;
            let mut from = entry;
            if t0 < 0.0 {
                from = entry + dir * (-t0 * speed);
                t0 = 0.0;
                if from.distance(exit) < 1.0 {
                    continue;
                }
            }
            if from.distance(robot.start) < self.spawn_clearance {
                continue;
            }
            tracks.insert(
                AgentId::Human(id),
                straight_track(from, exit, speed, t0, self.frame_dt)?,
            );
            id += 1;
        }
        // the episode clock starts with the first pedestrian
        let first = tracks.values().map(Track::start_time).fold(f64::INFINITY, f64::min);
        if first > 0.0 {
            for tr in tracks.values_mut() {
                let times = tr.times().iter().map(|t| t - first).collect();
                *tr = Track::new(times, tr.points().to_vec())?;
            }
        }
        let mut s = Scenario::from_tracks(name, tracks, Some(robot))?;
        s.bounds_min = Vec2::new(0.0, 0.0);
        s.bounds_max = Vec2::new(self.arena, self.arena);
        s.frame_dt = self.frame_dt;
        s.validate()?;
        Ok(s)
    }

    /// `count` scenes named `{prefix}-{i}`, scene `i` seeded with `seed + i`.
    pub fn batch(&self, prefix: &str, count: usize, seed: u64) -> Result<Vec<Scenario>> {
        (0..count)
            .map(|i| self.generate(&format!("{prefix}-{i:03}"), seed.wrapping_add(i as u64)))
            .collect()
    }
}

/// A 1.5 m wide corridor along x with a perpendicular junction of the same
/// width in the middle. One pedestrian walks through the junction and reaches
/// the corridor axis about when the robot arrives there.
pub fn corridor_junction() -> Result<Scenario> {
    let (w, h, half) = (16.0, 12.0, 0.75);
    let (cx, cy) = (8.0, 7.0);
    let mut grid = ObstacleGrid::covering(Vec2::new(0.0, 0.0), Vec2::new(w, h), 0.25)?;
    grid.fill_rect(Vec2::new(0.0, 0.0), Vec2::new(cx - half, cy - half));
    grid.fill_rect(Vec2::new(cx + half, 0.0), Vec2::new(w, cy - half));
    grid.fill_rect(Vec2::new(0.0, cy + half), Vec2::new(cx - half, h));
    grid.fill_rect(Vec2::new(cx + half, cy + half), Vec2::new(w, h));
    let mut tracks = BTreeMap::new();
    tracks.insert(
        AgentId::Human(1),
        straight_track(Vec2::new(cx, 0.5), Vec2::new(cx, h - 0.5), 1.0, 0.0, 0.4)?,
    );
    let robot = RobotSpec {
        start: Vec2::new(1.0, cy),
        goal: Vec2::new(w - 1.0, cy),
        speed: Some(1.0),
    };
    let mut s = Scenario::from_tracks("corridor-junction", tracks, Some(robot))?;
    s.bounds_min = Vec2::new(0.0, 0.0);
    s.bounds_max = Vec2::new(w, h);
    s.grid = Some(grid);
    s.frame_dt = 0.4;
    s.validate()?;
    Ok(s)
}

/// Open floor; one pedestrian crosses the robot's line at right angles.
pub fn open_crossing() -> Result<Scenario> {
    let mut tracks = BTreeMap::new();
    tracks.insert(
        AgentId::Human(1),
        straight_track(Vec2::new(7.0, 1.0), Vec2::new(7.0, 13.0), 1.0, 0.0, 0.4)?,
    );
    let robot = RobotSpec {
        start: Vec2::new(1.0, 7.0),
        goal: Vec2::new(13.0, 7.0),
        speed: Some(1.0),
    };
    let mut s = Scenario::from_tracks("open-crossing", tracks, Some(robot))?;
    s.bounds_min = Vec2::new(0.0, 0.0);
    s.bounds_max = Vec2::new(14.0, 14.0);
    s.frame_dt = 0.4;
    s.validate()?;
    Ok(s)
}

/// No pedestrians, no obstacles.
pub fn empty_arena(start: Vec2, goal: Vec2, speed: f64) -> Result<Scenario> {
    let s = Scenario::from_tracks(
        "empty",
        BTreeMap::new(),
        Some(RobotSpec {
            start,
            goal,
            speed: Some(speed),
        }),
    )?;
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn straight_track_ends_on_target() {
        let t = straight_track(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 1.0, 2.0, 0.4).unwrap();
        assert_eq!(t.times(), &[2.0, 2.4, 2.8, 3.0]);
        assert_eq!(*t.points().last().unwrap(), Vec2::new(1.0, 0.0));
        assert_abs_diff_eq!(t.mean_speed(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn crowd_is_seeded_and_bounded() {
        let g = CrowdGenerator::default();
        let a = g.batch("c", 10, 7).unwrap();
        let b = g.batch("c", 10, 7).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert!((3..=8).contains(&s.tracks.len()));
            assert_eq!(s.start_time(), 0.0);
            let start = s.robot.as_ref().unwrap().start;
            for h in s.humans_at(0.0) {
                assert!(h.position.distance(start) >= 2.5);
            }
        }
        assert_ne!(a[0], g.generate("c-000", 8).unwrap());
    }

    #[test]
    fn fixed_scenes_validate() {
        let c = corridor_junction().unwrap();
        assert!(c.obstacles().is_occupied_at(Vec2::new(3.0, 6.1)));
        assert!(!c.obstacles().is_occupied_at(Vec2::new(8.0, 3.0)));
        assert!(!c.obstacles().is_occupied_at(Vec2::new(3.0, 7.0)));
        open_crossing().unwrap();
        assert!(empty_arena(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), 1.0).is_err());
    }
}
