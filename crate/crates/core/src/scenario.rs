//! Recorded scenes: replay tracks, world bounds, static obstacles and the
//! optional robot mission.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AgentId, AgentState, Vec2};
use crate::grid::ObstacleGrid;

const TIME_EPS: f64 = 1e-9;

/// Timed positions of one replayed agent, in seconds and meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    times: Vec<f64>,
    points: Vec<Vec2>,
}

impl Track {
    pub fn new(times: Vec<f64>, points: Vec<Vec2>) -> Result<Self> {
        if times.is_empty() || times.len() != points.len() {
            return Err(Error::InputDomain(
                "track needs matching, nonempty times and points".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InputDomain(
                "track times must be finite and strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InputDomain("track contains a non-finite point".into()));
        }
        Ok(Self { times, points })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.start_time() - TIME_EPS && t <= self.end_time() + TIME_EPS
    }

    /// Linearly interpolated position, or `None` outside the track's time span.
    pub fn position_at(&self, t: f64) -> Option<Vec2> {
        if !self.contains_time(t) {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Some(self.points[0]);
        }
        if k == self.times.len() {
            return Some(self.points[k - 1]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        Some(self.points[k - 1].lerp(self.points[k], s))
    }

    /// Velocity over the last recorded segment ending at or before `t`
    /// (the first segment before that). Zero for a single-sample track.
    pub fn velocity_at(&self, t: f64) -> Vec2 {
        if self.times.len() < 2 {
            return Vec2::ZERO;
        }
        let ended = self.times.partition_point(|&s| s <= t + TIME_EPS);
        let k = ended.saturating_sub(2).min(self.times.len() - 2);
        (self.points[k + 1] - self.points[k]) / (self.times[k + 1] - self.times[k])
    }

    /// Observed state at time `t`: interpolated position and backward-difference
    /// velocity. When standing still, the heading of the last motion is kept.
    pub fn state_at(&self, id: AgentId, t: f64) -> Option<AgentState> {
        let p = self.position_at(t)?;
        let v = self.velocity_at(t);
        let speed = v.norm();
        let heading = if speed > 1e-9 {
            v.angle()
        } else {
            self.last_heading_before(t)
        };
        Some(AgentState::new(id, p, heading, speed))
    }

    fn last_heading_before(&self, t: f64) -> f64 {
        let end = self.times.partition_point(|&s| s <= t + TIME_EPS).max(1);
        (1..end.min(self.points.len()))
            .rev()
            .map(|k| self.points[k] - self.points[k - 1])
            .find(|d| d.norm() > 1e-9)
            .map_or(0.0, |d| d.angle())
    }

    /// Polyline length.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Average speed over the whole track; zero for a single sample.
    pub fn mean_speed(&self) -> f64 {
        let d = self.duration();
        if d > 0.0 {
            self.length() / d
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub start: Vec2,
    pub goal: Vec2,
    /// Cruise speed; the scenario's mean pedestrian speed when absent.
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub bounds_min: Vec2,
    pub bounds_max: Vec2,
    pub grid: Option<ObstacleGrid>,
    pub tracks: BTreeMap<AgentId, Track>,
    pub robot: Option<RobotSpec>,
    /// Meters per raw dataset unit.
    pub scale: f64,
    /// Seconds per recorded frame.
    pub frame_dt: f64,
}

fn empty_grid() -> &'static ObstacleGrid {
    static EMPTY: OnceLock<ObstacleGrid> = OnceLock::new();
    EMPTY.get_or_init(ObstacleGrid::empty)
}

impl Scenario {
    /// Scenario whose bounds enclose every track point and the robot mission.
    pub fn from_tracks(
        name: impl Into<String>,
        tracks: BTreeMap<AgentId, Track>,
        robot: Option<RobotSpec>,
    ) -> Result<Self> {
        let mut pts: Vec<Vec2> = tracks.values().flat_map(|t| t.points().iter().copied()).collect();
        if let Some(r) = &robot {
            pts.push(r.start);
            pts.push(r.goal);
        }
        let (min, max) = bounding_box(&pts).unwrap_or((Vec2::ZERO, Vec2::new(1.0, 1.0)));
        let s = Self {
            name: name.into(),
            bounds_min: min,
            bounds_max: max,
            grid: None,
            tracks,
            robot,
            scale: 1.0,
            frame_dt: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn obstacles(&self) -> &ObstacleGrid {
        self.grid.as_ref().unwrap_or_else(|| empty_grid())
    }

    pub fn arena_diagonal(&self) -> f64 {
        self.bounds_max.distance(self.bounds_min)
    }

    pub fn start_time(&self) -> f64 {
        self.tracks
            .values()
            .map(Track::start_time)
            .min_by(f64::total_cmp)
            .unwrap_or(0.0)
    }

    pub fn end_time(&self) -> f64 {
        self.tracks
            .values()
            .map(Track::end_time)
            .max_by(f64::total_cmp)
            .unwrap_or(0.0)
    }

    /// Time from the first to the last recorded sample of any track.
    pub fn replay_duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Mean of the per-track average speeds of tracks that move at all.
    pub fn mean_pedestrian_speed(&self) -> Option<f64> {
        let speeds: Vec<f64> = self
            .tracks
            .values()
            .filter(|t| t.duration() > 0.0)
            .map(Track::mean_speed)
            .collect();
        if speeds.is_empty() {
            None
        } else {
            Some(speeds.iter().sum::<f64>() / speeds.len() as f64)
        }
    }

    /// Observed states of every replayed agent present at time `t`.
    pub fn humans_at(&self, t: f64) -> Vec<AgentState> {
        self.tracks.iter().filter_map(|(&id, tr)| tr.state_at(id, t)).collect()
    }

    fn inside(&self, p: Vec2) -> bool {
        let tol = 1e-9;
        p.x >= self.bounds_min.x - tol
            && p.y >= self.bounds_min.y - tol
            && p.x <= self.bounds_max.x + tol
            && p.y <= self.bounds_max.y + tol
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Validation("scale must be positive".into()));
        }
        if !(self.frame_dt > 0.0 && self.frame_dt.is_finite()) {
            return Err(Error::Validation("frame_dt must be positive".into()));
        }
        if !(self.bounds_min.is_finite() && self.bounds_max.is_finite())
            || self.bounds_max.x <= self.bounds_min.x
            || self.bounds_max.y <= self.bounds_min.y
        {
            return Err(Error::Validation("world bounds must have positive extent".into()));
        }
        for (id, tr) in &self.tracks {
            if !matches!(id, AgentId::Human(_)) {
                return Err(Error::Validation(format!("replay track id {id} is not a human id")));
            }
            if let Some(p) = tr.points().iter().find(|&&p| !self.inside(p)) {
                return Err(Error::Validation(format!(
                    "track {id} leaves the world bounds at ({:.3}, {:.3})",
                    p.x, p.y
                )));
            }
            if let Some(g) = &self.grid {
                let (lo, hi) = (g.origin(), g.extent_max());
                if let Some(p) = tr
                    .points()
                    .iter()
                    .find(|p| p.x < lo.x - 1e-9 || p.y < lo.y - 1e-9 || p.x > hi.x + 1e-9 || p.y > hi.y + 1e-9)
                {
                    return Err(Error::Validation(format!(
                        "track {id} point ({:.3}, {:.3}) lies outside the obstacle grid",
                        p.x, p.y
                    )));
                }
            }
        }
        if let Some(r) = &self.robot {
            if !(r.start.is_finite() && r.goal.is_finite()) {
                return Err(Error::Validation("robot start and goal must be finite".into()));
            }
            if r.start.distance(r.goal) < 1e-9 {
                return Err(Error::Validation("robot start equals its goal".into()));
            }
            if !self.inside(r.start) || !self.inside(r.goal) {
                return Err(Error::Validation("robot start or goal outside the world bounds".into()));
            }
            if let Some(v) = r.speed {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Validation("robot speed must be positive".into()));
                }
            }
            let grid = self.obstacles();
            if grid.is_occupied_at(r.start) || grid.is_occupied_at(r.goal) {
                return Err(Error::Validation("robot start or goal lies in an occupied cell".into()));
            }
        }
        Ok(())
    }
}

pub(crate) fn bounding_box(pts: &[Vec2]) -> Option<(Vec2, Vec2)> {
    let first = *pts.first()?;
    let (mut lo, mut hi) = (first, first);
    for p in pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if hi.x - lo.x < 1.0 {
        hi.x = lo.x + 1.0;
    }
    if hi.y - lo.y < 1.0 {
        hi.y = lo.y + 1.0;
    }
    Some((lo, hi))
}
