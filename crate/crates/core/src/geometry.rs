//! Planar geometry, agent state and the constant-heading kinematic step.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector along `angle`.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Direction of the vector; `atan2` conventions, result in (−π, π].
    pub fn angle(self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }

    pub fn lerp(self, other: Vec2, s: f64) -> Vec2 {
        self + (other - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps any finite angle onto (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    // rem_euclid can return TAU for tiny negative inputs
    if a <= -PI {
        a += TAU;
    }
    a
}

/// Signed difference `a − b` wrapped onto (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// Agent identity. Ordering puts the controlled robot first, then humans, then
/// merged group pseudo-agents; the best-response sweep follows this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentId {
    Robot,
    Human(u32),
    Group(u32),
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Robot => write!(f, "robot"),
            AgentId::Human(n) => write!(f, "h{n}"),
            AgentId::Group(n) => write!(f, "g{n}"),
        }
    }
}

impl FromStr for AgentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InputDomain(format!("invalid agent id `{s}`"));
        if s == "robot" {
            return Ok(AgentId::Robot);
        }
        let (prefix, rest) = s.split_at(s.len().min(1));
        let n: u32 = rest.parse().map_err(|_| bad())?;
        match prefix {
            "h" => Ok(AgentId::Human(n)),
            "g" => Ok(AgentId::Group(n)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    ScriptedHuman,
    ControlledRobot,
}

/// Observed state of one agent at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Vec2,
    /// Radians, kept on (−π, π].
    pub heading: f64,
    /// Meters per second, nonnegative.
    pub speed: f64,
    pub kind: AgentKind,
    pub group: Option<u32>,
}

impl AgentState {
    pub fn new(id: AgentId, position: Vec2, heading: f64, speed: f64) -> Self {
        let kind = match id {
            AgentId::Robot => AgentKind::ControlledRobot,
            _ => AgentKind::ScriptedHuman,
        };
        Self {
            id,
            position,
            heading: normalize_angle(heading),
            speed,
            kind,
            group: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.heading.is_finite() || !self.speed.is_finite() {
            return Err(Error::InputDomain(format!("agent {} has non-finite state", self.id)));
        }
        if self.speed < 0.0 {
            return Err(Error::InputDomain(format!("agent {} has negative speed", self.id)));
        }
        Ok(())
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }
}

/// Constant-heading, constant-speed motion over one step of length `dt`.
pub fn step_kinematics(pos: Vec2, heading: f64, speed: f64, dt: f64) -> Result<Vec2> {
    if !pos.is_finite() || !heading.is_finite() || !speed.is_finite() || !dt.is_finite() {
        return Err(Error::InputDomain("non-finite kinematic input".into()));
    }
    if dt <= 0.0 {
        return Err(Error::InputDomain(format!("dt must be positive, got {dt}")));
    }
    if speed < 0.0 {
        return Err(Error::InputDomain(format!("speed must be nonnegative, got {speed}")));
    }
    Ok(advance(pos, heading, speed, dt))
}

/// Unchecked kernel of [`step_kinematics`]; every rollout goes through here so
/// that positions are bit-identical regardless of the caller.
#[inline]
pub(crate) fn advance(pos: Vec2, heading: f64, speed: f64, dt: f64) -> Vec2 {
    let dist = speed * dt;
    Vec2::new(pos.x + dist * heading.cos(), pos.y + dist * heading.sin())
}

/// Ordered `(tick, position)` samples of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<(i64, Vec2)>,
    pub dt: f64,
}

impl Trajectory {
    pub fn new(samples: Vec<(i64, Vec2)>, dt: f64) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InputDomain(
                "trajectory ticks must be strictly increasing".into(),
            ));
        }
        if samples.iter().any(|(_, p)| !p.is_finite()) {
            return Err(Error::InputDomain("trajectory contains non-finite points".into()));
        }
        Ok(Self { samples, dt })
    }

    /// Consecutive ticks starting at `first_tick`.
    pub fn from_points(first_tick: i64, points: impl IntoIterator<Item = Vec2>, dt: f64) -> Result<Self> {
        let samples = points
            .into_iter()
            .enumerate()
            .map(|(k, p)| (first_tick + k as i64, p))
            .collect();
        Self::new(samples, dt)
    }

    pub fn samples(&self) -> &[(i64, Vec2)] {
        &self.samples
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(|&(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<(i64, Vec2)> {
        self.samples.first().copied()
    }

    pub fn last(&self) -> Option<(i64, Vec2)> {
        self.samples.last().copied()
    }

    /// Position at `tick`, if sampled.
    pub fn at(&self, tick: i64) -> Option<Vec2> {
        self.samples
            .binary_search_by_key(&tick, |&(t, _)| t)
            .ok()
            .map(|i| self.samples[i].1)
    }

    pub fn push(&mut self, tick: i64, p: Vec2) -> Result<()> {
        if let Some((last, _)) = self.samples.last() {
            if tick <= *last {
                return Err(Error::InputDomain(format!("tick {tick} not after {last}")));
            }
        }
        if !p.is_finite() {
            return Err(Error::InputDomain("non-finite trajectory point".into()));
        }
        self.samples.push((tick, p));
        Ok(())
    }

    /// Sum of segment lengths.
    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| w[0].1.distance(w[1].1)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn step_axis_aligned() {
        let p = step_kinematics(Vec2::ZERO, 0.0, 1.0, 1.2).unwrap();
        assert_abs_diff_eq!(p.x, 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn step_zero_speed_is_identity() {
        let p = step_kinematics(Vec2::new(1.0, 1.0), PI / 2.0, 0.0, 1.2).unwrap();
        assert_eq!(p, Vec2::new(1.0, 1.0));
    }

    #[test]
    fn step_oblique() {
        let p = step_kinematics(Vec2::ZERO, PI / 6.0, 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(p.x, (PI / 6.0).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn step_rejects_bad_input() {
        assert!(step_kinematics(Vec2::new(f64::NAN, 0.0), 0.0, 1.0, 1.0).is_err());
        assert!(step_kinematics(Vec2::ZERO, f64::INFINITY, 1.0, 1.0).is_err());
        assert!(step_kinematics(Vec2::ZERO, 0.0, -1.0, 1.0).is_err());
        assert!(step_kinematics(Vec2::ZERO, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn normalize_edges() {
        assert_eq!(normalize_angle(PI), PI);
        assert_abs_diff_eq!(normalize_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(-PI / 2.0 - TAU), -PI / 2.0, epsilon = 1e-12);
        assert_eq!(normalize_angle(0.0), 0.0);
    }

    #[test]
    fn agent_id_roundtrip_and_order() {
        for id in [AgentId::Robot, AgentId::Human(7), AgentId::Group(3)] {
            assert_eq!(id.to_string().parse::<AgentId>().unwrap(), id);
        }
        assert!(AgentId::Robot < AgentId::Human(0));
        assert!(AgentId::Human(u32::MAX) < AgentId::Group(0));
        assert!("x3".parse::<AgentId>().is_err());
        assert!("".parse::<AgentId>().is_err());
    }

    #[test]
    fn trajectory_requires_increasing_ticks() {
        assert!(Trajectory::new(vec![(0, Vec2::ZERO), (0, Vec2::ZERO)], 1.0).is_err());
        let t = Trajectory::from_points(3, [Vec2::ZERO, Vec2::new(3.0, 4.0)], 1.0).unwrap();
        assert_eq!(t.at(4), Some(Vec2::new(3.0, 4.0)));
        assert_eq!(t.at(5), None);
        assert_abs_diff_eq!(t.length(), 5.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn displacement_norm_is_speed_times_dt(
            x in -100.0..100.0f64, y in -100.0..100.0f64,
            h in -10.0..10.0f64, v in 0.0..5.0f64, dt in 0.01..3.0f64,
        ) {
            let p = Vec2::new(x, y);
            let q = step_kinematics(p, h, v, dt).unwrap();
            prop_assert!(((q - p).norm() - v * dt).abs() <= 1e-12 * (1.0 + x.abs() + y.abs()));
        }

        #[test]
        fn normalization_is_idempotent(a in -1e3..1e3f64) {
            let n = normalize_angle(a);
            prop_assert!(n > -PI && n <= PI);
            prop_assert_eq!(normalize_angle(n), n);
        }
    }
}
