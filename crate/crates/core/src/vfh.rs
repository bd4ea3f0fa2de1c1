//! VFH+ reactive baseline: polar obstacle histogram with hysteresis, optional
//! turning mask, and valley-based steering selection.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{advance, angle_diff, normalize_angle, AgentState, Vec2};
use crate::grid::ObstacleGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VfhConfig {
    pub sector_count: usize,
    pub active_window_radius: f64,
    pub robot_radius: f64,
    pub safety_margin: f64,
    /// Radius of the disc each pedestrian occupies.
    pub pedestrian_radius: f64,
    pub low_threshold: f64,
    pub high_threshold: f64,
    /// Valleys wider than this many sectors are wide.
    pub wide_valley_sectors: usize,
    /// Weights on deviation from target, current heading and previous command.
    pub weights: [f64; 3],
    pub use_mask: bool,
    /// Turning radius for the mask stage, meters.
    pub min_turning_radius: f64,
}

impl Default for VfhConfig {
    fn default() -> Self {
        Self {
            sector_count: 72,
            active_window_radius: 3.0,
            robot_radius: 0.3,
            safety_margin: 0.1,
            pedestrian_radius: 0.6,
            low_threshold: 0.3,
            high_threshold: 0.5,
            wide_valley_sectors: 16,
            weights: [5.0, 2.0, 2.0],
            use_mask: false,
            min_turning_radius: 0.5,
        }
    }
}

impl VfhConfig {
    /// Defaults with the robot radius and pedestrian discs derived from `beta`.
    pub fn with_beta(beta: f64) -> Self {
        Self {
            robot_radius: beta / 2.0,
            pedestrian_radius: beta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sector_count < 4 {
            return Err(Error::Config("VFH needs at least 4 sectors".into()));
        }
        if !(self.active_window_radius > 0.0) {
            return Err(Error::Config("active window radius must be positive".into()));
        }
        if !(self.low_threshold <= self.high_threshold) || self.low_threshold < 0.0 {
            return Err(Error::Config("VFH thresholds must satisfy 0 ≤ low ≤ high".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("VFH weights must be nonnegative".into()));
        }
        if self.robot_radius < 0.0 || self.safety_margin < 0.0 || self.pedestrian_radius < 0.0 {
            return Err(Error::Config("VFH radii must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn sector_width(&self) -> f64 {
        TAU / self.sector_count as f64
    }

    /// Center angle of sector `k`; sector 0 is centered on heading 0.
    pub fn sector_angle(&self, k: usize) -> f64 {
        normalize_angle(k as f64 * self.sector_width())
    }

    pub fn sector_of(&self, angle: f64) -> usize {
        let k = (normalize_angle(angle) / self.sector_width()).round() as i64;
        k.rem_euclid(self.sector_count as i64) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarHistogram {
    pub sector_count: usize,
    pub sector_width: f64,
    pub magnitudes: Vec<f64>,
    /// `true` = blocked.
    pub binary: Vec<bool>,
    pub masked: Vec<bool>,
}

impl PolarHistogram {
    pub fn all_blocked(&self) -> bool {
        self.masked.iter().all(|&b| b)
    }
}

/// State carried between ticks: previous binary histogram and steering command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VfhState {
    pub previous_binary: Option<Vec<bool>>,
    pub previous_command: Option<f64>,
}

struct Source {
    direction: f64,
    magnitude: f64,
    half_width: f64,
    position: Vec2,
    enlarged: f64,
}

fn sources(robot: Vec2, humans: &[AgentState], grid: &ObstacleGrid, cfg: &VfhConfig) -> Vec<Source> {
    let r = cfg.active_window_radius;
    let enl = cfg.robot_radius + cfg.safety_margin;
    let mut out = Vec::new();
    let mut push = |center: Vec2, body: f64| {
        let d = center.distance(robot);
        let surface = (d - body).max(0.0);
        if surface > r || d <= 0.0 {
            if d <= 0.0 {
                // coincident: blocks everything
                out.push(Source {
                    direction: 0.0,
                    magnitude: 1.0,
                    half_width: PI,
                    position: center,
                    enlarged: body + enl,
                });
            }
            return;
        }
        let reach = body + enl;
        let half_width = if d <= reach { FRAC_PI_2 } else { (reach / d).asin() };
        out.push(Source {
            direction: (center - robot).angle(),
            magnitude: 1.0 - (surface / r).powi(2),
            half_width,
            position: center,
            enlarged: reach,
        });
    };
    for cell in grid.occupied_within(robot, r) {
        push(cell, 0.0);
    }
    for h in humans {
        push(h.position, cfg.pedestrian_radius);
    }
    out
}

/// Polar histogram around `robot`. Obstacle cells and pedestrian discs inside
/// the active window add `1 − (d/R)²` to every sector within their enlargement
/// angle. `previous` carries the hysteresis state of the binary stage.
pub fn build_histogram(
    robot: &AgentState,
    humans: &[AgentState],
    grid: &ObstacleGrid,
    cfg: &VfhConfig,
    previous: Option<&[bool]>,
) -> PolarHistogram {
    let n = cfg.sector_count;
    let w = cfg.sector_width();
    let srcs = sources(robot.position, humans, grid, cfg);
    let mut magnitudes = vec![0.0; n];
    for s in &srcs {
        for (k, m) in magnitudes.iter_mut().enumerate() {
            if angle_diff(cfg.sector_angle(k), s.direction).abs() <= s.half_width + 1e-12 {
                *m += s.magnitude;
            }
        }
    }
    let binary: Vec<bool> = (0..n)
        .map(|k| {
            let m = magnitudes[k];
            if m > cfg.high_threshold {
                true
            } else if m < cfg.low_threshold {
                false
            } else {
                previous.and_then(|p| p.get(k).copied()).unwrap_or(false)
            }
        })
        .collect();
    let masked = if cfg.use_mask {
        apply_mask(robot, &srcs, &binary, cfg)
    } else {
        binary.clone()
    };
    PolarHistogram {
        sector_count: n,
        sector_width: w,
        magnitudes,
        binary,
        masked,
    }
}

/// Blocks directions the robot cannot turn into without sweeping an obstacle,
/// given its turning radius.
fn apply_mask(robot: &AgentState, srcs: &[Source], binary: &[bool], cfg: &VfhConfig) -> Vec<bool> {
    let th = robot.heading;
    let rt = cfg.min_turning_radius;
    let right_c = robot.position + Vec2::new(th.sin(), -th.cos()) * rt;
    let left_c = robot.position + Vec2::new(-th.sin(), th.cos()) * rt;
    // limits measured as offsets from the heading, right negative, left positive
    let (mut right_limit, mut left_limit) = (-PI, PI);
    for s in srcs {
        let off = angle_diff(s.direction, th);
        if off <= 0.0 && s.position.distance(right_c) < rt + s.enlarged {
            right_limit = right_limit.max(off);
        }
        if off >= 0.0 && s.position.distance(left_c) < rt + s.enlarged {
            left_limit = left_limit.min(off);
        }
    }
    (0..cfg.sector_count)
        .map(|k| {
            let off = angle_diff(cfg.sector_angle(k), th);
            binary[k] || off < right_limit || off > left_limit
        })
        .collect()
}

/// Steering choice from the free valleys of `hist`; `None` means stop.
pub fn select_steering(
    hist: &PolarHistogram,
    target: f64,
    current: f64,
    previous: f64,
    cfg: &VfhConfig,
) -> Option<f64> {
    let n = hist.sector_count;
    let blocked = &hist.masked;
    if blocked.iter().all(|&b| b) {
        return None;
    }
    let mut candidates = Vec::new();
    let target_sector = cfg.sector_of(target);
    if !blocked[target_sector] {
        candidates.push(normalize_angle(target));
    }
    if blocked.iter().any(|&b| b) {
        // walk each circular run of free sectors, starting just after a blocked one
        let start = (0..n).find(|&k| blocked[k]).expect("some sector is blocked");
        let mut k = 0;
        while k < n {
            let idx = (start + 1 + k) % n;
            if blocked[idx] {
                k += 1;
                continue;
            }
            let first = idx;
            let mut len = 0;
            while k < n && !blocked[(start + 1 + k) % n] {
                len += 1;
                k += 1;
            }
            let last = (first + len - 1) % n;
            let w = hist.sector_width;
            if len <= cfg.wide_valley_sectors {
                let center = first as f64 * w + (len - 1) as f64 * w / 2.0;
                candidates.push(normalize_angle(center));
            } else {
                let half = (cfg.wide_valley_sectors / 2) as f64 * w;
                candidates.push(normalize_angle(first as f64 * w + half));
                candidates.push(normalize_angle(last as f64 * w - half));
            }
        }
    }
    let [m1, m2, m3] = cfg.weights;
    let key = |c: f64| {
        let dt = angle_diff(c, target).abs();
        let dc = angle_diff(c, current).abs();
        let dp = angle_diff(c, previous).abs();
        (m1 * dt + m2 * dc + m3 * dp, dt, dc)
    };
    candidates.into_iter().min_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        let tol = 1e-9 * (1.0 + ka.0.abs());
        if (ka.0 - kb.0).abs() > tol {
            ka.0.total_cmp(&kb.0)
        } else if (ka.1 - kb.1).abs() > 1e-12 {
            ka.1.total_cmp(&kb.1)
        } else {
            ka.2.total_cmp(&kb.2)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfhTick {
    pub heading: f64,
    pub speed: f64,
    pub stopped: bool,
    pub next: AgentState,
    pub reached_goal: bool,
    pub histogram: PolarHistogram,
}

/// One reactive step toward `goal` for `exec_dt` seconds at `speed`.
#[allow(clippy::too_many_arguments)]
pub fn vfh_tick(
    robot: &AgentState,
    goal: Vec2,
    speed: f64,
    humans: &[AgentState],
    grid: &ObstacleGrid,
    cfg: &VfhConfig,
    state: &mut VfhState,
    exec_dt: f64,
) -> VfhTick {
    let hist = build_histogram(robot, humans, grid, cfg, state.previous_binary.as_deref());
    let target = (goal - robot.position).angle();
    let previous = state.previous_command.unwrap_or(robot.heading);
    let choice = select_steering(&hist, target, robot.heading, previous, cfg);
    state.previous_binary = Some(hist.binary.clone());
    let (heading, v, stopped) = match choice {
        Some(h) => (h, speed, false),
        None => (robot.heading, 0.0, true),
    };
    if !stopped {
        state.previous_command = Some(heading);
    }
    let remaining = robot.position.distance(goal);
    let (position, reached_goal) = if v > 0.0 && remaining <= v * exec_dt && heading == target {
        (goal, true)
    } else {
        (advance(robot.position, heading, v, exec_dt), false)
    };
    let mut next = robot.clone();
    next.position = position;
    next.heading = heading;
    next.speed = v;
    VfhTick {
        heading,
        speed: v,
        stopped,
        next,
        reached_goal,
        histogram: hist,
    }
}
