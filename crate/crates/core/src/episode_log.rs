//! Tab-separated per-tick, per-agent episode records.
//!
//! Columns: `tick time agent x y heading speed branch cost_goal cost_smooth
//! cost_obs cost_total nash_cost decel_cost feasible violation`. Absent values
//! are written as `-`. The robot row at tick `k + 1` carries the decision made
//! at tick `k` that produced it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AgentId, Trajectory, Vec2};
use crate::planner::Branch;

pub const HEADER: &str =
    "tick\ttime\tagent\tx\ty\theading\tspeed\tbranch\tcost_goal\tcost_smooth\tcost_obs\tcost_total\tnash_cost\tdecel_cost\tfeasible\tviolation";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub tick: i64,
    pub time: f64,
    pub agent: AgentId,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub branch: Option<Branch>,
    /// Goal, smoothness, obstacle and total cost of the decision.
    pub cost: Option<[f64; 4]>,
    pub nash_cost: Option<f64>,
    pub decel_cost: Option<f64>,
    pub feasible: Option<bool>,
    /// Robot rows: closer than the vital radius to some pedestrian at this tick.
    pub violation: bool,
}

impl LogRow {
    /// A row with only kinematic state.
    pub fn state(tick: i64, time: f64, agent: AgentId, x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            tick,
            time,
            agent,
            x,
            y,
            heading,
            speed,
            branch: None,
            cost: None,
            nash_cost: None,
            decel_cost: None,
            feasible: None,
            violation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn parse_f64(s: &str, line: usize, name: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::parse(name, line, format!("`{s}` is not a number")))
}

fn parse_opt_f64(s: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if s == "-" {
        Ok(None)
    } else {
        parse_f64(s, line, name).map(Some)
    }
}

impl EpisodeLog {
    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn robot_rows(&self) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(|r| r.agent == AgentId::Robot)
    }

    /// Tick length recovered from the first two distinct ticks.
    pub fn tick_dt(&self) -> Option<f64> {
        let first = self.rows.first()?;
        let other = self.rows.iter().find(|r| r.tick != first.tick)?;
        Some((other.time - first.time) / (other.tick - first.tick) as f64)
    }

    /// Per-agent positions in tick order.
    pub fn trajectories(&self) -> Result<BTreeMap<AgentId, Trajectory>> {
        let dt = self.tick_dt().unwrap_or(1.0);
        let mut samples: BTreeMap<AgentId, Vec<(i64, Vec2)>> = BTreeMap::new();
        for r in &self.rows {
            samples.entry(r.agent).or_default().push((r.tick, Vec2::new(r.x, r.y)));
        }
        samples
            .into_iter()
            .map(|(id, mut v)| {
                v.sort_by_key(|s| s.0);
                Ok((id, Trajectory::new(v, dt)?))
            })
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            let (cg, cs, co, ct) = match r.cost {
                Some([g, s, o, t]) => (g.to_string(), s.to_string(), o.to_string(), t.to_string()),
                None => ("-".into(), "-".into(), "-".into(), "-".into()),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.tick,
                r.time,
                r.agent,
                r.x,
                r.y,
                r.heading,
                r.speed,
                opt(r.branch),
                cg,
                cs,
                co,
                ct,
                opt(r.nash_cost),
                opt(r.decel_cost),
                opt(r.feasible.map(u8::from)),
                u8::from(r.violation)
            );
        }
        out
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("tick")) {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 16 {
                return Err(Error::parse(
                    name,
                    ln,
                    format!("expected 16 columns, found {}", f.len()),
                ));
            }
            let tick = f[0]
                .parse()
                .map_err(|_| Error::parse(name, ln, format!("bad tick `{}`", f[0])))?;
            let agent: AgentId = f[2]
                .parse()
                .map_err(|_| Error::parse(name, ln, format!("bad agent `{}`", f[2])))?;
            let branch = match f[7] {
                "-" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| Error::parse(name, ln, format!("bad branch `{s}`")))?,
                ),
            };
            let costs = [
                parse_opt_f64(f[8], ln, name)?,
                parse_opt_f64(f[9], ln, name)?,
                parse_opt_f64(f[10], ln, name)?,
                parse_opt_f64(f[11], ln, name)?,
            ];
            let cost = match costs {
                [Some(g), Some(s), Some(o), Some(t)] => Some([g, s, o, t]),
                [None, None, None, None] => None,
                _ => return Err(Error::parse(name, ln, "cost columns must be all present or all absent")),
            };
            let flag = |s: &str| -> Result<bool> {
                match s {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(Error::parse(name, ln, format!("bad flag `{s}`"))),
                }
            };
            rows.push(LogRow {
                tick,
                time: parse_f64(f[1], ln, name)?,
                agent,
                x: parse_f64(f[3], ln, name)?,
                y: parse_f64(f[4], ln, name)?,
                heading: parse_f64(f[5], ln, name)?,
                speed: parse_f64(f[6], ln, name)?,
                branch,
                cost,
                nash_cost: parse_opt_f64(f[12], ln, name)?,
                decel_cost: parse_opt_f64(f[13], ln, name)?,
                feasible: if f[14] == "-" { None } else { Some(flag(f[14])?) },
                violation: flag(f[15])?,
            });
        }
        Ok(Self { rows })
    }
}
