//! Pedestrian track files.
//!
//! * `frame-table`: `frame id x y`, tab separated.
//! * `obsmat`: eight whitespace-separated columns `frame id x _ y _ _ _`.
//!
//! Both accept `#` comments and blank lines. Frame numbers may be written as
//! floats but must be integral. Raw coordinates are multiplied by `scale`;
//! consecutive recorded frames are `frame_dt` seconds apart. The recording
//! stride (raw frame numbers between consecutive recorded frames) is the
//! greatest common divisor of all per-agent frame steps and start offsets,
//! and gaps within a track are filled by linear interpolation on that stride.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AgentId, Vec2};
use crate::scenario::Track;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackFormat {
    #[serde(rename = "frame-table")]
    FrameTable,
    #[serde(rename = "obsmat")]
    ObsmatLike,
}

impl fmt::Display for TrackFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackFormat::FrameTable => "frame-table",
            TrackFormat::ObsmatLike => "obsmat",
        })
    }
}

impl FromStr for TrackFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frame-table" => Ok(TrackFormat::FrameTable),
            "obsmat" => Ok(TrackFormat::ObsmatLike),
            _ => Err(Error::Config(format!(
                "unknown track format `{s}` (expected frame-table or obsmat)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub tracks: BTreeMap<AgentId, Track>,
    /// Raw frame numbers between consecutive recorded frames.
    pub stride: i64,
    /// Raw frame number mapped to time 0.
    pub first_frame: i64,
    /// Agents seen in a single frame, which were left out.
    pub dropped: Vec<AgentId>,
}

fn integral(v: f64, what: &str, name: &str, line: usize) -> Result<i64> {
    if !v.is_finite() || v.fract() != 0.0 || v.abs() > 1e15 {
        return Err(Error::parse(name, line, format!("{what} `{v}` is not an integer")));
    }
    Ok(v as i64)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Parses a track file held in memory. `name` labels parse errors.
pub fn ingest_tracks(text: &str, name: &str, format: TrackFormat, scale: f64, frame_dt: f64) -> Result<Ingested> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config("scale must be positive".into()));
    }
    if !(frame_dt > 0.0 && frame_dt.is_finite()) {
        return Err(Error::Config("frame_dt must be positive".into()));
    }
    let mut raw: BTreeMap<u32, Vec<(i64, Vec2, usize)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Vec<&str> = match format {
            TrackFormat::FrameTable => body.split('\t').map(str::trim).collect(),
            TrackFormat::ObsmatLike => body.split_whitespace().collect(),
        };
        let want = match format {
            TrackFormat::FrameTable => 4,
            TrackFormat::ObsmatLike => 8,
        };
        if cols.len() != want {
            return Err(Error::parse(
                name,
                ln,
                format!("expected {want} columns, found {}", cols.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(name, ln, format!("`{s}` is not a number")))
        };
        let (frame, id, x, y) = match format {
            TrackFormat::FrameTable => (num(cols[0])?, num(cols[1])?, num(cols[2])?, num(cols[3])?),
            TrackFormat::ObsmatLike => (num(cols[0])?, num(cols[1])?, num(cols[2])?, num(cols[4])?),
        };
        let frame = integral(frame, "frame", name, ln)?;
        let id = integral(id, "agent id", name, ln)?;
        let id = u32::try_from(id).map_err(|_| Error::parse(name, ln, format!("agent id {id} out of range")))?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::parse(name, ln, "non-finite coordinate"));
        }
        raw.entry(id)
            .or_default()
            .push((frame, Vec2::new(x * scale, y * scale), ln));
    }

    let mut stride = 0i64;
    for rows in raw.values_mut() {
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::parse(
                    name,
                    w[1].2,
                    format!("agent has two rows for frame {}", w[0].0),
                ));
            }
            stride = gcd(stride, w[1].0 - w[0].0);
        }
    }
    let first_frame = raw.values().filter_map(|r| r.first().map(|x| x.0)).min().unwrap_or(0);
    for rows in raw.values() {
        stride = gcd(stride, rows[0].0 - first_frame);
    }
    let stride = stride.max(1);

    let mut tracks = BTreeMap::new();
    let mut dropped = Vec::new();
    for (id, rows) in raw {
        let agent = AgentId::Human(id);
        if rows.len() < 2 {
            log::warn!("{name}: agent {id} appears in a single frame and is dropped");
            dropped.push(agent);
            continue;
        }
        let mut times = Vec::new();
        let mut points = Vec::new();
        for w in rows.windows(2) {
            let (f0, p0, _) = w[0];
            let (f1, p1, _) = w[1];
            let steps = (f1 - f0) / stride;
            for k in 0..steps {
                times.push(((f0 - first_frame) / stride + k) as f64 * frame_dt);
                points.push(p0.lerp(p1, k as f64 / steps as f64));
            }
        }
        let (fl, pl, _) = *rows.last().expect("two or more rows");
        times.push(((fl - first_frame) / stride) as f64 * frame_dt);
        points.push(pl);
        tracks.insert(agent, Track::new(times, points)?);
    }
    Ok(Ingested {
        tracks,
        stride,
        first_frame,
        dropped,
    })
}

pub fn ingest_file(path: &Path, format: TrackFormat, scale: f64, frame_dt: f64) -> Result<Ingested> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ingest_tracks(&text, &path.display().to_string(), format, scale, frame_dt)
}

/// Writes tracks in `format` so that re-ingesting with the same `scale` and
/// `frame_dt` reproduces them. Every sample time must be a whole number of
/// `frame_dt` (within 1e-6 of a frame).
pub fn export_tracks(
    tracks: &BTreeMap<AgentId, Track>,
    format: TrackFormat,
    scale: f64,
    frame_dt: f64,
) -> Result<String> {
    if !(scale > 0.0 && frame_dt > 0.0) {
        return Err(Error::Config("scale and frame_dt must be positive".into()));
    }
    let mut rows: Vec<(i64, u32, Vec2)> = Vec::new();
    for (id, tr) in tracks {
        let AgentId::Human(n) = *id else {
            return Err(Error::InputDomain(format!("cannot export track of {id}")));
        };
        for (&t, &p) in tr.times().iter().zip(tr.points()) {
            let f = t / frame_dt;
            if (f - f.round()).abs() > 1e-6 {
                return Err(Error::InputDomain(format!(
                    "track {id} has a sample at t = {t} between frames"
                )));
            }
            rows.push((f.round() as i64, n, p));
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = String::new();
    let _ = writeln!(out, "# {format}, scale {scale} m/unit, {frame_dt} s/frame");
    for (f, n, p) in rows {
        let (x, y) = (p.x / scale, p.y / scale);
        let _ = match format {
            TrackFormat::FrameTable => writeln!(out, "{f}\t{n}\t{x}\t{y}"),
            TrackFormat::ObsmatLike => writeln!(out, "{f} {n} {x} 0 {y} 0 0 0"),
        };
    }
    Ok(out)
}
