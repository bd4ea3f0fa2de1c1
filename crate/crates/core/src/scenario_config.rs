//! Scenario files (TOML). Relative paths resolve against the file's directory.
//!
//! ```toml
//! name = "plaza"                 # default: file stem
//! grid = "plaza.grid"            # optional occupancy grid
//!
//! [tracks]                       # optional
//! file = "plaza.tsv"
//! format = "frame-table"         # or "obsmat"
//! scale = 1.0                    # meters per raw unit
//! frame_dt = 0.4                 # seconds per recorded frame
//!
//! [bounds]                       # optional; default: grid extent, else the
//! min = [0.0, 0.0]               # box around tracks and robot mission
//! max = [14.0, 14.0]
//!
//! [robot]                        # optional; required for GT and VFH runs
//! start = [2.0, 7.0]
//! goal = [12.0, 7.0]
//! speed = 1.0                    # default: mean pedestrian speed
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::grid::ObstacleGrid;
use crate::ingest::{ingest_file, TrackFormat};
use crate::scenario::{bounding_box, RobotSpec, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSource {
    pub file: PathBuf,
    pub format: TrackFormat,
    pub scale: f64,
    pub frame_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub grid: Option<PathBuf>,
    pub tracks: Option<TrackSource>,
    pub bounds: Option<Bounds>,
    pub robot: Option<RobotConfig>,
}

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

impl ScenarioConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(source_name, line, e.message().to_string())
        })
    }

    /// Resolves every referenced file against `base` and builds the scenario.
    pub fn build(&self, default_name: &str, base: &Path) -> Result<Scenario> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let (tracks, scale, frame_dt) = match &self.tracks {
            Some(src) => {
                let ing = ingest_file(&resolve(&src.file), src.format, src.scale, src.frame_dt)?;
                (ing.tracks, src.scale, src.frame_dt)
            }
            None => (BTreeMap::new(), 1.0, 1.0),
        };
        let grid = match &self.grid {
            Some(p) => Some(ObstacleGrid::load(&resolve(p))?),
            None => None,
        };
        let robot = self.robot.as_ref().map(|r| RobotSpec {
            start: v2(r.start),
            goal: v2(r.goal),
            speed: r.speed,
        });
        let (bounds_min, bounds_max) = match (&self.bounds, &grid) {
            (Some(b), _) => (v2(b.min), v2(b.max)),
            (None, Some(g)) => (g.origin(), g.extent_max()),
            (None, None) => {
                let mut pts: Vec<Vec2> = tracks.values().flat_map(|t| t.points().iter().copied()).collect();
                if let Some(r) = &robot {
                    pts.extend([r.start, r.goal]);
                }
                bounding_box(&pts).ok_or_else(|| Error::Config("scenario has neither tracks nor a robot".into()))?
            }
        };
        let s = Scenario {
            name: self.name.clone().unwrap_or_else(|| default_name.to_string()),
            bounds_min,
            bounds_max,
            grid,
            tracks,
            robot,
            scale,
            frame_dt,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Reads, resolves and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = ScenarioConfig::parse(&text, &path.display().to_string())?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    cfg.build(stem, path.parent().unwrap_or(Path::new(".")))
}
