//! Game-theoretic crowd navigation: cost model, Nash best-response solver,
//! the robot planner, a VFH+ baseline, trajectory metrics and statistics.

pub mod batch;
pub mod config;
pub mod constraints;
pub mod cost;
pub mod episode_log;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod ingest;
pub mod metrics;
pub mod nash;
pub mod plan;
pub mod planner;
pub mod scenario;
pub mod scenario_config;
pub mod sim;
pub mod stats;
pub mod svg;
pub mod synth;
pub mod vfh;

pub use config::{CollisionSampling, GameConfig};
pub use error::{Error, Result};
pub use geometry::{AgentId, AgentKind, AgentState, Trajectory, Vec2};
pub use grid::ObstacleGrid;
pub use plan::ActionPlan;
