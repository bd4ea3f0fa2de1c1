use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use gtnav_core::batch::{self, RunManifest};
use gtnav_core::episode_log::EpisodeLog;
use gtnav_core::ingest::{export_tracks, ingest_file, TrackFormat};
use gtnav_core::metrics::{closest_pedestrian_distance, path_length_ratio, path_regularity, Condition};
use gtnav_core::scenario_config::load_scenario;
use gtnav_core::svg::animation_frames;
use gtnav_core::{AgentId, Error, Trajectory};

/// Crowd navigation simulator: replays pedestrian tracks with a
/// game-theoretic or VFH+ robot and reports path-quality statistics.
#[derive(Parser)]
#[command(name = "gtnav", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw track file into a metric frame table.
    Ingest(IngestArgs),
    /// Check scenario or manifest files without running anything.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run every episode a manifest lists and write all artifacts.
    Run(RunArgs),
    /// Path metrics of one agent in an episode log.
    Metrics(MetricsArgs),
    /// Statistics over a metric table.
    Stats(StatsArgs),
    /// SVG frames of an episode log.
    Animate(AnimateArgs),
}

#[derive(Args)]
struct IngestArgs {
    input: PathBuf,
    #[arg(long)]
    format: TrackFormat,
    /// Meters per raw unit.
    #[arg(long)]
    scale: f64,
    /// Seconds per raw frame.
    #[arg(long)]
    frame_dt: f64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    manifest: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, replacing the manifest's.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Conditions to run, replacing the manifest's (repeatable).
    #[arg(long = "condition")]
    conditions: Vec<Condition>,
    /// Configuration override such as `planner.game.beta=0.8` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    animate: bool,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    log: PathBuf,
    /// Scenario file the episode was run on.
    #[arg(long)]
    scenario: PathBuf,
    /// Agent to measure (`robot`, `h<id>`); default: the robot, else a
    /// seeded reference human.
    #[arg(long)]
    subject: Option<AgentId>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StatsArgs {
    metrics: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Writes stats.json, stats.tsv and plots here; prints the table otherwise.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnimateArgs {
    log: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Io { .. } => 2,
        Error::Parse { .. } => 3,
        _ => 4,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `a.b.c=v` as a nested table; `v` is read as a TOML value, else a string.
fn set_override(table: &mut toml::Table, spec: &str) -> Result<(), Error> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key `{key}` is malformed")));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}` conflicts with a value")))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<(), Error> {
    let ing = ingest_file(&a.input, a.format, a.scale, a.frame_dt)?;
    for id in &ing.dropped {
        log::warn!("dropped {id}: seen in a single frame");
    }
    let frame_dt = a.frame_dt * ing.stride as f64;
    let text = export_tracks(&ing.tracks, TrackFormat::FrameTable, 1.0, frame_dt)?;
    eprintln!(
        "{} tracks, frame step {} raw frames ({frame_dt} s), first raw frame {}",
        ing.tracks.len(),
        ing.stride,
        ing.first_frame
    );
    match a.output {
        Some(p) => write(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn is_manifest(path: &Path) -> Result<bool, Error> {
    let text = read(path)?;
    Ok(text
        .parse::<toml::Table>()
        .map(|t| t.contains_key("seed"))
        .unwrap_or(false))
}

fn validate(files: &[PathBuf]) -> Result<(), Error> {
    for f in files {
        if is_manifest(f)? {
            let m = RunManifest::load(f)?;
            let scenarios = m.load_scenarios()?;
            for s in &scenarios {
                for &c in &m.conditions {
                    if c != Condition::HumansOnly && s.robot.is_none() {
                        return Err(Error::Validation(format!("{}: {c} needs a robot mission", s.name)));
                    }
                }
            }
            println!(
                "{}: manifest ok ({} scenarios, {} conditions)",
                f.display(),
                scenarios.len(),
                m.conditions.len()
            );
        } else {
            let s = load_scenario(f)?;
            println!(
                "{}: scenario `{}` ok ({} tracks, robot {})",
                f.display(),
                s.name,
                s.tracks.len(),
                if s.robot.is_some() { "present" } else { "absent" }
            );
        }
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<(), Error> {
    let mut m = RunManifest::load(&a.manifest)?;
    if let Some(seed) = a.seed {
        m.seed = seed;
    }
    if let Some(out) = a.output {
        m.output = out;
    }
    if !a.conditions.is_empty() {
        m.conditions = a.conditions;
    }
    for s in &a.set {
        set_override(&mut m.overrides, s)?;
    }
    if a.animate {
        m.animate = true;
    }
    if let Some(alpha) = a.alpha {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        m.alpha = alpha;
    }
    let (outcomes, report) = batch::run_manifest(&m)?;
    let infeasible: usize = outcomes.iter().map(|o| o.summary.infeasible_ticks).sum();
    eprintln!(
        "{} episodes written to {} ({infeasible} infeasible ticks)",
        outcomes.len(),
        m.output.display()
    );
    print!("{}", report.to_tsv());
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<(), Error> {
    let scenario = load_scenario(&a.scenario)?;
    let log = EpisodeLog::parse(&read(&a.log)?, &a.log.display().to_string())?;
    let trajectories = log.trajectories()?;
    let subject = match a.subject {
        Some(s) => s,
        None if trajectories.contains_key(&AgentId::Robot) => AgentId::Robot,
        None => batch::reference_human(&scenario, batch::scenario_seed(a.seed, &scenario.name))
            .ok_or_else(|| Error::Validation("no agent qualifies as the reference human".into()))?,
    };
    let traj = trajectories
        .get(&subject)
        .ok_or_else(|| Error::Validation(format!("{subject} does not appear in the log")))?;
    let others: Vec<&Trajectory> = trajectories
        .iter()
        .filter(|(id, _)| **id != subject)
        .map(|(_, t)| t)
        .collect();
    let fmt = |r: Result<f64, Error>| match r {
        Ok(v) => v.to_string(),
        Err(e) => {
            log::warn!("{e}");
            "-".into()
        }
    };
    println!("scenario\tsubject\tplr\tpr\tcpd");
    println!(
        "{}\t{subject}\t{}\t{}\t{}",
        scenario.name,
        fmt(path_length_ratio(traj)),
        fmt(path_regularity(traj)),
        fmt(closest_pedestrian_distance(traj, &others, scenario.arena_diagonal()))
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<(), Error> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::Config("alpha must lie in (0, 1)".into()));
    }
    let rows = batch::parse_metric_table(&read(&a.metrics)?, &a.metrics.display().to_string())?;
    let report = batch::stats_report(&rows, a.alpha);
    for (m, st) in &report.metrics {
        for n in &st.notes {
            log::warn!("{m}: {n}");
        }
    }
    match a.output {
        Some(dir) => batch::write_report(&dir, &report),
        None => {
            print!("{}", report.to_tsv());
            Ok(())
        }
    }
}

fn animate(a: AnimateArgs) -> Result<(), Error> {
    let scenario = load_scenario(&a.scenario)?;
    let log = EpisodeLog::parse(&read(&a.log)?, &a.log.display().to_string())?;
    let frames = animation_frames(&scenario, &log);
    for (k, f) in frames.iter().enumerate() {
        write(&a.output.join(format!("frame_{k:04}.svg")), f)?;
    }
    eprintln!("{} frames written to {}", frames.len(), a.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => LevelFilter::Warn,
            1 => LevelFilter::Info,
            _ => LevelFilter::Debug,
        })
        .format_timestamp(None)
        .init();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Validate { files } => validate(&files),
        Command::Run(a) => run(a),
        Command::Metrics(a) => metrics(a),
        Command::Stats(a) => stats(a),
        Command::Animate(a) => animate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
