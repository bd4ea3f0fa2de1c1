//! Batches of episodes driven by a run manifest, and their tabular outputs.
//!
//! Manifest (TOML, paths relative to the manifest file):
//!
//! ```toml
//! seed = 7
//! output = "out"
//! conditions = ["HO", "GT", "VFH"]     # or: condition = "GT"
//! scenarios = ["plaza.toml"]
//! animate = false
//! alpha = 0.05
//!
//! [[synthetic]]                        # optional generated scenes
//! preset = "walkway"                   # or "crossing"
//! count = 24
//!
//! [overrides.planner.game]             # any SimConfig field
//! beta = 0.6
//! ```
//!
//! Outputs under `output`: `episodes/<scenario>__<condition>.tsv`,
//! `metrics.tsv`, `stats.json`, `stats.tsv`, `plots/<metric>.svg` and, with
//! `animate`, `animations/<scenario>__<condition>/frame_NNNN.svg`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::default_gamma;
use crate::error::{Error, Result};
use crate::geometry::{AgentId, Trajectory};
use crate::metrics::{closest_pedestrian_distance, path_length_ratio, path_regularity, Condition, MetricReport};
use crate::scenario::Scenario;
use crate::scenario_config::load_scenario;
use crate::sim::{run_episode, Episode, SimConfig, Termination};
use crate::stats::{
    bonferroni_posthoc, kruskal_wallis, levene, mean, median_spread, Group, PairwiseResult, StatResult,
};
use crate::svg::{animation_frames, bar_chart, Bar};
use crate::synth::CrowdGenerator;
use crate::vfh::VfhConfig;

/// Share of the replay a track must cover to serve as the HO reference.
pub const REFERENCE_SPAN: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Crossing,
    Walkway,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub preset: Preset,
    pub count: usize,
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    seed: u64,
    output: PathBuf,
    #[serde(default)]
    condition: Option<OneOrMany>,
    #[serde(default)]
    conditions: Option<OneOrMany>,
    #[serde(default)]
    scenarios: Vec<PathBuf>,
    #[serde(default)]
    synthetic: Vec<SyntheticSpec>,
    #[serde(default)]
    animate: bool,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    overrides: toml::Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub seed: u64,
    /// Resolved output directory.
    pub output: PathBuf,
    pub conditions: Vec<Condition>,
    /// Resolved scenario file paths.
    pub scenarios: Vec<PathBuf>,
    pub synthetic: Vec<SyntheticSpec>,
    pub animate: bool,
    pub alpha: f64,
    pub overrides: toml::Table,
}

fn toml_error(text: &str, name: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::parse(name, line, e.message().to_string())
}

impl RunManifest {
    /// Parses manifest text; relative paths are resolved against `base`.
    pub fn parse(text: &str, name: &str, base: &Path) -> Result<Self> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| toml_error(text, name, e))?;
        let conditions = match (raw.condition, raw.conditions) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `condition` or `conditions`, not both".into(),
                ))
            }
            (Some(c), None) | (None, Some(c)) => match c {
                OneOrMany::One(c) => vec![c],
                OneOrMany::Many(v) => v,
            }
            .iter()
            .map(|c| c.parse())
            .collect::<Result<Vec<Condition>>>()?,
            (None, None) => return Err(Error::Config("manifest lists no condition".into())),
        };
        if conditions.is_empty() {
            return Err(Error::Config("manifest lists no condition".into()));
        }
        let mut seen = conditions.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != conditions.len() {
            return Err(Error::Config("conditions repeat".into()));
        }
        if raw.scenarios.is_empty() && raw.synthetic.is_empty() {
            return Err(Error::Config("manifest lists no scenario".into()));
        }
        let alpha = raw.alpha.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let m = Self {
            seed: raw.seed,
            output: resolve(raw.output),
            conditions,
            scenarios: raw.scenarios.into_iter().map(resolve).collect(),
            synthetic: raw.synthetic,
            animate: raw.animate,
            alpha,
            overrides: raw.overrides,
        };
        for p in &m.scenarios {
            if !p.is_file() {
                return Err(Error::Config(format!("scenario file {} does not exist", p.display())));
            }
        }
        m.sim_config()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(
            &text,
            &path.display().to_string(),
            path.parent().unwrap_or(Path::new(".")),
        )
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        sim_config_with(&self.overrides)
    }

    /// Scenario files in listed order, then generated scenes. Generated scene
    /// `i` of block `b` is seeded from the manifest seed, `b` and `i`.
    pub fn load_scenarios(&self) -> Result<Vec<Scenario>> {
        let mut out = Vec::new();
        for p in &self.scenarios {
            out.push(load_scenario(p)?);
        }
        for (b, spec) in self.synthetic.iter().enumerate() {
            let gen = match spec.preset {
                Preset::Crossing => CrowdGenerator::crossing(),
                Preset::Walkway => CrowdGenerator::walkway(),
            };
            let prefix = spec
                .prefix
                .clone()
                .unwrap_or_else(|| format!("{:?}", spec.preset).to_lowercase());
            let block_seed = self.seed.wrapping_add((b as u64 + 1).wrapping_mul(1_000_003));
            out.extend(gen.batch(&prefix, spec.count, block_seed)?);
        }
        let mut names: Vec<&str> = out.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("two scenarios are named `{}`", w[0])));
        }
        Ok(out)
    }
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn has(t: &toml::Table, path: &[&str]) -> bool {
    match path {
        [] => true,
        [k, rest @ ..] => match t.get(*k) {
            Some(toml::Value::Table(sub)) => has(sub, rest),
            Some(_) => rest.is_empty(),
            None => false,
        },
    }
}

/// Default configuration with `overrides` merged in. Values derived from the
/// horizon or from β follow an override of those unless set explicitly too.
pub fn sim_config_with(overrides: &toml::Table) -> Result<SimConfig> {
    let mut base = toml::Table::try_from(SimConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut base, overrides);
    let mut cfg: SimConfig = base
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let game = ["planner", "game"];
    if has(overrides, &[game[0], game[1], "horizon"]) && !has(overrides, &[game[0], game[1], "gamma"]) {
        cfg.planner.game.gamma = default_gamma(cfg.planner.game.horizon);
    }
    if has(overrides, &[game[0], game[1], "beta"]) {
        let beta = cfg.planner.game.beta;
        let tied = VfhConfig::with_beta(beta);
        if !has(overrides, &["vfh", "robot_radius"]) {
            cfg.vfh.robot_radius = tied.robot_radius;
        }
        if !has(overrides, &["vfh", "pedestrian_radius"]) {
            cfg.vfh.pedestrian_radius = tied.pedestrian_radius;
        }
        if !has(overrides, &["planner", "robot_radius"]) {
            cfg.planner.robot_radius = beta / 2.0;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Seeded draw among tracks covering at least [`REFERENCE_SPAN`] of the
/// replay. Falls back to the longest track when none does.
pub fn reference_human(scenario: &Scenario, seed: u64) -> Option<AgentId> {
    let span = scenario.replay_duration();
    let eligible: Vec<AgentId> = scenario
        .tracks
        .iter()
        .filter(|(_, t)| t.len() >= 3 && t.duration() >= REFERENCE_SPAN * span)
        .map(|(id, _)| *id)
        .collect();
    if eligible.is_empty() {
        let longest = scenario
            .tracks
            .iter()
            .filter(|(_, t)| t.len() >= 3)
            .max_by(|a, b| a.1.duration().total_cmp(&b.1.duration()).then(b.0.cmp(a.0)))
            .map(|(id, _)| *id);
        if let Some(id) = longest {
            log::warn!(
                "{}: no track covers {:.0}% of the replay; using the longest one ({id})",
                scenario.name,
                REFERENCE_SPAN * 100.0
            );
        }
        return longest;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(eligible[rng.random_range(0..eligible.len())])
}

/// Stable per-scenario seed derived from the manifest seed and the name.
pub fn scenario_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub scenario: String,
    pub condition: Condition,
    /// Robot, or the reference human for HO.
    pub subject: Option<AgentId>,
    pub plr: Option<f64>,
    pub pr: Option<f64>,
    pub cpd: Option<f64>,
    pub termination: Termination,
    pub ticks: usize,
    pub infeasible_ticks: usize,
    pub violation_ticks: usize,
}

impl EpisodeSummary {
    pub fn report(&self) -> Option<MetricReport> {
        Some(MetricReport {
            scenario: self.scenario.clone(),
            condition: self.condition,
            plr: self.plr?,
            pr: self.pr?,
            cpd: self.cpd?,
        })
    }
}

/// Metrics of `subject` against every other agent of the episode.
pub fn summarize(scenario: &Scenario, episode: &Episode, subject: Option<AgentId>) -> EpisodeSummary {
    let (mut plr, mut pr, mut cpd) = (None, None, None);
    if let Some(traj) = subject.and_then(|id| episode.trajectories.get(&id)) {
        plr = path_length_ratio(traj).ok();
        pr = path_regularity(traj).ok();
        let others: Vec<&Trajectory> = episode
            .trajectories
            .iter()
            .filter(|(id, _)| Some(**id) != subject)
            .map(|(_, t)| t)
            .collect();
        cpd = closest_pedestrian_distance(traj, &others, scenario.arena_diagonal()).ok();
    }
    let robot_rows: Vec<_> = episode.log.robot_rows().collect();
    EpisodeSummary {
        scenario: scenario.name.clone(),
        condition: episode.condition,
        subject,
        plr,
        pr,
        cpd,
        termination: episode.termination,
        ticks: episode
            .log
            .rows
            .iter()
            .map(|r| r.tick)
            .max()
            .map_or(0, |t| t as usize + 1),
        infeasible_ticks: robot_rows.iter().filter(|r| r.feasible == Some(false)).count(),
        violation_ticks: robot_rows.iter().filter(|r| r.violation).count(),
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub episode: Episode,
    pub summary: EpisodeSummary,
}

/// Runs every (scenario, condition) pair in parallel; results come back in
/// scenario-major, condition-minor order.
pub fn run_batch(
    scenarios: &[Scenario],
    conditions: &[Condition],
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<EpisodeOutcome>> {
    let jobs: Vec<(&Scenario, Condition)> = scenarios
        .iter()
        .flat_map(|s| conditions.iter().map(move |&c| (s, c)))
        .collect();
    jobs.par_iter()
        .map(|&(s, c)| {
            let episode = run_episode(s, c, cfg)?;
            let subject = match c {
                Condition::HumansOnly => reference_human(s, scenario_seed(seed, &s.name)),
                _ => Some(AgentId::Robot),
            };
            let summary = summarize(s, &episode, subject);
            Ok(EpisodeOutcome { episode, summary })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

pub const METRIC_HEADER: &str =
    "scenario\tcondition\tsubject\tplr\tpr\tcpd\ttermination\tticks\tinfeasible_ticks\tviolation_ticks";

pub fn metric_table(rows: &[EpisodeSummary]) -> String {
    let mut s = String::from(METRIC_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:?}\t{}\t{}\t{}",
            r.scenario,
            r.condition,
            r.subject.map_or_else(|| "-".into(), |a| a.to_string()),
            opt(r.plr),
            opt(r.pr),
            opt(r.cpd),
            r.termination,
            r.ticks,
            r.infeasible_ticks,
            r.violation_ticks
        );
    }
    s
}

pub fn parse_metric_table(text: &str, name: &str) -> Result<Vec<EpisodeSummary>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("scenario\t")) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(Error::parse(
                name,
                ln,
                format!("expected 10 columns, found {}", f.len()),
            ));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::parse(name, ln, format!("`{s}` is not a number")))
            }
        };
        let int = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::parse(name, ln, format!("`{s}` is not a count")))
        };
        out.push(EpisodeSummary {
            scenario: f[0].to_string(),
            condition: f[1]
                .parse()
                .map_err(|_| Error::parse(name, ln, format!("bad condition `{}`", f[1])))?,
            subject: match f[2] {
                "-" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| Error::parse(name, ln, format!("bad agent `{s}`")))?,
                ),
            },
            plr: num(f[3])?,
            pr: num(f[4])?,
            cpd: num(f[5])?,
            termination: match f[6] {
                "GoalReached" => Termination::GoalReached,
                "ReplayExhausted" => Termination::ReplayExhausted,
                "TickCap" => Termination::TickCap,
                s => return Err(Error::parse(name, ln, format!("bad termination `{s}`"))),
            },
            ticks: int(f[7])?,
            infeasible_ticks: int(f[8])?,
            violation_ticks: int(f[9])?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
    /// Mean absolute deviation from the median.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub groups: BTreeMap<String, GroupSummary>,
    pub kruskal_wallis: Option<StatResult>,
    pub levene: Option<StatResult>,
    pub posthoc: Vec<PairwiseResult>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub alpha: f64,
    pub metrics: BTreeMap<String, MetricStats>,
}

pub const METRICS: [&str; 3] = ["plr", "pr", "cpd"];

fn metric_of(r: &EpisodeSummary, m: &str) -> Option<f64> {
    match m {
        "plr" => r.plr,
        "pr" => r.pr,
        "cpd" => r.cpd,
        _ => None,
    }
}

fn group_summary(v: &[f64]) -> GroupSummary {
    let n = v.len();
    let m = mean(v);
    let se = if n > 1 {
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    GroupSummary {
        n,
        mean: m,
        se,
        spread: median_spread(v),
    }
}

/// Per-metric condition summaries, Kruskal–Wallis, Levene and Bonferroni
/// Mann–Whitney pairs. Tests that cannot run are recorded as notes.
pub fn stats_report(rows: &[EpisodeSummary], alpha: f64) -> StatsReport {
    let mut metrics = BTreeMap::new();
    for m in METRICS {
        let mut values: Vec<(Condition, Vec<f64>)> = Vec::new();
        for c in Condition::ALL {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.condition == c)
                .filter_map(|r| metric_of(r, m))
                .collect();
            if !v.is_empty() {
                values.push((c, v));
            }
        }
        let groups: Vec<Group<'_>> = values.iter().map(|(c, v)| Group::new(c.label(), v)).collect();
        let mut st = MetricStats {
            groups: values
                .iter()
                .map(|(c, v)| (c.label().to_string(), group_summary(v)))
                .collect(),
            kruskal_wallis: None,
            levene: None,
            posthoc: Vec::new(),
            notes: Vec::new(),
        };
        if groups.len() >= 2 {
            match kruskal_wallis(&groups) {
                Ok(r) => st.kruskal_wallis = Some(r),
                Err(e) => st.notes.push(format!("Kruskal-Wallis: {e}")),
            }
            match levene(&groups) {
                Ok(r) => st.levene = Some(r),
                Err(e) => st.notes.push(format!("Levene: {e}")),
            }
            match bonferroni_posthoc(&groups, alpha) {
                Ok(r) => st.posthoc = r,
                Err(e) => st.notes.push(format!("post-hoc: {e}")),
            }
        } else {
            st.notes.push("fewer than two conditions with values".into());
        }
        metrics.insert(m.to_string(), st);
    }
    StatsReport { alpha, metrics }
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per test: metric, test, groups, statistic, p, significant.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("metric\ttest\tgroups\tstatistic\tp_value\tsignificant\n");
        for (m, st) in &self.metrics {
            let mut line = |test: &str, r: &StatResult, sig: bool| {
                let _ = writeln!(
                    s,
                    "{m}\t{test}\t{}\t{}\t{}\t{}",
                    r.groups.join(","),
                    r.statistic,
                    r.p_value,
                    u8::from(sig)
                );
            };
            if let Some(r) = &st.kruskal_wallis {
                line("kruskal_wallis", r, r.p_value < self.alpha);
            }
            if let Some(r) = &st.levene {
                line("levene", r, r.p_value < self.alpha);
            }
            for p in &st.posthoc {
                line("mann_whitney_bonferroni", &p.result, p.significant);
            }
        }
        s
    }

    pub fn bars(&self, metric: &str) -> Vec<Bar> {
        self.metrics
            .get(metric)
            .map(|st| {
                Condition::ALL
                    .iter()
                    .filter_map(|c| {
                        st.groups.get(c.label()).map(|g| Bar {
                            label: c.label().to_string(),
                            mean: g.mean,
                            se: g.se,
                        })
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn episode_file_stem(scenario: &str, condition: Condition) -> String {
    format!("{scenario}__{condition}")
}

/// Writes every artifact of a finished batch, one file at a time, in order.
pub fn write_outputs(
    out: &Path,
    scenarios: &[Scenario],
    outcomes: &[EpisodeOutcome],
    alpha: f64,
    animate: bool,
) -> Result<StatsReport> {
    let by_name: BTreeMap<&str, &Scenario> = scenarios.iter().map(|s| (s.name.as_str(), s)).collect();
    for o in outcomes {
        let stem = episode_file_stem(&o.summary.scenario, o.summary.condition);
        write(
            &out.join("episodes").join(format!("{stem}.tsv")),
            &o.episode.log.to_tsv(),
        )?;
        if animate {
            let s = by_name[o.summary.scenario.as_str()];
            for (k, frame) in animation_frames(s, &o.episode.log).iter().enumerate() {
                write(
                    &out.join("animations").join(&stem).join(format!("frame_{k:04}.svg")),
                    frame,
                )?;
            }
        }
    }
    let rows: Vec<EpisodeSummary> = outcomes.iter().map(|o| o.summary.clone()).collect();
    write(&out.join("metrics.tsv"), &metric_table(&rows))?;
    let report = stats_report(&rows, alpha);
    write_report(out, &report)?;
    Ok(report)
}

/// `stats.json`, `stats.tsv` and one bar chart per metric.
pub fn write_report(out: &Path, report: &StatsReport) -> Result<()> {
    write(&out.join("stats.json"), &report.to_json())?;
    write(&out.join("stats.tsv"), &report.to_tsv())?;
    for m in METRICS {
        let y_max = if m == "cpd" { 0.0 } else { 1.0 };
        write(
            &out.join("plots").join(format!("{m}.svg")),
            &bar_chart(&m.to_uppercase(), &report.bars(m), y_max),
        )?;
    }
    Ok(())
}

/// Loads, runs and writes everything a manifest asks for.
pub fn run_manifest(m: &RunManifest) -> Result<(Vec<EpisodeOutcome>, StatsReport)> {
    let cfg = m.sim_config()?;
    let scenarios = m.load_scenarios()?;
    let outcomes = run_batch(&scenarios, &m.conditions, &cfg, m.seed)?;
    let report = write_outputs(&m.output, &scenarios, &outcomes, m.alpha, m.animate)?;
    Ok((outcomes, report))
}
