//! SVG output: bar charts of condition means and per-tick animation frames
//! where every agent, robot included, is the same blue arrow on gray.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::episode_log::EpisodeLog;
use crate::geometry::{AgentId, Vec2};
use crate::scenario::Scenario;

/// Half-width multiplier applied to the standard error for the plotted intervals.
pub const INTERVAL_SE: f64 = 1.386;

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub mean: f64,
    pub se: f64,
}

/// Vertical bars with ±[`INTERVAL_SE`]·SE whiskers, y axis from 0 to
/// `y_max` (at least the tallest whisker).
pub fn bar_chart(title: &str, bars: &[Bar], y_max: f64) -> String {
    let (w, h) = (360.0, 260.0);
    let (left, right, top, bottom) = (48.0, 12.0, 28.0, 36.0);
    let top_val = bars
        .iter()
        .map(|b| b.mean + INTERVAL_SE * b.se)
        .filter(|v| v.is_finite())
        .fold(y_max, f64::max)
        .max(1e-12);
    let plot_h = h - top - bottom;
    let y = |v: f64| top + plot_h * (1.0 - (v / top_val).clamp(0.0, 1.0));
    let slot = (w - left - right) / bars.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/><line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        h - bottom,
        w - right
    );
    for k in 0..=4 {
        let v = top_val * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            left - 4.0,
            y(v) + 4.0,
            v
        );
    }
    for (i, b) in bars.iter().enumerate() {
        let x0 = left + slot * i as f64 + slot * 0.2;
        let bw = slot * 0.6;
        let cx = x0 + bw / 2.0;
        if b.mean.is_finite() {
            let _ = writeln!(
                s,
                r##"<rect x="{x0:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="#4a6fa5"/>"##,
                y(b.mean),
                y(0.0) - y(b.mean)
            );
            if b.se.is_finite() && b.se > 0.0 {
                let (lo, hi) = (y(b.mean - INTERVAL_SE * b.se), y(b.mean + INTERVAL_SE * b.se));
                let _ = writeln!(
                    s,
                    r#"<path d="M{cx:.2} {lo:.2}V{hi:.2}M{:.2} {lo:.2}H{:.2}M{:.2} {hi:.2}H{:.2}" stroke="black" fill="none"/>"#,
                    cx - 6.0,
                    cx + 6.0,
                    cx - 6.0,
                    cx + 6.0
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            h - bottom + 16.0,
            escape(&b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Isosceles triangle pointing along `heading`, `len` long, centered on `p`.
fn arrow(p: Vec2, heading: f64, len: f64) -> [Vec2; 3] {
    let f = Vec2::from_angle(heading);
    let n = Vec2::new(-f.y, f.x);
    let tip = p + f * (0.6 * len);
    let back = p - f * (0.4 * len);
    [tip, back + n * (0.3 * len), back - n * (0.3 * len)]
}

/// One SVG per logged tick, in tick order. World y points up.
pub fn animation_frames(scenario: &Scenario, log: &EpisodeLog) -> Vec<String> {
    let (lo, hi) = (scenario.bounds_min, scenario.bounds_max);
    let span = hi - lo;
    let px = 600.0 / span.x.max(span.y);
    let (w, h) = (span.x * px, span.y * px);
    let map = |p: Vec2| Vec2::new((p.x - lo.x) * px, (hi.y - p.y) * px);

    let mut cells = String::new();
    let g = scenario.obstacles();
    let cs = g.cell_size() * px;
    for iy in 0..g.height() {
        for ix in 0..g.width() {
            if g.is_occupied(ix, iy) {
                let c = map(g.cell_center(ix, iy));
                let _ = writeln!(
                    cells,
                    r##"<rect x="{:.2}" y="{:.2}" width="{cs:.2}" height="{cs:.2}" fill="#6e6e6e"/>"##,
                    c.x - cs / 2.0,
                    c.y - cs / 2.0
                );
            }
        }
    }

    let mut by_tick: BTreeMap<i64, Vec<(AgentId, Vec2, f64)>> = BTreeMap::new();
    for r in &log.rows {
        by_tick
            .entry(r.tick)
            .or_default()
            .push((r.agent, Vec2::new(r.x, r.y), r.heading));
    }
    let len = 0.5 * px;
    by_tick
        .values()
        .map(|agents| {
            let mut s = String::new();
            let _ = writeln!(
                s,
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
            );
            let _ = writeln!(s, r##"<rect width="{w:.2}" height="{h:.2}" fill="#b4b4b4"/>"##);
            s.push_str(&cells);
            for &(_, p, heading) in agents {
                // screen y is flipped, so the heading is mirrored
                let [a, b, c] = arrow(map(p), -heading, len);
                let _ = writeln!(
                    s,
                    r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#1f4fd1"/>"##,
                    a.x, a.y, b.x, b.y, c.x, c.y
                );
            }
            s.push_str("</svg>\n");
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode_log::LogRow;
    use std::collections::BTreeMap as Map;

    #[test]
    fn bars_have_whiskers() {
        let svg = bar_chart(
            "PR",
            &[
                Bar {
                    label: "HO".into(),
                    mean: 0.9,
                    se: 0.01,
                },
                Bar {
                    label: "GT".into(),
                    mean: 0.8,
                    se: 0.0,
                },
            ],
            1.0,
        );
        assert_eq!(svg.matches("<rect").count(), 3);
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains(">HO<") && svg.contains(">GT<"));
    }

    #[test]
    fn frames_draw_every_agent_alike() {
        let s = Scenario::from_tracks(
            "a",
            Map::new(),
            Some(crate::scenario::RobotSpec {
                start: Vec2::new(0.0, 0.0),
                goal: Vec2::new(4.0, 4.0),
                speed: Some(1.0),
            }),
        )
        .unwrap();
        let mut log = EpisodeLog::default();
        log.push(LogRow::state(0, 0.0, AgentId::Human(1), 1.0, 1.0, 0.0, 1.0));
        log.push(LogRow::state(0, 0.0, AgentId::Robot, 0.0, 0.0, 0.5, 1.0));
        log.push(LogRow::state(1, 0.5, AgentId::Robot, 0.5, 0.3, 0.5, 1.0));
        let frames = animation_frames(&s, &log);
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].matches("<polygon").count(), 2);
        assert_eq!(frames[0].matches("#1f4fd1").count(), 2);
        assert!(frames[0].contains("#b4b4b4"));
    }

    #[test]
    fn arrow_is_isosceles() {
        let [t, a, b] = arrow(Vec2::new(1.0, 2.0), 0.7, 1.0);
        assert!((t.distance(a) - t.distance(b)).abs() < 1e-12);
    }
}
