//! Occupancy grid of static obstacles with exact nearest-obstacle queries.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Rectangular occupancy map. Cell `(ix, iy)` covers
/// `origin + [ix·cs, (ix+1)·cs) × [iy·cs, (iy+1)·cs)`.
#[derive(Debug, Clone)]
pub struct ObstacleGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: Vec2,
    occupancy: Vec<bool>,
    index: OnceLock<KdTree>,
}

impl PartialEq for ObstacleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.cell_size == other.cell_size
            && self.origin == other.origin
            && self.occupancy == other.occupancy
    }
}

impl ObstacleGrid {
    /// An all-free grid.
    pub fn new(width: usize, height: usize, cell_size: f64, origin: Vec2) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InputDomain("grid dimensions must be positive".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) || !origin.is_finite() {
            return Err(Error::InputDomain(
                "grid cell size must be positive and origin finite".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            cell_size,
            origin,
            occupancy: vec![false; width * height],
            index: OnceLock::new(),
        })
    }

    /// A 1×1 free grid; stands in when a scenario has no obstacle map.
    pub fn empty() -> Self {
        Self::new(1, 1, 1.0, Vec2::ZERO).expect("valid")
    }

    /// Grid covering `[min, max]` at `cell_size`.
    pub fn covering(min: Vec2, max: Vec2, cell_size: f64) -> Result<Self> {
        let w = ((max.x - min.x) / cell_size).ceil().max(1.0) as usize;
        let h = ((max.y - min.y) / cell_size).ceil().max(1.0) as usize;
        Self::new(w, h, cell_size, min)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    /// Upper corner of the covered rectangle.
    pub fn extent_max(&self) -> Vec2 {
        self.origin + Vec2::new(self.width as f64, self.height as f64) * self.cell_size
    }

    pub fn occupied_count(&self) -> usize {
        self.tree().points.len()
    }

    pub fn has_obstacles(&self) -> bool {
        !self.tree().points.is_empty()
    }

    fn tree(&self) -> &KdTree {
        self.index.get_or_init(|| KdTree::build(self))
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        ix < self.width && iy < self.height && self.occupancy[iy * self.width + ix]
    }

    pub fn set_occupied(&mut self, ix: usize, iy: usize, occupied: bool) {
        assert!(ix < self.width && iy < self.height, "cell ({ix}, {iy}) outside grid");
        self.occupancy[iy * self.width + ix] = occupied;
        self.index = OnceLock::new();
    }

    /// Marks every cell whose center lies in the axis-aligned box.
    pub fn fill_rect(&mut self, min: Vec2, max: Vec2) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = self.cell_center(ix, iy);
                if c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y {
                    self.occupancy[iy * self.width + ix] = true;
                }
            }
        }
        self.index = OnceLock::new();
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        self.origin + Vec2::new(ix as f64 + 0.5, iy as f64 + 0.5) * self.cell_size
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let rel = (p - self.origin) / self.cell_size;
        if !(rel.x >= 0.0 && rel.y >= 0.0) {
            return None;
        }
        let (ix, iy) = (rel.x.floor() as usize, rel.y.floor() as usize);
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    /// Whether `p` lies in an occupied cell. Points outside the grid are free.
    pub fn is_occupied_at(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|(ix, iy)| self.is_occupied(ix, iy))
    }

    /// Whether the segment `a → b` touches an occupied cell, sampled at half-cell spacing.
    pub fn segment_hits(&self, a: Vec2, b: Vec2) -> bool {
        if !self.has_obstacles() {
            return false;
        }
        let n = ((b - a).norm() / (0.5 * self.cell_size)).ceil().max(1.0) as usize;
        (0..=n).any(|k| self.is_occupied_at(a.lerp(b, k as f64 / n as f64)))
    }

    /// First position along a polyline that lies in an occupied cell, as `(point index, point)`.
    pub fn first_hit_on_path(&self, points: &[Vec2]) -> Option<(usize, Vec2)> {
        if !self.has_obstacles() {
            return None;
        }
        for (k, w) in points.windows(2).enumerate() {
            let n = ((w[1] - w[0]).norm() / (0.5 * self.cell_size)).ceil().max(1.0) as usize;
            for s in 0..=n {
                let p = w[0].lerp(w[1], s as f64 / n as f64);
                if self.is_occupied_at(p) {
                    return Some((k + 1, p));
                }
            }
        }
        None
    }

    /// Center of the occupied cell nearest to `p`; ties go to the lower row-major index.
    pub fn nearest_obstacle_point(&self, p: Vec2) -> Option<Vec2> {
        self.tree().nearest(p).map(|(c, _)| c)
    }

    /// Occupied cell centers within `radius` of `p`.
    pub fn occupied_within(&self, p: Vec2, radius: f64) -> Vec<Vec2> {
        let lo = (p - Vec2::new(radius, radius) - self.origin) / self.cell_size;
        let hi = (p + Vec2::new(radius, radius) - self.origin) / self.cell_size;
        let clamp = |v: f64, n: usize| v.floor().clamp(0.0, n as f64 - 1.0) as usize;
        if hi.x < 0.0 || hi.y < 0.0 || lo.x >= self.width as f64 || lo.y >= self.height as f64 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for iy in clamp(lo.y, self.height)..=clamp(hi.y, self.height) {
            for ix in clamp(lo.x, self.width)..=clamp(hi.x, self.width) {
                if self.is_occupied(ix, iy) {
                    let c = self.cell_center(ix, iy);
                    if c.distance(p) <= radius {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// Parses the plain-text occupancy format: a header line
    /// `width height cell_size origin_x origin_y`, then `height` rows of 0/1
    /// (top row first, i.e. highest y). Digits may be space-separated or packed.
    /// `#` starts a comment.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source_name, 1, "missing grid header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                source_name,
                hline,
                "header needs width height cell_size origin_x origin_y",
            ));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(source_name, hline, e.to_string()))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(source_name, hline, e.to_string()))
        };
        let (w, h) = (int(fields[0])?, int(fields[1])?);
        let cs = real(fields[2])?;
        let origin = Vec2::new(real(fields[3])?, real(fields[4])?);
        let mut grid = Self::new(w, h, cs, origin).map_err(|e| Error::parse(source_name, hline, e.to_string()))?;

        let mut rows = 0;
        for (lineno, line) in lines {
            if rows == h {
                return Err(Error::parse(source_name, lineno, "more rows than the header declares"));
            }
            let bits: Vec<char> = line.chars().filter(|c| !c.is_whitespace()).collect();
            if bits.len() != w {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("row has {} cells, expected {w}", bits.len()),
                ));
            }
            let iy = h - 1 - rows;
            for (ix, c) in bits.into_iter().enumerate() {
                match c {
                    '0' => {}
                    '1' => grid.occupancy[iy * w + ix] = true,
                    other => {
                        return Err(Error::parse(
                            source_name,
                            lineno,
                            format!("unexpected cell value `{other}`"),
                        ))
                    }
                }
            }
            rows += 1;
        }
        if rows != h {
            return Err(Error::parse(
                source_name,
                text.lines().count(),
                format!("expected {h} rows, found {rows}"),
            ));
        }
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Serializes to the format read by [`ObstacleGrid::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            self.width, self.height, self.cell_size, self.origin.x, self.origin.y
        );
        for iy in (0..self.height).rev() {
            for ix in 0..self.width {
                s.push(if self.is_occupied(ix, iy) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

/// Static 2-d tree over occupied cell centers.
#[derive(Debug, Clone)]
struct KdTree {
    // (center, row-major cell index), permuted into implicit tree order
    points: Vec<(Vec2, usize)>,
}

impl KdTree {
    fn build(grid: &ObstacleGrid) -> Self {
        let mut points: Vec<(Vec2, usize)> = grid
            .occupancy
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| (grid.cell_center(i % grid.width, i / grid.width), i))
            .collect();
        Self::arrange(&mut points, 0);
        Self { points }
    }

    fn arrange(pts: &mut [(Vec2, usize)], depth: usize) {
        if pts.len() <= 1 {
            return;
        }
        let mid = pts.len() / 2;
        let axis = depth % 2;
        pts.select_nth_unstable_by(mid, |a, b| coord(a.0, axis).total_cmp(&coord(b.0, axis)));
        let (left, right) = pts.split_at_mut(mid);
        Self::arrange(left, depth + 1);
        Self::arrange(&mut right[1..], depth + 1);
    }

    fn nearest(&self, q: Vec2) -> Option<(Vec2, usize)> {
        let mut best: Option<(f64, usize, Vec2)> = None;
        Self::search(&self.points, 0, q, &mut best);
        best.map(|(_, i, c)| (c, i))
    }

    fn search(pts: &[(Vec2, usize)], depth: usize, q: Vec2, best: &mut Option<(f64, usize, Vec2)>) {
        if pts.is_empty() {
            return;
        }
        let mid = pts.len() / 2;
        let (c, idx) = pts[mid];
        let d2 = (c - q).norm_squared();
        let better = match *best {
            None => true,
            Some((bd, bi, _)) => d2 < bd || (d2 == bd && idx < bi),
        };
        if better {
            *best = Some((d2, idx, c));
        }
        let axis = depth % 2;
        let delta = coord(q, axis) - coord(c, axis);
        let (near, far) = if delta < 0.0 {
            (&pts[..mid], &pts[mid + 1..])
        } else {
            (&pts[mid + 1..], &pts[..mid])
        };
        Self::search(near, depth + 1, q, best);
        if best.is_none_or(|(bd, _, _)| delta * delta <= bd) {
            Self::search(far, depth + 1, q, best);
        }
    }
}

fn coord(p: Vec2, axis: usize) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}
