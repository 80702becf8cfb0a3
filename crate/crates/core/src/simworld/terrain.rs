//! Terrain grids, difficulty presets and the plain-text world format.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellClass {
    Free,
    SolidObstacle,
    /// Vegetation-like clutter the robot can push through.
    PliableClutter,
    /// Clutter that traps the robot.
    NonTraversableClutter,
}

impl CellClass {
    pub fn symbol(self) -> char {
        match self {
            CellClass::Free => '.',
            CellClass::SolidObstacle => '#',
            CellClass::PliableClutter => ',',
            CellClass::NonTraversableClutter => '%',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '.' => Some(CellClass::Free),
            '#' => Some(CellClass::SolidObstacle),
            ',' => Some(CellClass::PliableClutter),
            '%' => Some(CellClass::NonTraversableClutter),
            _ => None,
        }
    }

    pub fn is_traversable(self) -> bool {
        matches!(self, CellClass::Free | CellClass::PliableClutter)
    }

    pub fn is_clutter(self) -> bool {
        matches!(
            self,
            CellClass::PliableClutter | CellClass::NonTraversableClutter
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Open,
    Cluttered,
    Dark,
    Occluded,
    Combined,
}

impl Difficulty {
    pub const ALL: [Difficulty; 5] = [
        Difficulty::Open,
        Difficulty::Cluttered,
        Difficulty::Dark,
        Difficulty::Occluded,
        Difficulty::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Open => "open",
            Difficulty::Cluttered => "cluttered",
            Difficulty::Dark => "dark",
            Difficulty::Occluded => "occluded",
            Difficulty::Combined => "combined",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Frozen generation parameters for this difficulty.
    pub fn preset(self) -> Preset {
        let clutter = ClutterPreset {
            band_depth: (2.0, 3.5),
            band_start: (5.0, 7.0),
            pliable_patches: (1, 3),
            nontraversable_patches: (2, 4),
            solid_boxes: (2, 4),
        };
        match self {
            Difficulty::Open => Preset {
                clutter: None,
                illumination: 1.0,
                occlusion_coverage: (0.0, 0.0),
                blur_radius: 0,
            },
            Difficulty::Cluttered => Preset {
                clutter: Some(clutter),
                illumination: 1.0,
                occlusion_coverage: (0.0, 0.0),
                blur_radius: 0,
            },
            Difficulty::Dark => Preset {
                clutter: Some(clutter),
                illumination: 0.15,
                occlusion_coverage: (0.0, 0.0),
                blur_radius: 0,
            },
            Difficulty::Occluded => Preset {
                clutter: Some(clutter),
                illumination: 1.0,
                occlusion_coverage: (0.35, 0.6),
                blur_radius: 0,
            },
            Difficulty::Combined => Preset {
                clutter: Some(clutter),
                illumination: 0.35,
                occlusion_coverage: (0.2, 0.35),
                blur_radius: 1,
            },
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| invalid(format!("unknown difficulty '{s}'")))
    }
}

/// Ranges are inclusive `(min, max)`; lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterPreset {
    /// Depth of the pliable band that spans the full world height.
    pub band_depth: (f64, f64),
    /// x coordinate where the band starts.
    pub band_start: (f64, f64),
    pub pliable_patches: (usize, usize),
    pub nontraversable_patches: (usize, usize),
    pub solid_boxes: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub clutter: Option<ClutterPreset>,
    pub illumination: f64,
    /// Fraction of the camera frame covered by occlusion patches.
    pub occlusion_coverage: (f64, f64),
    pub blur_radius: usize,
}

/// Axis-aligned rectangle in image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcclusionPatch {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub width_cells: usize,
    pub height_cells: usize,
    pub cell_size: f64,
    /// Start and goal x coordinates; their y is drawn from `endpoint_y`.
    pub start_x: f64,
    pub goal_x: f64,
    pub endpoint_y: (f64, f64),
    /// Radius kept free around start and goal.
    pub keep_clear: f64,
    pub max_attempts: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width_cells: 64,
            height_cells: 40,
            cell_size: 0.25,
            start_x: 1.5,
            goal_x: 14.5,
            endpoint_y: (3.5, 6.5),
            keep_clear: 1.0,
            max_attempts: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    /// Row-major, row 0 at y = 0.
    cells: Vec<CellClass>,
    pub illumination: f64,
    pub blur_radius: usize,
    pub occlusion_patches: Vec<OcclusionPatch>,
    pub start: (f64, f64),
    pub goal: (f64, f64),
}

impl TerrainGrid {
    /// All-free grid with default sensing conditions.
    pub fn new(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        if width == 0 || height == 0 || !(cell_size > 0.0) {
            return Err(invalid(format!(
                "grid needs positive dimensions, got {width}x{height} @ {cell_size}"
            )));
        }
        let w = width as f64 * cell_size;
        let h = height as f64 * cell_size;
        Ok(Self {
            width,
            height,
            cell_size,
            cells: vec![CellClass::Free; width * height],
            illumination: 1.0,
            blur_radius: 0,
            occlusion_patches: Vec::new(),
            start: (0.1 * w, 0.5 * h),
            goal: (0.9 * w, 0.5 * h),
        })
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

    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.cell_size,
            self.height as f64 * self.cell_size,
        )
    }

    pub fn cells(&self) -> &[CellClass] {
        &self.cells
    }

    pub fn get(&self, ix: usize, iy: usize) -> CellClass {
        self.cells[iy * self.width + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, class: CellClass) {
        self.cells[iy * self.width + ix] = class;
    }

    /// Cell index containing a world point, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x >= 0.0 && y >= 0.0) {
            return None;
        }
        let ix = (x / self.cell_size).floor() as usize;
        let iy = (y / self.cell_size).floor() as usize;
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    /// Class at a world point; `None` outside the grid.
    pub fn class_at(&self, x: f64, y: f64) -> Option<CellClass> {
        self.cell_of(x, y).map(|(ix, iy)| self.get(ix, iy))
    }

    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, class: CellClass) {
        let cs = self.cell_size;
        let ix0 = (x0 / cs).floor().max(0.0) as usize;
        let iy0 = (y0 / cs).floor().max(0.0) as usize;
        let ix1 = ((x1 / cs).ceil().max(0.0) as usize).min(self.width);
        let iy1 = ((y1 / cs).ceil().max(0.0) as usize).min(self.height);
        for iy in iy0..iy1 {
            for ix in ix0..ix1 {
                self.set(ix, iy, class);
            }
        }
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().filter(|&&c| c == class).count()
    }

    /// 4-connected search over traversable cells from start to goal.
    pub fn has_traversable_path(&self) -> bool {
        let (Some(s), Some(g)) = (
            self.cell_of(self.start.0, self.start.1),
            self.cell_of(self.goal.0, self.goal.1),
        ) else {
            return false;
        };
        if !self.get(s.0, s.1).is_traversable() || !self.get(g.0, g.1).is_traversable() {
            return false;
        }
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([s]);
        seen[s.1 * self.width + s.0] = true;
        while let Some((x, y)) = queue.pop_front() {
            if (x, y) == g {
                return true;
            }
            let neighbors = [
                (x.wrapping_sub(1), y),
                (x + 1, y),
                (x, y.wrapping_sub(1)),
                (x, y + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < self.width && ny < self.height {
                    let i = ny * self.width + nx;
                    if !seen[i] && self.cells[i].is_traversable() {
                        seen[i] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
        false
    }

    fn endpoints_free(&self) -> bool {
        [self.start, self.goal]
            .iter()
            .all(|&(x, y)| self.class_at(x, y) == Some(CellClass::Free))
    }

    /// Serializes to the plain-text world format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            self.width, self.height, self.cell_size, self.illumination, self.blur_radius
        );
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| c.symbol()));
            out.push('\n');
        }
        let _ = writeln!(out, "start {} {}", self.start.0, self.start.1);
        let _ = writeln!(out, "goal {} {}", self.goal.0, self.goal.1);
        for p in &self.occlusion_patches {
            let _ = writeln!(out, "occlusion {} {} {} {}", p.x, p.y, p.w, p.h);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Format(format!("world file: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(bad(format!("header needs 5 fields, got {}", fields.len())));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("'{s}': {e}")));
        let parse_f64 = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
        let width = parse_usize(fields[0])?;
        let height = parse_usize(fields[1])?;
        let mut grid = TerrainGrid::new(width, height, parse_f64(fields[2])?)?;
        grid.illumination = parse_f64(fields[3])?;
        if !(0.0..=1.0).contains(&grid.illumination) {
            return Err(bad(format!("illumination {} outside [0, 1]", grid.illumination)));
        }
        grid.blur_radius = parse_usize(fields[4])?;
        for iy in 0..height {
            let row = lines
                .next()
                .ok_or_else(|| bad(format!("missing grid row {iy}")))?;
            let symbols: Vec<char> = row.chars().collect();
            if symbols.len() != width {
                return Err(bad(format!("row {iy} has {} cells, expected {width}", symbols.len())));
            }
            for (ix, c) in symbols.into_iter().enumerate() {
                let class = CellClass::from_symbol(c)
                    .ok_or_else(|| bad(format!("unknown cell symbol '{c}'")))?;
                grid.set(ix, iy, class);
            }
        }
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                ["start", x, y] => grid.start = (parse_f64(x)?, parse_f64(y)?),
                ["goal", x, y] => grid.goal = (parse_f64(x)?, parse_f64(y)?),
                ["occlusion", x, y, w, h] => grid.occlusion_patches.push(OcclusionPatch {
                    x: parse_usize(x)?,
                    y: parse_usize(y)?,
                    w: parse_usize(w)?,
                    h: parse_usize(h)?,
                }),
                _ => return Err(bad(format!("unrecognized record '{line}'"))),
            }
        }
        Ok(grid)
    }
}

fn draw_count(rng: &mut SimRng, (lo, hi): (usize, usize)) -> usize {
    lo + rng.below(hi - lo + 1)
}

/// Generates a world for `difficulty`, rejection-sampling until start and goal
/// are free and connected through traversable cells.
pub fn generate_world(
    seed: u64,
    difficulty: Difficulty,
    config: &WorldConfig,
    image_size: (usize, usize),
) -> Result<TerrainGrid> {
    let preset = difficulty.preset();
    let mut rng = SimRng::derive(seed, 0x5eed_0000 + difficulty.code() as u64);
    for _ in 0..config.max_attempts {
        let grid = sample_world(&mut rng, &preset, config, image_size)?;
        if grid.endpoints_free() && grid.has_traversable_path() {
            return Ok(grid);
        }
    }
    Err(Error::WorldGeneration {
        attempts: config.max_attempts,
    })
}

fn sample_world(
    rng: &mut SimRng,
    preset: &Preset,
    config: &WorldConfig,
    (img_w, img_h): (usize, usize),
) -> Result<TerrainGrid> {
    let mut grid = TerrainGrid::new(config.width_cells, config.height_cells, config.cell_size)?;
    let (world_w, world_h) = grid.extent();
    let cs = config.cell_size;
    grid.start = (config.start_x, rng.uniform(config.endpoint_y.0, config.endpoint_y.1));
    grid.goal = (config.goal_x, rng.uniform(config.endpoint_y.0, config.endpoint_y.1));
    grid.illumination = preset.illumination;
    grid.blur_radius = preset.blur_radius;

    if let Some(clutter) = &preset.clutter {
        // pliable band across the full height with a ragged edge
        let x0 = rng.uniform(clutter.band_start.0, clutter.band_start.1);
        let depth = rng.uniform(clutter.band_depth.0, clutter.band_depth.1);
        let mut wobble = 0.0f64;
        for iy in 0..grid.height() {
            wobble = (wobble + rng.uniform(-0.5, 0.5) * cs * 2.0).clamp(-0.5, 0.5);
            let y = iy as f64 * cs;
            grid.fill_rect(x0 + wobble, y, x0 + wobble + depth, y + cs, CellClass::PliableClutter);
        }
        let mut place = |rng: &mut SimRng, count: (usize, usize), size: (f64, f64), class| {
            for _ in 0..draw_count(rng, count) {
                let w = rng.uniform(size.0, size.1);
                let h = rng.uniform(size.0, size.1);
                let cx = rng.uniform(3.5, world_w - 3.5);
                let cy = rng.uniform(1.0, world_h - 1.0);
                grid.fill_rect(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0, class);
            }
        };
        place(rng, clutter.pliable_patches, (1.0, 2.0), CellClass::PliableClutter);
        place(
            rng,
            clutter.nontraversable_patches,
            (0.75, 1.5),
            CellClass::NonTraversableClutter,
        );
        place(rng, clutter.solid_boxes, (0.5, 1.25), CellClass::SolidObstacle);
        let r = config.keep_clear;
        for (x, y) in [grid.start, grid.goal] {
            grid.fill_rect(x - r, y - r, x + r, y + r, CellClass::Free);
        }
    }

    let (lo, hi) = preset.occlusion_coverage;
    if hi > 0.0 {
        // one patch anchored on a random frame edge
        let coverage = rng.uniform(lo, hi);
        let (x, y, w, h) = match rng.below(4) {
            0 => (0, 0, img_w, (coverage * img_h as f64).round() as usize),
            1 => {
                let h = (coverage * img_h as f64).round() as usize;
                (0, img_h - h, img_w, h)
            }
            2 => (0, 0, (coverage * img_w as f64).round() as usize, img_h),
            _ => {
                let w = (coverage * img_w as f64).round() as usize;
                (img_w - w, 0, w, img_h)
            }
        };
        grid.occlusion_patches.push(OcclusionPatch { x, y, w, h });
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(seed: u64, d: Difficulty) -> TerrainGrid {
        generate_world(seed, d, &WorldConfig::default(), (64, 64)).unwrap()
    }

    #[test]
    fn open_world_has_no_clutter() {
        let g = gen(1, Difficulty::Open);
        assert_eq!(g.count(CellClass::PliableClutter), 0);
        assert_eq!(g.count(CellClass::NonTraversableClutter), 0);
        assert_eq!(g.count(CellClass::SolidObstacle), 0);
        assert_eq!(g.illumination, 1.0);
    }

    #[test]
    fn dark_world_uses_preset_illumination() {
        assert_eq!(gen(1, Difficulty::Dark).illumination, 0.15);
    }

    #[test]
    fn generation_is_deterministic() {
        for d in Difficulty::ALL {
            assert_eq!(gen(9, d), gen(9, d));
        }
        assert_ne!(gen(1, Difficulty::Cluttered), gen(2, Difficulty::Cluttered));
    }

    #[test]
    fn generated_worlds_satisfy_invariants() {
        for seed in 0..40 {
            for d in Difficulty::ALL {
                let g = gen(seed, d);
                assert_eq!(g.class_at(g.start.0, g.start.1), Some(CellClass::Free));
                assert_eq!(g.class_at(g.goal.0, g.goal.1), Some(CellClass::Free));
                assert!(g.has_traversable_path());
            }
        }
    }

    #[test]
    fn cluttered_band_blocks_straight_line() {
        let g = gen(3, Difficulty::Cluttered);
        assert!(g.count(CellClass::PliableClutter) > 0);
        let row = (g.start.1 / g.cell_size()) as usize;
        assert!((0..g.width()).any(|ix| g.get(ix, row) == CellClass::PliableClutter));
    }

    #[test]
    fn occlusion_presets_cover_frame() {
        let g = gen(4, Difficulty::Occluded);
        let area: usize = g.occlusion_patches.iter().map(|p| p.w * p.h).sum();
        assert!(area as f64 >= 0.34 * 64.0 * 64.0);
    }

    #[test]
    fn text_format_round_trip() {
        for d in Difficulty::ALL {
            let g = gen(5, d);
            let text = g.to_text();
            let back = TerrainGrid::from_text(&text).unwrap();
            assert_eq!(back, g);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn text_format_rejects_garbage() {
        assert!(TerrainGrid::from_text("").is_err());
        assert!(TerrainGrid::from_text("2 1 0.5 1 0\n..\nbogus 1").is_err());
        assert!(TerrainGrid::from_text("2 1 0.5 1 0\n.x\n").is_err());
        assert!(TerrainGrid::from_text("2 2 0.5 1 0\n..\n").is_err());
    }

    #[test]
    fn blocked_world_has_no_path() {
        let mut g = TerrainGrid::new(10, 5, 1.0).unwrap();
        g.start = (0.5, 2.5);
        g.goal = (9.5, 2.5);
        assert!(g.has_traversable_path());
        g.fill_rect(5.0, 0.0, 6.0, 5.0, CellClass::SolidObstacle);
        assert!(!g.has_traversable_path());
        g.fill_rect(5.0, 0.0, 6.0, 5.0, CellClass::PliableClutter);
        assert!(g.has_traversable_path());
    }
}
