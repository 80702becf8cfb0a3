//! Static SVG trajectory overlays and the summary CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::Config;
use super::eval::{summarize, EpisodeReport, SummaryRow};
use crate::error::{invalid, Result};
use crate::simworld::{CellClass, TerrainGrid};

pub const SUMMARY_HEADER: &str =
    "suite,difficulty,episodes,success_rate,norm_len_success,norm_len_fail,mean_vetoes";

/// Pixels per meter in the SVG.
const SCALE: f64 = 40.0;

fn fill(class: CellClass) -> Option<&'static str> {
    match class {
        CellClass::Free => None,
        CellClass::SolidObstacle => Some("#555555"),
        CellClass::PliableClutter => Some("#8fce7a"),
        CellClass::NonTraversableClutter => Some("#6b4a2b"),
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.suite,
            r.difficulty,
            r.episodes,
            num(r.success_rate),
            num(r.norm_len_success),
            num(r.norm_len_fail),
            num(r.mean_vetoes)
        );
    }
    out
}

/// Top-down view: terrain cells, start and goal markers, driven path.
pub fn episode_svg(grid: &TerrainGrid, report: &EpisodeReport) -> String {
    let (w, h) = grid.extent();
    let cs = grid.cell_size();
    // world y points up, SVG y points down
    let px = |x: f64| x * SCALE;
    let py = |y: f64| (h - y) * SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        px(w),
        h * SCALE,
        px(w),
        h * SCALE
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#f4efe6"/>"##,
        px(w),
        h * SCALE
    );
    for iy in 0..grid.height() {
        for ix in 0..grid.width() {
            if let Some(color) = fill(grid.get(ix, iy)) {
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
                    px(ix as f64 * cs),
                    py((iy + 1) as f64 * cs),
                    cs * SCALE,
                    cs * SCALE
                );
            }
        }
    }
    let points: Vec<String> = report
        .trajectory
        .iter()
        .map(|&(x, y)| format!("{},{}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline class="path" points="{}" fill="none" stroke="#1f4e9e" stroke-width="3"/>"##,
        points.join(" ")
    );
    let (sx, sy) = grid.start;
    let (gx, gy) = grid.goal;
    let _ = writeln!(
        s,
        r##"<circle class="start" cx="{}" cy="{}" r="6" fill="#2a9d4b"/>"##,
        px(sx),
        py(sy)
    );
    let _ = writeln!(
        s,
        r##"<circle class="goal" cx="{}" cy="{}" r="8" fill="none" stroke="#c0392b" stroke-width="3"/>"##,
        px(gx),
        py(gy)
    );
    let _ = writeln!(
        s,
        r#"<text x="8" y="20" font-family="monospace" font-size="14">{} {} #{} {} len {:.2}</text>"#,
        report.suite,
        report.difficulty,
        report.episode,
        report.status.name(),
        report.normalized_length
    );
    s.push_str("</svg>\n");
    s
}

pub fn episode_svg_name(report: &EpisodeReport) -> String {
    format!("{}_{}_{:03}.svg", report.suite, report.difficulty, report.episode)
}

/// Writes one SVG per report plus `summary.csv` into `out_dir` and returns
/// the written paths in order.
pub fn emit_plots(reports: &[EpisodeReport], cfg: &Config, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(invalid("no episode reports to plot"));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for r in reports {
        let grid = cfg.simworld.generate(r.world_seed, r.difficulty)?;
        let path = out_dir.join(episode_svg_name(r));
        std::fs::write(&path, episode_svg(&grid, r))?;
        written.push(path);
    }
    let path = out_dir.join("summary.csv");
    std::fs::write(&path, summary_csv(&summarize(reports)))?;
    written.push(path);
    Ok(written)
}
