//! Camera reliability from global brightness and FAST corner density.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::ImageRaster;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Corner {
    pub x: usize,
    pub y: usize,
    pub score: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageReliability {
    pub r_bright: f64,
    pub r_corners: f64,
    pub r_img: f64,
    pub n_c: usize,
}

/// Root mean square grayscale intensity computed from the 256-bin histogram,
/// scaled to `[0, 1]`.
pub fn brightness(image: &ImageRaster) -> Result<f64> {
    let gray = image.to_gray();
    if gray.is_empty() {
        return Err(invalid("brightness of an empty image"));
    }
    let mut hist = [0u64; 256];
    for &g in &gray {
        hist[g as usize] += 1;
    }
    let sum_sq: f64 = hist
        .iter()
        .enumerate()
        .map(|(b, &n)| n as f64 * (b * b) as f64)
        .sum();
    Ok(((sum_sq / gray.len() as f64).sqrt() / 255.0).clamp(0.0, 1.0))
}

/// Segment-test response of one pixel, `None` if it is not a corner.
///
/// `score` is the best `min |I(x) - I(p)| - t` over any window of `arc`
/// consecutive circle pixels that are all brighter than `I(p) + t` or all
/// darker than `I(p) - t`. `sad` is the larger of the summed bright and dark
/// excesses over the whole circle and only breaks ties in suppression.
fn segment_response(gray: &[u8], width: usize, x: usize, y: usize, t: u8, arc: usize) -> Option<(u16, u32)> {
    let center = gray[y * width + x] as i32;
    let t = t as i32;
    let mut diffs = [0i32; 16];
    for (d, (dx, dy)) in diffs.iter_mut().zip(CIRCLE) {
        let px = (x as i32 + dx) as usize;
        let py = (y as i32 + dy) as usize;
        *d = gray[py * width + px] as i32 - center;
    }
    let mut best: Option<i32> = None;
    for sign in [1, -1] {
        for start in 0..16 {
            let mut min_margin = i32::MAX;
            for k in 0..arc {
                let d = sign * diffs[(start + k) % 16];
                if d <= t {
                    min_margin = i32::MIN;
                    break;
                }
                min_margin = min_margin.min(d - t);
            }
            if min_margin != i32::MIN {
                best = Some(best.map_or(min_margin, |b| b.max(min_margin)));
            }
        }
    }
    let score = best?;
    let excess = |sign: i32| -> u32 {
        diffs
            .iter()
            .map(|&d| sign * d - t)
            .filter(|&e| e > 0)
            .map(|e| e as u32)
            .sum()
    };
    Some((score as u16, excess(1).max(excess(-1))))
}

/// FAST corners with 3x3 non-maximum suppression: a corner survives only if
/// its `(score, sad)` pair is strictly greater than every neighbour's.
pub fn fast_corners(image: &ImageRaster, threshold: u8, arc: usize) -> Vec<Corner> {
    let (w, h) = (image.width(), image.height());
    if w < 7 || h < 7 || arc == 0 || arc > 16 {
        return Vec::new();
    }
    let gray = image.to_gray();
    let mut responses = vec![None; w * h];
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            responses[y * w + x] = segment_response(&gray, w, x, y, threshold, arc);
        }
    }
    let mut corners = Vec::new();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let Some(r) = responses[y * w + x] else { continue };
            let dominated = (y - 1..=y + 1)
                .flat_map(|ny| (x - 1..=x + 1).map(move |nx| (nx, ny)))
                .filter(|&n| n != (x, y))
                .any(|(nx, ny)| responses[ny * w + nx].is_some_and(|nr| nr >= r));
            if !dominated {
                corners.push(Corner { x, y, score: r.0 });
            }
        }
    }
    corners
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReliabilityParams {
    pub alpha_b: f64,
    pub alpha_c: f64,
    /// Corner density that maps to `r_corners = 1`.
    pub corner_norm: f64,
    pub fast_threshold: u8,
    pub fast_arc: usize,
}

impl Default for ImageReliabilityParams {
    fn default() -> Self {
        Self {
            alpha_b: 0.5,
            alpha_c: 0.5,
            corner_norm: 0.005,
            fast_threshold: 20,
            fast_arc: 9,
        }
    }
}

impl ImageReliabilityParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_b >= 0.0
            && self.alpha_c >= 0.0
            && (self.alpha_b + self.alpha_c - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(invalid(format!(
                "image weights must be non-negative and sum to 1, got ({}, {})",
                self.alpha_b, self.alpha_c
            )));
        }
        if !(self.corner_norm > 0.0) {
            return Err(invalid(format!(
                "corner_norm must be positive, got {}",
                self.corner_norm
            )));
        }
        Ok(())
    }
}

pub fn image_reliability(
    image: &ImageRaster,
    params: &ImageReliabilityParams,
) -> Result<ImageReliability> {
    params.validate()?;
    let r_bright = brightness(image)?;
    let n_c = fast_corners(image, params.fast_threshold, params.fast_arc).len();
    let area = (image.width() * image.height()) as f64;
    let r_corners = (n_c as f64 / (params.corner_norm * area)).min(1.0);
    let r_img = (params.alpha_b * r_bright + params.alpha_c * r_corners).clamp(0.0, 1.0);
    Ok(ImageReliability {
        r_bright,
        r_corners,
        r_img,
        n_c,
    })
}
