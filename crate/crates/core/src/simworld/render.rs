//! Synthetic camera and LiDAR.

use serde::{Deserialize, Serialize};

use super::terrain::{CellClass, TerrainGrid};
use crate::error::Result;
use crate::rng::SimRng;
use crate::types::{ImageRaster, PointCloud, Pose2D};

/// Fill value for occluded pixels.
pub const OCCLUSION_VALUE: u8 = 8;

pub const SKY_RGB: [u8; 3] = [120, 150, 210];
pub const GROUND_RGB: [u8; 3] = [200, 180, 150];
pub const PLIABLE_RGB: [u8; 3] = [70, 150, 60];
pub const NONTRAVERSABLE_RGB: [u8; 3] = [70, 50, 35];
pub const SOLID_RGB: [u8; 3] = [235, 235, 235];

fn ground_rgb(class: Option<CellClass>) -> [u8; 3] {
    match class {
        Some(CellClass::Free) => GROUND_RGB,
        Some(CellClass::PliableClutter) => PLIABLE_RGB,
        // off-grid ground reads as untraversable terrain
        Some(CellClass::NonTraversableClutter) | None => NONTRAVERSABLE_RGB,
        Some(CellClass::SolidObstacle) => SOLID_RGB,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, radians.
    pub hfov: f64,
    /// Mount height above ground, meters.
    pub mount_height: f64,
    /// Downward tilt, radians.
    pub pitch: f64,
    pub wall_height: f64,
    pub max_view: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            hfov: std::f64::consts::FRAC_PI_2,
            mount_height: 0.6,
            pitch: 0.35,
            wall_height: 1.5,
            max_view: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub rings: usize,
    pub azimuths: usize,
    pub max_range: f64,
    /// Elevation of each ring, radians; length must equal `rings`.
    pub ring_elevations: Vec<f64>,
    pub noise_sigma: f64,
    pub scatter_pliable: f64,
    pub scatter_nontraversable: f64,
    /// Radius of the uniform ball a scattered return is perturbed within.
    pub scatter_radius: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            rings: 4,
            azimuths: 180,
            max_range: 10.0,
            ring_elevations: vec![-0.03, 0.0, 0.03, 0.06],
            noise_sigma: 0.01,
            scatter_pliable: 0.6,
            scatter_nontraversable: 0.8,
            scatter_radius: 0.5,
        }
    }
}

/// Walks the grid cells crossed by a horizontal ray (Amanatides-Woo).
/// Yields `(ix, iy, s_enter, s_exit)` with distances along the ray; stops on
/// leaving the grid or passing `max_dist`.
pub(crate) struct RayCells<'a> {
    grid: &'a TerrainGrid,
    ix: i64,
    iy: i64,
    step_x: i64,
    step_y: i64,
    t_max_x: f64,
    t_max_y: f64,
    t_delta_x: f64,
    t_delta_y: f64,
    s: f64,
    max_dist: f64,
}

impl<'a> RayCells<'a> {
    pub(crate) fn new(grid: &'a TerrainGrid, x: f64, y: f64, dir: (f64, f64), max_dist: f64) -> Self {
        let cs = grid.cell_size();
        let (dx, dy) = dir;
        let ix = (x / cs).floor() as i64;
        let iy = (y / cs).floor() as i64;
        let axis = |pos: f64, d: f64, i: i64| -> (i64, f64, f64) {
            if d > 0.0 {
                (1, ((i + 1) as f64 * cs - pos) / d, cs / d)
            } else if d < 0.0 {
                (-1, (i as f64 * cs - pos) / d, -cs / d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_x, t_max_x, t_delta_x) = axis(x, dx, ix);
        let (step_y, t_max_y, t_delta_y) = axis(y, dy, iy);
        Self {
            grid,
            ix,
            iy,
            step_x,
            step_y,
            t_max_x,
            t_max_y,
            t_delta_x,
            t_delta_y,
            s: 0.0,
            max_dist,
        }
    }
}

impl Iterator for RayCells<'_> {
    type Item = (usize, usize, f64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.s >= self.max_dist
            || self.ix < 0
            || self.iy < 0
            || self.ix >= self.grid.width() as i64
            || self.iy >= self.grid.height() as i64
        {
            return None;
        }
        let (ix, iy, enter) = (self.ix as usize, self.iy as usize, self.s);
        let exit = if self.t_max_x < self.t_max_y {
            let e = self.t_max_x;
            self.ix += self.step_x;
            self.t_max_x += self.t_delta_x;
            e
        } else {
            let e = self.t_max_y;
            self.iy += self.step_y;
            self.t_max_y += self.t_delta_y;
            e
        };
        self.s = exit;
        Some((ix, iy, enter, exit.min(self.max_dist)))
    }
}

/// Forward-facing perspective view of the terrain, then illumination,
/// box blur and occlusion applied in that order.
pub fn render_camera(grid: &TerrainGrid, pose: &Pose2D, cam: &CameraConfig) -> Result<ImageRaster> {
    let (w, h) = (cam.width, cam.height);
    let focal = (w as f64 / 2.0) / (cam.hfov / 2.0).tan();
    let (sp, cp) = cam.pitch.sin_cos();
    let (st, ct) = pose.theta.sin_cos();
    let mut img = ImageRaster::filled(w, h, 3, 0)?;
    for v in 0..h {
        let yc = (v as f64 + 0.5 - h as f64 / 2.0) / focal;
        for u in 0..w {
            let xc = (u as f64 + 0.5 - w as f64 / 2.0) / focal;
            // robot frame: forward, left, up
            let fwd = cp - yc * sp;
            let left = -xc;
            let up = -sp - yc * cp;
            let horiz = fwd.hypot(left);
            let slope = up / horiz;
            let dir = ((fwd * ct - left * st) / horiz, (fwd * st + left * ct) / horiz);
            let ground_dist = if slope < 0.0 {
                cam.mount_height / -slope
            } else {
                f64::INFINITY
            };
            let reach = ground_dist.min(cam.max_view);
            let mut color = None;
            for (ix, iy, enter, _) in RayCells::new(grid, pose.x, pose.y, dir, reach) {
                if grid.get(ix, iy) == CellClass::SolidObstacle {
                    let z = cam.mount_height + slope * enter;
                    if (0.0..=cam.wall_height).contains(&z) {
                        color = Some(SOLID_RGB);
                        break;
                    }
                }
            }
            let color = color.unwrap_or_else(|| {
                if ground_dist <= cam.max_view {
                    let gx = pose.x + dir.0 * ground_dist;
                    let gy = pose.y + dir.1 * ground_dist;
                    ground_rgb(grid.class_at(gx, gy))
                } else {
                    SKY_RGB
                }
            });
            img.pixel_mut(u, v).copy_from_slice(&color);
        }
    }
    degrade(&mut img, grid);
    Ok(img)
}

fn degrade(img: &mut ImageRaster, grid: &TerrainGrid) {
    let illum = grid.illumination.clamp(0.0, 1.0);
    if illum < 1.0 {
        for b in img.data_mut() {
            *b = (*b as f64 * illum).round() as u8;
        }
    }
    if grid.blur_radius > 0 {
        *img = box_blur(img, grid.blur_radius);
    }
    let (w, h) = (img.width(), img.height());
    for p in &grid.occlusion_patches {
        for y in p.y.min(h)..(p.y + p.h).min(h) {
            for x in p.x.min(w)..(p.x + p.w).min(w) {
                img.pixel_mut(x, y).fill(OCCLUSION_VALUE);
            }
        }
    }
}

/// Mean over the `(2r+1)^2` window clipped to the frame.
pub fn box_blur(img: &ImageRaster, radius: usize) -> ImageRaster {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(w - 1));
            let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(h - 1));
            let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
            for c in 0..ch {
                let mut sum = 0u32;
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        sum += img.pixel(xx, yy)[c] as u32;
                    }
                }
                out.pixel_mut(x, y)[c] = (sum as f64 / n).round() as u8;
            }
        }
    }
    out
}

fn ball_offset(rng: &mut SimRng, radius: f64) -> [f64; 3] {
    loop {
        let p = [
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        if p.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            return p.map(|c| c * radius);
        }
    }
}

struct RayProfile {
    /// Contiguous clutter stretches `(enter, exit, scatter probability)`.
    clutter: Vec<(f64, f64, f64)>,
    solid_hit: Option<f64>,
}

fn profile_ray(grid: &TerrainGrid, pose: &Pose2D, dir: (f64, f64), lidar: &LidarConfig) -> RayProfile {
    let mut clutter: Vec<(f64, f64, f64)> = Vec::new();
    let mut open_run: Option<(f64, f64, f64)> = None;
    let mut solid_hit = None;
    for (ix, iy, enter, exit) in RayCells::new(grid, pose.x, pose.y, dir, lidar.max_range) {
        let class = grid.get(ix, iy);
        let p = match class {
            CellClass::PliableClutter => Some(lidar.scatter_pliable),
            CellClass::NonTraversableClutter => Some(lidar.scatter_nontraversable),
            _ => None,
        };
        match (p, open_run.as_mut()) {
            (Some(p), Some(run)) => {
                run.1 = exit;
                run.2 = run.2.max(p);
            }
            (Some(p), None) => open_run = Some((enter, exit, p)),
            (None, _) => {
                if let Some(run) = open_run.take() {
                    clutter.push(run);
                }
            }
        }
        if class == CellClass::SolidObstacle {
            solid_hit = Some(enter);
            break;
        }
    }
    if let Some(run) = open_run {
        clutter.push(run);
    }
    RayProfile { clutter, solid_hit }
}

/// Ray-cast scan over `rings x azimuths`, returned ring-major with ascending
/// azimuth. Solid hits carry Gaussian noise; each clutter stretch a ray
/// crosses may scatter it into a random return inside the stretch.
pub fn render_lidar(
    grid: &TerrainGrid,
    pose: &Pose2D,
    lidar: &LidarConfig,
    rng: &mut SimRng,
) -> Result<PointCloud> {
    let n_az = lidar.azimuths;
    let profiles: Vec<(f64, RayProfile)> = (0..n_az)
        .map(|i| {
            let az = -std::f64::consts::PI + (i as f64 + 0.5) * std::f64::consts::TAU / n_az as f64;
            let heading = pose.theta + az;
            (az, profile_ray(grid, pose, (heading.cos(), heading.sin()), lidar))
        })
        .collect();

    let mut points = Vec::new();
    let mut rings = Vec::new();
    for (ring, &elev) in lidar.ring_elevations.iter().enumerate().take(lidar.rings) {
        let tan_e = elev.tan();
        for (az, prof) in &profiles {
            let (sa, ca) = az.sin_cos();
            let mut hit = None;
            for &(enter, exit, p) in &prof.clutter {
                if rng.chance(p) {
                    let s = rng.uniform(enter, exit);
                    let o = ball_offset(rng, lidar.scatter_radius);
                    hit = Some([s * ca + o[0], s * sa + o[1], s * tan_e + o[2]]);
                    break;
                }
            }
            if hit.is_none() {
                if let Some(s) = prof.solid_hit {
                    let mut p = [s * ca, s * sa, s * tan_e];
                    if lidar.noise_sigma > 0.0 {
                        for c in &mut p {
                            *c += rng.gaussian(lidar.noise_sigma);
                        }
                    }
                    hit = Some(p);
                }
            }
            if let Some(p) = hit {
                points.push(p);
                rings.push(ring as u16);
            }
        }
    }
    PointCloud::new(points, rings, lidar.rings as u16)
}
