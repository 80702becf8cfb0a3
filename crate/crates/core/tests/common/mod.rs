#![allow(dead_code)]

use std::f64::consts::PI;

use trav_core::planner::PlannerConfig;
use trav_core::simworld::{render_lidar, CellClass, Difficulty, SimConfig, TerrainGrid};
use trav_core::{ImageRaster, Observation, PointCloud, Pose2D, SimRng, VelocityCommand, VelocityHistory};

pub struct PlanState {
    pub pose: Pose2D,
    pub current: VelocityCommand,
    pub goal: (f64, f64),
    pub obs: Observation,
}

/// Random pose, goal, on-grid current velocity and a sparse obstacle cloud.
pub fn random_state(rng: &mut SimRng, cfg: &PlannerConfig) -> PlanState {
    let pose = Pose2D::new(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-PI, PI)).unwrap();
    let goal = (rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
    let nv = (cfg.v_max / cfg.dv).round() as usize;
    let nw = (cfg.omega_max / cfg.domega).round() as i64;
    let current = VelocityCommand::new(
        rng.below(nv + 1) as f64 * cfg.dv,
        (rng.below(2 * nw as usize + 1) as i64 - nw) as f64 * cfg.domega,
    );
    let n = rng.below(30);
    let points: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let r = rng.uniform(0.2, 6.0);
            let a = rng.uniform(-PI, PI);
            [r * a.cos(), r * a.sin(), 0.0]
        })
        .collect();
    let cloud = PointCloud::new(points, vec![0; n], 1).unwrap();
    PlanState {
        pose,
        current,
        goal,
        obs: blank_observation(cloud, cfg.horizon),
    }
}

pub fn blank_observation(cloud: PointCloud, horizon: usize) -> Observation {
    Observation::new(
        ImageRaster::filled(64, 64, 3, 0).unwrap(),
        cloud,
        VelocityHistory::zeros(horizon),
        ImageRaster::filled(64, 64, 1, 0).unwrap(),
    )
    .unwrap()
}

fn wrap(a: f64) -> f64 {
    trav_core::normalize_angle(a).unwrap()
}

/// Classic dynamic-window argmax written out directly: enumerate the grid,
/// keep reachable commands with clear rollouts, score heading, clearance and
/// speed, break ties by speed then turn magnitude then `(v, omega)`.
pub fn dwa_oracle(
    pose: &Pose2D,
    current: VelocityCommand,
    goal: (f64, f64),
    cloud: &PointCloud,
    weights: (f64, f64, f64),
    cfg: &PlannerConfig,
) -> Option<VelocityCommand> {
    let nv = (cfg.v_max / cfg.dv + 1e-9).floor() as i64;
    let nw = (cfg.omega_max / cfg.domega + 1e-9).floor() as i64;
    let mut best: Option<(f64, VelocityCommand)> = None;
    for i in 0..=nv {
        for j in -nw..=nw {
            let v = i as f64 * cfg.dv;
            let w = j as f64 * cfg.domega;
            if (v - current.v).abs() > cfg.accel_v * cfg.dt + 1e-9
                || (w - current.omega).abs() > cfg.accel_omega * cfg.dt + 1e-9
            {
                continue;
            }
            // rollout from the robot origin for clearance
            let mut closest2 = f64::INFINITY;
            for k in 1..=cfg.horizon {
                let t = k as f64 * cfg.dt;
                let (x, y) = if w.abs() > 1e-6 {
                    ((v / w) * (w * t).sin(), -(v / w) * ((w * t).cos() - 1.0))
                } else {
                    (v * t, 0.0)
                };
                for p in cloud.points() {
                    closest2 = closest2.min((x - p[0]).powi(2) + (y - p[1]).powi(2));
                }
            }
            let closest = closest2.sqrt();
            if closest < cfg.clearance {
                continue;
            }
            // rollout endpoint in the world frame for heading
            let t = cfg.horizon as f64 * cfg.dt;
            let th = pose.theta + w * t;
            let (ex, ey) = if w.abs() > 1e-6 {
                (
                    pose.x + (v / w) * (th.sin() - pose.theta.sin()),
                    pose.y - (v / w) * (th.cos() - pose.theta.cos()),
                )
            } else {
                (pose.x + v * t * pose.theta.cos(), pose.y + v * t * pose.theta.sin())
            };
            let heading = 1.0 - wrap((goal.1 - ey).atan2(goal.0 - ex) - wrap(th)).abs() / PI;
            let dist = (closest / cfg.clearance_clip).min(1.0);
            let q = weights.0 * heading + weights.1 * dist + weights.2 * (v / cfg.v_max);
            let cmd = VelocityCommand::new(v, w);
            let better = match best {
                None => true,
                Some((bq, b)) => {
                    q > bq
                        || (q == bq
                            && (v > b.v
                                || (v == b.v
                                    && (w.abs() < b.omega.abs()
                                        || (w.abs() == b.omega.abs() && w < b.omega)))))
                }
            };
            if better {
                best = Some((q, cmd));
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Random blocky grayscale-ish RGB texture.
pub fn textured_image(rng: &mut SimRng, w: usize, h: usize) -> ImageRaster {
    let block = 3 + rng.below(6);
    let cols = w.div_ceil(block);
    let rows = h.div_ceil(block);
    let levels: Vec<u8> = (0..cols * rows).map(|_| rng.below(256) as u8).collect();
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let v = levels[(y / block) * cols + x / block];
            data.extend_from_slice(&[v, v, v]);
        }
    }
    ImageRaster::new(w, h, 3, data).unwrap()
}

/// Constant patch covering `frac` of the frame, anchored on edge `side`
/// (0 top, 1 bottom, 2 left, 3 right).
pub fn occlude(img: &ImageRaster, frac: f64, side: usize, value: u8) -> ImageRaster {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let rows = (frac * h as f64).ceil() as usize;
    let cols = (frac * w as f64).ceil() as usize;
    for y in 0..h {
        for x in 0..w {
            let inside = match side {
                0 => y < rows,
                1 => y >= h - rows,
                2 => x < cols,
                _ => x >= w - cols,
            };
            if inside {
                out.pixel_mut(x, y).fill(value);
            }
        }
    }
    out
}

/// Pixel values multiplied by `gain` and rounded.
pub fn dimmed(img: &ImageRaster, gain: f64) -> ImageRaster {
    let data = img.data().iter().map(|&v| (v as f64 * gain).round() as u8).collect();
    ImageRaster::new(img.width(), img.height(), img.channels(), data).unwrap()
}

/// LiDAR scans from inside the pliable band of a cluttered preset world and
/// from in front of a solid wall, both at the default sensor settings.
pub fn clutter_and_wall_scans(seed: u64) -> (PointCloud, PointCloud) {
    let sim = SimConfig::default();
    let grid = sim.generate(seed, Difficulty::Cluttered).unwrap();
    let y = grid.start.1;
    let x = (0..grid.width())
        .map(|ix| (ix as f64 + 0.5) * grid.cell_size())
        .filter(|&x| grid.class_at(x, y) == Some(CellClass::PliableClutter))
        .nth(3)
        .expect("band crosses the start row");
    let mut rng = SimRng::derive(seed, 0xc1);
    let inside = Pose2D::new(x, y, 0.0).unwrap();
    let clutter = render_lidar(&grid, &inside, &sim.lidar, &mut rng).unwrap();

    let mut walled = TerrainGrid::new(64, 40, 0.25).unwrap();
    walled.fill_rect(6.0, 0.0, 6.5, 10.0, CellClass::SolidObstacle);
    let facing = Pose2D::new(3.0, 5.0, 0.0).unwrap();
    let wall = render_lidar(&walled, &facing, &sim.lidar, &mut rng).unwrap();
    (clutter, wall)
}
