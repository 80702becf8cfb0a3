//! Constant-command rollouts and their top-down trajectory images.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{ImageRaster, Pose2D, VelocityCommand};

/// Below this turn rate a rollout is integrated as a straight line.
pub const STRAIGHT_OMEGA: f64 = 1e-6;

/// The `horizon` poses reached after `1..=horizon` intervals of `dt` under a
/// constant command, integrated exactly along the arc.
pub fn predict_trajectory(
    pose: &Pose2D,
    cmd: VelocityCommand,
    dt: f64,
    horizon: usize,
) -> Vec<Pose2D> {
    let (x0, y0, th0) = (pose.x, pose.y, pose.theta);
    (1..=horizon)
        .map(|k| {
            let t = k as f64 * dt;
            let th = th0 + cmd.omega * t;
            let (x, y) = if cmd.omega.abs() > STRAIGHT_OMEGA {
                let r = cmd.v / cmd.omega;
                (x0 + r * (th.sin() - th0.sin()), y0 - r * (th.cos() - th0.cos()))
            } else {
                (x0 + cmd.v * t * th0.cos(), y0 + cmd.v * t * th0.sin())
            };
            Pose2D::new_unchecked(x, y, th)
        })
        .collect()
}

/// Metric extent of the trajectory image: `forward` meters ahead of the robot
/// and `lateral` meters across, robot at the bottom-center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryWindow {
    pub forward: f64,
    pub lateral: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for TrajectoryWindow {
    fn default() -> Self {
        Self {
            forward: 10.0,
            lateral: 10.0,
            width: 64,
            height: 64,
        }
    }
}

impl TrajectoryWindow {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.forward > 0.0 && self.lateral > 0.0) {
            return Err(invalid("trajectory window needs positive size and extent"));
        }
        Ok(())
    }

    /// Continuous image coordinates: signed pixel offset from the center
    /// column and pixel distance up from the bottom edge.
    fn project(&self, x: f64, y: f64) -> (f64, f64) {
        (
            -y * self.width as f64 / self.lateral,
            x * self.height as f64 / self.forward,
        )
    }

    fn pixel(&self, across: f64, up: f64) -> Option<(usize, usize)> {
        // rounding half away from zero keeps left and right turns mirror images
        let col = (self.width / 2) as f64 + across.round();
        let row = self.height as f64 - 1.0 - up.floor();
        let inside = col >= 0.0 && col < self.width as f64 && row >= 0.0 && up >= 0.0;
        inside.then_some((col as usize, row as usize))
    }
}

/// Draws the polyline through `traj` (robot frame, x forward, y left) as
/// 1-pixel strokes of 255 on black. Parts outside the window are clipped.
pub fn rasterize_trajectory(traj: &[Pose2D], window: &TrajectoryWindow) -> Result<ImageRaster> {
    window.validate()?;
    if traj.is_empty() {
        return Err(invalid("cannot rasterize an empty trajectory"));
    }
    let mut img = ImageRaster::filled(window.width, window.height, 1, 0)?;
    let mut plot = |a: f64, u: f64| {
        if let Some((c, r)) = window.pixel(a, u) {
            img.pixel_mut(c, r)[0] = 255;
        }
    };
    let pts: Vec<(f64, f64)> = traj.iter().map(|p| window.project(p.x, p.y)).collect();
    plot(pts[0].0, pts[0].1);
    for seg in pts.windows(2) {
        let ((a0, u0), (a1, u1)) = (seg[0], seg[1]);
        // half-pixel steps keep the stroke connected
        let steps = ((a1 - a0).abs().max((u1 - u0).abs()) * 2.0).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            plot(a0 + (a1 - a0) * t, u0 + (u1 - u0) * t);
        }
    }
    Ok(img)
}

/// Rollout of `cmd` from the robot origin, prefixed by the origin itself, in
/// the robot frame. This is the polyline the predictor sees.
pub fn local_rollout(cmd: VelocityCommand, dt: f64, horizon: usize) -> Vec<Pose2D> {
    let origin = Pose2D::new_unchecked(0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(origin);
    out.extend(predict_trajectory(&origin, cmd, dt, horizon));
    out
}
