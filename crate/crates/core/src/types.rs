//! Domain values shared by the simulator, estimators, predictor and planner.
//! All of them are immutable once built.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::{normalize_angle, wrap_angle};

/// Default trajectory horizon: history length, prediction length and rollout
/// length all use it.
pub const DEFAULT_HORIZON: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    /// Heading, always in `(-pi, pi]`.
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(invalid(format!("pose position must be finite, got ({x}, {y})")));
        }
        Ok(Self {
            x,
            y,
            theta: normalize_angle(theta)?,
        })
    }

    /// Pose translated by `(dx, dy)` and rotated by `dtheta`.
    pub fn moved(&self, dx: f64, dy: f64, dtheta: f64) -> Result<Self> {
        Self::new(self.x + dx, self.y + dy, self.theta + dtheta)
    }

    pub(crate) fn new_unchecked(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }

    /// Expresses a world point in this pose's frame (x forward, y left).
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.x;
        let dy = y - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Expresses a pose given in the world frame relative to this pose.
    pub fn relative(&self, other: &Pose2D) -> Pose2D {
        let (x, y) = self.to_local(other.x, other.y);
        Pose2D::new_unchecked(x, y, other.theta - self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    /// Linear velocity, m/s.
    pub v: f64,
    /// Angular velocity, rad/s.
    pub omega: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn within(&self, v_max: f64, omega_max: f64) -> bool {
        self.v.is_finite()
            && self.omega.is_finite()
            && self.v.abs() <= v_max + 1e-12
            && self.omega.abs() <= omega_max + 1e-12
    }
}

/// The last `T` commands, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityHistory {
    commands: Vec<VelocityCommand>,
}

impl VelocityHistory {
    pub fn new(commands: Vec<VelocityCommand>, horizon: usize) -> Result<Self> {
        if commands.len() != horizon {
            return Err(invalid(format!(
                "velocity history needs {horizon} commands, got {}",
                commands.len()
            )));
        }
        Ok(Self { commands })
    }

    pub fn zeros(horizon: usize) -> Self {
        Self {
            commands: vec![VelocityCommand::ZERO; horizon],
        }
    }

    pub fn commands(&self) -> &[VelocityCommand] {
        &self.commands
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    /// Drops the oldest entry and appends `cmd`.
    pub fn pushed(&self, cmd: VelocityCommand) -> Self {
        let mut commands = Vec::with_capacity(self.commands.len());
        commands.extend_from_slice(&self.commands[1.min(self.commands.len())..]);
        commands.push(cmd);
        Self { commands }
    }
}

/// Row-major 8-bit raster with 1 or 3 interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!("image must be non-empty, got {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(invalid(format!("image must have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(invalid(format!(
                "{width}x{height}x{channels} image needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Luma (0.299, 0.587, 0.114) rounded to the nearest level; identity for
    /// single-channel rasters.
    pub fn to_gray(&self) -> Vec<u8> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(3)
            .map(|p| {
                let l = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                l.round().clamp(0.0, 255.0) as u8
            })
            .collect()
    }

    /// Rotates by 180 degrees.
    pub fn rotated_180(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                let src = self.pixel(self.width - 1 - x, self.height - 1 - y).to_vec();
                out.pixel_mut(x, y).copy_from_slice(&src);
            }
        }
        out
    }
}

/// LiDAR returns in the sensor frame (x forward, y left, z up), ring-major
/// and ordered by azimuth within each ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    rings: Vec<u16>,
    num_rings: u16,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>, rings: Vec<u16>, num_rings: u16) -> Result<Self> {
        if points.len() != rings.len() {
            return Err(invalid(format!(
                "{} points but {} ring ids",
                points.len(),
                rings.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(invalid(format!("point coordinates must be finite, got {p:?}")));
        }
        if let Some(r) = rings.iter().find(|&&r| r >= num_rings) {
            return Err(invalid(format!("ring id {r} outside [0, {num_rings})")));
        }
        Ok(Self {
            points,
            rings,
            num_rings,
        })
    }

    pub fn empty(num_rings: u16) -> Self {
        Self {
            points: Vec::new(),
            rings: Vec::new(),
            num_rings,
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn rings(&self) -> &[u16] {
        &self.rings
    }

    pub fn num_rings(&self) -> u16 {
        self.num_rings
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One time step of sensor input plus the candidate trajectory raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub image: ImageRaster,
    pub cloud: PointCloud,
    pub vel_history: VelocityHistory,
    pub traj_image: ImageRaster,
}

impl Observation {
    pub fn new(
        image: ImageRaster,
        cloud: PointCloud,
        vel_history: VelocityHistory,
        traj_image: ImageRaster,
    ) -> Result<Self> {
        if image.channels() != 3 {
            return Err(invalid("camera image must have 3 channels"));
        }
        if traj_image.channels() != 1 {
            return Err(invalid("trajectory image must have 1 channel"));
        }
        if image.width() != traj_image.width() || image.height() != traj_image.height() {
            return Err(invalid(format!(
                "camera is {}x{} but trajectory image is {}x{}",
                image.width(),
                image.height(),
                traj_image.width(),
                traj_image.height()
            )));
        }
        Ok(Self {
            image,
            cloud,
            vel_history,
            traj_image,
        })
    }

    pub fn with_traj_image(&self, traj_image: ImageRaster) -> Result<Self> {
        Self::new(
            self.image.clone(),
            self.cloud.clone(),
            self.vel_history.clone(),
            traj_image,
        )
    }
}

/// Per-step success probabilities over the horizon (binary for ground truth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessVector {
    probs: Vec<f64>,
}

impl SuccessVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("success vector must not be empty"));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid(format!("success probability {p} outside [0, 1]")));
        }
        Ok(Self { probs })
    }

    pub fn constant(value: f64, horizon: usize) -> Result<Self> {
        Self::new(vec![value; horizon])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().sum::<f64>() / self.probs.len() as f64
    }

    /// True when any entry is zero (a failure label).
    pub fn has_failure(&self) -> bool {
        self.probs.iter().any(|&p| p == 0.0)
    }
}
