//! Lightweight per-modality encoders mapping raw observations to `[0, 1]^n`.
//!
//! Camera and trajectory rasters are block-averaged to a coarse grayscale
//! grid and passed through a tanh hidden layer; the cloud becomes a polar
//! occupancy histogram; the velocity history is normalized by the limits.
//! Every encoder ends in a sigmoid.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::sigmoid;
use crate::nn::{Dense, Parameters};
use crate::rng::SimRng;
use crate::types::{ImageRaster, Observation, PointCloud, VelocityHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Image,
    Point,
    Trajectory,
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub modality: Modality,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub image_width: usize,
    pub image_height: usize,
    /// Side of the block-averaged grayscale grid.
    pub grid: usize,
    pub image_hidden: usize,
    pub image_features: usize,
    pub traj_hidden: usize,
    pub traj_features: usize,
    pub azimuth_bins: usize,
    pub range_bins: usize,
    pub max_range: f64,
    pub point_features: usize,
    pub horizon: usize,
    pub v_max: f64,
    pub omega_max: f64,
    pub velocity_features: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            image_width: 64,
            image_height: 64,
            grid: 16,
            image_hidden: 32,
            image_features: 16,
            traj_hidden: 32,
            traj_features: 8,
            azimuth_bins: 8,
            range_bins: 8,
            max_range: 10.0,
            point_features: 16,
            horizon: crate::types::DEFAULT_HORIZON,
            v_max: 1.0,
            omega_max: 1.0,
            velocity_features: 8,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.grid,
            self.image_hidden,
            self.image_features,
            self.traj_hidden,
            self.traj_features,
            self.azimuth_bins,
            self.range_bins,
            self.point_features,
            self.horizon,
            self.velocity_features,
        ];
        if sizes.contains(&0) {
            return Err(invalid("encoder sizes must be positive"));
        }
        if self.image_width < self.grid || self.image_height < self.grid {
            return Err(invalid(format!(
                "image {}x{} is smaller than the {} block grid",
                self.image_width, self.image_height, self.grid
            )));
        }
        if !(self.max_range > 0.0 && self.v_max > 0.0 && self.omega_max > 0.0) {
            return Err(invalid("max_range, v_max and omega_max must be positive"));
        }
        Ok(())
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(
            self.image_features,
            self.point_features,
            self.traj_features,
            self.velocity_features,
        )
    }

    fn grid_cells(&self) -> usize {
        self.grid * self.grid
    }

    fn histogram_bins(&self) -> usize {
        self.azimuth_bins * self.range_bins
    }
}

/// Index ranges of each modality inside the concatenated feature vector,
/// ordered image, point, trajectory, velocity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub image: Range<usize>,
    pub point: Range<usize>,
    pub traj: Range<usize>,
    pub velocity: Range<usize>,
}

impl FeatureLayout {
    pub fn new(image: usize, point: usize, traj: usize, velocity: usize) -> Self {
        let a = image;
        let b = a + point;
        let c = b + traj;
        Self {
            image: 0..a,
            point: a..b,
            traj: b..c,
            velocity: c..c + velocity,
        }
    }

    pub fn len(&self) -> usize {
        self.velocity.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn modality_of(&self, node: usize) -> Option<Modality> {
        [
            (&self.image, Modality::Image),
            (&self.point, Modality::Point),
            (&self.traj, Modality::Trajectory),
            (&self.velocity, Modality::Velocity),
        ]
        .into_iter()
        .find(|(r, _)| r.contains(&node))
        .map(|(_, m)| m)
    }

    pub fn range(&self, modality: Modality) -> Range<usize> {
        match modality {
            Modality::Image => self.image.clone(),
            Modality::Point => self.point.clone(),
            Modality::Trajectory => self.traj.clone(),
            Modality::Velocity => self.velocity.clone(),
        }
    }
}

/// Raw encoder inputs extracted from one observation. These do not depend on
/// trainable parameters, so training computes them once per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderInput {
    pub image: Vec<f64>,
    pub cloud: Vec<f64>,
    pub traj: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Block-averaged grayscale in `[0, 1]`, row-major `grid x grid`.
pub fn block_average(image: &ImageRaster, grid: usize) -> Result<Vec<f64>> {
    let (w, h) = (image.width(), image.height());
    if grid == 0 || w < grid || h < grid {
        return Err(Error::Shape(format!("cannot average {w}x{h} into a {grid} grid")));
    }
    let gray = image.to_gray();
    let mut out = Vec::with_capacity(grid * grid);
    for by in 0..grid {
        let (y0, y1) = (by * h / grid, (by + 1) * h / grid);
        for bx in 0..grid {
            let (x0, x1) = (bx * w / grid, (bx + 1) * w / grid);
            let mut sum = 0u64;
            for y in y0..y1 {
                sum += gray[y * w + x0..y * w + x1].iter().map(|&g| g as u64).sum::<u64>();
            }
            out.push(sum as f64 / ((x1 - x0) * (y1 - y0)) as f64 / 255.0);
        }
    }
    Ok(out)
}

/// Fraction of points in each (azimuth, range) cell, azimuth-major.
pub fn polar_histogram(cloud: &PointCloud, azimuth_bins: usize, range_bins: usize, max_range: f64) -> Vec<f64> {
    let mut counts = vec![0u32; azimuth_bins * range_bins];
    for p in cloud.points() {
        let az = ((p[1].atan2(p[0]) + PI) / (2.0 * PI) * azimuth_bins as f64) as usize;
        let rb = (p[0].hypot(p[1]) / max_range * range_bins as f64) as usize;
        counts[az.min(azimuth_bins - 1) * range_bins + rb.min(range_bins - 1)] += 1;
    }
    let n = cloud.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

pub fn normalized_velocities(hist: &VelocityHistory, v_max: f64, omega_max: f64) -> Vec<f64> {
    hist.commands()
        .iter()
        .flat_map(|c| [c.v / v_max, c.omega / omega_max])
        .collect()
}

fn check_image(image: &ImageRaster, cfg: &EncoderConfig, channels: usize, what: &str) -> Result<()> {
    if image.channels() != channels {
        return Err(Error::Shape(format!(
            "{what} must have {channels} channel(s), found {}",
            image.channels()
        )));
    }
    if (image.width(), image.height()) != (cfg.image_width, cfg.image_height) {
        return Err(Error::Shape(format!(
            "{what} is {}x{}, expected {}x{}",
            image.width(),
            image.height(),
            cfg.image_width,
            cfg.image_height
        )));
    }
    Ok(())
}

pub fn prepare_input(obs: &Observation, cfg: &EncoderConfig) -> Result<EncoderInput> {
    check_image(&obs.image, cfg, 3, "camera image")?;
    check_image(&obs.traj_image, cfg, 1, "trajectory image")?;
    if obs.vel_history.len() != cfg.horizon {
        return Err(Error::Shape(format!(
            "velocity history has {} entries, expected {}",
            obs.vel_history.len(),
            cfg.horizon
        )));
    }
    Ok(EncoderInput {
        image: block_average(&obs.image, cfg.grid)?,
        cloud: polar_histogram(&obs.cloud, cfg.azimuth_bins, cfg.range_bins, cfg.max_range),
        traj: block_average(&obs.traj_image, cfg.grid)?,
        velocity: normalized_velocities(&obs.vel_history, cfg.v_max, cfg.omega_max),
    })
}

/// Two-layer perceptron: tanh hidden layer, sigmoid output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEncoder {
    pub hidden: Dense,
    pub output: Dense,
}

#[derive(Debug, Clone, Default)]
struct BlockCache {
    hidden: Vec<f64>,
    out: Vec<f64>,
}

impl BlockEncoder {
    fn forward(&self, x: &[f64]) -> Result<BlockCache> {
        let hidden: Vec<f64> = self.hidden.forward(x)?.into_iter().map(f64::tanh).collect();
        let out = self.output.forward(&hidden)?.into_iter().map(sigmoid).collect();
        Ok(BlockCache { hidden, out })
    }

    fn backward(&self, x: &[f64], cache: &BlockCache, d_out: &[f64], grad: &mut BlockEncoder) -> Result<()> {
        let dz: Vec<f64> = d_out.iter().zip(&cache.out).map(|(d, s)| d * s * (1.0 - s)).collect();
        let dh = self.output.backward(&cache.hidden, &dz, &mut grad.output)?;
        let dzh: Vec<f64> = dh.iter().zip(&cache.hidden).map(|(d, h)| d * (1.0 - h * h)).collect();
        self.hidden.backward(x, &dzh, &mut grad.hidden)?;
        Ok(())
    }
}

impl Parameters for BlockEncoder {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.hidden.visit(f);
        self.output.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.hidden.visit_mut(f);
        self.output.visit_mut(f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub image: BlockEncoder,
    pub traj: BlockEncoder,
    pub cloud: Dense,
    pub velocity: Dense,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct EncoderCache {
    image: BlockCache,
    traj: BlockCache,
    cloud: Vec<f64>,
    velocity: Vec<f64>,
}

impl EncoderParams {
    pub fn init(config: EncoderConfig, rng: &mut SimRng) -> Result<Self> {
        config.validate()?;
        let cells = config.grid_cells();
        Ok(Self {
            image: BlockEncoder {
                hidden: Dense::glorot(cells, config.image_hidden, rng),
                output: Dense::glorot(config.image_hidden, config.image_features, rng),
            },
            traj: BlockEncoder {
                hidden: Dense::glorot(cells, config.traj_hidden, rng),
                output: Dense::glorot(config.traj_hidden, config.traj_features, rng),
            },
            cloud: Dense::glorot(config.histogram_bins(), config.point_features, rng),
            velocity: Dense::glorot(2 * config.horizon, config.velocity_features, rng),
            config,
        })
    }

    pub fn zeros(config: EncoderConfig) -> Result<Self> {
        let mut p = Self::init(config, &mut SimRng::new(0))?;
        p.zero();
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        let cells = c.grid_cells();
        self.image.hidden.check_shape(cells, c.image_hidden, "image hidden")?;
        self.image.output.check_shape(c.image_hidden, c.image_features, "image output")?;
        self.traj.hidden.check_shape(cells, c.traj_hidden, "trajectory hidden")?;
        self.traj.output.check_shape(c.traj_hidden, c.traj_features, "trajectory output")?;
        self.cloud.check_shape(c.histogram_bins(), c.point_features, "cloud")?;
        self.velocity.check_shape(2 * c.horizon, c.velocity_features, "velocity")
    }

    pub fn layout(&self) -> FeatureLayout {
        self.config.layout()
    }

    /// Concatenated feature vector and the activations needed to backpropagate.
    pub fn forward(&self, input: &EncoderInput) -> Result<(Vec<f64>, EncoderCache)> {
        let image = self.image.forward(&input.image)?;
        let traj = self.traj.forward(&input.traj)?;
        let cloud: Vec<f64> = self.cloud.forward(&input.cloud)?.into_iter().map(sigmoid).collect();
        let velocity: Vec<f64> = self
            .velocity
            .forward(&input.velocity)?
            .into_iter()
            .map(sigmoid)
            .collect();
        let mut f = Vec::with_capacity(self.layout().len());
        f.extend_from_slice(&image.out);
        f.extend_from_slice(&cloud);
        f.extend_from_slice(&traj.out);
        f.extend_from_slice(&velocity);
        Ok((
            f,
            EncoderCache {
                image,
                traj,
                cloud,
                velocity,
            },
        ))
    }

    /// Accumulates `dL/dparams` into `grad` given `dL/df_vec`.
    pub fn backward(
        &self,
        input: &EncoderInput,
        cache: &EncoderCache,
        d_feat: &[f64],
        grad: &mut EncoderParams,
    ) -> Result<()> {
        let layout = self.layout();
        if d_feat.len() != layout.len() {
            return Err(Error::Shape(format!(
                "feature gradient has {} entries, expected {}",
                d_feat.len(),
                layout.len()
            )));
        }
        self.image
            .backward(&input.image, &cache.image, &d_feat[layout.image], &mut grad.image)?;
        self.traj
            .backward(&input.traj, &cache.traj, &d_feat[layout.traj], &mut grad.traj)?;
        let sig_back = |d: &[f64], s: &[f64]| -> Vec<f64> {
            d.iter().zip(s).map(|(d, s)| d * s * (1.0 - s)).collect()
        };
        let dz = sig_back(&d_feat[layout.point], &cache.cloud);
        self.cloud.backward(&input.cloud, &dz, &mut grad.cloud)?;
        let dz = sig_back(&d_feat[layout.velocity], &cache.velocity);
        self.velocity.backward(&input.velocity, &dz, &mut grad.velocity)?;
        Ok(())
    }

    pub fn encode_image(&self, image: &ImageRaster) -> Result<FeatureVector> {
        check_image(image, &self.config, 3, "camera image")?;
        let x = block_average(image, self.config.grid)?;
        Ok(FeatureVector {
            modality: Modality::Image,
            values: self.image.forward(&x)?.out,
        })
    }

    pub fn encode_traj_image(&self, traj_image: &ImageRaster) -> Result<FeatureVector> {
        check_image(traj_image, &self.config, 1, "trajectory image")?;
        let x = block_average(traj_image, self.config.grid)?;
        Ok(FeatureVector {
            modality: Modality::Trajectory,
            values: self.traj.forward(&x)?.out,
        })
    }

    pub fn encode_cloud(&self, cloud: &PointCloud) -> Result<FeatureVector> {
        let c = &self.config;
        let x = polar_histogram(cloud, c.azimuth_bins, c.range_bins, c.max_range);
        Ok(FeatureVector {
            modality: Modality::Point,
            values: self.cloud.forward(&x)?.into_iter().map(sigmoid).collect(),
        })
    }

    pub fn encode_velocity(&self, hist: &VelocityHistory) -> Result<FeatureVector> {
        let c = &self.config;
        if hist.len() != c.horizon {
            return Err(Error::Shape(format!(
                "velocity history has {} entries, expected {}",
                hist.len(),
                c.horizon
            )));
        }
        let x = normalized_velocities(hist, c.v_max, c.omega_max);
        Ok(FeatureVector {
            modality: Modality::Velocity,
            values: self.velocity.forward(&x)?.into_iter().map(sigmoid).collect(),
        })
    }
}

impl Parameters for EncoderParams {
    fn visit(&self, f: &mut dyn FnMut(&[f64])) {
        self.image.visit(f);
        self.traj.visit(f);
        self.cloud.visit(f);
        self.velocity.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [f64])) {
        self.image.visit_mut(f);
        self.traj.visit_mut(f);
        self.cloud.visit_mut(f);
        self.velocity.visit_mut(f);
    }
}

/// Joins modality vectors in image, point, trajectory, velocity order.
pub fn concat_features(
    image: &FeatureVector,
    point: &FeatureVector,
    velocity: &FeatureVector,
    traj: &FeatureVector,
) -> Result<(Vec<f64>, FeatureLayout)> {
    let expected = [
        (image, Modality::Image),
        (point, Modality::Point),
        (velocity, Modality::Velocity),
        (traj, Modality::Trajectory),
    ];
    for (f, m) in expected {
        if f.modality != m {
            return Err(invalid(format!("expected a {m:?} vector, got {:?}", f.modality)));
        }
    }
    let layout = FeatureLayout::new(
        image.values.len(),
        point.values.len(),
        traj.values.len(),
        velocity.values.len(),
    );
    let mut out = Vec::with_capacity(layout.len());
    for f in [image, point, traj, velocity] {
        out.extend_from_slice(&f.values);
    }
    Ok((out, layout))
}
