//! Per-modality reliability scores in `[0, 1]`.

mod cloud;
mod image;

use serde::{Deserialize, Serialize};

pub use cloud::{
    cloud_feature_factors, cloud_reliability, point_feature_factor, CloudReliability,
    CloudReliabilityParams,
};
pub use image::{
    brightness, fast_corners, image_reliability, Corner, ImageReliability, ImageReliabilityParams,
};

use crate::error::Result;
use crate::types::Observation;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReliabilityParams {
    pub image: ImageReliabilityParams,
    pub cloud: CloudReliabilityParams,
}

/// Both modality scores for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub image: ImageReliability,
    pub cloud: CloudReliability,
}

impl Reliability {
    pub fn r_img(&self) -> f64 {
        self.image.r_img
    }

    pub fn r_point(&self) -> f64 {
        self.cloud.r_point
    }

    /// Scores pinned to fixed values with empty sub-components.
    pub fn pinned(r_img: f64, r_point: f64) -> Self {
        Self {
            image: ImageReliability {
                r_bright: 0.0,
                r_corners: 0.0,
                r_img,
                n_c: 0,
            },
            cloud: CloudReliability {
                r_edge: 0.0,
                r_planar: 0.0,
                r_point,
                edge_count: 0,
                planar_count: 0,
            },
        }
    }

    /// Same sub-components with the combined scores overridden.
    pub fn overridden(mut self, r_img: f64, r_point: f64) -> Self {
        self.image.r_img = r_img;
        self.cloud.r_point = r_point;
        self
    }
}

pub fn assess(obs: &Observation, params: &ReliabilityParams) -> Result<Reliability> {
    Ok(Reliability {
        image: image_reliability(&obs.image, &params.image)?,
        cloud: cloud_reliability(&obs.cloud, &params.cloud)?,
    })
}
