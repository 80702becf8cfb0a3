//! Desk-scale 2.5D outdoor world: terrain generation, unicycle stepping,
//! failure detection and degraded camera/LiDAR synthesis.

mod episode;
mod render;
mod terrain;

use serde::{Deserialize, Serialize};

pub use episode::{ground_truth_labels, step_robot, EpisodeRules, EpisodeState, EpisodeStatus};
pub use render::{
    box_blur, render_camera, render_lidar, CameraConfig, LidarConfig, GROUND_RGB,
    NONTRAVERSABLE_RGB, OCCLUSION_VALUE, PLIABLE_RGB, SKY_RGB, SOLID_RGB,
};
pub use terrain::{
    generate_world, CellClass, ClutterPreset, Difficulty, OcclusionPatch, Preset, TerrainGrid,
    WorldConfig,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub world: WorldConfig,
    pub camera: CameraConfig,
    pub lidar: LidarConfig,
    pub episode: EpisodeRules,
}

impl SimConfig {
    pub fn generate(&self, seed: u64, difficulty: Difficulty) -> crate::Result<TerrainGrid> {
        generate_world(
            seed,
            difficulty,
            &self.world,
            (self.camera.width, self.camera.height),
        )
    }
}
