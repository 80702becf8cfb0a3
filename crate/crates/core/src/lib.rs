//! Reliability-aware traversability prediction for local planning.
//!
//! Synthetic camera and LiDAR frames from a grid world are scored for
//! reliability, encoded into a joint feature vector, fused by a small
//! graph network into per-step success probabilities, and used to veto
//! dynamic-window velocity commands.

pub mod encoders;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod math;
pub mod nn;
pub mod planner;
pub mod reliability;
pub mod rng;
pub mod simworld;
pub mod types;

pub use error::{Error, Result};
pub use math::{normalize_angle, Matrix};
pub use rng::{rng_next, SimRng};
pub use types::{
    ImageRaster, Observation, PointCloud, Pose2D, SuccessVector, VelocityCommand,
    VelocityHistory, DEFAULT_HORIZON,
};
