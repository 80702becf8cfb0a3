use serde::{Deserialize, Serialize};

use super::terrain::{CellClass, TerrainGrid};
use crate::error::{invalid, Result};
use crate::types::{Pose2D, SuccessVector, VelocityCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    ReachedGoal,
    Collided,
    Stuck,
    Timeout,
}

impl EpisodeStatus {
    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::Running
    }

    pub fn name(self) -> &'static str {
        match self {
            EpisodeStatus::Running => "running",
            EpisodeStatus::ReachedGoal => "reached_goal",
            EpisodeStatus::Collided => "collided",
            EpisodeStatus::Stuck => "stuck",
            EpisodeStatus::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRules {
    pub v_max: f64,
    pub omega_max: f64,
    pub goal_radius: f64,
    /// Consecutive steps inside non-traversable clutter before the robot is stuck.
    pub stuck_steps: usize,
    pub max_steps: usize,
}

impl Default for EpisodeRules {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            omega_max: 1.0,
            goal_radius: 0.5,
            stuck_steps: 5,
            max_steps: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub pose: Pose2D,
    pub goal: (f64, f64),
    pub elapsed_steps: usize,
    pub status: EpisodeStatus,
    pub stuck_count: usize,
}

impl EpisodeState {
    /// Robot at the grid's start, facing the goal.
    pub fn start(grid: &TerrainGrid) -> Self {
        let (sx, sy) = grid.start;
        let (gx, gy) = grid.goal;
        Self {
            pose: Pose2D::new_unchecked(sx, sy, (gy - sy).atan2(gx - sx)),
            goal: grid.goal,
            elapsed_steps: 0,
            status: EpisodeStatus::Running,
            stuck_count: 0,
        }
    }
}

/// Advances the robot one control interval with Euler unicycle kinematics and
/// updates the terminal status.
pub fn step_robot(
    state: &EpisodeState,
    cmd: VelocityCommand,
    dt: f64,
    grid: &TerrainGrid,
    rules: &EpisodeRules,
) -> Result<EpisodeState> {
    if state.status.is_terminal() {
        return Err(invalid(format!(
            "cannot step a finished episode ({})",
            state.status.name()
        )));
    }
    if !cmd.within(rules.v_max, rules.omega_max) {
        return Err(invalid(format!(
            "command ({}, {}) outside bounds (|v| <= {}, |omega| <= {})",
            cmd.v, cmd.omega, rules.v_max, rules.omega_max
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let p = state.pose;
    let (s, c) = p.theta.sin_cos();
    let pose = p.moved(cmd.v * c * dt, cmd.v * s * dt, cmd.omega * dt)?;

    let mut next = EpisodeState {
        pose,
        goal: state.goal,
        elapsed_steps: state.elapsed_steps + 1,
        status: EpisodeStatus::Running,
        stuck_count: state.stuck_count,
    };
    match grid.class_at(pose.x, pose.y) {
        None | Some(CellClass::SolidObstacle) => {
            next.status = EpisodeStatus::Collided;
            return Ok(next);
        }
        Some(CellClass::NonTraversableClutter) => {
            next.stuck_count += 1;
            if next.stuck_count >= rules.stuck_steps {
                next.status = EpisodeStatus::Stuck;
                return Ok(next);
            }
        }
        Some(_) => next.stuck_count = 0,
    }
    if pose.distance_to(state.goal.0, state.goal.1) <= rules.goal_radius {
        next.status = EpisodeStatus::ReachedGoal;
    } else if next.elapsed_steps >= rules.max_steps {
        next.status = EpisodeStatus::Timeout;
    }
    Ok(next)
}

/// Binary success labels: entry k is 1 while every pose up to k lies in a
/// free or pliable cell; the first failure zeroes the rest.
pub fn ground_truth_labels(grid: &TerrainGrid, trajectory: &[Pose2D]) -> Result<SuccessVector> {
    let mut ok = true;
    let labels = trajectory
        .iter()
        .map(|p| {
            ok = ok && grid.class_at(p.x, p.y).is_some_and(CellClass::is_traversable);
            if ok {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    SuccessVector::new(labels)
}
