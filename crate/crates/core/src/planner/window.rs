//! Discretized velocity space, its feasibility constraints and the
//! dynamic-window objective.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trajectory::{predict_trajectory, TrajectoryWindow};
use crate::error::{invalid, Result};
use crate::math::wrap_angle;
use crate::types::{PointCloud, Pose2D, VelocityCommand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub heading_weight: f64,
    pub clearance_weight: f64,
    pub velocity_weight: f64,
    /// At or below this point-cloud reliability the obstacle constraint is dropped.
    pub reliability_gate: f64,
    /// Veto threshold on the predicted success vector.
    pub success_threshold: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub accel_v: f64,
    pub accel_omega: f64,
    pub dv: f64,
    pub domega: f64,
    /// Control interval, also the rollout step.
    pub dt: f64,
    pub horizon: usize,
    /// Rollouts passing closer than this to a cloud point are inadmissible.
    pub clearance: f64,
    /// Distance at which the clearance term saturates.
    pub clearance_clip: f64,
    /// When false the obstacle constraint stays on regardless of reliability.
    pub gate_admissible: bool,
    pub window: TrajectoryWindow,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            heading_weight: 0.8,
            clearance_weight: 0.1,
            velocity_weight: 0.1,
            reliability_gate: 0.15,
            success_threshold: 0.5,
            v_max: 1.0,
            omega_max: 1.0,
            accel_v: 1.0,
            accel_omega: 2.0,
            dv: 0.125,
            domega: 0.125,
            dt: 0.25,
            horizon: crate::types::DEFAULT_HORIZON,
            clearance: 0.3,
            clearance_clip: 3.0,
            gate_admissible: true,
            window: TrajectoryWindow::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.heading_weight, self.clearance_weight, self.velocity_weight];
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid("objective weights must be non-negative"));
        }
        for (name, v) in [
            ("reliability_gate", self.reliability_gate),
            ("success_threshold", self.success_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        let positive = [
            self.v_max,
            self.omega_max,
            self.accel_v,
            self.accel_omega,
            self.dv,
            self.domega,
            self.dt,
            self.clearance_clip,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("velocity bounds, limits, steps and dt must be positive"));
        }
        if self.horizon == 0 || !(self.clearance >= 0.0) {
            return Err(invalid("horizon must be positive and clearance non-negative"));
        }
        self.window.validate()
    }

    fn steps(limit: f64, step: f64) -> usize {
        (limit / step + 1e-9).floor() as usize
    }

    /// Every grid command, ordered by `v` then `omega`.
    pub fn velocity_grid(&self) -> Vec<VelocityCommand> {
        let nv = Self::steps(self.v_max, self.dv);
        let nw = Self::steps(self.omega_max, self.domega) as i64;
        let mut out = Vec::with_capacity((nv + 1) * (2 * nw as usize + 1));
        for i in 0..=nv {
            for j in -nw..=nw {
                out.push(VelocityCommand::new(i as f64 * self.dv, j as f64 * self.domega));
            }
        }
        out
    }

    /// Whether `cmd` is reachable from `current` within one control interval.
    pub fn in_dynamic_window(&self, current: VelocityCommand, cmd: VelocityCommand) -> bool {
        let tol = 1e-9;
        (cmd.v - current.v).abs() <= self.accel_v * self.dt + tol
            && (cmd.omega - current.omega).abs() <= self.accel_omega * self.dt + tol
    }
}

/// One grid command with its constraint memberships.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub cmd: VelocityCommand,
    pub dynamic: bool,
    pub admissible: bool,
    /// Smallest distance from any rollout pose to a cloud point; infinite
    /// when the cloud is empty or the obstacle constraint is off.
    pub closest: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySpace {
    pub candidates: Vec<Candidate>,
    /// Whether the obstacle constraint is part of the restricted space.
    pub admissible_active: bool,
}

impl VelocitySpace {
    pub fn restricted(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates
            .iter()
            .filter(|c| c.dynamic && (c.admissible || !self.admissible_active))
    }

    pub fn restricted_len(&self) -> usize {
        self.restricted().count()
    }
}

/// Smallest planar distance between the rollout of `cmd` from the robot
/// origin and any of `points` (robot frame).
pub fn rollout_clearance(cmd: VelocityCommand, points: &[[f64; 2]], dt: f64, horizon: usize) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let origin = Pose2D::new_unchecked(0.0, 0.0, 0.0);
    let mut best = f64::INFINITY;
    for p in predict_trajectory(&origin, cmd, dt, horizon) {
        for q in points {
            let d = (p.x - q[0]).powi(2) + (p.y - q[1]).powi(2);
            if d < best {
                best = d;
            }
        }
    }
    best.sqrt()
}

/// Cloud points that can matter for clearance: anything farther than the
/// longest rollout plus the saturation distance cannot change a score.
fn relevant_points(cloud: &PointCloud, cfg: &PlannerConfig) -> Vec<[f64; 2]> {
    let reach = cfg.v_max * cfg.dt * cfg.horizon as f64 + cfg.clearance_clip.max(cfg.clearance);
    cloud
        .points()
        .iter()
        .filter(|p| p[0].hypot(p[1]) <= reach)
        .map(|p| [p[0], p[1]])
        .collect()
}

/// Builds the searched velocity space. The obstacle constraint is dropped
/// when the cloud's reliability is at or below the gate.
pub fn restricted_space(
    current: VelocityCommand,
    r_point: f64,
    cloud: &PointCloud,
    cfg: &PlannerConfig,
) -> VelocitySpace {
    let admissible_active = !cfg.gate_admissible || r_point > cfg.reliability_gate;
    let points = if admissible_active {
        relevant_points(cloud, cfg)
    } else {
        Vec::new()
    };
    let candidates = cfg
        .velocity_grid()
        .into_iter()
        .map(|cmd| {
            let closest = if admissible_active {
                rollout_clearance(cmd, &points, cfg.dt, cfg.horizon)
            } else {
                f64::INFINITY
            };
            Candidate {
                cmd,
                dynamic: cfg.in_dynamic_window(current, cmd),
                admissible: closest >= cfg.clearance,
                closest,
            }
        })
        .collect();
    VelocitySpace {
        candidates,
        admissible_active,
    }
}

/// Per-term breakdown of the objective, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub heading: f64,
    pub clearance: f64,
    pub velocity: f64,
}

impl ObjectiveTerms {
    pub fn score(&self, cfg: &PlannerConfig) -> f64 {
        cfg.heading_weight * self.heading
            + cfg.clearance_weight * self.clearance
            + cfg.velocity_weight * self.velocity
    }
}

/// Heading alignment of the rollout endpoint with the goal (both in the same
/// frame): 1 when facing it, 0 when facing away.
pub fn heading_term(endpoint: &Pose2D, goal: (f64, f64)) -> f64 {
    let bearing = (goal.1 - endpoint.y).atan2(goal.0 - endpoint.x);
    1.0 - wrap_angle(bearing - endpoint.theta).abs() / PI
}

/// Objective terms for a command whose clearance is already known.
pub fn objective_terms(
    cmd: VelocityCommand,
    pose: &Pose2D,
    goal: (f64, f64),
    closest: f64,
    cfg: &PlannerConfig,
) -> ObjectiveTerms {
    let end = *predict_trajectory(pose, cmd, cfg.dt, cfg.horizon)
        .last()
        .expect("horizon is positive");
    ObjectiveTerms {
        heading: heading_term(&end, goal),
        clearance: (closest / cfg.clearance_clip).min(1.0),
        velocity: cmd.v / cfg.v_max,
    }
}

/// Scores `cmd` from `pose` (world frame) toward `goal`. `cloud` is in the
/// robot frame; pass `admissible_active = false` when the obstacle constraint
/// is gated off, which saturates the clearance term.
pub fn objective(
    cmd: VelocityCommand,
    pose: &Pose2D,
    goal: (f64, f64),
    cloud: &PointCloud,
    admissible_active: bool,
    cfg: &PlannerConfig,
) -> f64 {
    let closest = if admissible_active {
        rollout_clearance(cmd, &relevant_points(cloud, cfg), cfg.dt, cfg.horizon)
    } else {
        f64::INFINITY
    };
    objective_terms(cmd, pose, goal, closest, cfg).score(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.to_vec(), vec![0; points.len()], 1).unwrap()
    }

    #[test]
    fn grid_layout() {
        let cfg = PlannerConfig::default();
        let g = cfg.velocity_grid();
        assert_eq!(g.len(), 9 * 17);
        assert_eq!(g[0], VelocityCommand::new(0.0, -1.0));
        assert_eq!(*g.last().unwrap(), VelocityCommand::new(1.0, 1.0));
        assert!(g.iter().all(|c| c.within(cfg.v_max, cfg.omega_max)));
    }

    #[test]
    fn stationary_dynamic_window() {
        let cfg = PlannerConfig::default();
        let space = restricted_space(VelocityCommand::ZERO, 0.0, &PointCloud::empty(4), &cfg);
        for c in &space.candidates {
            let expect = c.cmd.v.abs() <= cfg.accel_v * cfg.dt + 1e-12
                && c.cmd.omega.abs() <= cfg.accel_omega * cfg.dt + 1e-12;
            assert_eq!(c.dynamic, expect);
        }
        // v in {0, .125, .25}, omega in {-.5 .. .5}
        assert_eq!(space.restricted_len(), 3 * 9);
    }

    #[test]
    fn unreliable_cloud_drops_obstacle_constraint() {
        let cfg = PlannerConfig::default();
        let c = cloud(&[[0.5, 0.0, 0.0]]);
        let space = restricted_space(VelocityCommand::new(0.5, 0.0), 0.0, &c, &cfg);
        assert!(!space.admissible_active);
        let dynamic = space.candidates.iter().filter(|c| c.dynamic).count();
        assert_eq!(space.restricted_len(), dynamic);
        let space = restricted_space(VelocityCommand::new(0.5, 0.0), 0.15, &c, &cfg);
        assert!(!space.admissible_active);
    }

    #[test]
    fn obstacle_ahead_excludes_fast_straight_commands() {
        let cfg = PlannerConfig::default();
        let c = cloud(&[[0.5, 0.0, 0.0]]);
        let space = restricted_space(VelocityCommand::new(1.0, 0.0), 1.0, &c, &cfg);
        assert!(space.admissible_active);
        for cand in &space.candidates {
            // brute-force oracle over every rollout pose
            let origin = Pose2D::new(0.0, 0.0, 0.0).unwrap();
            let near = predict_trajectory(&origin, cand.cmd, cfg.dt, cfg.horizon)
                .iter()
                .any(|p| (p.x - 0.5).hypot(p.y) < cfg.clearance);
            assert_eq!(cand.admissible, !near, "{:?}", cand.cmd);
        }
        for v in [0.5, 0.75, 1.0] {
            let cand = space
                .candidates
                .iter()
                .find(|c| c.cmd == VelocityCommand::new(v, 0.0))
                .unwrap();
            assert!(!cand.admissible);
        }
    }

    #[test]
    fn ideal_command_scores_weight_sum() {
        let cfg = PlannerConfig::default();
        let pose = Pose2D::new(0.0, 0.0, 0.0).unwrap();
        let q = objective(
            VelocityCommand::new(1.0, 0.0),
            &pose,
            (20.0, 0.0),
            &PointCloud::empty(4),
            true,
            &cfg,
        );
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_velocity_decomposes() {
        let cfg = PlannerConfig::default();
        let pose = Pose2D::new(1.0, 2.0, 0.3).unwrap();
        let goal = (4.0, 7.0);
        let h = heading_term(&pose, goal);
        let q = objective(VelocityCommand::ZERO, &pose, goal, &PointCloud::empty(4), true, &cfg);
        assert!((q - (cfg.heading_weight * h + cfg.clearance_weight)).abs() < 1e-12);
    }

    #[test]
    fn straight_score_grows_with_speed() {
        let cfg = PlannerConfig::default();
        let pose = Pose2D::new(0.0, 0.0, 0.0).unwrap();
        let c = cloud(&[[6.0, 2.0, 0.0], [7.0, -3.0, 0.0]]);
        let mut last = f64::NEG_INFINITY;
        for cmd in cfg.velocity_grid().into_iter().filter(|c| c.omega == 0.0) {
            let q = objective(cmd, &pose, (30.0, 0.0), &c, true, &cfg);
            assert!(q >= last, "{q} < {last} at v = {}", cmd.v);
            last = q;
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = PlannerConfig::default();
        cfg.heading_weight = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = PlannerConfig::default();
        cfg.success_threshold = 1.5;
        assert!(cfg.validate().is_err());
        assert!(PlannerConfig::default().validate().is_ok());
    }
}
