//! One planning step: rank the restricted velocity space and veto candidates
//! the predictor does not trust.

use std::cmp::Ordering;

use super::trajectory::{local_rollout, rasterize_trajectory};
use super::window::{objective_terms, restricted_space, PlannerConfig};
use crate::encoders::block_average;
use crate::error::Result;
use crate::fusion::{FusionModel, SampleInput};
use crate::reliability::Reliability;
use crate::types::{ImageRaster, Observation, Pose2D, SuccessVector, VelocityCommand};

/// Scores candidate trajectories. `prepare` sees the current observation once
/// per step; `predict_with` is then called with each candidate's image.
pub trait SuccessModel {
    fn prepare(&mut self, obs: &Observation, reliability: &Reliability) -> Result<()>;
    fn predict_with(&mut self, traj_image: &ImageRaster) -> Result<SuccessVector>;
}

/// Predicts the same probability for every step of every trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel {
    pub value: f64,
    pub horizon: usize,
}

impl ConstantModel {
    pub fn ones(horizon: usize) -> Self {
        Self { value: 1.0, horizon }
    }

    pub fn zeros(horizon: usize) -> Self {
        Self { value: 0.0, horizon }
    }
}

impl SuccessModel for ConstantModel {
    fn prepare(&mut self, _obs: &Observation, _reliability: &Reliability) -> Result<()> {
        Ok(())
    }

    fn predict_with(&mut self, _traj_image: &ImageRaster) -> Result<SuccessVector> {
        SuccessVector::constant(self.value, self.horizon)
    }
}

/// Adapter running the trained network; the observation-dependent encoder
/// inputs are extracted once per step.
pub struct FusionPredictor<'a> {
    model: &'a FusionModel,
    current: Option<SampleInput>,
}

impl<'a> FusionPredictor<'a> {
    pub fn new(model: &'a FusionModel) -> Self {
        Self {
            model,
            current: None,
        }
    }
}

impl SuccessModel for FusionPredictor<'_> {
    fn prepare(&mut self, obs: &Observation, reliability: &Reliability) -> Result<()> {
        self.current = Some(self.model.prepare(obs, reliability)?);
        Ok(())
    }

    fn predict_with(&mut self, traj_image: &ImageRaster) -> Result<SuccessVector> {
        let base = self
            .current
            .as_mut()
            .ok_or_else(|| crate::error::invalid("predictor used before prepare"))?;
        base.encoder.traj = block_average(traj_image, self.model.encoders.config.grid)?;
        self.model.predict_input(base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    /// A command from the restricted space the predictor accepted.
    Command(VelocityCommand),
    /// Rotate in place toward the goal after every candidate was rejected.
    Recovery(VelocityCommand),
}

impl Action {
    pub fn command(&self) -> VelocityCommand {
        match *self {
            Action::Command(c) | Action::Recovery(c) => c,
        }
    }

    pub fn is_recovery(&self) -> bool {
        matches!(self, Action::Recovery(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub action: Action,
    /// Candidates rejected before the accepted one.
    pub vetoes: usize,
    pub evaluations: usize,
    pub admissible_active: bool,
    pub restricted_size: usize,
}

/// Candidate ordering: higher score, then higher speed, then smaller turn
/// rate magnitude, then lexicographic `(v, omega)`.
pub fn rank(a: (f64, VelocityCommand), b: (f64, VelocityCommand)) -> Ordering {
    let (qa, ca) = a;
    let (qb, cb) = b;
    qb.total_cmp(&qa)
        .then(cb.v.total_cmp(&ca.v))
        .then(ca.omega.abs().total_cmp(&cb.omega.abs()))
        .then(ca.v.total_cmp(&cb.v))
        .then(ca.omega.total_cmp(&cb.omega))
}

/// Whether a predicted success vector lets a candidate through.
pub fn accepts(pred: &SuccessVector, threshold: f64) -> bool {
    pred.min() >= threshold && pred.mean() >= threshold
}

pub fn recovery_command(pose: &Pose2D, goal: (f64, f64), cfg: &PlannerConfig) -> VelocityCommand {
    let (x, y) = pose.to_local(goal.0, goal.1);
    let sign = if y.atan2(x) < 0.0 { -1.0 } else { 1.0 };
    VelocityCommand::new(0.0, sign * cfg.omega_max / 2.0)
}

/// Scored restricted space in evaluation order.
pub fn ranked_candidates(
    pose: &Pose2D,
    current: VelocityCommand,
    goal: (f64, f64),
    obs: &Observation,
    r_point: f64,
    cfg: &PlannerConfig,
) -> (Vec<(f64, VelocityCommand)>, bool) {
    let space = restricted_space(current, r_point, &obs.cloud, cfg);
    let mut scored: Vec<(f64, VelocityCommand)> = space
        .restricted()
        .map(|c| (objective_terms(c.cmd, pose, goal, c.closest, cfg).score(cfg), c.cmd))
        .collect();
    scored.sort_by(|a, b| rank(*a, *b));
    (scored, space.admissible_active)
}

/// Runs the veto loop: walk the restricted space in descending objective
/// order and return the first command whose predicted success vector clears
/// the threshold in both minimum and mean.
pub fn plan_step(
    pose: &Pose2D,
    current: VelocityCommand,
    goal: (f64, f64),
    obs: &Observation,
    reliability: &Reliability,
    model: &mut dyn SuccessModel,
    cfg: &PlannerConfig,
) -> Result<StepDecision> {
    let (ranked, admissible_active) =
        ranked_candidates(pose, current, goal, obs, reliability.r_point(), cfg);
    model.prepare(obs, reliability)?;
    let mut evaluations = 0;
    for &(_, cmd) in &ranked {
        let traj = local_rollout(cmd, cfg.dt, cfg.horizon);
        let img = rasterize_trajectory(&traj, &cfg.window)?;
        let pred = model.predict_with(&img)?;
        evaluations += 1;
        if accepts(&pred, cfg.success_threshold) {
            return Ok(StepDecision {
                action: Action::Command(cmd),
                vetoes: evaluations - 1,
                evaluations,
                admissible_active,
                restricted_size: ranked.len(),
            });
        }
    }
    Ok(StepDecision {
        action: Action::Recovery(recovery_command(pose, goal, cfg)),
        vetoes: evaluations,
        evaluations,
        admissible_active,
        restricted_size: ranked.len(),
    })
}
