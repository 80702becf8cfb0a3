//! Closed-loop episodes with the planner and summary metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Config;
use super::record::{sense, LIDAR_STREAM};
use crate::error::{invalid, Error, Result};
use crate::fusion::FusionModel;
use crate::planner::{plan_step, ConstantModel, FusionPredictor, PlannerConfig, SuccessModel};
use crate::reliability::assess;
use crate::rng::SimRng;
use crate::simworld::{step_robot, Difficulty, EpisodeState, EpisodeStatus};
use crate::types::{ImageRaster, Observation, VelocityCommand, VelocityHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Learned veto with reliability-aware fusion and gating.
    Graspe,
    /// Same network with both reliabilities pinned to 1.
    GraspeNoReliability,
    /// Dynamic window with the obstacle constraint always on and no veto.
    DwaBaseline,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Graspe, Suite::GraspeNoReliability, Suite::DwaBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Graspe => "graspe",
            Suite::GraspeNoReliability => "graspe_no_reliability",
            Suite::DwaBaseline => "dwa_baseline",
        }
    }

    pub fn needs_model(self) -> bool {
        self != Suite::DwaBaseline
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| invalid(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub suite: Suite,
    pub difficulty: Difficulty,
    pub episode: usize,
    pub world_seed: u64,
    pub status: EpisodeStatus,
    pub steps: usize,
    pub path_length: f64,
    pub straight_distance: f64,
    pub normalized_length: f64,
    pub r_img: Vec<f64>,
    pub r_point: Vec<f64>,
    pub vetoes: Vec<usize>,
    pub recoveries: usize,
    /// Robot positions from the start, one per step.
    pub trajectory: Vec<(f64, f64)>,
}

impl EpisodeReport {
    pub fn succeeded(&self) -> bool {
        self.status == EpisodeStatus::ReachedGoal
    }

    pub fn total_vetoes(&self) -> usize {
        self.vetoes.iter().sum()
    }
}

pub fn eval_world_seed(cfg: &Config, episode: usize) -> u64 {
    cfg.harness.eval.seed_offset.wrapping_add(episode as u64)
}

/// Runs one closed-loop episode of `suite` in world `(world_seed, difficulty)`.
pub fn run_episode(
    cfg: &Config,
    suite: Suite,
    model: Option<&FusionModel>,
    difficulty: Difficulty,
    episode: usize,
    world_seed: u64,
) -> Result<EpisodeReport> {
    let grid = cfg.simworld.generate(world_seed, difficulty)?;
    let planner = PlannerConfig {
        gate_admissible: suite != Suite::DwaBaseline,
        ..cfg.planner.clone()
    };
    let mut predictor: Box<dyn SuccessModel + '_> = match (suite, model) {
        (Suite::DwaBaseline, _) => Box::new(ConstantModel::ones(planner.horizon)),
        (_, Some(m)) => Box::new(FusionPredictor::new(m)),
        (_, None) => return Err(invalid(format!("suite {suite} needs a trained model"))),
    };
    let blank = ImageRaster::filled(cfg.simworld.camera.width, cfg.simworld.camera.height, 1, 0)?;
    let mut lidar_rng = SimRng::derive(world_seed, LIDAR_STREAM);
    let mut state = EpisodeState::start(&grid);
    let start = state.pose;
    let mut current = VelocityCommand::ZERO;
    let mut history = VelocityHistory::zeros(planner.horizon);
    let mut report = EpisodeReport {
        suite,
        difficulty,
        episode,
        world_seed,
        status: EpisodeStatus::Running,
        steps: 0,
        path_length: 0.0,
        straight_distance: start.distance_to(grid.goal.0, grid.goal.1),
        normalized_length: 0.0,
        r_img: Vec::new(),
        r_point: Vec::new(),
        vetoes: Vec::new(),
        recoveries: 0,
        trajectory: vec![(start.x, start.y)],
    };
    if !(report.straight_distance > 0.0) {
        return Err(invalid("start and goal coincide"));
    }
    while !state.status.is_terminal() {
        let (image, cloud) = sense(&grid, &state.pose, cfg, &mut lidar_rng)?;
        let obs = Observation::new(image, cloud, history.clone(), blank.clone())?;
        let measured = assess(&obs, &cfg.reliability)?;
        let reliability = match suite {
            Suite::GraspeNoReliability => measured.overridden(1.0, 1.0),
            _ => measured,
        };
        let decision = plan_step(
            &state.pose,
            current,
            state.goal,
            &obs,
            &reliability,
            predictor.as_mut(),
            &planner,
        )?;
        let cmd = decision.action.command();
        let next = step_robot(&state, cmd, planner.dt, &grid, &cfg.simworld.episode)?;
        report.path_length += state.pose.distance_to(next.pose.x, next.pose.y);
        report.r_img.push(measured.r_img());
        report.r_point.push(measured.r_point());
        report.vetoes.push(decision.vetoes);
        report.recoveries += decision.action.is_recovery() as usize;
        report.trajectory.push((next.pose.x, next.pose.y));
        state = next;
        history = history.pushed(cmd);
        current = cmd;
    }
    report.status = state.status;
    report.steps = state.elapsed_steps;
    report.normalized_length = report.path_length / report.straight_distance;
    Ok(report)
}

/// Checks that a trained model fits the configured dimensions.
pub fn check_model(model: &FusionModel, cfg: &Config) -> Result<()> {
    if model.encoders.config != cfg.encoders || model.gnn_config != cfg.fusion {
        return Err(Error::Config(
            "checkpoint was trained with different encoder or graph settings".into(),
        ));
    }
    model.validate()
}

/// All configured difficulties, `harness.eval.episodes` each, in order.
pub fn run_eval(cfg: &Config, suite: Suite, model: Option<&FusionModel>) -> Result<Vec<EpisodeReport>> {
    if let Some(m) = model {
        check_model(m, cfg)?;
    }
    let mut reports = Vec::new();
    for &difficulty in &cfg.harness.eval.difficulties {
        for episode in 0..cfg.harness.eval.episodes {
            let seed = eval_world_seed(cfg, episode);
            reports.push(run_episode(cfg, suite, model, difficulty, episode, seed)?);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub suite: Suite,
    pub difficulty: Difficulty,
    pub episodes: usize,
    pub success_rate: f64,
    /// Mean over successful episodes; NaN when there are none.
    pub norm_len_success: f64,
    pub norm_len_fail: f64,
    pub mean_vetoes: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// One row per `(suite, difficulty)` in first-seen order.
pub fn summarize(reports: &[EpisodeReport]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Suite, Difficulty)> = Vec::new();
    for r in reports {
        if !keys.contains(&(r.suite, r.difficulty)) {
            keys.push((r.suite, r.difficulty));
        }
    }
    keys.into_iter()
        .map(|(suite, difficulty)| {
            let group: Vec<&EpisodeReport> = reports
                .iter()
                .filter(|r| r.suite == suite && r.difficulty == difficulty)
                .collect();
            let successes = group.iter().filter(|r| r.succeeded()).count();
            SummaryRow {
                suite,
                difficulty,
                episodes: group.len(),
                success_rate: successes as f64 / group.len() as f64,
                norm_len_success: mean(
                    group.iter().filter(|r| r.succeeded()).map(|r| r.normalized_length),
                ),
                norm_len_fail: mean(
                    group.iter().filter(|r| !r.succeeded()).map(|r| r.normalized_length),
                ),
                mean_vetoes: mean(group.iter().map(|r| r.total_vetoes() as f64)),
            }
        })
        .collect()
}
