//! Dataset collection with a seeded random-walk velocity policy.

use super::config::Config;
use super::dataset::{Dataset, DatasetHeader, Sample, SampleMeta};
use crate::error::Result;
use crate::planner::{heading_term, local_rollout, predict_trajectory, rasterize_trajectory};
use crate::rng::SimRng;
use crate::simworld::{
    ground_truth_labels, render_camera, render_lidar, step_robot, Difficulty, EpisodeState,
    TerrainGrid,
};
use crate::types::{SuccessVector, ImageRaster, Observation, PointCloud, Pose2D, VelocityCommand, VelocityHistory};

/// Stream id of the per-episode LiDAR noise generator.
pub(crate) const LIDAR_STREAM: u64 = 0x11da;
const POLICY_STREAM: u64 = 0x4ec0;

/// Camera frame and LiDAR scan at `pose`.
pub fn sense(
    grid: &TerrainGrid,
    pose: &Pose2D,
    cfg: &Config,
    lidar_rng: &mut SimRng,
) -> Result<(ImageRaster, PointCloud)> {
    let image = render_camera(grid, pose, &cfg.simworld.camera)?;
    let cloud = render_lidar(grid, pose, &cfg.simworld.lidar, lidar_rng)?;
    Ok((image, cloud))
}

/// World seed of recorded episode `episode`.
pub fn record_world_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_mul(100_000).wrapping_add(episode as u64)
}

pub fn episode_difficulty(cfg: &Config, episode: usize) -> Difficulty {
    let mix = &cfg.harness.record.mix;
    mix[episode % mix.len()]
}

fn clear_prefix(label: &SuccessVector) -> usize {
    label.probs().iter().take_while(|&&x| x >= 0.5).count()
}

fn dynamic_window(cfg: &Config, current: VelocityCommand) -> Vec<VelocityCommand> {
    let p = &cfg.planner;
    p.velocity_grid()
        .into_iter()
        .filter(|c| p.in_dynamic_window(current, *c))
        .collect()
}

/// Next exploration command: either the previous proposal kept, steered
/// toward the goal, or drawn uniformly from the commands reachable from
/// `current`.
fn policy_command(
    rng: &mut SimRng,
    grid: &TerrainGrid,
    state: &EpisodeState,
    current: VelocityCommand,
    previous: Option<VelocityCommand>,
    cfg: &Config,
) -> VelocityCommand {
    let rec = &cfg.harness.record;
    let p = &cfg.planner;
    if let Some(prev) = previous {
        if p.in_dynamic_window(current, prev) && !rng.chance(rec.change_prob) {
            return prev;
        }
    }
    let window = dynamic_window(cfg, current);
    if rec.hazard_bias > 0.0 && rng.chance(rec.hazard_bias) {
        // commands that fail soonest
        let mut failing = Vec::new();
        let mut soonest = p.horizon;
        for c in &window {
            let traj = predict_trajectory(&state.pose, *c, p.dt, p.horizon);
            let clear = clear_prefix(&ground_truth_labels(grid, &traj).expect("non-empty rollout"));
            if clear < soonest {
                soonest = clear;
                failing.clear();
            }
            if clear == soonest && clear < p.horizon {
                failing.push(*c);
            }
        }
        if !failing.is_empty() {
            return failing[rng.below(failing.len())];
        }
    }
    if rng.chance(rec.goal_bias) {
        let v = window[rng.below(window.len())].v;
        let mut best = (f64::NEG_INFINITY, current);
        for c in window.iter().filter(|c| c.v == v) {
            let end = *predict_trajectory(&state.pose, *c, p.dt, p.horizon).last().expect("horizon");
            let h = heading_term(&end, state.goal);
            if h > best.0 {
                best = (h, *c);
            }
        }
        best.1
    } else {
        window[rng.below(window.len())]
    }
}

/// Window command whose rollout stays traversable longest, preferring the
/// best goal heading among equally safe ones.
fn safe_command(
    grid: &TerrainGrid,
    state: &EpisodeState,
    current: VelocityCommand,
    cfg: &Config,
) -> Result<VelocityCommand> {
    let p = &cfg.planner;
    let mut best = (0usize, f64::NEG_INFINITY, VelocityCommand::ZERO);
    for c in dynamic_window(cfg, current) {
        let traj = predict_trajectory(&state.pose, c, p.dt, p.horizon);
        let clear = clear_prefix(&ground_truth_labels(grid, &traj)?);
        let h = heading_term(traj.last().expect("horizon"), state.goal);
        if (clear, h) > (best.0, best.1) {
            best = (clear, h, c);
        }
    }
    Ok(best.2)
}

/// Drives one exploration episode and returns its samples.
pub fn record_episode(cfg: &Config, episode: usize) -> Result<Vec<Sample>> {
    let seed = cfg.harness.seed;
    let world_seed = record_world_seed(seed, episode);
    let difficulty = episode_difficulty(cfg, episode);
    let grid = cfg.simworld.generate(world_seed, difficulty)?;
    let p = &cfg.planner;
    let mut policy = SimRng::derive(seed, POLICY_STREAM + episode as u64);
    let mut lidar_rng = SimRng::derive(world_seed, LIDAR_STREAM);
    let mut state = EpisodeState::start(&grid);
    let mut current = VelocityCommand::ZERO;
    let mut history = VelocityHistory::zeros(p.horizon);
    let mut samples = Vec::new();
    let mut proposal = None;
    for step in 0..cfg.harness.record.max_steps {
        let cmd = policy_command(&mut policy, &grid, &state, current, proposal, cfg);
        proposal = Some(cmd);
        let (image, cloud) = sense(&grid, &state.pose, cfg, &mut lidar_rng)?;
        let traj_image = rasterize_trajectory(&local_rollout(cmd, p.dt, p.horizon), &p.window)?;
        let label = ground_truth_labels(&grid, &predict_trajectory(&state.pose, cmd, p.dt, p.horizon))?;
        samples.push(Sample {
            observation: Observation::new(image, cloud, history.clone(), traj_image)?,
            label,
            meta: SampleMeta {
                episode: episode as u32,
                world_seed,
                difficulty,
                step: step as u32,
            },
        });
        let failed = samples.last().is_some_and(|s| s.label.has_failure());
        let exec = if cfg.harness.record.supervised && failed {
            safe_command(&grid, &state, current, cfg)?
        } else {
            cmd
        };
        state = step_robot(&state, exec, p.dt, &grid, &cfg.simworld.episode)?;
        history = history.pushed(exec);
        current = exec;
        if state.status.is_terminal() {
            break;
        }
    }
    Ok(samples)
}

/// Records `harness.record.episodes` episodes in index order.
pub fn record_dataset(cfg: &Config) -> Result<Dataset> {
    let mut samples = Vec::new();
    for episode in 0..cfg.harness.record.episodes {
        samples.extend(record_episode(cfg, episode)?);
    }
    Ok(Dataset {
        header: DatasetHeader {
            horizon: cfg.planner.horizon,
            width: cfg.simworld.camera.width,
            height: cfg.simworld.camera.height,
            config_hash: cfg.observation_hash()?,
        },
        samples,
    })
}
