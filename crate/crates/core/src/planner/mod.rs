//! Dynamic-window planning with a reliability-gated velocity space and a
//! learned veto on candidate trajectories.

mod step;
mod trajectory;
mod window;

pub use step::{
    accepts, plan_step, rank, ranked_candidates, recovery_command, Action, ConstantModel,
    FusionPredictor, StepDecision, SuccessModel,
};
pub use trajectory::{
    local_rollout, predict_trajectory, rasterize_trajectory, TrajectoryWindow, STRAIGHT_OMEGA,
};
pub use window::{
    heading_term, objective, objective_terms, restricted_space, rollout_clearance, Candidate,
    ObjectiveTerms, PlannerConfig, VelocitySpace,
};
