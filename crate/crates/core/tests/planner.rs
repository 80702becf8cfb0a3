mod common;

use common::{blank_observation, dwa_oracle, random_state};
use trav_core::planner::*;
use trav_core::reliability::Reliability;
use trav_core::{PointCloud, Pose2D, SimRng, VelocityCommand};

#[test]
fn all_ones_predictor_matches_classic_dwa() {
    let cfg = PlannerConfig::default();
    let mut rng = SimRng::new(11);
    let rel = Reliability::pinned(1.0, 1.0);
    for _ in 0..200 {
        let s = random_state(&mut rng, &cfg);
        let mut model = ConstantModel::ones(cfg.horizon);
        let d = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut model, &cfg).unwrap();
        let w = (cfg.heading_weight, cfg.clearance_weight, cfg.velocity_weight);
        match dwa_oracle(&s.pose, s.current, s.goal, &s.obs.cloud, w, &cfg) {
            Some(cmd) => {
                assert_eq!(d.action, Action::Command(cmd));
                assert_eq!(d.vetoes, 0);
            }
            None => assert!(d.action.is_recovery()),
        }
    }
}

#[test]
fn all_zeros_predictor_exhausts_to_recovery() {
    let cfg = PlannerConfig::default();
    let obs = blank_observation(PointCloud::empty(4), cfg.horizon);
    let pose = Pose2D::new(0.0, 0.0, 0.0).unwrap();
    let rel = Reliability::pinned(0.5, 0.0);
    let mut model = ConstantModel::zeros(cfg.horizon);
    let d = plan_step(&pose, VelocityCommand::ZERO, (0.0, 5.0), &obs, &rel, &mut model, &cfg).unwrap();
    assert_eq!(d.evaluations, d.restricted_size);
    assert_eq!(d.vetoes, d.restricted_size);
    // goal to the left: rotate counter-clockwise at half rate
    assert_eq!(d.action, Action::Recovery(VelocityCommand::new(0.0, 0.5)));
    let d = plan_step(&pose, VelocityCommand::ZERO, (0.0, -5.0), &obs, &rel, &mut model, &cfg).unwrap();
    assert_eq!(d.action, Action::Recovery(VelocityCommand::new(0.0, -0.5)));
}

#[test]
fn scaling_weights_keeps_selection() {
    let cfg = PlannerConfig::default();
    let mut rng = SimRng::new(12);
    let rel = Reliability::pinned(1.0, 1.0);
    for i in 0..200 {
        let s = random_state(&mut rng, &cfg);
        let k = [0.5, 2.0, 4.0, 8.0][i % 4];
        let scaled = PlannerConfig {
            heading_weight: cfg.heading_weight * k,
            clearance_weight: cfg.clearance_weight * k,
            velocity_weight: cfg.velocity_weight * k,
            ..cfg.clone()
        };
        let mut m = ConstantModel::ones(cfg.horizon);
        let a = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut m, &cfg).unwrap();
        let b = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut m, &scaled).unwrap();
        assert_eq!(a.action, b.action);
    }
}

#[test]
fn accepted_commands_are_feasible_and_clear() {
    let cfg = PlannerConfig::default();
    let mut rng = SimRng::new(13);
    let rel = Reliability::pinned(1.0, 1.0);
    for _ in 0..200 {
        let s = random_state(&mut rng, &cfg);
        let mut m = ConstantModel::ones(cfg.horizon);
        let d = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut m, &cfg).unwrap();
        assert!(d.evaluations <= cfg.velocity_grid().len());
        if let Action::Command(cmd) = d.action {
            assert!(cmd.within(cfg.v_max, cfg.omega_max));
            assert!(cfg.in_dynamic_window(s.current, cmd));
            let origin = Pose2D::new(0.0, 0.0, 0.0).unwrap();
            for p in predict_trajectory(&origin, cmd, cfg.dt, cfg.horizon) {
                for q in s.obs.cloud.points() {
                    assert!((p.x - q[0]).hypot(p.y - q[1]) >= cfg.clearance);
                }
            }
        }
    }
}

#[test]
fn veto_skips_to_next_ranked_candidate() {
    // rejects the first two candidates, accepts the third
    struct RejectFirst(usize, usize);
    impl SuccessModel for RejectFirst {
        fn prepare(&mut self, _: &trav_core::Observation, _: &Reliability) -> trav_core::Result<()> {
            Ok(())
        }
        fn predict_with(&mut self, _: &trav_core::ImageRaster) -> trav_core::Result<trav_core::SuccessVector> {
            self.0 += 1;
            trav_core::SuccessVector::constant(if self.0 > 2 { 1.0 } else { 0.0 }, self.1)
        }
    }
    let cfg = PlannerConfig::default();
    let obs = blank_observation(PointCloud::empty(4), cfg.horizon);
    let pose = Pose2D::new(0.0, 0.0, 0.0).unwrap();
    let rel = Reliability::pinned(1.0, 1.0);
    let current = VelocityCommand::new(0.5, 0.0);
    let (ranked, _) = ranked_candidates(&pose, current, (8.0, 1.0), &obs, 1.0, &cfg);
    let mut m = RejectFirst(0, cfg.horizon);
    let d = plan_step(&pose, current, (8.0, 1.0), &obs, &rel, &mut m, &cfg).unwrap();
    assert_eq!(d.vetoes, 2);
    assert_eq!(d.action, Action::Command(ranked[2].1));
}
