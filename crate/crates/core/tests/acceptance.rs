//! Acceptance suite: one PASS/FAIL line per criterion, each at its stated
//! scale, tolerance and runtime budget.
//!
//! Exits non-zero on failure only when `ACCEPTANCE_STRICT=1`, so the full
//! report always reaches the test log.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{
    blank_observation, clutter_and_wall_scans, dimmed, dwa_oracle, occlude, random_state,
    textured_image,
};
use trav_core::encoders::{EncoderConfig, EncoderInput, FeatureLayout};
use trav_core::fusion::{
    batch_gradient, bce, build_graph, normalized_adjacency, Checkpoint, EdgeGating, FusionConfig,
    FusionModel, GnnConfig, GraphAttention, GraphConv, SampleInput, TrainSample,
};
use trav_core::harness::{
    emit_plots, log_csv, record_dataset, run_eval, run_shuffled_control, run_training, summarize,
    Config, Dataset, Manifest, Suite, SummaryRow,
};
use trav_core::nn::Parameters;
use trav_core::planner::{plan_step, Action, ConstantModel, PlannerConfig};
use trav_core::reliability::{
    brightness, cloud_feature_factors, cloud_reliability, fast_corners, image_reliability,
    CloudReliabilityParams, ImageReliabilityParams, Reliability,
};
use trav_core::simworld::Difficulty;
use trav_core::{Matrix, PointCloud, Pose2D, SimRng, VelocityCommand};

/// One sub-check: description and whether it held.
type Check = (String, bool);

fn check(ok: bool, msg: impl Into<String>) -> Check {
    (msg.into(), ok)
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    checks: Vec<Check>,
    elapsed: Duration,
}

impl Criterion {
    fn passed(&self) -> bool {
        self.elapsed <= self.budget && self.checks.iter().all(|c| c.1)
    }

    fn report(&self) {
        println!(
            "{} [{}] {} ({:.1}s, budget {}s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        );
        for (msg, ok) in &self.checks {
            println!("       {} {msg}", if *ok { "ok  " } else { "FAIL" });
        }
    }
}

fn timed(id: usize, name: &'static str, budget_secs: u64, f: impl FnOnce() -> Vec<Check>) -> Criterion {
    let start = Instant::now();
    let checks = f();
    let c = Criterion {
        id,
        name,
        budget: Duration::from_secs(budget_secs),
        checks,
        elapsed: start.elapsed(),
    };
    c.report();
    c
}

fn random_cloud(rng: &mut SimRng, n: usize) -> PointCloud {
    let rings = 1 + rng.below(8) as u16;
    let points = (0..n)
        .map(|_| [rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-2.0, 2.0)])
        .collect();
    let ring_ids = (0..n).map(|_| rng.below(rings as usize) as u16).collect();
    PointCloud::new(points, ring_ids, rings).unwrap()
}

fn reliability_suite() -> Vec<Check> {
    let img_p = ImageReliabilityParams::default();
    let cloud_p = CloudReliabilityParams::default();
    let mut rng = SimRng::new(1);
    let unit = |v: f64| (0.0..=1.0).contains(&v);

    let mut ranges = true;
    for _ in 0..500 {
        let (w, h) = (7 + rng.below(58), 7 + rng.below(58));
        let img = dimmed(&textured_image(&mut rng, w, h), rng.next_f64());
        let r = image_reliability(&img, &img_p).unwrap();
        ranges &= unit(r.r_bright) && unit(r.r_corners) && unit(r.r_img);
        let n = rng.below(400);
        let c = cloud_reliability(&random_cloud(&mut rng, n), &cloud_p).unwrap();
        ranges &= unit(c.r_edge) && unit(c.r_planar) && unit(c.r_point);
    }

    let mut monotone = true;
    for _ in 0..500 {
        let img = textured_image(&mut rng, 32, 32);
        let (a, b) = (rng.next_f64(), rng.next_f64());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        monotone &= brightness(&dimmed(&img, lo)).unwrap() <= brightness(&dimmed(&img, hi)).unwrap();
    }

    let mut occlusion_worst = i64::MIN;
    for _ in 0..100 {
        let img = textured_image(&mut rng, 64, 64);
        let covered = occlude(&img, rng.uniform(0.5, 0.9), rng.below(4), rng.below(256) as u8);
        let before = fast_corners(&img, img_p.fast_threshold, img_p.fast_arc).len() as i64;
        let after = fast_corners(&covered, img_p.fast_threshold, img_p.fast_arc).len() as i64;
        occlusion_worst = occlusion_worst.max(after - before);
    }

    let mut scale_err: f64 = 0.0;
    let mut validity_kept = true;
    for _ in 0..500 {
        let n = 2 + rng.below(200);
        let cloud = random_cloud(&mut rng, n);
        let s = 10f64.powf(rng.uniform(-3.0, 3.0));
        let scaled = PointCloud::new(
            cloud.points().iter().map(|p| p.map(|c| c * s)).collect(),
            cloud.rings().to_vec(),
            cloud.num_rings(),
        )
        .unwrap();
        for (a, b) in cloud_feature_factors(&cloud, &cloud_p).iter().zip(cloud_feature_factors(&scaled, &cloud_p)) {
            match (a, b) {
                (Some(a), Some(b)) => scale_err = scale_err.max((a - b).abs()),
                (None, None) => {}
                _ => validity_kept = false,
            }
        }
    }

    let mut ordered = 0;
    let mut worst_gap = f64::INFINITY;
    for seed in 0..20 {
        let (clutter, wall) = clutter_and_wall_scans(seed);
        let c = cloud_reliability(&clutter, &cloud_p).unwrap().r_point;
        let w = cloud_reliability(&wall, &cloud_p).unwrap().r_point;
        ordered += (c < w) as usize;
        worst_gap = worst_gap.min(w - c);
    }

    vec![
        check(ranges, "six scores in [0,1] on 500 images and 500 clouds"),
        check(monotone, "r_bright monotone in illumination (500 pairs)"),
        check(
            occlusion_worst <= 0,
            format!("occluding >=50% never adds corners (100 images, worst change {occlusion_worst:+})"),
        ),
        check(
            validity_kept && scale_err <= 1e-9,
            format!("feature factor scale invariance (500 clouds, max error {scale_err:.2e})"),
        ),
        check(
            ordered == 20,
            format!("r_point clutter < wall on {ordered}/20 preset scans (min gap {worst_gap:.3})"),
        ),
    ]
}

fn random_graph(n: usize, rng: &mut SimRng) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if rng.chance(0.2) { 0.0 } else { rng.next_f64() };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

fn random_matrix(r: usize, c: usize, rng: &mut SimRng) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

/// Largest deviation of the GCN layer from `ReLU(sum_j a_ij h_j Theta + b)`
/// with `a_ij = w~_ij / sqrt(d_i d_j)` and self-loops of weight 1.
fn gcn_oracle_error(rng: &mut SimRng) -> f64 {
    let w = random_graph(5, rng);
    let conv = GraphConv {
        theta: random_matrix(3, 4, rng),
        bias: (0..4).map(|_| rng.uniform(-0.5, 0.5)).collect(),
    };
    let h = random_matrix(5, 3, rng);
    let out = conv.forward(&normalized_adjacency(&w), &h).unwrap();
    let deg: Vec<f64> = (0..5).map(|i| 1.0 + (0..5).map(|j| w[(i, j)]).sum::<f64>()).collect();
    let mut err: f64 = 0.0;
    for i in 0..5 {
        for c in 0..4 {
            let mut acc = 0.0;
            for j in 0..5 {
                let a = if i == j { 1.0 } else { w[(i, j)] } / (deg[i] * deg[j]).sqrt();
                for k in 0..3 {
                    acc += a * h[(j, k)] * conv.theta[(k, c)];
                }
            }
            err = err.max((out.output()[(i, c)] - (acc + conv.bias[c]).max(0.0)).abs());
        }
    }
    err
}

/// Largest deviation of the attention layer from a per-node softmax over
/// `w_ij * exp(LeakyReLU(a_src.z_i + a_dst.z_j))`, then ELU.
fn gat_oracle_error(rng: &mut SimRng) -> f64 {
    let w = random_graph(5, rng);
    let gat = GraphAttention::init(3, 4, rng);
    let h = random_matrix(5, 3, rng);
    let w_min = 1e-3;
    let out = gat.forward(&w, w_min, &h).unwrap();
    let z = |i: usize| -> Vec<f64> { (0..4).map(|c| (0..3).map(|k| h[(i, k)] * gat.theta[(k, c)]).sum()).collect() };
    let mut err: f64 = 0.0;
    for i in 0..5 {
        let zi = z(i);
        let mut terms = Vec::new();
        for j in (0..5).filter(|&j| j == i || w[(i, j)] >= w_min) {
            let zj = z(j);
            let e: f64 = (0..4).map(|c| gat.a_src[c] * zi[c] + gat.a_dst[c] * zj[c]).sum();
            let e = if e > 0.0 { e } else { 0.2 * e };
            let prior = if i == j { 1.0 } else { w[(i, j)] };
            terms.push((prior * e.exp(), zj));
        }
        let total: f64 = terms.iter().map(|t| t.0).sum();
        for c in 0..4 {
            let u: f64 = terms.iter().map(|(a, zj)| a / total * zj[c]).sum();
            let expect = if u > 0.0 { u } else { u.exp() - 1.0 };
            err = err.max((out.output()[(i, c)] - expect).abs());
        }
    }
    err
}

fn small_fusion_config(gating: EdgeGating) -> FusionConfig {
    FusionConfig {
        encoders: EncoderConfig {
            image_width: 8,
            image_height: 8,
            grid: 4,
            image_hidden: 4,
            image_features: 3,
            traj_hidden: 4,
            traj_features: 2,
            azimuth_bins: 2,
            range_bins: 2,
            point_features: 3,
            horizon: 3,
            velocity_features: 2,
            ..EncoderConfig::default()
        },
        gnn: GnnConfig {
            hidden: 4,
            attention: 3,
            gating,
            ..GnnConfig::default()
        },
    }
}

fn random_input(cfg: &EncoderConfig, rng: &mut SimRng) -> SampleInput {
    let cells = cfg.grid * cfg.grid;
    SampleInput {
        encoder: EncoderInput {
            image: (0..cells).map(|_| rng.next_f64()).collect(),
            cloud: (0..cfg.azimuth_bins * cfg.range_bins).map(|_| rng.next_f64() * 0.3).collect(),
            traj: (0..cells).map(|_| rng.next_f64()).collect(),
            velocity: (0..2 * cfg.horizon).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        },
        r_img: rng.next_f64(),
        r_point: rng.next_f64(),
    }
}

/// Worst relative error between backprop and central differences over all
/// parameters; edge weights stay at their unperturbed values.
fn gradient_draw_error(draw: u64) -> f64 {
    let mut rng = SimRng::derive(draw, 0x9d);
    let gating = if draw % 2 == 0 { EdgeGating::AsWritten } else { EdgeGating::Inverted };
    let cfg = small_fusion_config(gating);
    let mut model = FusionModel::init(&cfg, 1000 + draw).unwrap();
    // move off the zero-bias initialization, where ReLU units sit on their kink
    model.visit_mut(&mut |t| t.iter_mut().for_each(|x| *x += rng.uniform(-0.2, 0.2)));
    let samples: Vec<TrainSample> = (0..3)
        .map(|_| TrainSample {
            input: random_input(&cfg.encoders, &mut rng),
            labels: (0..3).map(|_| rng.below(2) as f64).collect(),
        })
        .collect();
    let batch: Vec<&TrainSample> = samples.iter().collect();
    let frozen: Vec<Matrix> = samples.iter().map(|s| model.graph_weights(&s.input).unwrap()).collect();
    let mut grad = model.zeros_like();
    batch_gradient(&model, &batch, &mut grad).unwrap();
    let analytic = grad.flatten();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for (idx, &an) in analytic.iter().enumerate() {
        let eval = |delta: f64| {
            let mut m = model.clone();
            let mut seen = 0;
            m.visit_mut(&mut |t| {
                if (seen..seen + t.len()).contains(&idx) {
                    t[idx - seen] += delta;
                }
                seen += t.len();
            });
            samples
                .iter()
                .zip(&frozen)
                .map(|(s, w)| bce(m.forward_frozen(&s.input, w).unwrap().probs(), &s.labels).unwrap())
                .sum::<f64>()
                / samples.len() as f64
        };
        let fd = (eval(step) - eval(-step)) / (2.0 * step);
        worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
    }
    worst
}

fn graph_suite() -> Vec<Check> {
    let mut rng = SimRng::new(2);
    let mut structure = true;
    for _ in 0..10_000 {
        let sizes = [1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6)];
        let layout = FeatureLayout::new(sizes[0], sizes[1], sizes[2], sizes[3]);
        let n: usize = sizes.iter().sum();
        let signal: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let lambda = rng.uniform(0.01, 20.0);
        let gating = if rng.chance(0.5) { EdgeGating::AsWritten } else { EdgeGating::Inverted };
        let g = build_graph(&signal, &layout, rng.next_f64(), rng.next_f64(), lambda, gating).unwrap();
        for i in 0..n {
            structure &= g.weights[(i, i)] == 0.0;
            for j in 0..n {
                structure &= g.weights[(i, j)] == g.weights[(j, i)] && (0.0..=1.0).contains(&g.weights[(i, j)]);
            }
        }
    }
    let gcn = (0..200).map(|_| gcn_oracle_error(&mut rng)).fold(0.0, f64::max);
    let gat = (0..200).map(|_| gat_oracle_error(&mut rng)).fold(0.0, f64::max);
    let grad = (0..50).map(gradient_draw_error).fold(0.0, f64::max);
    vec![
        check(structure, "W symmetric, zero diagonal, in [0,1] on 10^4 random graphs"),
        check(gcn <= 1e-12, format!("GCN vs per-node oracle, 200 five-node graphs (max error {gcn:.1e})")),
        check(gat <= 1e-12, format!("GAT vs per-node oracle, 200 five-node graphs (max error {gat:.1e})")),
        check(
            grad <= 1e-4,
            format!("full-model gradients vs central differences, 50 draws (worst relative error {grad:.2e})"),
        ),
    ]
}

fn planner_suite() -> Vec<Check> {
    let cfg = PlannerConfig::default();
    let weights = (cfg.heading_weight, cfg.clearance_weight, cfg.velocity_weight);
    let rel = Reliability::pinned(1.0, 1.0);
    let mut rng = SimRng::new(3);
    let mut equal = 0;
    for _ in 0..1000 {
        let s = random_state(&mut rng, &cfg);
        let mut ones = ConstantModel::ones(cfg.horizon);
        let d = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut ones, &cfg).unwrap();
        let same = match dwa_oracle(&s.pose, s.current, s.goal, &s.obs.cloud, weights, &cfg) {
            Some(cmd) => d.action == Action::Command(cmd),
            None => d.action.is_recovery(),
        };
        equal += same as usize;
    }

    let mut recoveries = 0;
    for _ in 0..1000 {
        let s = random_state(&mut rng, &cfg);
        let mut zeros = ConstantModel::zeros(cfg.horizon);
        let d = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut zeros, &cfg).unwrap();
        recoveries += (d.action.is_recovery() && d.vetoes == d.restricted_size) as usize;
    }
    let pose = Pose2D::new(0.0, 0.0, 0.0).unwrap();
    let obs = blank_observation(PointCloud::empty(4), cfg.horizon);
    let d = plan_step(&pose, VelocityCommand::ZERO, (0.0, 5.0), &obs, &rel, &mut ConstantModel::zeros(cfg.horizon), &cfg)
        .unwrap();
    let rotates_to_goal = d.action == Action::Recovery(VelocityCommand::new(0.0, cfg.omega_max / 2.0));

    let mut invariant = 0;
    for i in 0..1000 {
        let s = random_state(&mut rng, &cfg);
        let k = [0.25, 0.5, 2.0, 3.0, 10.0][i % 5];
        let scaled = PlannerConfig {
            heading_weight: cfg.heading_weight * k,
            clearance_weight: cfg.clearance_weight * k,
            velocity_weight: cfg.velocity_weight * k,
            ..cfg.clone()
        };
        let mut m = ConstantModel::ones(cfg.horizon);
        let a = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut m, &cfg).unwrap();
        let b = plan_step(&s.pose, s.current, s.goal, &s.obs, &rel, &mut m, &scaled).unwrap();
        invariant += (a.action == b.action) as usize;
    }
    vec![
        check(equal == 1000, format!("all-ones predictor equals classic DWA argmax on {equal}/1000 states")),
        check(
            recoveries == 1000 && rotates_to_goal,
            format!("full veto yields Recovery on {recoveries}/1000 states, rotating toward the goal"),
        ),
        check(invariant == 1000, format!("argmax unchanged under positive weight scaling on {invariant}/1000 states")),
    ]
}

fn desk_config() -> Config {
    Config::layered(&[], &["train.epochs=50".to_string(), "train.seed=0".to_string()]).unwrap()
}

fn training_suite(cfg: &Config, model_out: &mut Option<FusionModel>) -> Vec<Check> {
    let dataset = record_dataset(cfg).unwrap();
    let balance = dataset.balance();
    let sha = [0u8; 32];
    let run = run_training(&dataset, &sha, cfg).unwrap();
    let control = run_shuffled_control(&dataset, &sha, cfg).unwrap();
    let rerun = run_training(&dataset, &sha, cfg).unwrap();
    let same_log = log_csv(&run.log) == log_csv(&rerun.log);
    let checks = vec![
        check(
            (3000..=5000).contains(&balance.samples),
            format!(
                "desk-scale dataset: {} samples, {} positive / {} negative, {:.3} of steps negative",
                balance.samples, balance.positive, balance.negative, balance.step_negative_fraction
            ),
        ),
        check(
            run.validation.accuracy >= 0.85,
            format!(
                "validation per-step accuracy {:.4} >= 0.85 (50 epochs, best epoch {})",
                run.validation.accuracy, run.checkpoint.best_epoch
            ),
        ),
        check(
            control.validation.accuracy <= 0.65,
            format!("label-shuffled control accuracy {:.4} <= 0.65", control.validation.accuracy),
        ),
        check(same_log, "re-run reproduces the training log byte-exactly"),
    ];
    *model_out = Some(run.checkpoint.model);
    checks
}

fn row(rows: &[SummaryRow], suite: Suite, d: Difficulty) -> &SummaryRow {
    rows.iter().find(|r| r.suite == suite && r.difficulty == d).unwrap()
}

fn end_to_end_suite(cfg: &Config, model: Option<&FusionModel>) -> Vec<Check> {
    let Some(model) = model else {
        return vec![check(false, "no trained model from the training criterion")];
    };
    let cfg = Config {
        harness: trav_core::harness::HarnessConfig {
            eval: trav_core::harness::EvalConfig {
                episodes: 50,
                difficulties: vec![Difficulty::Open, Difficulty::Cluttered],
                ..cfg.harness.eval.clone()
            },
            ..cfg.harness.clone()
        },
        ..cfg.clone()
    };
    let mut reports = Vec::new();
    for suite in Suite::ALL {
        reports.extend(run_eval(&cfg, suite, Some(model)).unwrap());
    }
    let rows = summarize(&reports);
    let (g, n, b) = (Suite::Graspe, Suite::GraspeNoReliability, Suite::DwaBaseline);
    let c = Difficulty::Cluttered;
    let o = Difficulty::Open;
    let sr = |s, d| row(&rows, s, d).success_rate;
    let mean_len = |s| {
        let lens: Vec<f64> = reports
            .iter()
            .filter(|r| r.suite == s && r.difficulty == o)
            .map(|r| r.normalized_length)
            .collect();
        lens.iter().sum::<f64>() / lens.len() as f64
    };
    let (lg, lb) = (mean_len(g), mean_len(b));
    vec![
        check(
            sr(g, c) >= sr(b, c) + 0.1,
            format!("cluttered: GrASPE {:.2} exceeds DWA baseline {:.2} by >= 0.1", sr(g, c), sr(b, c)),
        ),
        check(
            sr(g, c) >= sr(n, c),
            format!("cluttered: GrASPE {:.2} >= no-reliability ablation {:.2}", sr(g, c), sr(n, c)),
        ),
        check(
            [g, n, b].iter().all(|&s| sr(s, o) >= 0.95),
            format!("open: success {:.2} / {:.2} / {:.2} all >= 0.95", sr(g, o), sr(n, o), sr(b, o)),
        ),
        check(
            (lg - lb).abs() <= 0.1 * lb,
            format!("open: mean normalized length GrASPE {lg:.3} within 10% of DWA {lb:.3}"),
        ),
    ]
}

/// record -> train -> eval -> plot into `dir`; returns every artifact.
fn pipeline(cfg: &Config, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let data = dir.join("dataset.bin");
    let dataset = record_dataset(cfg).unwrap();
    dataset.save(&data).unwrap();
    Manifest::new("record", cfg, &[], &[&data]).unwrap().write(dir).unwrap();

    let (dataset, sha) = Dataset::load(&data).unwrap();
    let run = run_training(&dataset, &sha, cfg).unwrap();
    let ck = dir.join("checkpoint.json");
    let log = dir.join("train_log.csv");
    run.checkpoint.save(&ck).unwrap();
    std::fs::write(&log, log_csv(&run.log)).unwrap();
    Manifest::new("train", cfg, &[&data], &[&ck, &log]).unwrap().write(dir).unwrap();

    let model = Checkpoint::load(&ck).unwrap().model;
    let mut reports = Vec::new();
    for suite in Suite::ALL {
        reports.extend(run_eval(cfg, suite, Some(&model)).unwrap());
    }
    let rep = dir.join("reports.json");
    std::fs::write(&rep, serde_json::to_string(&reports).unwrap()).unwrap();
    Manifest::new("eval", cfg, &[&ck], &[&rep]).unwrap().write(dir).unwrap();

    let plots = dir.join("plots");
    let written = emit_plots(&reports, cfg, &plots).unwrap();
    let outs: Vec<&Path> = written.iter().map(|p| p.as_path()).collect();
    Manifest::new("plot", cfg, &[&rep], &outs).unwrap().write(&plots).unwrap();

    let mut files = Vec::new();
    for d in [dir.to_path_buf(), plots] {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn reproducibility_suite() -> Vec<Check> {
    let sets: Vec<String> = [
        "harness.record.episodes=10",
        "harness.record.max_steps=40",
        "train.epochs=5",
        "harness.eval.episodes=4",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let cfg = Config::layered(&[], &sets).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline(&cfg, a.path());
    let second = pipeline(&cfg, b.path());
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    vec![check(
        first.len() == second.len() && differing.is_empty(),
        format!(
            "record -> train -> eval -> plot twice: {} artifacts, {} differ {:?}",
            first.len(),
            differing.len(),
            differing
        ),
    )]
}

fn main() {
    let filter: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |id: usize| filter.as_ref().is_none_or(|f| f.contains(&id));
    println!("acceptance criteria");
    let mut results = Vec::new();
    if wanted(1) {
        results.push(timed(1, "reliability estimator suite", 30, reliability_suite));
    }
    if wanted(2) {
        results.push(timed(2, "graph and GNN numerics", 120, graph_suite));
    }
    if wanted(3) {
        results.push(timed(3, "planner equivalence", 60, planner_suite));
    }
    let cfg = desk_config();
    let mut model = None;
    if wanted(4) || wanted(5) {
        let c = timed(4, "training", 900, || training_suite(&cfg, &mut model));
        if wanted(4) {
            results.push(c);
        }
    }
    if wanted(5) {
        results.push(timed(5, "end-to-end orderings", 1200, || end_to_end_suite(&cfg, model.as_ref())));
    }
    if wanted(6) {
        results.push(timed(6, "reproducibility", 600, reproducibility_suite));
    }
    let passed = results.iter().filter(|c| c.passed()).count();
    println!("{passed}/{} criteria passed", results.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
