use std::collections::BTreeSet;

use proptest::prelude::*;
use trav_core::harness::*;
use trav_core::simworld::{Difficulty, EpisodeStatus};

fn config(sets: &[&str]) -> Config {
    let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    Config::layered(&[], &sets).unwrap()
}

#[test]
fn recording_is_byte_deterministic() {
    let cfg = config(&["harness.record.episodes=5", "harness.record.max_steps=30"]);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    let sha_a = record_dataset(&cfg).unwrap().save(&a).unwrap();
    let sha_b = record_dataset(&cfg).unwrap().save(&b).unwrap();
    assert_eq!(sha_a, sha_b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (back, sha) = Dataset::load(&a).unwrap();
    assert_eq!(sha, sha_a);
    assert_eq!(back.to_bytes().unwrap(), std::fs::read(&a).unwrap());
}

#[test]
fn recorded_samples_carry_consistent_metadata() {
    let cfg = config(&["harness.record.episodes=5", "harness.record.max_steps=30"]);
    let ds = record_dataset(&cfg).unwrap();
    for s in &ds.samples {
        assert_eq!(s.label.len(), cfg.planner.horizon);
        assert_eq!(s.meta.world_seed, record_world_seed(cfg.harness.seed, s.meta.episode as usize));
        assert_eq!(s.meta.difficulty, episode_difficulty(&cfg, s.meta.episode as usize));
        assert!(s.label.probs().iter().all(|&p| p == 0.0 || p == 1.0));
    }
    // observations regenerate from the metadata alone
    let again = record_episode(&cfg, 2).unwrap();
    let original: Vec<_> = ds.samples.iter().filter(|s| s.meta.episode == 2).collect();
    assert_eq!(again.len(), original.len());
    assert!(again.iter().zip(original).all(|(a, b)| a == b));
}

#[test]
fn open_worlds_are_almost_all_positive() {
    let ds = record_dataset(&config(&["harness.record.mix=['open']"])).unwrap();
    let b = ds.balance();
    assert!(b.samples >= 3000);
    assert!(b.positive as f64 >= 0.99 * b.samples as f64, "{b:?}");
}

#[test]
fn default_mix_negative_fraction_in_band() {
    let ds = record_dataset(&Config::default()).unwrap();
    let b = ds.balance();
    assert!((3500..=4500).contains(&b.samples), "{b:?}");
    assert!((0.15..=0.45).contains(&b.negative_fraction()), "{b:?}");
    let combined = record_dataset(&config(&["harness.record.mix=['combined']"])).unwrap().balance();
    assert!((0.15..=0.45).contains(&combined.negative_fraction()), "{combined:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn episode_split_is_disjoint(episodes in 2usize..12, frac in 0.05f64..0.95, seed in 0u64..1000) {
        let cfg = config(&[
            &format!("harness.record.episodes={episodes}"),
            "harness.record.max_steps=2",
        ]);
        let ds = record_dataset(&cfg).unwrap();
        let split = split_episodes(&ds, frac, seed).unwrap();
        let train: BTreeSet<u32> = split.train.iter().copied().collect();
        let val: BTreeSet<u32> = split.validation.iter().copied().collect();
        prop_assert!(train.is_disjoint(&val));
        prop_assert!(!train.is_empty() && !val.is_empty());
        prop_assert_eq!(train.len() + val.len(), episodes);
    }
}

#[test]
fn open_world_dwa_episode_and_plots() {
    let cfg = config(&["harness.eval.episodes=2", "harness.eval.difficulties=['open']"]);
    let reports = run_eval(&cfg, Suite::DwaBaseline, None).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.status, EpisodeStatus::ReachedGoal);
        assert!(r.normalized_length >= 0.95, "{}", r.normalized_length);
        assert_eq!(r.trajectory.len(), r.steps + 1);
        assert_eq!(r.vetoes.len(), r.steps);
        assert!((r.normalized_length - r.path_length / r.straight_distance).abs() < 1e-12);
    }
    let dir = tempfile::tempdir().unwrap();
    let written = emit_plots(&reports, &cfg, dir.path()).unwrap();
    assert_eq!(written.len(), 3);
    let svg = std::fs::read_to_string(&written[0]).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains(r#"class="path""#));
    assert!(svg.contains(r#"class="start""#) && svg.contains(r#"class="goal""#));
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "suite,difficulty,episodes,success_rate,norm_len_success,norm_len_fail,mean_vetoes"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..4], ["dwa_baseline", "open", "2", "1"]);
    assert_eq!(row[5], "");

    let again = tempfile::tempdir().unwrap();
    emit_plots(&reports, &cfg, again.path()).unwrap();
    for p in &written {
        let q = again.path().join(p.file_name().unwrap());
        assert_eq!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap());
    }
    assert!(emit_plots(&[], &cfg, dir.path()).is_err());
}

#[test]
fn summary_counts_are_exact() {
    let cfg = config(&["harness.eval.episodes=3", "harness.eval.difficulties=['cluttered', 'open']"]);
    let reports = run_eval(&cfg, Suite::DwaBaseline, None).unwrap();
    let rows = summarize(&reports);
    assert_eq!(rows.len(), 2);
    for row in rows {
        let group: Vec<_> = reports.iter().filter(|r| r.difficulty == row.difficulty).collect();
        let wins = group.iter().filter(|r| r.succeeded()).count();
        assert_eq!(row.episodes, 3);
        assert_eq!(row.success_rate, wins as f64 / 3.0);
    }
    assert_eq!(reports[0].difficulty, Difficulty::Cluttered);
}

#[test]
fn model_suites_need_a_matching_checkpoint() {
    let cfg = config(&["harness.eval.episodes=1"]);
    assert!(run_eval(&cfg, Suite::Graspe, None).is_err());
}

#[test]
fn training_log_is_reproducible() {
    let cfg = config(&["harness.record.episodes=6", "harness.record.max_steps=30", "train.epochs=3"]);
    let ds = record_dataset(&cfg).unwrap();
    let sha = [7u8; 32];
    let a = run_training(&ds, &sha, &cfg).unwrap();
    let b = run_training(&ds, &sha, &cfg).unwrap();
    assert_eq!(log_csv(&a.log), log_csv(&b.log));
    assert!(log_csv(&a.log).starts_with("epoch,train_loss,val_loss,val_accuracy\n"));
    assert_eq!(a.checkpoint.to_json().unwrap(), b.checkpoint.to_json().unwrap());
    let val: BTreeSet<u32> = a.split.validation.iter().copied().collect();
    assert!(a.split.train.iter().all(|e| !val.contains(e)));

    let other = config(&["planner.horizon=8"]);
    assert!(run_training(&ds, &sha, &other).is_err());
}
