//! Recording, training, evaluation, plotting and scoring, as used by the
//! `trav` command line tool.

mod config;
mod dataset;
mod eval;
mod manifest;
mod plots;
mod record;
mod score;
mod training;

pub use config::{parse_override, Config, EvalConfig, HarnessConfig, RecordConfig};
pub use dataset::{ClassBalance, Dataset, DatasetHeader, Sample, SampleMeta, MAGIC, VERSION};
pub use eval::{
    check_model, eval_world_seed, run_episode, run_eval, summarize, EpisodeReport, Suite,
    SummaryRow,
};
pub use manifest::{digest_file, Manifest, OutputDigest};
pub use plots::{emit_plots, episode_svg, episode_svg_name, summary_csv, SUMMARY_HEADER};
pub use record::{episode_difficulty, record_dataset, record_episode, record_world_seed, sense};
pub use score::{read_cloud, read_image, score_file, score_line, ScoreRecord};
pub use training::{
    log_csv, run_shuffled_control, run_training, shuffle_labels, split_episodes, train_on,
    training_samples, EpisodeSplit, TrainingRun,
};
