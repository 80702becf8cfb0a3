//! `trav`: record datasets, train the fusion model, evaluate planners,
//! score sensor frames and render plots.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trav_core::error::Error;
use trav_core::fusion::Checkpoint;
use trav_core::harness::{
    emit_plots, log_csv, record_dataset, run_eval, run_shuffled_control, run_training,
    score_file, score_line, summarize, summary_csv, Config, Dataset, EpisodeReport, Manifest,
    Suite,
};

#[derive(Parser)]
#[command(name = "trav", version, about = "Reliability-aware traversability planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; unset keys keep their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set planner.dt=0.2`. Applied in order after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Drive exploration episodes and write a labelled dataset.
    Record {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, default_value = "out/record")]
        out: PathBuf,
    },
    /// Train the fusion model on a recorded dataset.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, short, default_value = "out/train")]
        out: PathBuf,
        /// Permute label vectors across samples before training.
        #[arg(long)]
        shuffle_labels: bool,
    },
    /// Run closed-loop episodes and write per-episode reports and a summary.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Needed by every suite except dwa_baseline.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// graspe, graspe_no_reliability or dwa_baseline; all three by default.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long, short, default_value = "out/eval")]
        out: PathBuf,
    },
    /// Print one JSON line of reliability scores per image or cloud file.
    Score {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Also write `scores.jsonl` and a manifest here.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render SVG trajectory overlays and the summary CSV from eval reports.
    Plot {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        reports: PathBuf,
        #[arg(long, short, default_value = "out/plot")]
        out: PathBuf,
    },
}

impl ConfigArgs {
    fn load(&self) -> Result<Config, Error> {
        Config::load(self.config.as_deref(), &self.sets)
    }
}

/// Failure exit status: usage problems are 1, everything else maps through
/// [`exit_code`].
enum Failure {
    Usage(String),
    Run(Error),
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

/// Names the file in I/O errors.
fn at(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| at(path)(e.into()))
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| at(path)(e.into()))
}

fn record(cfg: &Config, out: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    let dataset = record_dataset(cfg)?;
    let path = out.join("dataset.bin");
    dataset.save(&path)?;
    let b = dataset.balance();
    println!(
        "recorded {} samples: {} positive, {} negative ({:.3}), step negative fraction {:.3}",
        b.samples,
        b.positive,
        b.negative,
        b.negative_fraction(),
        b.step_negative_fraction
    );
    Manifest::new("record", cfg, &[], &[&path])?.write(out)?;
    Ok(())
}

fn train(cfg: &Config, dataset_path: &Path, out: &Path, shuffle: bool) -> Result<(), Error> {
    let (dataset, sha) = Dataset::load(dataset_path).map_err(at(dataset_path))?;
    std::fs::create_dir_all(out)?;
    let run = if shuffle {
        run_shuffled_control(&dataset, &sha, cfg)?
    } else {
        run_training(&dataset, &sha, cfg)?
    };
    let ck = out.join("checkpoint.json");
    let log = out.join("train_log.csv");
    run.checkpoint.save(&ck)?;
    write(&log, log_csv(&run.log))?;
    println!(
        "best epoch {}: validation loss {:.4}, per-step accuracy {:.4} ({} train / {} validation episodes)",
        run.checkpoint.best_epoch,
        run.validation.loss,
        run.validation.accuracy,
        run.split.train.len(),
        run.split.validation.len()
    );
    Manifest::new("train", cfg, &[dataset_path], &[&ck, &log])?.write(out)?;
    Ok(())
}

fn eval(cfg: &Config, checkpoint: Option<&Path>, suites: &[String], out: &Path) -> Result<(), Failure> {
    let suites: Vec<Suite> = if suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        suites
            .iter()
            .map(|s| s.parse().map_err(|e: Error| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let model = match checkpoint {
        Some(p) => Some(Checkpoint::load(p).map_err(at(p))?.model),
        None if suites.iter().any(|s| s.needs_model()) => {
            return Err(Failure::Usage("--checkpoint is required for the selected suites".into()))
        }
        None => None,
    };
    std::fs::create_dir_all(out)?;
    let mut reports = Vec::new();
    for suite in suites {
        reports.extend(run_eval(cfg, suite, model.as_ref())?);
    }
    let reports_path = out.join("reports.json");
    let summary_path = out.join("summary.csv");
    write(&reports_path, serde_json::to_string(&reports)? + "\n")?;
    let summary = summary_csv(&summarize(&reports));
    write(&summary_path, &summary)?;
    print!("{summary}");
    let inputs: Vec<&Path> = checkpoint.into_iter().collect();
    Manifest::new("eval", cfg, &inputs, &[&reports_path, &summary_path])?.write(out)?;
    Ok(())
}

fn score(cfg: &Config, files: &[PathBuf], out: Option<&Path>) -> Result<(), Error> {
    let mut lines = String::new();
    for f in files {
        let line = score_line(&score_file(f, cfg).map_err(at(f))?)?;
        println!("{line}");
        lines.push_str(&line);
        lines.push('\n');
    }
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        let path = out.join("scores.jsonl");
        write(&path, lines)?;
        let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
        Manifest::new("score", cfg, &inputs, &[&path])?.write(out)?;
    }
    Ok(())
}

fn plot(cfg: &Config, reports_path: &Path, out: &Path) -> Result<(), Error> {
    let reports: Vec<EpisodeReport> = serde_json::from_str(&read_to_string(reports_path)?)?;
    let written = emit_plots(&reports, cfg, out)?;
    println!("wrote {} files to {}", written.len(), out.display());
    let outputs: Vec<&Path> = written.iter().map(PathBuf::as_path).collect();
    Manifest::new("plot", cfg, &[reports_path], &outputs)?.write(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Record { cfg, out } => Ok(record(&cfg.load()?, &out)?),
        Command::Train { cfg, dataset, out, shuffle_labels } => {
            Ok(train(&cfg.load()?, &dataset, &out, shuffle_labels)?)
        }
        Command::Eval { cfg, checkpoint, suites, out } => {
            eval(&cfg.load()?, checkpoint.as_deref(), &suites, &out)
        }
        Command::Score { cfg, files, out } => Ok(score(&cfg.load()?, &files, out.as_deref())?),
        Command::Plot { cfg, reports, out } => Ok(plot(&cfg.load()?, &reports, &out)?),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Diverged { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
