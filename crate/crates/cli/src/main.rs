//! Command-line front end: run the pipeline over a frame directory, benchmark
//! it, export synthetic data, and train the gesture classifier.

mod labelled;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thermal_hands::classifier::{evaluate, train, Model, ModelSpec, TrainConfig};
use thermal_hands::imaging::Frame;
use thermal_hands::pipeline::{
    bench_segmentation, bench_throughput, run, BenchReport, DirSource, PipelineConfig,
};
use thermal_hands::synthgen::{
    segmentation_corpus, shape_dataset, synthetic_sequence, wide_arm_corpus, write_corpus, write_sequence,
    SequenceParams,
};

#[derive(Parser)]
#[command(name = "thermal-hands", version, about = "Hand detection and gesture classification for thermal frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a directory of 16-bit frames and write one JSON line per hand.
    Run(RunArgs),
    /// Time each stage and report success rates on synthetic data.
    Bench(BenchArgs),
    /// Export synthetic data or the default configuration.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Train the gesture classifier and save a checkpoint.
    Train(TrainArgs),
}

/// Overrides applied on top of the configuration file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// TOML configuration file; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cells per axis of the region-detection grid.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Boxes overlapping by more than this are duplicates.
    #[arg(long)]
    iou: Option<f64>,
    #[arg(long)]
    f_pace: Option<f64>,
    #[arg(long)]
    f1: Option<f64>,
    #[arg(long)]
    f2: Option<f64>,
    #[arg(long)]
    f3: Option<f64>,
    #[arg(long)]
    f4: Option<f64>,
    #[arg(long)]
    i_max: Option<usize>,
    /// Contour points used while growing the palm bubble.
    #[arg(long)]
    h_part_size: Option<usize>,
    #[arg(long)]
    max_hands: Option<usize>,
    /// Classifier checkpoint; detections are unlabelled without one.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                PipelineConfig::load(path).with_context(|| format!("reading config {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        let r = &mut cfg.region;
        set(&mut r.grid_n, self.grid);
        set(&mut r.k_min, self.k_min);
        set(&mut r.k_max, self.k_max);
        set(&mut r.iou_threshold, self.iou);
        let s = &mut cfg.segmentation;
        set(&mut s.f_pace, self.f_pace);
        set(&mut s.f1, self.f1);
        set(&mut s.f2, self.f2);
        set(&mut s.f3, self.f3);
        set(&mut s.f4, self.f4);
        set(&mut s.i_max, self.i_max);
        set(&mut s.h_part_size, self.h_part_size);
        set(&mut cfg.max_hands, self.max_hands);
        if self.checkpoint.is_some() {
            cfg.classifier = self.checkpoint.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args)]
struct RunArgs {
    /// Directory of PNG or PGM frames, processed in file-name order.
    #[arg(long, short)]
    input: PathBuf,
    /// Detection records; standard output when omitted or `-`.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write an annotated mask per frame into this directory.
    #[arg(long)]
    annotate: Option<PathBuf>,
    /// Keep per-stage wall times in the records (records are then no longer
    /// reproducible byte for byte).
    #[arg(long)]
    emit_timings: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Synthetic hands for the bubble growth and search columns.
    #[arg(long, default_value_t = 500)]
    hands: usize,
    /// Single-hand frames timed end to end, after the background frames.
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Hand masks in frame coordinates with a ground-truth sidecar.
    Corpus {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Forearms wider than the longest accepted wrist chord.
        #[arg(long)]
        wide_arm: bool,
    },
    /// Raw 16-bit frames with hand boxes in `truth.jsonl`.
    Sequence {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        /// Hand-free frames at the start.
        #[arg(long, default_value_t = 10)]
        background_frames: usize,
        #[arg(long, default_value_t = 1)]
        min_hands: usize,
        #[arg(long, default_value_t = 2)]
        max_hands: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the default pipeline configuration as TOML.
    Config,
}

#[derive(Args)]
struct TrainArgs {
    /// Checkpoint to write.
    #[arg(long, short)]
    output: PathBuf,
    /// One subdirectory per class of binary mask images, classes in name
    /// order. Without it the four-class synthetic shape task is used.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Samples per class for the synthetic shape task.
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    /// Fraction of samples held out for validation.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Random rotation range in degrees; 0 disables augmentation.
    #[arg(long, default_value_t = 360.0)]
    rotation: f64,
    /// Stop once held-out accuracy reaches this value.
    #[arg(long)]
    target_accuracy: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = real_main(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Gen(cmd) => cmd_gen(cmd),
        Command::Train(args) => cmd_train(args),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) if p == Path::new("-") => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
    })
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    cfg.output.emit_timings |= args.emit_timings;
    if args.annotate.is_some() {
        cfg.output.annotate_dir = args.annotate;
    }
    let mut source = DirSource::open(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let out = open_output(args.output.as_deref())?;
    let summary = run(cfg, &mut source, out)?;
    log::info!(
        "processed {} frames ({} skipped), {} detections",
        summary.frames,
        summary.failed,
        summary.detections
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let cfg = args.config.load()?;
    if args.hands == 0 {
        bail!("--hands must be at least 1");
    }
    let corpus = segmentation_corpus(args.hands, args.seed);
    let segmentation = bench_segmentation(&corpus, &cfg.segmentation)?;
    let throughput = if args.frames > 0 {
        let seq = synthetic_sequence(&SequenceParams {
            frames: cfg.background_frames + args.frames,
            background_frames: cfg.background_frames,
            hands: (1, 1),
            seed: args.seed,
            ..Default::default()
        })?;
        let frames: Vec<Frame> = seq.into_iter().map(|f| f.frame).collect();
        let (init, timed) = frames.split_at(cfg.background_frames);
        Some(bench_throughput(&cfg, init, timed)?)
    } else {
        None
    };
    let report = BenchReport { segmentation, throughput };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    Ok(())
}

fn cmd_gen(cmd: GenCommand) -> Result<()> {
    match cmd {
        GenCommand::Corpus { output, count, seed, wide_arm } => {
            let corpus = if wide_arm { wide_arm_corpus(count, seed) } else { segmentation_corpus(count, seed) };
            write_corpus(&output, &corpus)?;
            log::info!("wrote {count} masks to {}", output.display());
        }
        GenCommand::Sequence { output, frames, background_frames, min_hands, max_hands, seed } => {
            let params = SequenceParams {
                frames,
                background_frames,
                hands: (min_hands, max_hands),
                seed,
                ..Default::default()
            };
            let seq = synthetic_sequence(&params)?;
            write_sequence(&output, &seq)?;
            let hands: usize = seq.iter().map(|f| f.hands.len()).sum();
            log::info!("wrote {frames} frames with {hands} hands to {}", output.display());
        }
        GenCommand::Config => print!("{}", PipelineConfig::default().to_toml()?),
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    if !(0.0..1.0).contains(&args.holdout) {
        bail!("--holdout must be in [0, 1)");
    }
    let (samples, classes) = match &args.data {
        Some(dir) => labelled::load(dir)?,
        None => (shape_dataset(args.per_class, args.seed), 4),
    };
    let (train_set, held_out) = labelled::split(samples, args.holdout, args.seed);
    log::info!("{} training and {} held-out samples, {classes} classes", train_set.len(), held_out.len());
    let cfg = TrainConfig {
        batch_size: args.batch_size,
        epochs: args.epochs,
        rotation_degrees: args.rotation,
        seed: args.seed,
        target_accuracy: args.target_accuracy,
        ..Default::default()
    };
    let mut model = Model::<f32>::new(ModelSpec::lenet(classes), args.seed)?;
    let report = train(&mut model, &train_set, &held_out, &cfg)?;
    model.save(&args.output).with_context(|| format!("writing {}", args.output.display()))?;
    if !held_out.is_empty() {
        println!("held-out accuracy {:.4}", evaluate(&model, &held_out)?);
    }
    println!("{} epochs in {:.1} s, checkpoint {}", report.epochs.len(), report.seconds(), args.output.display());
    Ok(())
}
