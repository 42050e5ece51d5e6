use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use fest::commands::{self, GridSettings};
use fest::config::{merge_args, read_config};
use fest::eedm::LossConfig;
use fest::fusion::{CommandPredictor, DirPredictor, FusionMode, Predictor, ScaleSet};
use fest::metrics::{default_thresholds, MatchConfig, ScoreConfig};
use fest::sensitivity::{AsConfig, InjectionStyle};
use fest::synth::DatasetTemplate;
use fest::toymodel::{LossKind, TrainConfig};
use fest::{Error, Result};

/// Infrared small-target segmentation toolkit.
///
/// Every flag can also come from a `key = value` file passed with --config;
/// explicit flags win.
#[derive(Parser)]
#[command(name = "fest", version, args_override_self = true)]
struct Cli {
    /// Worker threads for dataset-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Plain-text key = value file with default flag values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset (gt/, prob/, img/ and manifest.json).
    Synth(SynthArgs),
    /// Multi-scale inference and fusion of probability maps.
    Fuse(FuseArgs),
    /// Dual-threshold post-processing of probability maps.
    Post(PostArgs),
    /// Evaluate binary predictions against ground truth.
    Eval(EvalArgs),
    /// Evaluate a list of (th1, th2) threshold pairs.
    Sweep(SweepArgs),
    /// Pd and Fa over a list of binarization thresholds.
    Roc(RocArgs),
    /// Train the toy logistic segmenter.
    TrainToy(TrainArgs),
    /// Train and evaluate the toy model over a (w, p) grid.
    Grid(GridArgs),
    /// Per-image loss between probability maps and ground truth.
    Loss(LossArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Image size as HxW.
    #[arg(long, default_value = "128x128", value_parser = parse_hw)]
    hw: (usize, usize),
    /// Gaussian noise on the probability maps.
    #[arg(long)]
    noise: Option<f64>,
    /// Inclusive target count range as MIN-MAX.
    #[arg(long, value_parser = parse_range)]
    targets: Option<(usize, usize)>,
    /// Inclusive clutter count range as MIN-MAX.
    #[arg(long, value_parser = parse_range)]
    clutter: Option<(usize, usize)>,
}

#[derive(Args)]
struct MatchArgs {
    /// Centroid distance (pixels) under which a target counts as detected.
    #[arg(long, default_value_t = 3.0)]
    dmax: f64,
    /// Connectivity used for components: 4 or 8.
    #[arg(long, default_value = "8")]
    connectivity: fest::ccl::Connectivity,
}

impl MatchArgs {
    fn build(&self) -> Result<MatchConfig> {
        let cfg = MatchConfig {
            d_max: self.dmax,
            connectivity: self.connectivity,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    fa_limit: f64,
}

impl ScoreArgs {
    fn build(&self) -> Result<ScoreConfig> {
        let cfg = ScoreConfig {
            alpha: self.alpha,
            fa_limit: self.fa_limit,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
#[group(id = "fuse_in", required = true, multiple = false)]
struct FuseInput {
    /// Single input image.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Directory of input images; fused maps go to --out as a directory.
    #[arg(long)]
    image_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    input: FuseInput,
    /// Precomputed predictions laid out as DIR/<image id>/<scale>.pgm.
    #[arg(
        long,
        conflicts_with = "pred_cmd",
        required_unless_present = "pred_cmd"
    )]
    pred_dir: Option<PathBuf>,
    /// External predictor run as `CMD in.pgm out.pgm` per scale.
    #[arg(long)]
    pred_cmd: Option<String>,
    #[arg(long, default_value = "768,896,1024")]
    scales: ScaleSet,
    #[arg(long, default_value = "mean")]
    mode: FusionMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PostArgs {
    #[arg(
        long,
        conflicts_with = "prob_dir",
        required_unless_present = "prob_dir"
    )]
    prob: Option<PathBuf>,
    /// Directory of probability maps; masks go to --out as a directory.
    #[arg(long)]
    prob_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    th1: f64,
    #[arg(long, default_value_t = 0.1)]
    th2: f64,
    /// Shape stamped at weak-target centroids: single or cross.
    #[arg(long, default_value = "single")]
    injection: InjectionStyle,
    #[arg(long)]
    out: PathBuf,
    /// CSV of strong and weak targets.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred_dir: PathBuf,
    #[arg(long)]
    gt_dir: PathBuf,
    #[command(flatten)]
    matching: MatchArgs,
    #[command(flatten)]
    score: ScoreArgs,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    prob_dir: PathBuf,
    #[arg(long)]
    gt_dir: PathBuf,
    /// Comma-separated high thresholds.
    #[arg(long, default_value = "0.5,0.45,0.4,0.35,0.3", value_delimiter = ',')]
    th1: Vec<f64>,
    /// Comma-separated low thresholds; `none` means plain binarization.
    #[arg(long, default_value = "none", value_delimiter = ',', value_parser = parse_th2)]
    th2: Vec<Option<f64>>,
    #[arg(long, default_value = "single")]
    injection: InjectionStyle,
    #[command(flatten)]
    matching: MatchArgs,
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RocArgs {
    #[arg(long)]
    prob_dir: PathBuf,
    #[arg(long)]
    gt_dir: PathBuf,
    /// Comma-separated, strictly descending (default: 99 evenly spaced).
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    #[command(flatten)]
    matching: MatchArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Synthetic dataset directory holding img/ and gt/.
    #[arg(long)]
    data: PathBuf,
    /// bce, ee, dm or eedm.
    #[arg(long, default_value = "eedm")]
    loss: LossKind,
    #[arg(long, default_value_t = 4.0)]
    w: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long)]
    out: PathBuf,
    /// CSV of the training loss per epoch.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "1,3,4,5,7", value_delimiter = ',')]
    w: Vec<f64>,
    #[arg(long, default_value = "0.1,0.3,0.5,0.7,0.9", value_delimiter = ',')]
    p: Vec<f64>,
    #[command(flatten)]
    train: TrainOpts,
    /// Fraction of images (in id order) used for training.
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// Binarization threshold for toy predictions.
    #[arg(long, default_value_t = 0.5)]
    th: f64,
    #[command(flatten)]
    matching: MatchArgs,
    #[command(flatten)]
    score: ScoreArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long)]
    prob_dir: PathBuf,
    #[arg(long)]
    gt_dir: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    w: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_hw(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s.split_once('x').ok_or("expected HxW")?;
    Ok((
        h.trim().parse().map_err(|_| "bad height")?,
        w.trim().parse().map_err(|_| "bad width")?,
    ))
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or("expected MIN-MAX")?;
    Ok((
        a.trim().parse().map_err(|_| "bad minimum")?,
        b.trim().parse().map_err(|_| "bad maximum")?,
    ))
}

fn parse_th2(s: &str) -> std::result::Result<Option<f64>, String> {
    match s.trim() {
        "none" | "" => Ok(None),
        v => v
            .parse()
            .map(Some)
            .map_err(|_| format!("bad threshold {v:?}")),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            fest::error::Error::Io {
                path: p.to_path_buf(),
                source: e,
            }
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Synth(a) => {
            let mut t = DatasetTemplate::default().with_size(a.hw.0, a.hw.1);
            if let Some(n) = a.noise {
                t.noise_sigma = n;
            }
            if let Some(r) = a.targets {
                t.targets = r;
            }
            if let Some(r) = a.clutter {
                t.clutter = r;
            }
            commands::cmd_synth(&a.out_dir, &t, a.n, a.seed)
        }
        Cmd::Fuse(a) => {
            let predictor: Box<dyn Predictor> = match (&a.pred_dir, &a.pred_cmd) {
                (Some(d), _) => Box::new(DirPredictor::new(d)),
                (None, Some(c)) => Box::new(CommandPredictor::parse(c)?),
                (None, None) => unreachable!("clap requires one predictor"),
            };
            match (&a.input.image, &a.input.image_dir) {
                (Some(img), _) => {
                    commands::cmd_fuse(img, &a.out, &a.scales, predictor.as_ref(), a.mode)
                        .map(|_| ())
                }
                (None, Some(dir)) => {
                    commands::cmd_fuse_dir(dir, &a.out, &a.scales, predictor.as_ref(), a.mode)
                        .map(|_| ())
                }
                (None, None) => unreachable!("clap requires one input"),
            }
        }
        Cmd::Post(a) => {
            let cfg = AsConfig::new(a.th1, a.th2)?.with_injection(a.injection);
            let rows = match (&a.prob, &a.prob_dir) {
                (Some(p), _) => vec![(
                    fest::fusion::image_id_of(p),
                    commands::cmd_post(p, &a.out, &cfg)?,
                )],
                (None, Some(d)) => commands::cmd_post_dir(d, &a.out, &cfg)?,
                (None, None) => unreachable!("clap requires one input"),
            };
            match &a.report {
                Some(r) => commands::write_target_report(output(Some(r))?, &rows),
                None => Ok(()),
            }
        }
        Cmd::Eval(a) => {
            let score = a.score.build()?;
            let (ids, report) =
                commands::cmd_eval(&a.pred_dir, &a.gt_dir, &a.matching.build()?, &score)?;
            commands::write_eval_csv(output(a.csv.as_deref())?, &ids, &report, &score)
        }
        Cmd::Sweep(a) => {
            let rows = commands::cmd_sweep(
                &a.prob_dir,
                &a.gt_dir,
                &a.th1,
                &a.th2,
                a.injection,
                &a.matching.build()?,
                &a.score.build()?,
            )?;
            commands::write_sweep_csv(output(a.csv.as_deref())?, &rows)
        }
        Cmd::Roc(a) => {
            let th = a.thresholds.unwrap_or_else(|| default_thresholds(99));
            let pts = commands::cmd_roc(&a.prob_dir, &a.gt_dir, &th, &a.matching.build()?)?;
            commands::write_roc_csv(output(a.csv.as_deref())?, &pts)
        }
        Cmd::TrainToy(a) => {
            let cfg = TrainConfig {
                loss: a.loss,
                loss_cfg: LossConfig::new(a.w, a.p)?,
                learning_rate: a.train.lr,
                epochs: a.train.epochs,
                seed: a.train.seed,
            };
            let model = commands::cmd_train_toy(&a.data, &cfg, &a.out)?;
            match &a.log {
                Some(l) => commands::write_loss_log(output(Some(l))?, &model),
                None => Ok(()),
            }
        }
        Cmd::Grid(a) => {
            let settings = GridSettings {
                ws: a.w,
                ps: a.p,
                train: TrainConfig {
                    learning_rate: a.train.lr,
                    epochs: a.train.epochs,
                    seed: a.train.seed,
                    ..TrainConfig::default()
                },
                train_fraction: a.train_fraction,
                threshold: a.th,
                match_cfg: a.matching.build()?,
                score_cfg: a.score.build()?,
            };
            let cells = commands::cmd_grid(&a.data, &settings)?;
            commands::write_grid_csv(output(a.csv.as_deref())?, &cells)
        }
        Cmd::Loss(a) => {
            let rows = commands::cmd_loss(&a.prob_dir, &a.gt_dir, &LossConfig::new(a.w, a.p)?)?;
            let mut w = csv::Writer::from_writer(output(a.csv.as_deref())?);
            w.write_record(["image", "loss"])?;
            for (id, l) in rows {
                w.write_record([id, format!("{l:.6}")])?;
            }
            w.flush().map_err(csv::Error::from)?;
            Ok(())
        }
    }
}

/// Value of `--config`, looked up before full parsing so that required flags
/// may come from the file.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config_path(&args) {
        match read_config(&path).and_then(|entries| merge_args(&Cli::command(), args, &entries)) {
            Ok(a) => args = a,
            Err(e) => return fail(&e),
        }
    }
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error: {}: {msg}", e.kind());
    ExitCode::FAILURE
}
