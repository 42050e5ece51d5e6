//! Dataset-level operations behind each `fest` subcommand.
//!
//! Everything here is a composition of the other modules; the binary only
//! parses flags and picks output files. Tables are written as RFC-4180 CSV
//! with IoU, Pd and score in percent and Fa in parts per million, all with two
//! decimals.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::eedm::LossConfig;
use crate::error::{Error, Result};
use crate::fusion::{image_id_of, run_multiscale, FusionMode, Predictor, ScaleSet};
use crate::metrics::{
    evaluate, roc_sweep, EvalReport, ImageTally, MatchConfig, RocPoint, ScoreConfig,
};
use crate::raster::{BinaryMask, GrayImage, ProbMask};
use crate::sensitivity::{apply_as, binarize, AsConfig, AsOutput, InjectionStyle};
use crate::synth::{gen_dataset, write_dataset, DatasetTemplate};
use crate::toymodel::{predict_toy, train, LossKind, ToyModel, TrainConfig, TrainingSet};

pub fn pct(ratio: f64) -> String {
    format!("{:.2}", ratio * 100.0)
}

pub fn ppm(ratio: f64) -> String {
    format!("{:.2}", ratio * 1e6)
}

fn opt(v: Option<f64>, render: fn(f64) -> String) -> String {
    v.map(render).unwrap_or_default()
}

/// Sorted `.pgm` files in a directory, keyed by file stem.
pub fn list_pgm(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "pgm") {
            out.push((image_id_of(&path), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Pairs files across two directories by stem. Both sides must hold exactly
/// the same set of ids.
pub fn pair_dirs(left: &Path, right: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let a = list_pgm(left)?;
    let b = list_pgm(right)?;
    if a.is_empty() {
        return Err(Error::Empty("no .pgm files in input directory"));
    }
    let ids_a: Vec<&String> = a.iter().map(|(id, _)| id).collect();
    let ids_b: Vec<&String> = b.iter().map(|(id, _)| id).collect();
    if ids_a != ids_b {
        let missing = ids_a
            .iter()
            .find(|id| !ids_b.contains(id))
            .or_else(|| ids_b.iter().find(|id| !ids_a.contains(id)))
            .map(|s| s.as_str())
            .unwrap_or("?");
        return Err(Error::InvalidConfig(format!(
            "{} and {} do not hold the same images (first unmatched: {missing})",
            left.display(),
            right.display()
        )));
    }
    Ok(a.into_iter()
        .zip(b)
        .map(|((id, pa), (_, pb))| (id, pa, pb))
        .collect())
}

/// Inputs matched by id with their ground truth.
#[derive(Debug, Clone)]
pub struct Paired<T> {
    pub ids: Vec<String>,
    pub inputs: Vec<T>,
    pub gts: Vec<BinaryMask>,
}

fn load_paired<T: Send>(
    dir: &Path,
    gt_dir: &Path,
    read: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Paired<T>> {
    let pairs = pair_dirs(dir, gt_dir)?;
    let loaded = pairs
        .par_iter()
        .map(|(_, a, b)| Ok((read(a)?, BinaryMask::read(b)?)))
        .collect::<Result<Vec<_>>>()?;
    let (inputs, gts) = loaded.into_iter().unzip();
    Ok(Paired {
        ids: pairs.into_iter().map(|(id, _, _)| id).collect(),
        inputs,
        gts,
    })
}

pub fn load_probs(prob_dir: &Path, gt_dir: &Path) -> Result<Paired<ProbMask>> {
    load_paired(prob_dir, gt_dir, ProbMask::read)
}

pub fn load_preds(pred_dir: &Path, gt_dir: &Path) -> Result<Paired<BinaryMask>> {
    load_paired(pred_dir, gt_dir, BinaryMask::read)
}

pub fn load_images(img_dir: &Path, gt_dir: &Path) -> Result<Paired<GrayImage>> {
    load_paired(img_dir, gt_dir, GrayImage::read)
}

/// A synthetic dataset directory: `img/` and `gt/` paired by id.
pub fn load_synth_images(data: &Path) -> Result<Paired<GrayImage>> {
    load_images(&data.join("img"), &data.join("gt"))
}

// synth

pub fn cmd_synth(out_dir: &Path, template: &DatasetTemplate, n: usize, seed: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let cases = gen_dataset(template, n, seed)?;
    write_dataset(out_dir, &cases)
}

// fuse

pub fn cmd_fuse(
    image: &Path,
    out: &Path,
    scales: &ScaleSet,
    predictor: &dyn Predictor,
    mode: FusionMode,
) -> Result<ProbMask> {
    let img = GrayImage::read(image)?;
    let fused = run_multiscale(&image_id_of(image), &img, scales, predictor, mode)?;
    fused.write(out)?;
    Ok(fused)
}

/// Fuses every image of `image_dir` into `out_dir/<id>.pgm`.
pub fn cmd_fuse_dir(
    image_dir: &Path,
    out_dir: &Path,
    scales: &ScaleSet,
    predictor: &dyn Predictor,
    mode: FusionMode,
) -> Result<usize> {
    let images = list_pgm(image_dir)?;
    if images.is_empty() {
        return Err(Error::Empty("no .pgm files in input directory"));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    images.par_iter().try_for_each(|(id, path)| {
        cmd_fuse(
            path,
            &out_dir.join(format!("{id}.pgm")),
            scales,
            predictor,
            mode,
        )
        .map(|_| ())
    })?;
    Ok(images.len())
}

// post

pub fn write_target_report<W: Write>(out: W, rows: &[(String, AsOutput)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "image",
        "class",
        "pixel_count",
        "centroid_row",
        "centroid_col",
        "peak",
    ])?;
    for (id, result) in rows {
        for t in &result.targets {
            w.write_record([
                id.clone(),
                t.class.as_str().to_string(),
                t.pixel_count.to_string(),
                format!("{:.3}", t.centroid_row),
                format!("{:.3}", t.centroid_col),
                format!("{:.4}", t.peak),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn cmd_post(prob: &Path, out: &Path, cfg: &AsConfig) -> Result<AsOutput> {
    let p = ProbMask::read(prob)?;
    let result = apply_as(&p, cfg)?;
    result.mask.write(out)?;
    Ok(result)
}

pub fn cmd_post_dir(
    prob_dir: &Path,
    out_dir: &Path,
    cfg: &AsConfig,
) -> Result<Vec<(String, AsOutput)>> {
    cfg.validate()?;
    let probs = list_pgm(prob_dir)?;
    if probs.is_empty() {
        return Err(Error::Empty("no .pgm files in input directory"));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    probs
        .par_iter()
        .map(|(id, path)| {
            Ok((
                id.clone(),
                cmd_post(path, &out_dir.join(format!("{id}.pgm")), cfg)?,
            ))
        })
        .collect()
}

// eval

pub fn cmd_eval(
    pred_dir: &Path,
    gt_dir: &Path,
    match_cfg: &MatchConfig,
    score_cfg: &ScoreConfig,
) -> Result<(Vec<String>, EvalReport)> {
    let data = load_preds(pred_dir, gt_dir)?;
    let report = evaluate(&data.inputs, &data.gts, match_cfg, score_cfg)?;
    Ok((data.ids, report))
}

fn tally_row(id: &str, t: &ImageTally, score_cfg: &ScoreConfig) -> [String; 6] {
    let (iou, pd, fa) = (t.iou(), t.pd(), t.fa());
    let score = iou
        .zip(pd)
        .and_then(|(i, p)| crate::metrics::score(i, p, fa, score_cfg));
    [
        id.to_string(),
        opt(iou, pct),
        opt(pd, pct),
        ppm(fa),
        opt(score, pct),
        (fa < score_cfg.fa_limit).to_string(),
    ]
}

/// Dataset row first, then one row per image. Per-image IoU and Pd are empty
/// when undefined (no foreground, no targets).
pub fn write_eval_csv<W: Write>(
    out: W,
    ids: &[String],
    report: &EvalReport,
    score_cfg: &ScoreConfig,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["image", "iou", "pd", "fa", "score", "valid"])?;
    w.write_record([
        "dataset".to_string(),
        pct(report.iou),
        pct(report.pd),
        ppm(report.fa),
        opt(report.score, pct),
        report.valid.to_string(),
    ])?;
    for (id, t) in ids.iter().zip(&report.per_image) {
        w.write_record(tally_row(id, t, score_cfg))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

// sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub th1: f64,
    pub th2: Option<f64>,
    pub report: EvalReport,
}

/// Evaluates every `(th1, th2)` combination. `None` for `th2` means plain
/// binarization at `th1`.
pub fn sweep(
    probs: &[ProbMask],
    gts: &[BinaryMask],
    th1s: &[f64],
    th2s: &[Option<f64>],
    injection: InjectionStyle,
    match_cfg: &MatchConfig,
    score_cfg: &ScoreConfig,
) -> Result<Vec<SweepRow>> {
    if probs.is_empty() {
        return Err(Error::Empty("no images to evaluate"));
    }
    if th1s.is_empty() {
        return Err(Error::InvalidConfig("th1 list is empty".into()));
    }
    let th2s: &[Option<f64>] = if th2s.is_empty() { &[None] } else { th2s };
    let mut combos = Vec::new();
    for &th1 in th1s {
        for &th2 in th2s {
            match th2 {
                Some(t2) => AsConfig::new(th1, t2)?,
                None => AsConfig::new(th1, th1 / 2.0)?,
            };
            combos.push((th1, th2));
        }
    }
    combos
        .into_iter()
        .map(|(th1, th2)| {
            let preds = probs
                .par_iter()
                .map(|p| match th2 {
                    Some(t2) => {
                        Ok(apply_as(p, &AsConfig::new(th1, t2)?.with_injection(injection))?.mask)
                    }
                    None => binarize(p, th1),
                })
                .collect::<Result<Vec<_>>>()?;
            let report = evaluate(&preds, gts, match_cfg, score_cfg)?;
            Ok(SweepRow { th1, th2, report })
        })
        .collect()
}

pub fn cmd_sweep(
    prob_dir: &Path,
    gt_dir: &Path,
    th1s: &[f64],
    th2s: &[Option<f64>],
    injection: InjectionStyle,
    match_cfg: &MatchConfig,
    score_cfg: &ScoreConfig,
) -> Result<Vec<SweepRow>> {
    let data = load_probs(prob_dir, gt_dir)?;
    sweep(
        &data.inputs,
        &data.gts,
        th1s,
        th2s,
        injection,
        match_cfg,
        score_cfg,
    )
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["th1", "th2", "iou", "pd", "fa", "score", "valid"])?;
    for r in rows {
        w.write_record([
            r.th1.to_string(),
            r.th2.map(|t| t.to_string()).unwrap_or_default(),
            pct(r.report.iou),
            pct(r.report.pd),
            ppm(r.report.fa),
            opt(r.report.score, pct),
            r.report.valid.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

// roc

pub fn cmd_roc(
    prob_dir: &Path,
    gt_dir: &Path,
    thresholds: &[f64],
    cfg: &MatchConfig,
) -> Result<Vec<RocPoint>> {
    let data = load_probs(prob_dir, gt_dir)?;
    roc_sweep(&data.inputs, &data.gts, thresholds, cfg)
}

pub fn write_roc_csv<W: Write>(out: W, points: &[RocPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "fa", "pd"])?;
    for p in points {
        w.write_record([p.threshold.to_string(), ppm(p.fa), pct(p.pd)])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

// train-toy and grid

pub fn cmd_train_toy(data: &Path, cfg: &TrainConfig, out: &Path) -> Result<ToyModel> {
    cfg.validate()?;
    let d = load_synth_images(data)?;
    let model = train(&TrainingSet::new(&d.inputs, &d.gts)?, cfg)?;
    model.save(out)?;
    Ok(model)
}

pub fn write_loss_log<W: Write>(out: W, model: &ToyModel) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "loss"])?;
    for (i, l) in model.log.iter().enumerate() {
        w.write_record([i.to_string(), format!("{l:?}")])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Binarizes toy-model predictions at `threshold` and evaluates them.
pub fn eval_toy(
    model: &ToyModel,
    images: &[GrayImage],
    gts: &[BinaryMask],
    threshold: f64,
    match_cfg: &MatchConfig,
    score_cfg: &ScoreConfig,
) -> Result<EvalReport> {
    let preds = images
        .par_iter()
        .map(|img| binarize(&predict_toy(model, img)?, threshold))
        .collect::<Result<Vec<_>>>()?;
    evaluate(&preds, gts, match_cfg, score_cfg)
}

#[derive(Debug, Clone)]
pub struct GridSettings {
    pub ws: Vec<f64>,
    pub ps: Vec<f64>,
    pub train: TrainConfig,
    /// Fraction of the dataset (in id order) used for training; the rest is
    /// held out for evaluation.
    pub train_fraction: f64,
    pub threshold: f64,
    pub match_cfg: MatchConfig,
    pub score_cfg: ScoreConfig,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            ws: vec![1.0, 3.0, 4.0, 5.0, 7.0],
            ps: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            train: TrainConfig::default(),
            train_fraction: 0.5,
            threshold: 0.5,
            match_cfg: MatchConfig::default(),
            score_cfg: ScoreConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done { report: EvalReport, final_loss: f64 },
    Diverged { epoch: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub w: f64,
    pub p: f64,
    pub outcome: CellOutcome,
}

fn split_point(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must be in (0, 1), got {fraction}"
        )));
    }
    let k = ((n as f64) * fraction).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!(
            "{n} images cannot be split into train and held-out parts"
        )));
    }
    Ok(k)
}

/// Trains and evaluates one toy model per `(w, p)` pair.
pub fn grid(
    images: &[GrayImage],
    gts: &[BinaryMask],
    settings: &GridSettings,
) -> Result<Vec<GridCell>> {
    if settings.ws.is_empty() || settings.ps.is_empty() {
        return Err(Error::InvalidConfig(
            "w and p lists must be nonempty".into(),
        ));
    }
    let mut cells = Vec::new();
    for &w in &settings.ws {
        for &p in &settings.ps {
            LossConfig::new(w, p)?;
            cells.push((w, p));
        }
    }
    settings.score_cfg.validate()?;
    settings.match_cfg.validate()?;
    let k = split_point(images.len(), settings.train_fraction)?;
    let set = TrainingSet::new(&images[..k], &gts[..k])?;
    let (test_img, test_gt) = (&images[k..], &gts[k..]);
    cells
        .into_par_iter()
        .map(|(w, p)| {
            let cfg = TrainConfig {
                loss: LossKind::Eedm,
                loss_cfg: LossConfig {
                    edge_weight: w,
                    mining_ratio: p,
                    ..settings.train.loss_cfg
                },
                ..settings.train
            };
            let outcome = match train(&set, &cfg) {
                Ok(model) => CellOutcome::Done {
                    final_loss: model.final_loss().unwrap_or(f64::NAN),
                    report: eval_toy(
                        &model,
                        test_img,
                        test_gt,
                        settings.threshold,
                        &settings.match_cfg,
                        &settings.score_cfg,
                    )?,
                },
                Err(Error::Diverged { epoch, .. }) => CellOutcome::Diverged { epoch },
                Err(e) => return Err(e),
            };
            Ok(GridCell { w, p, outcome })
        })
        .collect()
}

pub fn cmd_grid(data: &Path, settings: &GridSettings) -> Result<Vec<GridCell>> {
    let d = load_synth_images(data)?;
    grid(&d.inputs, &d.gts, settings)
}

pub fn write_grid_csv<W: Write>(out: W, cells: &[GridCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "w",
        "p",
        "status",
        "iou",
        "pd",
        "fa",
        "score",
        "valid",
        "final_loss",
    ])?;
    for c in cells {
        let head = [c.w.to_string(), c.p.to_string()];
        let rest = match &c.outcome {
            CellOutcome::Done { report, final_loss } => [
                "ok".to_string(),
                pct(report.iou),
                pct(report.pd),
                ppm(report.fa),
                opt(report.score, pct),
                report.valid.to_string(),
                format!("{final_loss:.6}"),
            ],
            CellOutcome::Diverged { epoch } => [
                format!("diverged at epoch {epoch}"),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".to_string(),
                String::new(),
            ],
        };
        w.write_record(head.iter().chain(rest.iter()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

// loss

/// Mean EEDM loss over mask pairs matched by id.
pub fn cmd_loss(prob_dir: &Path, gt_dir: &Path, cfg: &LossConfig) -> Result<Vec<(String, f64)>> {
    cfg.validate()?;
    let data = load_probs(prob_dir, gt_dir)?;
    data.ids
        .into_iter()
        .zip(data.inputs.iter().zip(&data.gts))
        .map(|(id, (p, g))| Ok((id, crate::eedm::eedm_loss(g, p, cfg)?.loss)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::case_id;

    fn tiny_dataset(dir: &Path, n: usize) -> DatasetTemplate {
        let t = DatasetTemplate::default().with_size(32, 32);
        cmd_synth(dir, &t, n, 5).unwrap();
        t
    }

    #[test]
    fn rendering_units() {
        assert_eq!(pct(0.72255), "72.25");
        assert_eq!(pct(0.5), "50.00");
        assert_eq!(ppm(20.57e-6), "20.57");
    }

    #[test]
    fn pairing_requires_identical_ids() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path(), 3);
        let pairs = pair_dirs(&dir.path().join("prob"), &dir.path().join("gt")).unwrap();
        assert_eq!(
            pairs.iter().map(|p| p.0.clone()).collect::<Vec<_>>(),
            (0..3).map(case_id).collect::<Vec<_>>()
        );
        fs::remove_file(dir.path().join("gt").join("case_0001.pgm")).unwrap();
        let err = pair_dirs(&dir.path().join("prob"), &dir.path().join("gt")).unwrap_err();
        assert!(err.to_string().contains("case_0001"));
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            pair_dirs(empty.path(), empty.path()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn sweep_rows_and_invalid_scores() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path(), 4);
        let rows = cmd_sweep(
            &dir.path().join("prob"),
            &dir.path().join("gt"),
            &[0.5, 0.3],
            &[None, Some(0.1)],
            InjectionStyle::SinglePixel,
            &MatchConfig::default(),
            &ScoreConfig {
                alpha: 0.5,
                fa_limit: 1e-9,
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.report.valid, r.report.fa < 1e-9);
            assert_eq!(r.report.score.is_some(), r.report.valid);
        }
        assert!(rows.iter().any(|r| !r.report.valid));
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0.5,,"));
        for (line, r) in text.lines().skip(1).zip(&rows) {
            if !r.report.valid {
                assert!(line.ends_with(",,false"), "{line}");
            }
        }
    }

    #[test]
    fn sweep_rejects_th2_above_th1() {
        let p = vec![ProbMask::constant(4, 4, 0.0).unwrap()];
        let g = vec![BinaryMask::zeros(4, 4).unwrap()];
        let err = sweep(
            &p,
            &g,
            &[0.3],
            &[Some(0.4)],
            InjectionStyle::SinglePixel,
            &MatchConfig::default(),
            &ScoreConfig::default(),
        );
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn roc_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path(), 2);
        let pts = cmd_roc(
            &dir.path().join("prob"),
            &dir.path().join("gt"),
            &crate::metrics::default_thresholds(99),
            &MatchConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &pts).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap(), vec!["threshold", "fa", "pd"]);
        assert_eq!(rdr.records().count(), 99);
    }

    #[test]
    fn eval_csv_dataset_row_first() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path(), 3);
        let out = dir.path().join("post");
        cmd_post_dir(&dir.path().join("prob"), &out, &AsConfig::default()).unwrap();
        let (ids, report) = cmd_eval(
            &out,
            &dir.path().join("gt"),
            &MatchConfig::default(),
            &ScoreConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_eval_csv(&mut buf, &ids, &report, &ScoreConfig::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("dataset,"));
        assert!(lines[2].starts_with("case_0000,"));
    }

    #[test]
    fn grid_degenerate_cell_matches_bce_training() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path(), 6);
        let d = load_synth_images(dir.path()).unwrap();
        let settings = GridSettings {
            ws: vec![1.0],
            ps: vec![1.0],
            train: TrainConfig {
                epochs: 20,
                ..TrainConfig::default()
            },
            ..GridSettings::default()
        };
        let cells = grid(&d.inputs, &d.gts, &settings).unwrap();
        let bce = train(
            &TrainingSet::new(&d.inputs[..3], &d.gts[..3]).unwrap(),
            &TrainConfig {
                loss: LossKind::Bce,
                epochs: 20,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let expected = eval_toy(
            &bce,
            &d.inputs[3..],
            &d.gts[3..],
            0.5,
            &MatchConfig::default(),
            &ScoreConfig::default(),
        )
        .unwrap();
        assert_eq!(
            cells[0].outcome,
            CellOutcome::Done {
                report: expected,
                final_loss: bce.final_loss().unwrap()
            }
        );
    }

    #[test]
    fn grid_records_divergence_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        tiny_dataset(dir.path(), 4);
        let d = load_synth_images(dir.path()).unwrap();
        let settings = GridSettings {
            ws: vec![1.0, 4.0],
            ps: vec![0.5],
            train: TrainConfig {
                epochs: 3,
                learning_rate: f64::MAX,
                ..TrainConfig::default()
            },
            ..GridSettings::default()
        };
        let cells = grid(&d.inputs, &d.gts, &settings).unwrap();
        assert_eq!(cells.len(), 2);
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &cells).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
