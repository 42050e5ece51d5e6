//! Dataset-level evaluation: IoU, target detection rate (Pd), pixel
//! false-alarm rate (Fa) and the composite score.
//!
//! All values here are ratios in `[0, 1]`. Rendering as percentages is the
//! caller's business.
//!
//! A ground-truth component counts as detected when a predicted component
//! overlaps it or has its centroid within `d_max` pixels of the ground-truth
//! centroid. Candidate pairs are matched greedily by ascending centroid
//! distance, one-to-one. False alarms are counted in pixels: every predicted
//! pixel lying on ground-truth background.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::ccl::{label_components, Connectivity};
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, ProbMask};
use crate::sensitivity::binarize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Maximum centroid distance in pixels for a non-overlapping match.
    pub d_max: f64,
    pub connectivity: Connectivity,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            d_max: 3.0,
            connectivity: Connectivity::Eight,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_max >= 0.0 && self.d_max.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "d_max must be a finite nonnegative distance, got {}",
                self.d_max
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub alpha: f64,
    /// Results with `fa >= fa_limit` carry no score.
    pub fa_limit: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            fa_limit: 1e-4,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.fa_limit.is_nan() || self.fa_limit <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "fa limit must be positive, got {}",
                self.fa_limit
            )));
        }
        Ok(())
    }
}

/// Per-image matching outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatch {
    /// One flag per ground-truth component, in label order.
    pub detected: Vec<bool>,
    /// Matched `(gt id, pred id)` pairs.
    pub pairs: Vec<(u32, u32)>,
    pub false_pixels: usize,
}

impl TargetMatch {
    pub fn detected_count(&self) -> usize {
        self.detected.iter().filter(|&&d| d).count()
    }
}

pub fn match_targets(pred: &BinaryMask, gt: &BinaryMask, cfg: &MatchConfig) -> Result<TargetMatch> {
    ensure_same_dims(pred.dims(), gt.dims())?;
    cfg.validate()?;
    let gl = label_components(gt, cfg.connectivity);
    let pl = label_components(pred, cfg.connectivity);

    let mut overlapping = BTreeSet::new();
    let mut false_pixels = 0;
    for (&g, &p) in gl.labels().iter().zip(pl.labels()) {
        match (g, p) {
            (0, 0) => {}
            (0, _) => false_pixels += 1,
            (_, 0) => {}
            (g, p) => {
                overlapping.insert((g, p));
            }
        }
    }

    let mut candidates = Vec::new();
    for gc in gl.components() {
        for pc in pl.components() {
            let dist = (gc.centroid_row - pc.centroid_row).hypot(gc.centroid_col - pc.centroid_col);
            if dist <= cfg.d_max || overlapping.contains(&(gc.id, pc.id)) {
                candidates.push((dist, gc.id, pc.id));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut detected = vec![false; gl.len()];
    let mut used = vec![false; pl.len()];
    let mut pairs = Vec::new();
    for (_, g, p) in candidates {
        let (gi, pi) = (g as usize - 1, p as usize - 1);
        if !detected[gi] && !used[pi] {
            detected[gi] = true;
            used[pi] = true;
            pairs.push((g, p));
        }
    }
    Ok(TargetMatch {
        detected,
        pairs,
        false_pixels,
    })
}

/// Per-image counts feeding every dataset-level ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImageTally {
    /// Predicted pixels on ground-truth foreground.
    pub tp: usize,
    /// Ground-truth foreground pixels.
    pub t: usize,
    /// Predicted foreground pixels.
    pub p: usize,
    pub targets: usize,
    pub detected: usize,
    pub false_pixels: usize,
    pub pixels: usize,
}

impl ImageTally {
    pub fn iou(&self) -> Option<f64> {
        let union = self.t + self.p - self.tp;
        (union > 0).then(|| self.tp as f64 / union as f64)
    }

    pub fn pd(&self) -> Option<f64> {
        (self.targets > 0).then(|| self.detected as f64 / self.targets as f64)
    }

    pub fn fa(&self) -> f64 {
        self.false_pixels as f64 / self.pixels as f64
    }
}

pub fn tally_image(pred: &BinaryMask, gt: &BinaryMask, cfg: &MatchConfig) -> Result<ImageTally> {
    let m = match_targets(pred, gt, cfg)?;
    let tp = pred
        .data()
        .iter()
        .zip(gt.data())
        .filter(|(&a, &b)| a && b)
        .count();
    Ok(ImageTally {
        tp,
        t: gt.count(),
        p: pred.count(),
        targets: m.detected.len(),
        detected: m.detected_count(),
        false_pixels: m.false_pixels,
        pixels: gt.len(),
    })
}

pub fn tally_dataset(
    preds: &[BinaryMask],
    gts: &[BinaryMask],
    cfg: &MatchConfig,
) -> Result<Vec<ImageTally>> {
    if preds.len() != gts.len() {
        return Err(Error::InvalidConfig(format!(
            "{} predictions for {} ground truths",
            preds.len(),
            gts.len()
        )));
    }
    preds
        .par_iter()
        .zip(gts)
        .map(|(p, g)| tally_image(p, g, cfg))
        .collect()
}

fn iou_from(tallies: &[ImageTally]) -> f64 {
    let tp: usize = tallies.iter().map(|t| t.tp).sum();
    let union: usize = tallies.iter().map(|t| t.t + t.p - t.tp).sum();
    if union == 0 {
        1.0
    } else {
        tp as f64 / union as f64
    }
}

/// `sum TP / sum (T + P - TP)`; `1` when both masks are empty everywhere.
pub fn dataset_iou(preds: &[BinaryMask], gts: &[BinaryMask]) -> Result<f64> {
    if preds.len() != gts.len() {
        return Err(Error::InvalidConfig(format!(
            "{} predictions for {} ground truths",
            preds.len(),
            gts.len()
        )));
    }
    let mut tallies = Vec::with_capacity(preds.len());
    for (p, g) in preds.iter().zip(gts) {
        ensure_same_dims(p.dims(), g.dims())?;
        let tp = p
            .data()
            .iter()
            .zip(g.data())
            .filter(|(&a, &b)| a && b)
            .count();
        tallies.push(ImageTally {
            tp,
            t: g.count(),
            p: p.count(),
            ..ImageTally::default()
        });
    }
    Ok(iou_from(&tallies))
}

/// Detected ground-truth targets over all ground-truth targets.
pub fn dataset_pd(tallies: &[ImageTally]) -> Result<f64> {
    let total: usize = tallies.iter().map(|t| t.targets).sum();
    if total == 0 {
        return Err(Error::NoTargets);
    }
    let detected: usize = tallies.iter().map(|t| t.detected).sum();
    Ok(detected as f64 / total as f64)
}

/// False-alarm pixels over all pixels.
pub fn dataset_fa(tallies: &[ImageTally]) -> Result<f64> {
    let pixels: usize = tallies.iter().map(|t| t.pixels).sum();
    if pixels == 0 {
        return Err(Error::Empty("no images to evaluate"));
    }
    let false_pixels: usize = tallies.iter().map(|t| t.false_pixels).sum();
    Ok(false_pixels as f64 / pixels as f64)
}

/// `alpha * iou + (1 - alpha) * pd`, or `None` when `fa` is not below the limit.
pub fn score(iou: f64, pd: f64, fa: f64, cfg: &ScoreConfig) -> Option<f64> {
    (fa < cfg.fa_limit).then_some(cfg.alpha * iou + (1.0 - cfg.alpha) * pd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub iou: f64,
    pub pd: f64,
    pub fa: f64,
    pub score: Option<f64>,
    pub valid: bool,
    pub per_image: Vec<ImageTally>,
}

impl EvalReport {
    pub fn from_tallies(per_image: Vec<ImageTally>, score_cfg: &ScoreConfig) -> Result<Self> {
        score_cfg.validate()?;
        let iou = iou_from(&per_image);
        let pd = dataset_pd(&per_image)?;
        let fa = dataset_fa(&per_image)?;
        let score = score(iou, pd, fa, score_cfg);
        Ok(Self {
            iou,
            pd,
            fa,
            score,
            valid: score.is_some(),
            per_image,
        })
    }

    /// Score ignoring the false-alarm constraint.
    pub fn raw_score(&self, alpha: f64) -> f64 {
        alpha * self.iou + (1.0 - alpha) * self.pd
    }
}

pub fn evaluate(
    preds: &[BinaryMask],
    gts: &[BinaryMask],
    match_cfg: &MatchConfig,
    score_cfg: &ScoreConfig,
) -> Result<EvalReport> {
    if preds.is_empty() {
        return Err(Error::Empty("no images to evaluate"));
    }
    EvalReport::from_tallies(tally_dataset(preds, gts, match_cfg)?, score_cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fa: f64,
    pub pd: f64,
}

/// `count` evenly spaced thresholds from `1 - 1/(count+1)` down to `1/(count+1)`.
pub fn default_thresholds(count: usize) -> Vec<f64> {
    (1..=count)
        .rev()
        .map(|i| i as f64 / (count + 1) as f64)
        .collect()
}

/// Strictly descending thresholds inside `(0, 1)`.
pub fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidThresholds("empty list".into()));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::InvalidThresholds(format!("{t} is outside (0, 1)")));
    }
    if let Some(w) = thresholds.windows(2).find(|w| w[0] <= w[1]) {
        return Err(Error::InvalidThresholds(format!(
            "must be strictly descending, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Dataset Pd and Fa at each threshold.
pub fn roc_sweep(
    probs: &[ProbMask],
    gts: &[BinaryMask],
    thresholds: &[f64],
    cfg: &MatchConfig,
) -> Result<Vec<RocPoint>> {
    validate_thresholds(thresholds)?;
    if probs.is_empty() {
        return Err(Error::Empty("no images to evaluate"));
    }
    thresholds
        .iter()
        .map(|&threshold| {
            let preds = probs
                .par_iter()
                .map(|p| binarize(p, threshold))
                .collect::<Result<Vec<_>>>()?;
            let tallies = tally_dataset(&preds, gts, cfg)?;
            Ok(RocPoint {
                threshold,
                fa: dataset_fa(&tallies)?,
                pd: dataset_pd(&tallies)?,
            })
        })
        .collect()
}
