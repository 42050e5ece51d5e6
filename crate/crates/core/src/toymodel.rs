//! A per-pixel logistic segmenter over handcrafted local features, trained
//! by full-batch gradient descent through the EEDM gradient.
//!
//! Features per pixel, all with edge-replicated borders:
//!
//! 0. raw intensity
//! 1. 3x3 mean
//! 2. 3x3 max
//! 3. local contrast: centre minus the mean of the 16-pixel ring of the 5x5
//!    window
//! 4. constant bias `1`

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::eedm::{
    bce_gradient, eedm_loss, gradient_for_set, mean_bce, mean_over, weighted_loss_matrix,
    LossConfig, DEFAULT_EPS,
};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, ProbMask};
use crate::synth::SynthCase;

pub const FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    height: usize,
    width: usize,
    /// Row-major, `FEATURES` values per pixel.
    values: Vec<[f64; FEATURES]>,
}

impl FeatureStack {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn at(&self, row: usize, col: usize) -> &[f64; FEATURES] {
        &self.values[row * self.width + col]
    }

    pub fn pixels(&self) -> &[[f64; FEATURES]] {
        &self.values
    }
}

pub fn extract_features(image: &GrayImage) -> FeatureStack {
    let (h, w) = image.dims();
    let px = |r: i64, c: i64| {
        let r = r.clamp(0, h as i64 - 1) as usize;
        let c = c.clamp(0, w as i64 - 1) as usize;
        image.get(r, c)
    };
    let mut values = Vec::with_capacity(h * w);
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let centre = px(r, c);
            let mut sum3 = 0.0;
            let mut max3 = f64::MIN;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let v = px(r + dr, c + dc);
                    sum3 += v;
                    max3 = max3.max(v);
                }
            }
            let mut ring = 0.0;
            for d in -2..=2 {
                ring += px(r - 2, c + d) + px(r + 2, c + d);
            }
            for d in -1..=1 {
                ring += px(r + d, c - 2) + px(r + d, c + 2);
            }
            values.push([centre, sum3 / 9.0, max3, centre - ring / 16.0, 1.0]);
        }
    }
    FeatureStack {
        height: h,
        width: w,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Bce,
    Ee,
    Dm,
    Eedm,
}

impl LossKind {
    /// Loss configuration actually optimized, or `None` for plain BCE.
    pub fn effective(self, cfg: &LossConfig) -> Option<LossConfig> {
        match self {
            LossKind::Bce => None,
            LossKind::Ee => Some(LossConfig {
                mining_ratio: 1.0,
                ..*cfg
            }),
            LossKind::Dm => Some(LossConfig {
                edge_weight: 1.0,
                ..*cfg
            }),
            LossKind::Eedm => Some(*cfg),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Ee => "ee",
            LossKind::Dm => "dm",
            LossKind::Eedm => "eedm",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(LossKind::Bce),
            "ee" => Ok(LossKind::Ee),
            "dm" => Ok(LossKind::Dm),
            "eedm" => Ok(LossKind::Eedm),
            other => Err(Error::InvalidConfig(format!(
                "loss must be one of bce, ee, dm, eedm; got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub loss_cfg: LossConfig,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Eedm,
            loss_cfg: LossConfig::default(),
            learning_rate: 0.5,
            epochs: 200,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss_cfg.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub weights: [f64; FEATURES],
    /// Training loss before each update, plus the loss after the last one.
    pub log: Vec<f64>,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fails with `OutOfRange` when a dot product overflows to NaN.
fn predict_features(weights: &[f64; FEATURES], features: &FeatureStack) -> Result<ProbMask> {
    let data = features
        .values
        .iter()
        .map(|f| logistic(f.iter().zip(weights).map(|(x, w)| x * w).sum()))
        .collect();
    ProbMask::new(features.height, features.width, data)
}

pub fn predict_toy(model: &ToyModel, image: &GrayImage) -> Result<ProbMask> {
    predict_features(&model.weights, &extract_features(image))
}

/// Features and labels prepared once for repeated training runs.
///
/// Features are standardized with the set's own mean and spread, and weights
/// passed to [`loss_and_gradient`] live in that standardized space.
/// [`train`] folds the scaling back so a [`ToyModel`] applies to raw
/// features.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    samples: Vec<(FeatureStack, BinaryMask)>,
    /// `(mean, std)` per feature; the bias keeps `(0, 1)`.
    scaling: [(f64, f64); FEATURES],
}

fn feature_scaling(stacks: &[FeatureStack]) -> [(f64, f64); FEATURES] {
    let mut scaling = [(0.0, 1.0); FEATURES];
    let n: usize = stacks.iter().map(|s| s.values.len()).sum();
    for (k, slot) in scaling.iter_mut().enumerate().take(FEATURES - 1) {
        let mean = stacks
            .iter()
            .flat_map(|s| &s.values)
            .map(|f| f[k])
            .sum::<f64>()
            / n as f64;
        let var = stacks
            .iter()
            .flat_map(|s| &s.values)
            .map(|f| (f[k] - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        let std = var.sqrt();
        *slot = (mean, if std > 1e-12 { std } else { 1.0 });
    }
    scaling
}

impl TrainingSet {
    pub fn new(images: &[GrayImage], labels: &[BinaryMask]) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if images.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} images for {} labels",
                images.len(),
                labels.len()
            )));
        }
        for (img, lab) in images.iter().zip(labels) {
            crate::raster::ensure_same_dims(img.dims(), lab.dims())?;
        }
        let stacks: Vec<FeatureStack> = images.par_iter().map(extract_features).collect();
        let scaling = feature_scaling(&stacks);
        let samples = stacks
            .into_iter()
            .zip(labels)
            .map(|(mut st, lab)| {
                for f in &mut st.values {
                    for (x, (mean, std)) in f.iter_mut().zip(scaling) {
                        *x = (*x - mean) / std;
                    }
                }
                (st, lab.clone())
            })
            .collect();
        Ok(Self { samples, scaling })
    }

    /// Raw-feature weights equivalent to standardized-space `weights`.
    pub fn unscale(&self, weights: &[f64; FEATURES]) -> [f64; FEATURES] {
        let mut raw = [0.0; FEATURES];
        let mut bias = weights[FEATURES - 1];
        for k in 0..FEATURES - 1 {
            let (mean, std) = self.scaling[k];
            raw[k] = weights[k] / std;
            bias -= weights[k] * mean / std;
        }
        raw[FEATURES - 1] = bias;
        raw
    }

    pub fn from_cases(cases: &[SynthCase]) -> Result<Self> {
        let images: Vec<GrayImage> = cases.iter().map(|c| c.image.clone()).collect();
        let labels: Vec<BinaryMask> = cases.iter().map(|c| c.gt.clone()).collect();
        Self::new(&images, &labels)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Loss, weight gradient and the hard set chosen for each image.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub loss: f64,
    pub grad: [f64; FEATURES],
    pub hard_sets: Vec<Vec<usize>>,
}

/// Mean per-image loss and its gradient with respect to the weights.
pub fn loss_and_gradient(
    weights: &[f64; FEATURES],
    set: &TrainingSet,
    kind: LossKind,
    cfg: &LossConfig,
) -> Result<Step> {
    let effective = kind.effective(cfg);
    let mut loss = 0.0;
    let mut grad = [0.0; FEATURES];
    let mut hard_sets = Vec::with_capacity(set.samples.len());
    for (features, label) in &set.samples {
        let yhat = predict_features(weights, features)?;
        let (l, g, kept) = match &effective {
            None => (
                mean_bce(label, &yhat, DEFAULT_EPS)?,
                bce_gradient(label, &yhat, DEFAULT_EPS)?,
                Vec::new(),
            ),
            Some(c) => {
                let out = eedm_loss(label, &yhat, c)?;
                let g = gradient_for_set(label, &yhat, c, &out.kept)?;
                (out.loss, g, out.kept)
            }
        };
        loss += l;
        for ((f, &dp), &p) in features.values.iter().zip(g.data()).zip(yhat.data()) {
            if dp == 0.0 {
                continue;
            }
            let dz = dp * p * (1.0 - p);
            for (acc, x) in grad.iter_mut().zip(f) {
                *acc += dz * x;
            }
        }
        hard_sets.push(kept);
    }
    let n = set.samples.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    Ok(Step {
        loss: loss / n,
        grad,
        hard_sets,
    })
}

/// Training loss with each image's hard set held fixed.
pub fn loss_with_hard_sets(
    weights: &[f64; FEATURES],
    set: &TrainingSet,
    kind: LossKind,
    cfg: &LossConfig,
    hard_sets: &[Vec<usize>],
) -> Result<f64> {
    let effective = kind.effective(cfg);
    let mut loss = 0.0;
    for ((features, label), kept) in set.samples.iter().zip(hard_sets) {
        let yhat = predict_features(weights, features)?;
        loss += match &effective {
            None => mean_bce(label, &yhat, DEFAULT_EPS)?,
            Some(c) => mean_over(weighted_loss_matrix(label, &yhat, c)?.data(), kept),
        };
    }
    Ok(loss / set.samples.len() as f64)
}

pub fn initial_weights(seed: u64) -> [f64; FEATURES] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.01).expect("valid sigma");
    std::array::from_fn(|_| normal.sample(&mut rng))
}

pub fn train(set: &TrainingSet, cfg: &TrainConfig) -> Result<ToyModel> {
    cfg.validate()?;
    let mut weights = initial_weights(cfg.seed);
    let mut log = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let step = match loss_and_gradient(&weights, set, cfg.loss, &cfg.loss_cfg) {
            Ok(step) => step,
            Err(Error::OutOfRange { .. }) => {
                return Err(Error::Diverged {
                    epoch,
                    loss: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        if !step.loss.is_finite() || step.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: step.loss,
            });
        }
        log.push(step.loss);
        for (w, g) in weights.iter_mut().zip(step.grad) {
            *w -= cfg.learning_rate * g;
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: step.loss,
            });
        }
    }
    let last = match loss_and_gradient(&weights, set, cfg.loss, &cfg.loss_cfg) {
        Ok(step) => step.loss,
        Err(Error::OutOfRange { .. }) => f64::NAN,
        Err(e) => return Err(e),
    };
    if !last.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            loss: last,
        });
    }
    log.push(last);
    let weights = set.unscale(&weights);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            loss: last,
        });
    }
    Ok(ToyModel { weights, log })
}

pub fn train_toy(cases: &[SynthCase], cfg: &TrainConfig) -> Result<ToyModel> {
    train(&TrainingSet::from_cases(cases)?, cfg)
}

impl ToyModel {
    /// The starting point [`train`] would use on `set`.
    pub fn untrained(set: &TrainingSet, seed: u64) -> Self {
        Self {
            weights: set.unscale(&initial_weights(seed)),
            log: Vec::new(),
        }
    }

    pub fn initial_loss(&self) -> Option<f64> {
        self.log.first().copied()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.log.last().copied()
    }

    /// Plain text, one weight per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in self.weights {
            let _ = writeln!(out, "{w:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidConfig(format!("bad weight {l:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let weights: [f64; FEATURES] = values.try_into().map_err(|v: Vec<f64>| {
            Error::InvalidConfig(format!("expected {FEATURES} weights, found {}", v.len()))
        })?;
        Ok(Self {
            weights,
            log: Vec::new(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
