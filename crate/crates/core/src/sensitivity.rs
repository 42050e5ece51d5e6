//! Adjustable-sensitivity post-processing.
//!
//! A probability map is binarized at a high threshold `th1` (strong targets,
//! kept with their full shape) and a low threshold `th2` (candidate weak
//! targets). Every `th2` component that does not touch the `th1` mask is
//! reduced to its centroid, which is injected into the `th1` mask.

use crate::ccl::{label_components, Connectivity, LabelMap};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbMask};

/// Shape stamped at each weak-target centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InjectionStyle {
    #[default]
    SinglePixel,
    /// Centroid plus its four direct neighbours.
    Cross,
}

impl InjectionStyle {
    /// Upper bound on pixels added per weak target.
    pub fn max_pixels(self) -> usize {
        match self {
            InjectionStyle::SinglePixel => 1,
            InjectionStyle::Cross => 5,
        }
    }
}

impl std::str::FromStr for InjectionStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "single-pixel" => Ok(InjectionStyle::SinglePixel),
            "cross" | "3x3-cross" => Ok(InjectionStyle::Cross),
            other => Err(Error::InvalidConfig(format!(
                "injection style must be single or cross, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsConfig {
    pub th1: f64,
    pub th2: f64,
    pub injection: InjectionStyle,
}

impl Default for AsConfig {
    fn default() -> Self {
        Self {
            th1: 0.5,
            th2: 0.1,
            injection: InjectionStyle::SinglePixel,
        }
    }
}

impl AsConfig {
    pub fn new(th1: f64, th2: f64) -> Result<Self> {
        let cfg = Self {
            th1,
            th2,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_injection(mut self, injection: InjectionStyle) -> Self {
        self.injection = injection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_threshold(self.th1)?;
        check_threshold(self.th2)?;
        if self.th1 <= self.th2 {
            return Err(Error::InvalidConfig(format!(
                "th1 ({}) must exceed th2 ({})",
                self.th1, self.th2
            )));
        }
        Ok(())
    }
}

fn check_threshold(th: f64) -> Result<()> {
    if th > 0.0 && th < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "threshold must be in (0, 1), got {th}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetClass {
    Strong,
    Weak,
}

impl TargetClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetClass::Strong => "strong",
            TargetClass::Weak => "weak",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReport {
    pub class: TargetClass,
    pub pixel_count: usize,
    pub centroid_row: f64,
    pub centroid_col: f64,
    pub peak: f64,
}

/// `1` where confidence is at least `th`.
pub fn binarize(prob: &ProbMask, th: f64) -> Result<BinaryMask> {
    check_threshold(th)?;
    let (h, w) = prob.dims();
    BinaryMask::new(h, w, prob.data().iter().map(|&p| p >= th).collect())
}

/// Rounds a centroid coordinate half-up and clamps it into `0..len`.
pub fn round_centroid(coord: f64, len: usize) -> usize {
    ((coord + 0.5).floor().max(0.0) as usize).min(len - 1)
}

fn reports_for(
    lm: &LabelMap,
    prob: &ProbMask,
    class: TargetClass,
    keep: impl Fn(usize) -> bool,
) -> Vec<TargetReport> {
    let mut peaks = vec![0.0f64; lm.len()];
    for (idx, &l) in lm.labels().iter().enumerate() {
        if l != 0 {
            let slot = &mut peaks[l as usize - 1];
            *slot = slot.max(prob.data()[idx]);
        }
    }
    lm.components()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(i, c)| TargetReport {
            class,
            pixel_count: c.pixel_count,
            centroid_row: c.centroid_row,
            centroid_col: c.centroid_col,
            peak: peaks[i],
        })
        .collect()
}

/// Output of [`apply_as`].
#[derive(Debug, Clone, PartialEq)]
pub struct AsOutput {
    pub mask: BinaryMask,
    /// Strong targets first (label order of the `th1` mask), then weak ones.
    pub targets: Vec<TargetReport>,
}

impl AsOutput {
    pub fn weak_count(&self) -> usize {
        self.targets
            .iter()
            .filter(|t| t.class == TargetClass::Weak)
            .count()
    }
}

pub fn apply_as(prob: &ProbMask, cfg: &AsConfig) -> Result<AsOutput> {
    cfg.validate()?;
    let strong = binarize(prob, cfg.th1)?;
    let candidates = binarize(prob, cfg.th2)?;
    let strong_labels = label_components(&strong, Connectivity::Eight);
    let weak_labels = label_components(&candidates, Connectivity::Eight);

    // A th2 component overlaps the th1 mask iff any of its pixels is strong.
    let mut overlapping = vec![false; weak_labels.len()];
    for (idx, &l) in weak_labels.labels().iter().enumerate() {
        if l != 0 && strong.data()[idx] {
            overlapping[l as usize - 1] = true;
        }
    }

    let (h, w) = prob.dims();
    let mut mask = strong;
    for (i, comp) in weak_labels.components().iter().enumerate() {
        if overlapping[i] {
            continue;
        }
        let r = round_centroid(comp.centroid_row, h);
        let c = round_centroid(comp.centroid_col, w);
        mask.set(r, c, true);
        if cfg.injection == InjectionStyle::Cross {
            if r > 0 {
                mask.set(r - 1, c, true);
            }
            if r + 1 < h {
                mask.set(r + 1, c, true);
            }
            if c > 0 {
                mask.set(r, c - 1, true);
            }
            if c + 1 < w {
                mask.set(r, c + 1, true);
            }
        }
    }

    let mut targets = reports_for(&strong_labels, prob, TargetClass::Strong, |_| true);
    targets.extend(reports_for(&weak_labels, prob, TargetClass::Weak, |i| {
        !overlapping[i]
    }));
    Ok(AsOutput { mask, targets })
}

/// Strong and weak target reports without building the output mask.
pub fn classify_targets(prob: &ProbMask, cfg: &AsConfig) -> Result<Vec<TargetReport>> {
    apply_as(prob, cfg).map(|out| out.targets)
}
