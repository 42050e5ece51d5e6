//! Synthetic scenes with known ground truth.
//!
//! Each target is a Gaussian confidence bump `peak * exp(-d^2 / (2 r^2))`
//! centred on an integer pixel; its ground truth is the disk of `truth_radius`
//! around the same centre. Clutter bumps add confidence with no ground truth.
//!
//! Randomness comes from `ChaCha8Rng` (a counter-based stream cipher
//! generator, stable across platforms). Per-case seeds in a dataset are
//! `splitmix64(master ^ index)`.

use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage, ProbMask};

/// The splitmix64 output function.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of case `index` in a dataset generated from `master`.
pub fn case_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub row: f64,
    pub col: f64,
    /// Spread of the confidence bump.
    pub radius: f64,
    pub peak: f64,
    /// Radius of the ground-truth disk.
    pub truth_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub targets: Vec<TargetSpec>,
    pub clutter: Vec<ClutterSpec>,
    /// Standard deviation of the additive noise on the confidence map.
    pub noise_sigma: f64,
    /// Standard deviation of the independent noise on the intensity image.
    pub image_noise_sigma: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::ZeroDimension {
                height: self.height,
                width: self.width,
            });
        }
        let inside = |r: f64, c: f64| {
            r >= 0.0 && c >= 0.0 && r <= (self.height - 1) as f64 && c <= (self.width - 1) as f64
        };
        for t in &self.targets {
            if !inside(t.row, t.col) {
                return Err(Error::InvalidConfig(format!(
                    "target centre ({}, {}) outside the image",
                    t.row, t.col
                )));
            }
            if !(t.radius >= 1.0 && t.truth_radius >= 1.0) {
                return Err(Error::InvalidConfig("target radii must be >= 1".into()));
            }
            if !(t.peak > 0.0 && t.peak <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "target peak {} outside (0, 1]",
                    t.peak
                )));
            }
        }
        for c in &self.clutter {
            if !inside(c.row, c.col) {
                return Err(Error::InvalidConfig(format!(
                    "clutter centre ({}, {}) outside the image",
                    c.row, c.col
                )));
            }
            if c.radius.is_nan() || c.radius < 1.0 {
                return Err(Error::InvalidConfig("clutter radius must be >= 1".into()));
            }
            if !(c.peak > 0.0 && c.peak < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "clutter peak {} outside (0, 1)",
                    c.peak
                )));
            }
        }
        for s in [self.noise_sigma, self.image_noise_sigma] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("noise sigma {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCase {
    pub gt: BinaryMask,
    pub prob: ProbMask,
    pub image: GrayImage,
    pub spec: SceneSpec,
}

fn bump(peak: f64, radius: f64, d2: f64) -> f64 {
    peak * (-d2 / (2.0 * radius * radius)).exp()
}

/// Renders a scene. Identical specs give bit-identical cases.
pub fn gen_scene(spec: &SceneSpec) -> Result<SynthCase> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut signal = vec![0.0; h * w];
    let mut gt = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            let (rf, cf) = (r as f64, c as f64);
            let idx = r * w + c;
            for t in &spec.targets {
                let d2 = (rf - t.row).powi(2) + (cf - t.col).powi(2);
                signal[idx] += bump(t.peak, t.radius, d2);
                gt[idx] |= d2 <= t.truth_radius * t.truth_radius;
            }
            for k in &spec.clutter {
                let d2 = (rf - k.row).powi(2) + (cf - k.col).powi(2);
                signal[idx] += bump(k.peak, k.radius, d2);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise =
        Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let image_noise = Normal::new(0.0, spec.image_noise_sigma)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let prob: Vec<f64> = signal
        .iter()
        .map(|&s| (s + noise.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    let image: Vec<f64> = signal
        .iter()
        .map(|&s| (0.15 + 0.7 * s.min(1.0) + image_noise.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();

    Ok(SynthCase {
        gt: BinaryMask::new(h, w, gt)?,
        prob: ProbMask::new(h, w, prob)?,
        image: GrayImage::new(h, w, image)?,
        spec: spec.clone(),
    })
}

/// Half-open confidence band a target peak is drawn from, with a relative
/// sampling weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakBand {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

/// Ranges from which [`gen_dataset`] draws each scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetTemplate {
    pub height: usize,
    pub width: usize,
    /// Inclusive range of targets per scene.
    pub targets: (usize, usize),
    /// Inclusive range of clutter blobs per scene.
    pub clutter: (usize, usize),
    pub radius: (f64, f64),
    /// Truth radius is `max(1, radius * ratio)` with ratio drawn from here.
    pub truth_ratio: (f64, f64),
    pub peak_bands: Vec<PeakBand>,
    pub clutter_peak: (f64, f64),
    pub noise_sigma: f64,
    pub image_noise_sigma: f64,
    /// Minimum distance from any blob centre to the image border.
    pub margin: usize,
}

impl Default for DatasetTemplate {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            targets: (2, 5),
            clutter: (0, 2),
            radius: (1.0, 2.5),
            truth_ratio: (0.9, 1.4),
            peak_bands: vec![
                PeakBand {
                    lo: 0.55,
                    hi: 0.95,
                    weight: 0.55,
                },
                PeakBand {
                    lo: 0.32,
                    hi: 0.48,
                    weight: 0.25,
                },
                PeakBand {
                    lo: 0.13,
                    hi: 0.28,
                    weight: 0.20,
                },
            ],
            clutter_peak: (0.12, 0.45),
            noise_sigma: 0.005,
            image_noise_sigma: 0.02,
            margin: 3,
        }
    }
}

impl DatasetTemplate {
    pub fn with_size(mut self, height: usize, width: usize) -> Self {
        self.height = height;
        self.width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.height <= 2 * self.margin || self.width <= 2 * self.margin {
            return bad(format!(
                "image {}x{} too small for margin {}",
                self.height, self.width, self.margin
            ));
        }
        if self.targets.0 > self.targets.1 || self.clutter.0 > self.clutter.1 {
            return bad("count ranges must be ordered".into());
        }
        if !(self.radius.0 >= 1.0 && self.radius.0 <= self.radius.1) {
            return bad(format!("radius range {:?}", self.radius));
        }
        if !(self.truth_ratio.0 > 0.0 && self.truth_ratio.0 <= self.truth_ratio.1) {
            return bad(format!("truth ratio range {:?}", self.truth_ratio));
        }
        if self.peak_bands.is_empty()
            || self
                .peak_bands
                .iter()
                .any(|b| !(b.lo > 0.0 && b.lo <= b.hi && b.hi <= 1.0 && b.weight > 0.0))
        {
            return bad("peak bands must lie in (0, 1] with positive weights".into());
        }
        if !(self.clutter_peak.0 > 0.0
            && self.clutter_peak.0 <= self.clutter_peak.1
            && self.clutter_peak.1 < 1.0)
        {
            return bad(format!("clutter peak range {:?}", self.clutter_peak));
        }
        if !(self.noise_sigma >= 0.0 && self.image_noise_sigma >= 0.0) {
            return bad("noise sigmas must be nonnegative".into());
        }
        Ok(())
    }
}

/// Spacing needed around a blob so its tail and neighbours never touch.
fn support(radius: f64) -> f64 {
    4.0 * radius + 2.0
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn draw_peak(rng: &mut ChaCha8Rng, bands: &[PeakBand]) -> f64 {
    let total: f64 = bands.iter().map(|b| b.weight).sum();
    let mut pick = rng.random_range(0.0..total);
    for b in bands {
        if pick < b.weight {
            return range(rng, (b.lo, b.hi));
        }
        pick -= b.weight;
    }
    let last = bands[bands.len() - 1];
    range(rng, (last.lo, last.hi))
}

/// Draws one scene layout. Blobs that cannot be placed without violating
/// the spacing rule after a bounded number of attempts are dropped.
pub fn sample_scene(template: &DatasetTemplate, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_targets = rng.random_range(template.targets.0..=template.targets.1);
    let n_clutter = rng.random_range(template.clutter.0..=template.clutter.1);
    let (lo_r, hi_r) = (template.margin, template.height - 1 - template.margin);
    let (lo_c, hi_c) = (template.margin, template.width - 1 - template.margin);

    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut place = |rng: &mut ChaCha8Rng, radius: f64| -> Option<(f64, f64)> {
        for _ in 0..200 {
            let r = rng.random_range(lo_r..=hi_r) as f64;
            let c = rng.random_range(lo_c..=hi_c) as f64;
            let clear = placed
                .iter()
                .all(|&(pr, pc, prad)| (pr - r).hypot(pc - c) >= support(prad) + support(radius));
            if clear {
                placed.push((r, c, radius));
                return Some((r, c));
            }
        }
        None
    };

    let mut targets = Vec::with_capacity(n_targets);
    for _ in 0..n_targets {
        let radius = range(&mut rng, template.radius);
        let peak = draw_peak(&mut rng, &template.peak_bands);
        let truth_radius = (radius * range(&mut rng, template.truth_ratio)).max(1.0);
        if let Some((row, col)) = place(&mut rng, radius) {
            targets.push(TargetSpec {
                row,
                col,
                radius,
                peak,
                truth_radius,
            });
        }
    }
    let mut clutter = Vec::with_capacity(n_clutter);
    for _ in 0..n_clutter {
        let radius = range(&mut rng, template.radius);
        let peak = range(&mut rng, template.clutter_peak);
        if let Some((row, col)) = place(&mut rng, radius) {
            clutter.push(ClutterSpec {
                row,
                col,
                radius,
                peak,
            });
        }
    }
    SceneSpec {
        height: template.height,
        width: template.width,
        targets,
        clutter,
        noise_sigma: template.noise_sigma,
        image_noise_sigma: template.image_noise_sigma,
        seed: rng.next_u64(),
    }
}

pub fn gen_dataset(
    template: &DatasetTemplate,
    n: usize,
    master_seed: u64,
) -> Result<Vec<SynthCase>> {
    template.validate()?;
    if n == 0 {
        return Err(Error::Empty("dataset size must be at least 1"));
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| gen_scene(&sample_scene(template, case_seed(master_seed, i))))
        .collect()
}

/// Name of case `index` on disk.
pub fn case_id(index: usize) -> String {
    format!("case_{index:04}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub spec: SceneSpec,
}

/// Writes `gt/`, `prob/`, `img/` PGM trees and `manifest.json` under `dir`.
pub fn write_dataset(dir: &Path, cases: &[SynthCase]) -> Result<()> {
    for sub in ["gt", "prob", "img"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let mut manifest = Vec::with_capacity(cases.len());
    for (i, case) in cases.iter().enumerate() {
        let id = case_id(i);
        let file = format!("{id}.pgm");
        case.gt.write(&dir.join("gt").join(&file))?;
        case.prob.write(&dir.join("prob").join(&file))?;
        case.image.write(&dir.join("img").join(&file))?;
        manifest.push(ManifestEntry {
            id,
            spec: case.spec.clone(),
        });
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccl::{label_components, Connectivity};
    use crate::sensitivity::binarize;

    fn target(row: f64, col: f64, radius: f64, peak: f64) -> TargetSpec {
        TargetSpec {
            row,
            col,
            radius,
            peak,
            truth_radius: radius,
        }
    }

    fn spec(targets: Vec<TargetSpec>) -> SceneSpec {
        SceneSpec {
            height: 40,
            width: 40,
            targets,
            clutter: vec![],
            noise_sigma: 0.0,
            image_noise_sigma: 0.01,
            seed: 1,
        }
    }

    #[test]
    fn splitmix_reference_values() {
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(case_seed(42, 0), 0xbdd7_3226_2feb_6e95);
        assert_eq!(case_seed(42, 1), 0xba69_ec90_eb4f_ef88);
        assert_eq!(case_seed(42, 7), 0xf7e9_f3f8_8cc0_4ad6);
    }

    #[test]
    fn three_disjoint_targets_give_three_components() {
        let s = spec(vec![
            target(5.0, 5.0, 2.0, 0.9),
            target(20.0, 30.0, 1.5, 0.5),
            target(33.0, 8.0, 3.0, 0.3),
        ]);
        let case = gen_scene(&s).unwrap();
        assert_eq!(label_components(&case.gt, Connectivity::Eight).len(), 3);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut s = spec(vec![target(10.0, 10.0, 2.0, 0.7)]);
        s.noise_sigma = 0.05;
        s.clutter.push(ClutterSpec {
            row: 30.0,
            col: 30.0,
            radius: 2.0,
            peak: 0.4,
        });
        let a = gen_scene(&s).unwrap();
        let b = gen_scene(&s).unwrap();
        assert_eq!(a, b);
        s.seed = 2;
        assert_ne!(gen_scene(&s).unwrap().prob, a.prob);
    }

    #[test]
    fn weak_target_appears_only_below_its_peak() {
        // centre value equals the peak (0.2), so it survives 0.1 but not 0.3
        let case = gen_scene(&spec(vec![target(20.0, 20.0, 2.0, 0.2)])).unwrap();
        assert_eq!(case.prob.get(20, 20), 0.2);
        assert_eq!(
            label_components(&binarize(&case.prob, 0.1).unwrap(), Connectivity::Eight).len(),
            1
        );
        assert_eq!(binarize(&case.prob, 0.3).unwrap().count(), 0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(gen_scene(&spec(vec![target(45.0, 5.0, 2.0, 0.5)])).is_err());
        assert!(gen_scene(&spec(vec![target(5.0, 5.0, 0.5, 0.5)])).is_err());
        assert!(gen_scene(&spec(vec![target(5.0, 5.0, 2.0, 0.0)])).is_err());
        let mut s = spec(vec![]);
        s.noise_sigma = -1.0;
        assert!(gen_scene(&s).is_err());
    }

    #[test]
    fn dataset_is_reproducible_and_disjoint() {
        let template = DatasetTemplate::default().with_size(64, 64);
        let a = gen_dataset(&template, 10, 42).unwrap();
        let b = gen_dataset(&template, 10, 42).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
        assert_ne!(gen_dataset(&template, 1, 43).unwrap()[0], a[0]);
        for case in &a {
            let k = label_components(&case.gt, Connectivity::Eight).len();
            assert_eq!(k, case.spec.targets.len());
            assert!(case
                .prob
                .data()
                .iter()
                .all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        }
        assert!(gen_dataset(&template, 0, 1).is_err());
    }

    #[test]
    fn peaks_cover_strong_and_weak_bands() {
        let template = DatasetTemplate::default();
        let mut strong = 0;
        let mut mid = 0;
        let mut weak = 0;
        let mut total = 0;
        for i in 0..100 {
            for t in sample_scene(&template, case_seed(9, i)).targets {
                total += 1;
                if t.peak > 0.5 {
                    strong += 1;
                } else if t.peak > 0.3 {
                    mid += 1;
                } else if t.peak > 0.1 {
                    weak += 1;
                }
            }
        }
        assert_eq!(strong + mid + weak, total);
        let frac = |n: usize| n as f64 / total as f64;
        assert!(frac(strong) > 0.4, "strong {}", frac(strong));
        assert!(frac(mid) > 0.1, "mid {}", frac(mid));
        assert!(frac(weak) > 0.1, "weak {}", frac(weak));
    }

    #[test]
    fn dataset_writes_trees_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cases = gen_dataset(&DatasetTemplate::default().with_size(32, 32), 3, 5).unwrap();
        write_dataset(dir.path(), &cases).unwrap();
        for sub in ["gt", "prob", "img"] {
            assert!(dir.path().join(sub).join("case_0002.pgm").exists());
        }
        let manifest: Vec<ManifestEntry> =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest.len(), 3);
        assert_eq!(manifest[1].spec, cases[1].spec);
    }
}
