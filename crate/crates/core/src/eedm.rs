//! Edge-enhanced, difficulty-mined binary cross-entropy (EEDM).
//!
//! The loss runs in three stages:
//!
//! 1. per-pixel BCE on clamped probabilities,
//! 2. multiplication by an edge weighting matrix (`w` on the inner boundary of
//!    the ground-truth targets, `1` elsewhere),
//! 3. averaging over the `k = max(1, floor(p * N))` largest weighted losses.
//!
//! Setting `p = 1` keeps every pixel (the EE variant); setting `w = 1` drops
//! the edge term (the DM variant); both together give plain mean BCE.
//!
//! The gradient is taken with the hard set held fixed. It is zero outside
//! the kept set and wherever the probability clamp is active.

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, ProbMask};

/// Default probability clamp.
pub const DEFAULT_EPS: f64 = 1e-7;

/// Real-valued per-pixel grid (weights, losses or gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

pub type WeightMatrix = Matrix;
pub type LossMatrix = Matrix;
pub type GradMatrix = Matrix;

impl Matrix {
    pub(crate) fn from_parts(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Inner boundary of the ground-truth foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap(BinaryMask);

impl EdgeMap {
    pub fn as_mask(&self) -> &BinaryMask {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Multiplier applied to edge pixels, `w >= 1`.
    pub edge_weight: f64,
    /// Fraction of hardest pixels averaged, `0 < p <= 1`.
    pub mining_ratio: f64,
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            edge_weight: 4.0,
            mining_ratio: 0.5,
            eps: DEFAULT_EPS,
        }
    }
}

impl LossConfig {
    pub fn new(edge_weight: f64, mining_ratio: f64) -> Result<Self> {
        let cfg = Self {
            edge_weight,
            mining_ratio,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.edge_weight.is_finite() && self.edge_weight >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "edge weight must be >= 1, got {}",
                self.edge_weight
            )));
        }
        if !(self.mining_ratio > 0.0 && self.mining_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mining ratio must be in (0, 1], got {}",
                self.mining_ratio
            )));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "clamp eps must be in (0, 0.5), got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// A foreground pixel is an edge pixel iff one of its 4-neighbours is
/// background; out-of-image neighbours count as background.
pub fn extract_edge_map(label: &BinaryMask) -> EdgeMap {
    let (h, w) = label.dims();
    let fg = |r: usize, c: usize| label.get(r, c);
    let edges = BinaryMask::from_fn(h, w, |r, c| {
        fg(r, c)
            && (r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !fg(r - 1, c)
                || !fg(r + 1, c)
                || !fg(r, c - 1)
                || !fg(r, c + 1))
    })
    .expect("dimensions come from a valid mask");
    EdgeMap(edges)
}

pub fn edge_weight_matrix(edges: &EdgeMap, w: f64) -> Result<WeightMatrix> {
    if !(w.is_finite() && w >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "edge weight must be >= 1, got {w}"
        )));
    }
    let (h, width) = edges.0.dims();
    let data = edges
        .0
        .data()
        .iter()
        .map(|&e| if e { w } else { 1.0 })
        .collect();
    Ok(Matrix::from_parts(h, width, data))
}

#[inline]
fn pixel_bce(y: bool, p: f64, eps: f64) -> f64 {
    let p = p.clamp(eps, 1.0 - eps);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

#[inline]
fn clamp_active(p: f64, eps: f64) -> bool {
    p < eps || p > 1.0 - eps
}

/// `dBCE/dp` for the unclamped region.
#[inline]
fn pixel_bce_slope(y: bool, p: f64) -> f64 {
    let y = if y { 1.0 } else { 0.0 };
    (p - y) / (p * (1.0 - p))
}

pub fn bce_matrix(y: &BinaryMask, yhat: &ProbMask, eps: f64) -> Result<LossMatrix> {
    ensure_same_dims(y.dims(), yhat.dims())?;
    let data = y
        .data()
        .iter()
        .zip(yhat.data())
        .map(|(&t, &p)| pixel_bce(t, p, eps))
        .collect();
    let (h, w) = y.dims();
    Ok(Matrix::from_parts(h, w, data))
}

/// Plain mean BCE, summed in raster order.
pub fn mean_bce(y: &BinaryMask, yhat: &ProbMask, eps: f64) -> Result<f64> {
    let m = bce_matrix(y, yhat, eps)?;
    Ok(m.data.iter().sum::<f64>() / m.data.len() as f64)
}

/// Gradient of [`mean_bce`] with respect to each probability.
pub fn bce_gradient(y: &BinaryMask, yhat: &ProbMask, eps: f64) -> Result<GradMatrix> {
    ensure_same_dims(y.dims(), yhat.dims())?;
    let n = yhat.data().len() as f64;
    let data = y
        .data()
        .iter()
        .zip(yhat.data())
        .map(|(&t, &p)| {
            if clamp_active(p, eps) {
                0.0
            } else {
                1.0 * pixel_bce_slope(t, p) / n
            }
        })
        .collect();
    let (h, w) = y.dims();
    Ok(Matrix::from_parts(h, w, data))
}

/// Number of pixels kept by hard mining: `max(1, floor(p * n))`.
///
/// A relative slack of `1e-12` absorbs binary-representation error in
/// decimal ratios such as `0.57 * 100`.
pub fn kept_count(mining_ratio: f64, n: usize) -> usize {
    let raw = (mining_ratio * n as f64 * (1.0 + 1e-12)).floor() as usize;
    raw.clamp(1, n)
}

/// Indices of the `k` largest values, ties broken toward lower index,
/// returned in ascending index order.
pub fn select_hard(values: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(values.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    let by_hardness = |a: &usize, b: &usize| values[*b].total_cmp(&values[*a]).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k, by_hardness);
        order.truncate(k);
    }
    order.sort_unstable();
    order
}

/// Result of an EEDM evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EedmOutput {
    pub loss: f64,
    /// Kept (hard) pixel indices, ascending.
    pub kept: Vec<usize>,
    /// Edge-weighted per-pixel loss `e' * L_BCE`.
    pub weighted: LossMatrix,
}

/// Edge-weighted BCE matrix.
pub fn weighted_loss_matrix(
    y: &BinaryMask,
    yhat: &ProbMask,
    cfg: &LossConfig,
) -> Result<LossMatrix> {
    cfg.validate()?;
    let bce = bce_matrix(y, yhat, cfg.eps)?;
    let weights = edge_weight_matrix(&extract_edge_map(y), cfg.edge_weight)?;
    let data = weights
        .data
        .iter()
        .zip(&bce.data)
        .map(|(w, l)| w * l)
        .collect();
    Ok(Matrix::from_parts(bce.height, bce.width, data))
}

/// Mean of `values` over `kept`, summed in ascending index order.
pub fn mean_over(values: &[f64], kept: &[usize]) -> f64 {
    kept.iter().map(|&i| values[i]).sum::<f64>() / kept.len() as f64
}

pub fn eedm_loss(y: &BinaryMask, yhat: &ProbMask, cfg: &LossConfig) -> Result<EedmOutput> {
    let weighted = weighted_loss_matrix(y, yhat, cfg)?;
    let k = kept_count(cfg.mining_ratio, weighted.data.len());
    let kept = select_hard(&weighted.data, k);
    let loss = mean_over(&weighted.data, &kept);
    Ok(EedmOutput {
        loss,
        kept,
        weighted,
    })
}

/// Edge-enhancement-only variant (`p = 1`).
pub fn ee_loss(y: &BinaryMask, yhat: &ProbMask, edge_weight: f64) -> Result<f64> {
    let cfg = LossConfig {
        edge_weight,
        mining_ratio: 1.0,
        ..LossConfig::default()
    };
    Ok(eedm_loss(y, yhat, &cfg)?.loss)
}

/// Difficulty-mining-only variant (`w = 1`).
pub fn dm_loss(y: &BinaryMask, yhat: &ProbMask, mining_ratio: f64) -> Result<f64> {
    let cfg = LossConfig {
        edge_weight: 1.0,
        mining_ratio,
        ..LossConfig::default()
    };
    Ok(eedm_loss(y, yhat, &cfg)?.loss)
}

/// Gradient of the mean over a fixed `kept` set.
pub fn gradient_for_set(
    y: &BinaryMask,
    yhat: &ProbMask,
    cfg: &LossConfig,
    kept: &[usize],
) -> Result<GradMatrix> {
    cfg.validate()?;
    ensure_same_dims(y.dims(), yhat.dims())?;
    let edges = extract_edge_map(y);
    let k = kept.len() as f64;
    let mut data = vec![0.0; yhat.data().len()];
    for &i in kept {
        let p = yhat.data()[i];
        if clamp_active(p, cfg.eps) {
            continue;
        }
        let weight = if edges.0.data()[i] {
            cfg.edge_weight
        } else {
            1.0
        };
        data[i] = weight * pixel_bce_slope(y.data()[i], p) / k;
    }
    let (h, w) = y.dims();
    Ok(Matrix::from_parts(h, w, data))
}

pub fn eedm_gradient(y: &BinaryMask, yhat: &ProbMask, cfg: &LossConfig) -> Result<GradMatrix> {
    let out = eedm_loss(y, yhat, cfg)?;
    gradient_for_set(y, yhat, cfg, &out.kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng, h: usize, w: usize) -> (BinaryMask, ProbMask) {
        let y = BinaryMask::from_fn(h, w, |_, _| rng.random_bool(0.3)).unwrap();
        let p = ProbMask::from_fn(h, w, |_, _| rng.random_range(0.02..0.98)).unwrap();
        (y, p)
    }

    /// Scalar recomputation straight from the definitions.
    fn oracle_loss(y: &BinaryMask, p: &ProbMask, w: f64, ratio: f64, eps: f64) -> f64 {
        let (h, width) = y.dims();
        let fg = |r: i64, c: i64| {
            r >= 0 && c >= 0 && r < h as i64 && c < width as i64 && y.get(r as usize, c as usize)
        };
        let mut losses = Vec::new();
        for r in 0..h as i64 {
            for c in 0..width as i64 {
                let t = if fg(r, c) { 1.0 } else { 0.0 };
                let q = p.get(r as usize, c as usize).max(eps).min(1.0 - eps);
                let bce = -(t * q.ln() + (1.0 - t) * (1.0 - q).ln());
                let eroded = fg(r - 1, c) && fg(r + 1, c) && fg(r, c - 1) && fg(r, c + 1);
                let edge = fg(r, c) && !eroded;
                losses.push(if edge { w } else { 1.0 } * bce);
            }
        }
        let n = losses.len();
        let k = ((ratio * n as f64 + 1e-9).floor() as usize).max(1);
        let mut sorted = losses.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sorted[..k].iter().sum::<f64>() / k as f64
    }

    #[test]
    fn edge_map_of_full_three_by_three() {
        let m = BinaryMask::from_bits(3, 3, &[1; 9]).unwrap();
        let e = extract_edge_map(&m);
        assert_eq!(e.count(), 8);
        assert!(!e.as_mask().get(1, 1));

        let m = BinaryMask::from_bits(5, 5, &[1; 25]).unwrap();
        assert_eq!(extract_edge_map(&m).count(), 16);
    }

    #[test]
    fn single_pixel_target_is_edge() {
        let m = BinaryMask::from_fn(5, 5, |r, c| (r, c) == (2, 2)).unwrap();
        let e = extract_edge_map(&m);
        assert_eq!(e.count(), 1);
        assert!(e.as_mask().get(2, 2));
    }

    #[test]
    fn edges_equal_foreground_minus_erosion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let m = BinaryMask::from_fn(12, 12, |_, _| rng.random_bool(0.6)).unwrap();
            let e = extract_edge_map(&m);
            let at = |r: i64, c: i64| {
                r >= 0 && c >= 0 && r < 12 && c < 12 && m.get(r as usize, c as usize)
            };
            for r in 0..12i64 {
                for c in 0..12i64 {
                    let eroded =
                        at(r, c) && at(r - 1, c) && at(r + 1, c) && at(r, c - 1) && at(r, c + 1);
                    assert_eq!(e.as_mask().get(r as usize, c as usize), at(r, c) && !eroded);
                }
            }
            assert!(m.contains(e.as_mask()).unwrap());
        }
    }

    #[test]
    fn weight_matrix_cases() {
        let e = extract_edge_map(&BinaryMask::from_bits(1, 2, &[0, 1]).unwrap());
        assert_eq!(edge_weight_matrix(&e, 4.0).unwrap().data(), &[1.0, 4.0]);
        assert!(edge_weight_matrix(&e, 1.0)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 1.0));
        assert!(edge_weight_matrix(&e, 0.5).is_err());
        assert!(edge_weight_matrix(&e, f64::NAN).is_err());
    }

    #[test]
    fn bce_examples() {
        let y = BinaryMask::from_bits(1, 2, &[1, 0]).unwrap();
        let p = ProbMask::new(1, 2, vec![0.5, 0.0]).unwrap();
        let m = bce_matrix(&y, &p, DEFAULT_EPS).unwrap();
        assert!((m.data()[0] - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(m.data()[1], -(1.0 - DEFAULT_EPS).ln());
        assert!((m.data()[1] - DEFAULT_EPS).abs() < 1e-13);

        let other = ProbMask::new(2, 1, vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            bce_matrix(&y, &other, DEFAULT_EPS),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bce_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (y, p) = random_pair(&mut rng, 6, 6);
            let m = bce_matrix(&y, &p, DEFAULT_EPS).unwrap();
            for i in 0..36 {
                let t = if y.data()[i] { 1.0 } else { 0.0 };
                let q = p.data()[i];
                let expect = -(t * q.ln() + (1.0 - t) * (1.0 - q).ln());
                assert!((m.data()[i] - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn worked_one_by_four_example() {
        let y = BinaryMask::from_bits(1, 4, &[0, 0, 1, 1]).unwrap();
        let p = ProbMask::new(1, 4, vec![0.2, 0.8, 0.9, 0.4]).unwrap();
        let out = eedm_loss(&y, &p, &LossConfig::default()).unwrap();
        // frozen from a direct scalar evaluation of the definitions
        let expect = [
            0.2231435513142097,
            1.6094379124341005,
            0.4214420626313051,
            3.66516292749662,
        ];
        for (a, b) in out.weighted.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(out.kept, vec![1, 3]);
        assert!((out.loss - 2.63730041996536).abs() < 1e-12);
    }

    #[test]
    fn double_degeneracy_is_mean_bce() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (y, p) = random_pair(&mut rng, 7, 5);
        let cfg = LossConfig::new(1.0, 1.0).unwrap();
        let l = eedm_loss(&y, &p, &cfg).unwrap().loss;
        assert_eq!(l, mean_bce(&y, &p, DEFAULT_EPS).unwrap());
        assert_eq!(l, ee_loss(&y, &p, 1.0).unwrap());
        assert_eq!(l, dm_loss(&y, &p, 1.0).unwrap());
        assert_eq!(
            eedm_gradient(&y, &p, &cfg).unwrap(),
            bce_gradient(&y, &p, DEFAULT_EPS).unwrap()
        );
    }

    #[test]
    fn variants_are_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let (y, p) = random_pair(&mut rng, 8, 8);
            let w = rng.random_range(1.0..8.0);
            let ratio = rng.random_range(0.05..1.0);
            assert_eq!(
                ee_loss(&y, &p, w).unwrap(),
                eedm_loss(&y, &p, &LossConfig::new(w, 1.0).unwrap())
                    .unwrap()
                    .loss
            );
            assert_eq!(
                dm_loss(&y, &p, ratio).unwrap(),
                eedm_loss(&y, &p, &LossConfig::new(1.0, ratio).unwrap())
                    .unwrap()
                    .loss
            );
            let ee_o = oracle_loss(&y, &p, w, 1.0, DEFAULT_EPS);
            assert!((ee_loss(&y, &p, w).unwrap() - ee_o).abs() < 1e-12);
            let dm_o = oracle_loss(&y, &p, 1.0, ratio, DEFAULT_EPS);
            assert!((dm_loss(&y, &p, ratio).unwrap() - dm_o).abs() < 1e-12);
        }
    }

    #[test]
    fn eedm_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let (y, p) = random_pair(&mut rng, 8, 8);
            let cfg =
                LossConfig::new(rng.random_range(1.0..7.0), rng.random_range(0.05..1.0)).unwrap();
            let got = eedm_loss(&y, &p, &cfg).unwrap().loss;
            let expect = oracle_loss(&y, &p, cfg.edge_weight, cfg.mining_ratio, cfg.eps);
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn perfect_prediction_bound() {
        let y =
            BinaryMask::from_fn(6, 6, |r, c| (1..4).contains(&r) && (2..5).contains(&c)).unwrap();
        let p = ProbMask::from_fn(6, 6, |r, c| if y.get(r, c) { 1.0 } else { 0.0 }).unwrap();
        let cfg = LossConfig::default();
        let l = eedm_loss(&y, &p, &cfg).unwrap().loss;
        assert!(l <= -(1.0 - cfg.eps).ln() * cfg.edge_weight + 1e-18);
    }

    #[test]
    fn ties_prefer_lower_raster_index() {
        let y = BinaryMask::zeros(1, 6).unwrap();
        let p = ProbMask::new(1, 6, vec![0.3, 0.5, 0.5, 0.1, 0.5, 0.5]).unwrap();
        let out = eedm_loss(&y, &p, &LossConfig::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(out.kept, vec![1, 2, 4]);
    }

    #[test]
    fn kept_count_floor_and_minimum() {
        assert_eq!(kept_count(0.5, 64), 32);
        assert_eq!(kept_count(0.01, 10), 1);
        assert_eq!(kept_count(1.0, 7), 7);
        assert_eq!(kept_count(0.57, 100), 57);
        assert_eq!(kept_count(0.3, 10), 3);
        assert_eq!(kept_count(0.35, 10), 3);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(LossConfig::new(0.9, 0.5).is_err());
        assert!(LossConfig::new(4.0, 0.0).is_err());
        assert!(LossConfig::new(4.0, 1.1).is_err());
        let cfg = LossConfig {
            eps: 0.5,
            ..LossConfig::default()
        };
        let y = BinaryMask::zeros(2, 2).unwrap();
        let p = ProbMask::constant(2, 2, 0.5).unwrap();
        assert!(matches!(
            eedm_loss(&y, &p, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn gradient_single_pixel() {
        let y = BinaryMask::from_bits(1, 1, &[1]).unwrap();
        let p = ProbMask::new(1, 1, vec![0.5]).unwrap();
        let g = eedm_gradient(&y, &p, &LossConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(g.data(), &[-2.0]);
    }

    #[test]
    fn gradient_zero_outside_hard_set_and_under_clamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (y, p) = random_pair(&mut rng, 8, 8);
        let cfg = LossConfig::default();
        let out = eedm_loss(&y, &p, &cfg).unwrap();
        let g = eedm_gradient(&y, &p, &cfg).unwrap();
        for i in 0..64 {
            if out.kept.binary_search(&i).is_err() {
                assert_eq!(g.data()[i], 0.0);
            }
        }
        let y = BinaryMask::from_bits(1, 2, &[1, 0]).unwrap();
        let p = ProbMask::new(1, 2, vec![0.0, 1.0]).unwrap();
        let g = eedm_gradient(&y, &p, &LossConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = 1e-5;
        for _ in 0..20 {
            let (y, p) = random_pair(&mut rng, 8, 8);
            let cfg = LossConfig::default();
            let out = eedm_loss(&y, &p, &cfg).unwrap();
            let g = gradient_for_set(&y, &p, &cfg, &out.kept).unwrap();
            for i in 0..64 {
                let shifted = |d: f64| {
                    let mut v = p.data().to_vec();
                    v[i] += d;
                    let q = ProbMask::new(8, 8, v).unwrap();
                    mean_over(
                        weighted_loss_matrix(&y, &q, &cfg).unwrap().data(),
                        &out.kept,
                    )
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let a = g.data()[i];
                let scale = a.abs().max(fd.abs());
                assert!(
                    (a - fd).abs() <= 1e-4 * scale || scale < 1e-12,
                    "pixel {i}: {a} vs {fd}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn loss_nonnegative_and_kept_size(
            bits in proptest::collection::vec(0u8..=1, 25),
            probs in proptest::collection::vec(0.0f64..=1.0, 25),
            w in 1.0f64..10.0,
            ratio in 0.01f64..=1.0,
        ) {
            let y = BinaryMask::from_bits(5, 5, &bits).unwrap();
            let p = ProbMask::new(5, 5, probs).unwrap();
            let cfg = LossConfig::new(w, ratio).unwrap();
            let out = eedm_loss(&y, &p, &cfg).unwrap();
            prop_assert!(out.loss.is_finite() && out.loss >= 0.0);
            prop_assert_eq!(out.kept.len(), kept_count(ratio, 25));
        }

        #[test]
        fn larger_edge_weight_never_lowers_loss(
            bits in proptest::collection::vec(0u8..=1, 25),
            probs in proptest::collection::vec(0.0f64..=1.0, 25),
            w in 1.0f64..6.0,
            extra in 0.0f64..4.0,
            ratio in 0.05f64..=1.0,
        ) {
            let y = BinaryMask::from_bits(5, 5, &bits).unwrap();
            let p = ProbMask::new(5, 5, probs).unwrap();
            let lo = eedm_loss(&y, &p, &LossConfig::new(w, ratio).unwrap()).unwrap().loss;
            let hi = eedm_loss(&y, &p, &LossConfig::new(w + extra, ratio).unwrap()).unwrap().loss;
            prop_assert!(hi >= lo - 1e-12);
        }

        #[test]
        fn gradient_sign_follows_label(
            bits in proptest::collection::vec(0u8..=1, 16),
            probs in proptest::collection::vec(0.001f64..0.999, 16),
        ) {
            let y = BinaryMask::from_bits(4, 4, &bits).unwrap();
            let p = ProbMask::new(4, 4, probs).unwrap();
            let cfg = LossConfig::default();
            let out = eedm_loss(&y, &p, &cfg).unwrap();
            let g = gradient_for_set(&y, &p, &cfg, &out.kept).unwrap();
            for &i in &out.kept {
                if y.data()[i] {
                    prop_assert!(g.data()[i] < 0.0);
                } else {
                    prop_assert!(g.data()[i] > 0.0);
                }
            }
        }
    }
}
