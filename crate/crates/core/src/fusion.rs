//! Multi-scale inference: resample the input to each square scale, run an
//! external predictor, resample every prediction back to the original size
//! and reduce pixel-wise.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, GrayImage, ProbMask, UnitGrid};

/// Center-aligned bilinear resampling.
///
/// Destination index `d` maps to source coordinate
/// `(d + 0.5) * src_len / dst_len - 0.5`, clamped to `[0, src_len - 1]`.
pub fn resample_bilinear<G: UnitGrid>(grid: &G, out_h: usize, out_w: usize) -> Result<G> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::ZeroDimension {
            height: out_h,
            width: out_w,
        });
    }
    let (in_h, in_w) = grid.dims();
    if (in_h, in_w) == (out_h, out_w) {
        return Ok(grid.clone());
    }
    let src = grid.as_slice();
    let rows = axis_taps(in_h, out_h);
    let cols = axis_taps(in_w, out_w);
    let mut data = Vec::with_capacity(out_h * out_w);
    for &(r0, r1, ty) in &rows {
        for &(c0, c1, tx) in &cols {
            let a = src[r0 * in_w + c0];
            let b = src[r0 * in_w + c1];
            let c = src[r1 * in_w + c0];
            let d = src[r1 * in_w + c1];
            // lerp as a + t*(b - a) so constant inputs stay exact
            let top = a + tx * (b - a);
            let bottom = c + tx * (d - c);
            data.push((top + ty * (bottom - top)).clamp(0.0, 1.0));
        }
    }
    G::from_vec(out_h, out_w, data)
}

fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let max = (src_len - 1) as f64;
    (0..dst_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    #[default]
    Mean,
    Max,
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FusionMode::Mean),
            "max" => Ok(FusionMode::Max),
            other => Err(Error::InvalidConfig(format!(
                "fusion mode must be mean or max, got {other:?}"
            ))),
        }
    }
}

/// Pixel-wise reduction of equally sized probability maps.
///
/// The mean is computed over the per-pixel values in sorted order, so the
/// result does not depend on the order of `maps`.
pub fn fuse(maps: &[ProbMask], mode: FusionMode) -> Result<ProbMask> {
    let first = maps.first().ok_or(Error::Empty("no maps to fuse"))?;
    for m in &maps[1..] {
        ensure_same_dims(first.dims(), m.dims())?;
    }
    let (h, w) = first.dims();
    let n = maps.len();
    let mut column = vec![0.0; n];
    let data = (0..h * w)
        .map(|i| {
            for (slot, m) in column.iter_mut().zip(maps) {
                *slot = m.data()[i];
            }
            match mode {
                FusionMode::Max => column.iter().copied().fold(0.0, f64::max),
                FusionMode::Mean => {
                    column.sort_unstable_by(f64::total_cmp);
                    let mean = column.iter().sum::<f64>() / n as f64;
                    mean.clamp(column[0], column[n - 1])
                }
            }
        })
        .collect();
    ProbMask::new(h, w, data)
}

/// Nonempty set of distinct square side lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleSet(Vec<usize>);

impl ScaleSet {
    pub fn new(scales: Vec<usize>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidConfig("scale set is empty".into()));
        }
        if scales.contains(&0) {
            return Err(Error::InvalidConfig("scales must be positive".into()));
        }
        let unique: BTreeSet<_> = scales.iter().collect();
        if unique.len() != scales.len() {
            return Err(Error::InvalidConfig(format!(
                "duplicate scales in {scales:?}"
            )));
        }
        Ok(Self(scales))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl std::str::FromStr for ScaleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let scales = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidConfig(format!("bad scale {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ScaleSet::new(scales)
    }
}

/// Source of single-scale probability maps.
///
/// Implementations receive the image already resampled to `scale x scale`
/// and must return a mask of the same size.
pub trait Predictor: Sync {
    fn predict(&self, image_id: &str, image: &GrayImage, scale: usize) -> Result<ProbMask>;
}

/// Reads precomputed predictions from `<root>/<image-id>/<scale>.pgm`.
#[derive(Debug, Clone)]
pub struct DirPredictor {
    root: PathBuf,
}

impl DirPredictor {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path_for(&self, image_id: &str, scale: usize) -> PathBuf {
        self.root.join(image_id).join(format!("{scale}.pgm"))
    }
}

impl Predictor for DirPredictor {
    fn predict(&self, image_id: &str, _image: &GrayImage, scale: usize) -> Result<ProbMask> {
        ProbMask::read(&self.path_for(image_id, scale)).map_err(|e| Error::Predictor {
            scale,
            reason: e.to_string(),
        })
    }
}

/// Runs `program [args..] <in.pgm> <out.pgm>` once per scale.
///
/// The input is written as an 8-bit PGM; the command must write a 16-bit
/// probability PGM to the output path.
#[derive(Debug, Clone)]
pub struct CommandPredictor {
    program: String,
    args: Vec<String>,
}

impl CommandPredictor {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    /// Splits a command line on whitespace.
    pub fn parse(command_line: &str) -> Result<Self> {
        let mut parts = command_line.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidConfig("empty predictor command".into()))?;
        Ok(Self::new(program, parts.collect()))
    }
}

impl Predictor for CommandPredictor {
    fn predict(&self, image_id: &str, image: &GrayImage, scale: usize) -> Result<ProbMask> {
        let fail = |reason: String| Error::Predictor { scale, reason };
        let dir = tempfile::tempdir().map_err(|e| fail(e.to_string()))?;
        let input = dir.path().join(format!("{image_id}_{scale}_in.pgm"));
        let output = dir.path().join(format!("{image_id}_{scale}_out.pgm"));
        image.write(&input).map_err(|e| fail(e.to_string()))?;
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(&input)
            .arg(&output)
            .status()
            .map_err(|e| fail(format!("cannot run {}: {e}", self.program)))?;
        if !status.success() {
            return Err(fail(format!("{} exited with {status}", self.program)));
        }
        ProbMask::read(&output).map_err(|e| fail(e.to_string()))
    }
}

/// Adapts a closure into a [`Predictor`].
pub struct FnPredictor<F>(pub F);

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&GrayImage, usize) -> Result<ProbMask> + Sync,
{
    fn predict(&self, _image_id: &str, image: &GrayImage, scale: usize) -> Result<ProbMask> {
        (self.0)(image, scale)
    }
}

/// Predicts at every scale and fuses the results at the original size.
///
/// Scales run concurrently; the reduction happens after all of them finish.
pub fn run_multiscale(
    image_id: &str,
    image: &GrayImage,
    scales: &ScaleSet,
    predictor: &dyn Predictor,
    mode: FusionMode,
) -> Result<ProbMask> {
    let (h, w) = image.dims();
    let maps = scales
        .as_slice()
        .par_iter()
        .map(|&s| {
            let scaled = resample_bilinear(image, s, s)?;
            let pred = predictor.predict(image_id, &scaled, s)?;
            if pred.dims() != (s, s) {
                return Err(Error::Predictor {
                    scale: s,
                    reason: format!("returned {:?}, expected {s}x{s}", pred.dims()),
                });
            }
            resample_bilinear(&pred, h, w)
        })
        .collect::<Result<Vec<_>>>()?;
    fuse(&maps, mode)
}

/// Image id used by the directory predictor: the file stem.
pub fn image_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
