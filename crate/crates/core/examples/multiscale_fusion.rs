//! Multi-scale inference with an in-process predictor, then mean and max
//! fusion at the original size.

use fest::fusion::{resample_bilinear, run_multiscale, FnPredictor, FusionMode, ScaleSet};
use fest::{GrayImage, ProbMask};

fn main() -> fest::Result<()> {
    let image = GrayImage::from_fn(48, 64, |r, c| {
        let d2 = (r as f64 - 20.0).powi(2) + (c as f64 - 30.0).powi(2);
        0.1 + 0.8 * (-d2 / 8.0).exp()
    })?;

    // a stand-in detector: brightness above the background, squashed to [0, 1]
    let predictor = FnPredictor(|img: &GrayImage, _scale: usize| {
        ProbMask::from_fn(img.height(), img.width(), |r, c| {
            ((img.get(r, c) - 0.1) / 0.8).clamp(0.0, 1.0)
        })
    });

    let scales: ScaleSet = "32,48,96".parse()?;
    for mode in [FusionMode::Mean, FusionMode::Max] {
        let fused = run_multiscale("demo", &image, &scales, &predictor, mode)?;
        let peak = fused.data().iter().copied().fold(0.0, f64::max);
        println!(
            "{mode:?}: {:?} peak {peak:.4} at (20, 30) {:.4}",
            fused.dims(),
            fused.get(20, 30)
        );
    }

    let up = resample_bilinear(&ProbMask::new(1, 2, vec![0.0, 1.0])?, 1, 3)?;
    println!("1x2 -> 1x3 bilinear: {:?}", up.data());
    Ok(())
}
