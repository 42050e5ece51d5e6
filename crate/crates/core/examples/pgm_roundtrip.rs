//! Writes each raster type as binary PGM, reads it back and compares.

use fest::raster::{read_header, BinaryMask, GrayImage, ProbMask};

fn main() -> fest::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");

    let prob = ProbMask::from_fn(4, 6, |r, c| (r * 6 + c) as f64 / 23.0)?;
    let path = dir.path().join("prob.pgm");
    prob.write(&path)?;
    let back = ProbMask::read(&path)?;
    let worst = prob
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let h = read_header(&path)?;
    println!(
        "prob map {}x{} maxval {}: worst quantization error {worst:.2e}",
        h.height, h.width, h.maxval
    );

    let mask = BinaryMask::from_fn(3, 5, |r, c| (r + c) % 2 == 0)?;
    let path = dir.path().join("mask.pgm");
    mask.write(&path)?;
    println!(
        "binary mask round trip exact: {}",
        BinaryMask::read(&path)? == mask
    );

    let img = GrayImage::from_fn(2, 3, |r, c| (r + c) as f64 / 3.0)?;
    let path = dir.path().join("img.pgm");
    img.write(&path)?;
    println!(
        "gray image bytes on disk: {}",
        std::fs::read(&path).expect("read").len()
    );
    Ok(())
}
