//! Edge-weighted, hard-pixel-mined loss on a 1x4 strip and a blob, with its
//! gradient and the plain cross-entropy it reduces to.

use fest::eedm::{
    dm_loss, ee_loss, eedm_gradient, eedm_loss, extract_edge_map, mean_bce, LossConfig, DEFAULT_EPS,
};
use fest::{BinaryMask, ProbMask};

fn main() -> fest::Result<()> {
    let y = BinaryMask::from_bits(1, 4, &[1, 0, 1, 0])?;
    let yhat = ProbMask::new(1, 4, vec![0.8, 0.2, 0.1, 0.3])?;
    let cfg = LossConfig::new(4.0, 0.5)?;
    let out = eedm_loss(&y, &yhat, &cfg)?;
    println!("per-pixel weighted loss {:?}", out.weighted.data());
    println!("kept {:?} -> loss {:.4}", out.kept, out.loss);
    println!("gradient {:?}", eedm_gradient(&y, &yhat, &cfg)?.data());

    let blob = BinaryMask::from_fn(7, 7, |r, c| (1..6).contains(&r) && (1..6).contains(&c))?;
    let edges = extract_edge_map(&blob);
    println!(
        "5x5 blob: {} foreground pixels, {} on the edge",
        blob.count(),
        edges.count()
    );

    let pred = ProbMask::from_fn(7, 7, |r, c| if blob.get(r, c) { 0.7 } else { 0.1 })?;
    println!("bce {:.6}", mean_bce(&blob, &pred, DEFAULT_EPS)?);
    println!(
        "ee(w=4) {:.6}  dm(p=0.3) {:.6}",
        ee_loss(&blob, &pred, 4.0)?,
        dm_loss(&blob, &pred, 0.3)?
    );
    println!(
        "eedm(1,1) {:.6}",
        eedm_loss(&blob, &pred, &LossConfig::new(1.0, 1.0)?)?.loss
    );
    Ok(())
}
