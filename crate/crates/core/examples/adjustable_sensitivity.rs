//! Dual-threshold post-processing: strong targets keep their shape, weak ones
//! are reduced to a centroid pixel.

use fest::sensitivity::{apply_as, binarize, AsConfig, InjectionStyle};
use fest::ProbMask;

fn main() -> fest::Result<()> {
    let prob = ProbMask::new(1, 7, vec![0.0, 0.9, 0.0, 0.0, 0.2, 0.2, 0.0])?;
    let cfg = AsConfig::new(0.3, 0.1)?;
    let out = apply_as(&prob, &cfg)?;
    println!("th1 only   {:?}", binarize(&prob, 0.3)?.to_bits());
    println!("th1 + th2  {:?}", out.mask.to_bits());
    for t in &out.targets {
        println!(
            "  {:6} pixels {} centroid ({:.1}, {:.1}) peak {:.2}",
            t.class.as_str(),
            t.pixel_count,
            t.centroid_row,
            t.centroid_col,
            t.peak
        );
    }

    let faint = ProbMask::from_fn(9, 9, |r, c| {
        if (3..6).contains(&r) && (3..6).contains(&c) {
            0.2
        } else {
            0.0
        }
    })?;
    for style in [InjectionStyle::SinglePixel, InjectionStyle::Cross] {
        let out = apply_as(&faint, &cfg.with_injection(style))?;
        println!(
            "{style:?}: {} pixels injected for {} weak target",
            out.mask.count(),
            out.weak_count()
        );
    }
    Ok(())
}
