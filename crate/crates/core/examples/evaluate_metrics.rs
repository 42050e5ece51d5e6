//! IoU, Pd, Fa and score on generated scenes, plus score arithmetic on fixed
//! metric triples.

use fest::metrics::{evaluate, score, MatchConfig, ScoreConfig};
use fest::sensitivity::binarize;
use fest::synth::{gen_dataset, DatasetTemplate};

fn main() -> fest::Result<()> {
    let cases = gen_dataset(&DatasetTemplate::default(), 50, 42)?;
    let preds = cases
        .iter()
        .map(|c| binarize(&c.prob, 0.5))
        .collect::<fest::Result<Vec<_>>>()?;
    let gts: Vec<_> = cases.iter().map(|c| c.gt.clone()).collect();
    let report = evaluate(
        &preds,
        &gts,
        &MatchConfig::default(),
        &ScoreConfig::default(),
    )?;
    println!(
        "IoU {:.2}%  Pd {:.2}%  Fa {:.2}e-6  score {}",
        report.iou * 100.0,
        report.pd * 100.0,
        report.fa * 1e6,
        report
            .score
            .map(|s| format!("{:.2}%", s * 100.0))
            .unwrap_or_else(|| "invalid".into())
    );

    let cfg = ScoreConfig::default();
    println!(
        "score(64.22%, 80.29%, 20.57e-6) = {:?}",
        score(0.6422, 0.8029, 20.57e-6, &cfg)
    );
    println!(
        "score(61.42%, 89.98%, 28.11e-6) = {:?}",
        score(0.6142, 0.8998, 28.11e-6, &cfg)
    );
    println!(
        "score with Fa 138.46e-6         = {:?}",
        score(0.6422, 0.8029, 138.46e-6, &cfg)
    );
    Ok(())
}
