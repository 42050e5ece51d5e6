//! Pd and Fa over 99 binarization thresholds.

use fest::commands::write_roc_csv;
use fest::metrics::{default_thresholds, roc_sweep, MatchConfig};
use fest::synth::{gen_dataset, DatasetTemplate};

fn main() -> fest::Result<()> {
    let cases = gen_dataset(&DatasetTemplate::default(), 100, 42)?;
    let probs: Vec<_> = cases.iter().map(|c| c.prob.clone()).collect();
    let gts: Vec<_> = cases.iter().map(|c| c.gt.clone()).collect();
    let points = roc_sweep(
        &probs,
        &gts,
        &default_thresholds(99),
        &MatchConfig::default(),
    )?;
    write_roc_csv(std::io::stdout().lock(), &points)
}
