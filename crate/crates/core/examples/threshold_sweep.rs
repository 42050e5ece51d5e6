//! Sweeps th1 alone and th1 with th2 over a generated dataset and prints the
//! CSV table.

use fest::commands::{sweep, write_sweep_csv};
use fest::metrics::{MatchConfig, ScoreConfig};
use fest::sensitivity::InjectionStyle;
use fest::synth::{gen_dataset, DatasetTemplate};

fn main() -> fest::Result<()> {
    let cases = gen_dataset(&DatasetTemplate::default(), 200, 42)?;
    let probs: Vec<_> = cases.iter().map(|c| c.prob.clone()).collect();
    let gts: Vec<_> = cases.iter().map(|c| c.gt.clone()).collect();
    let rows = sweep(
        &probs,
        &gts,
        &[0.5, 0.45, 0.4, 0.35, 0.3],
        &[None, Some(0.1)],
        InjectionStyle::SinglePixel,
        &MatchConfig::default(),
        &ScoreConfig::default(),
    )?;
    write_sweep_csv(std::io::stdout().lock(), &rows)
}
