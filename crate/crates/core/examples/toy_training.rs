//! Trains the logistic toy segmenter with each loss and compares them on a
//! held-out set.

use fest::commands::eval_toy;
use fest::metrics::{MatchConfig, ScoreConfig};
use fest::synth::{gen_dataset, DatasetTemplate};
use fest::toymodel::{train, LossKind, TrainConfig, TrainingSet};

fn main() -> fest::Result<()> {
    let template = DatasetTemplate::default().with_size(64, 64);
    let train_cases = gen_dataset(&template, 40, 9)?;
    let test_cases = gen_dataset(&template, 40, 10)?;
    let set = TrainingSet::from_cases(&train_cases)?;
    let images: Vec<_> = test_cases.iter().map(|c| c.image.clone()).collect();
    let gts: Vec<_> = test_cases.iter().map(|c| c.gt.clone()).collect();

    for loss in [LossKind::Bce, LossKind::Ee, LossKind::Dm, LossKind::Eedm] {
        let model = train(
            &set,
            &TrainConfig {
                loss,
                ..TrainConfig::default()
            },
        )?;
        let r = eval_toy(
            &model,
            &images,
            &gts,
            0.5,
            &MatchConfig::default(),
            &ScoreConfig::default(),
        )?;
        println!(
            "{:4}: loss {:.4} -> {:.4}  IoU {:.2}%  Pd {:.2}%  Fa {:.1}e-6  weighted {:.2}%",
            loss.as_str(),
            model.initial_loss().unwrap_or(f64::NAN),
            model.final_loss().unwrap_or(f64::NAN),
            r.iou * 100.0,
            r.pd * 100.0,
            r.fa * 1e6,
            r.raw_score(0.5) * 100.0
        );
    }
    Ok(())
}
