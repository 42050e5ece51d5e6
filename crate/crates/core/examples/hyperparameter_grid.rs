//! Trains one toy model per (w, p) on a small grid and prints the CSV.

use fest::commands::{grid, write_grid_csv, GridSettings};
use fest::synth::{gen_dataset, DatasetTemplate};
use fest::toymodel::TrainConfig;

fn main() -> fest::Result<()> {
    let cases = gen_dataset(&DatasetTemplate::default().with_size(48, 48), 24, 5)?;
    let images: Vec<_> = cases.iter().map(|c| c.image.clone()).collect();
    let gts: Vec<_> = cases.iter().map(|c| c.gt.clone()).collect();
    let settings = GridSettings {
        ws: vec![1.0, 4.0, 7.0],
        ps: vec![0.1, 0.5, 1.0],
        train: TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        },
        ..GridSettings::default()
    };
    write_grid_csv(std::io::stdout().lock(), &grid(&images, &gts, &settings)?)
}
