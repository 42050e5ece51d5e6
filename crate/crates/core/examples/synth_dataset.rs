//! Generates a small dataset on disk and summarizes what went into it.

use fest::synth::{gen_dataset, write_dataset, DatasetTemplate};

fn main() -> fest::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let template = DatasetTemplate::default();
    let cases = gen_dataset(&template, 20, 42)?;

    let peaks: Vec<f64> = cases
        .iter()
        .flat_map(|c| c.spec.targets.iter().map(|t| t.peak))
        .collect();
    let weak = peaks.iter().filter(|&&p| p < 0.5).count();
    let clutter: usize = cases.iter().map(|c| c.spec.clutter.len()).sum();
    println!(
        "{} scenes, {} targets ({weak} below 0.5), {clutter} clutter blobs",
        cases.len(),
        peaks.len()
    );

    match out {
        Some(dir) => {
            write_dataset(&dir, &cases)?;
            println!("written to {}", dir.display());
        }
        None => println!("pass a directory to write gt/, prob/, img/ and manifest.json"),
    }
    Ok(())
}
