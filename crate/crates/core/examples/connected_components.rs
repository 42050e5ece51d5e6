//! Labels a small mask with 4- and 8-connectivity and prints component stats.

use fest::ccl::{label_components, Connectivity};
use fest::BinaryMask;

fn main() -> fest::Result<()> {
    let rows = ["##....#", "##...#.", "......#", "..#....", ".#.#..."];
    let mask = BinaryMask::from_fn(rows.len(), rows[0].len(), |r, c| {
        rows[r].as_bytes()[c] == b'#'
    })?;

    for conn in [Connectivity::Four, Connectivity::Eight] {
        let lm = label_components(&mask, conn);
        println!("{conn:?}: {} components", lm.len());
        for c in lm.components() {
            println!(
                "  id {} size {} centroid ({:.2}, {:.2}) rows {}..={}",
                c.id, c.pixel_count, c.centroid_row, c.centroid_col, c.bbox.min_row, c.bbox.max_row
            );
        }
    }
    Ok(())
}
