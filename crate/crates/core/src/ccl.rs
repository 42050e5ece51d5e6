//! Connected-component labeling and per-component geometry.
//!
//! Labeling is a two-pass union-find scan, so arbitrarily large masks never
//! recurse. Component ids are `1..=K`, assigned in raster-scan order of each
//! component's first pixel; `0` is background.

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask};

/// Pixel adjacency used when grouping foreground pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4" => Ok(Connectivity::Four),
            "8" => Ok(Connectivity::Eight),
            other => Err(Error::InvalidConfig(format!(
                "connectivity must be 4 or 8, got {other:?}"
            ))),
        }
    }
}

/// Inclusive pixel bounds of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStat {
    pub id: u32,
    pub pixel_count: usize,
    pub centroid_row: f64,
    pub centroid_col: f64,
    pub bbox: BoundingBox,
}

impl ComponentStat {
    pub fn centroid(&self) -> (f64, f64) {
        (self.centroid_row, self.centroid_col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    connectivity: Connectivity,
    labels: Vec<u32>,
    components: Vec<ComponentStat>,
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller provisional label wins; keeps roots at first-seen labels
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }

    fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }
}

/// Labels the foreground of `mask`.
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (height, width) = mask.dims();
    let fg = mask.data();
    let mut provisional = vec![0u32; fg.len()];
    // index 0 is the background sentinel
    let mut sets = DisjointSet { parent: vec![0] };

    for r in 0..height {
        for c in 0..width {
            let idx = r * width + c;
            if !fg[idx] {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut n = 0;
            if c > 0 && fg[idx - 1] {
                neighbours[n] = provisional[idx - 1];
                n += 1;
            }
            if r > 0 {
                let up = idx - width;
                if fg[up] {
                    neighbours[n] = provisional[up];
                    n += 1;
                }
                if connectivity == Connectivity::Eight {
                    if c > 0 && fg[up - 1] {
                        neighbours[n] = provisional[up - 1];
                        n += 1;
                    }
                    if c + 1 < width && fg[up + 1] {
                        neighbours[n] = provisional[up + 1];
                        n += 1;
                    }
                }
            }
            provisional[idx] = match neighbours[..n].iter().min() {
                None => sets.push(),
                Some(&min) => {
                    for &l in &neighbours[..n] {
                        sets.union(min, l);
                    }
                    min
                }
            };
        }
    }

    // Second pass: compact roots to 1..=K in order of first appearance and
    // accumulate geometry.
    let mut final_id = vec![0u32; sets.parent.len()];
    let mut labels = vec![0u32; fg.len()];
    let mut sums: Vec<(usize, u64, u64, BoundingBox)> = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let idx = r * width + c;
            if !fg[idx] {
                continue;
            }
            let root = sets.find(provisional[idx]) as usize;
            if final_id[root] == 0 {
                sums.push((
                    0,
                    0,
                    0,
                    BoundingBox {
                        min_row: r,
                        min_col: c,
                        max_row: r,
                        max_col: c,
                    },
                ));
                final_id[root] = sums.len() as u32;
            }
            let id = final_id[root];
            labels[idx] = id;
            let entry = &mut sums[id as usize - 1];
            entry.0 += 1;
            entry.1 += r as u64;
            entry.2 += c as u64;
            let bb = &mut entry.3;
            bb.min_row = bb.min_row.min(r);
            bb.min_col = bb.min_col.min(c);
            bb.max_row = bb.max_row.max(r);
            bb.max_col = bb.max_col.max(c);
        }
    }

    let components = sums
        .into_iter()
        .enumerate()
        .map(|(i, (count, sr, sc, bbox))| ComponentStat {
            id: i as u32 + 1,
            pixel_count: count,
            centroid_row: sr as f64 / count as f64,
            centroid_col: sc as f64 / count as f64,
            bbox,
        })
        .collect();

    LabelMap {
        height,
        width,
        connectivity,
        labels,
        components,
    }
}

impl LabelMap {
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn connectivity(&self) -> Connectivity {
        self.connectivity
    }

    /// Row-major component ids, `0` for background.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn components(&self) -> &[ComponentStat] {
        &self.components
    }

    /// Number of components `K`.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, id: u32) -> Result<&ComponentStat> {
        if id == 0 || id as usize > self.components.len() {
            return Err(Error::UnknownComponent {
                id,
                count: self.components.len(),
            });
        }
        Ok(&self.components[id as usize - 1])
    }

    /// Indicator mask of component `id`.
    pub fn component_mask(&self, id: u32) -> Result<BinaryMask> {
        self.component(id)?;
        BinaryMask::new(
            self.height,
            self.width,
            self.labels.iter().map(|&l| l == id).collect(),
        )
    }

    /// Mean `(row, col)` of the component's pixels.
    pub fn centroid(&self, id: u32) -> Result<(f64, f64)> {
        self.component(id).map(ComponentStat::centroid)
    }

    /// Row-major pixel indices belonging to each component, indexed by `id - 1`.
    pub fn pixel_lists(&self) -> Vec<Vec<usize>> {
        let mut lists: Vec<Vec<usize>> = self
            .components
            .iter()
            .map(|c| Vec::with_capacity(c.pixel_count))
            .collect();
        for (idx, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                lists[l as usize - 1].push(idx);
            }
        }
        lists
    }
}

/// True iff some pixel is set in both masks.
pub fn overlaps(a: &BinaryMask, b: &BinaryMask) -> Result<bool> {
    ensure_same_dims(a.dims(), b.dims())?;
    Ok(a.data().iter().zip(b.data()).any(|(&x, &y)| x && y))
}
