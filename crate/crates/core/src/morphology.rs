//! Connected components, per-lesion records and diameter opening of masks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::volume::{BinaryMask3D, Field3D, Geometry};

/// Voxel adjacency: face (6), face+edge (18) or face+edge+corner (26).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Connectivity {
    Six,
    Eighteen,
    #[default]
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            other => Err(Error::InvalidParameter(format!(
                "connectivity must be 6, 18 or 26, got {other}"
            ))),
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }

    /// Whether two distinct voxels at the given offset are adjacent.
    pub fn adjacent(self, d: [i64; 3]) -> bool {
        let nonzero = d.iter().filter(|&&c| c != 0).count();
        let unit = d.iter().all(|c| c.abs() <= 1);
        unit && match self {
            Connectivity::Six => nonzero == 1,
            Connectivity::Eighteen => (1..=2).contains(&nonzero),
            Connectivity::TwentySix => nonzero >= 1,
        }
    }

    pub fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::with_capacity(26);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if self.adjacent([dx, dy, dz]) {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Integer labels of connected components; 0 is background and labels run
/// `1..=n_components` in order of first encounter in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap3D {
    pub labels: Field3D<u32>,
    pub n_components: usize,
}

impl LabelMap3D {
    pub fn geometry(&self) -> &Geometry {
        self.labels.geometry()
    }
}

/// Labels the connected components of `mask` by breadth-first flood fill.
pub fn connected_components(mask: &BinaryMask3D, connectivity: Connectivity) -> LabelMap3D {
    let g = mask.geometry();
    let [nx, ny, nz] = g.dims;
    let src = mask.data();
    let offsets = connectivity.offsets();
    let mut labels = vec![0u32; src.len()];
    let mut queue: Vec<usize> = Vec::new();
    let mut next = 0u32;
    for seed in 0..src.len() {
        if !src[seed] || labels[seed] != 0 {
            continue;
        }
        next += 1;
        labels[seed] = next;
        queue.clear();
        queue.push(seed);
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            let [x, y, z] = g.coords(i);
            for &[dx, dy, dz] in &offsets {
                let (xx, yy, zz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                if xx < 0
                    || yy < 0
                    || zz < 0
                    || xx >= nx as i64
                    || yy >= ny as i64
                    || zz >= nz as i64
                {
                    continue;
                }
                let j = g.index(xx as usize, yy as usize, zz as usize);
                if src[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push(j);
                }
            }
        }
    }
    LabelMap3D {
        labels: Field3D::new(g.clone(), labels).expect("label buffer has the mask's length"),
        n_components: next as usize,
    }
}

/// Size and extent of one component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LesionRecord {
    pub label: u32,
    pub voxel_count: usize,
    /// `voxel_count · sx·sy·sz / 1000`.
    pub volume_ml: f64,
    /// Bounding-box side lengths in voxels.
    pub bbox_extent: [usize; 3],
    pub bbox_min: [usize; 3],
    /// Mean voxel coordinate.
    pub centroid: [f64; 3],
}

impl LesionRecord {
    /// Largest bounding-box side, the "diameter" used by [`diameter_opening`].
    pub fn diameter(&self) -> usize {
        *self.bbox_extent.iter().max().unwrap_or(&0)
    }
}

/// One record per component of a label map, in label order.
pub fn lesion_records(labels: &LabelMap3D) -> Vec<LesionRecord> {
    let g = labels.geometry();
    let n = labels.n_components;
    let mut count = vec![0usize; n];
    let mut lo = vec![[usize::MAX; 3]; n];
    let mut hi = vec![[0usize; 3]; n];
    let mut sum = vec![[0.0f64; 3]; n];
    for (i, &l) in labels.labels.data().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let k = (l - 1) as usize;
        let c = g.coords(i);
        count[k] += 1;
        for a in 0..3 {
            lo[k][a] = lo[k][a].min(c[a]);
            hi[k][a] = hi[k][a].max(c[a]);
            sum[k][a] += c[a] as f64;
        }
    }
    let voxel_ml = g.voxel_volume_mm3() / 1000.0;
    (0..n)
        .map(|k| LesionRecord {
            label: k as u32 + 1,
            voxel_count: count[k],
            volume_ml: count[k] as f64 * voxel_ml,
            bbox_extent: std::array::from_fn(|a| hi[k][a] - lo[k][a] + 1),
            bbox_min: lo[k],
            centroid: std::array::from_fn(|a| sum[k][a] / count[k] as f64),
        })
        .collect()
}

/// Components of `mask` with their records.
pub fn lesion_table(mask: &BinaryMask3D, connectivity: Connectivity) -> Vec<LesionRecord> {
    lesion_records(&connected_components(mask, connectivity))
}

/// Total lesion volume of a table in mL.
pub fn total_volume_ml(records: &[LesionRecord]) -> f64 {
    records.iter().map(|r| r.volume_ml).sum()
}

/// Default minimum lesion diameter in voxels.
pub const DEFAULT_MIN_DIAMETER: usize = 5;

/// Removes every component whose largest bounding-box side is shorter than
/// `min_diameter` voxels; the remaining voxels are untouched.
pub fn diameter_opening(
    mask: &BinaryMask3D,
    min_diameter: usize,
    connectivity: Connectivity,
) -> Result<BinaryMask3D> {
    if min_diameter < 1 {
        return Err(Error::InvalidParameter(
            "minimum diameter must be at least 1 voxel".into(),
        ));
    }
    let labels = connected_components(mask, connectivity);
    let keep: Vec<bool> = lesion_records(&labels)
        .iter()
        .map(|r| r.diameter() >= min_diameter)
        .collect();
    Ok(labels.labels.map(|&l| l != 0 && keep[(l - 1) as usize]))
}
