//! Voxel grids and the elementary transforms shared by the rest of the crate.
//!
//! All fields are stored densely in x-fastest order: the voxel `(x, y, z)`
//! lives at `x + nx * (y + ny * z)`. The affine maps voxel indices to world
//! millimetres; volumes are never reoriented, so two fields can be compared
//! voxel-by-voxel whenever their dims and spacing agree.

use crate::error::{Error, Result};

pub type Affine = [[f64; 4]; 4];

/// Relative tolerance used when deciding whether two spacings are the same grid.
const SPACING_RTOL: f64 = 1e-5;

/// Dimensions, voxel size and orientation of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub affine: Affine,
}

impl Geometry {
    /// Grid with an axis-aligned affine built from `spacing`.
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::with_affine(dims, spacing, scaling_affine(spacing))
    }

    pub fn with_affine(dims: [usize; 3], spacing: [f64; 3], affine: Affine) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        if dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .is_none()
        {
            return Err(Error::InvalidParameter(format!("dims {dims:?} overflow")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            affine,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Maps continuous voxel coordinates to world coordinates through the affine.
    pub fn voxel_to_world(&self, v: [f64; 3]) -> [f64; 3] {
        let a = &self.affine;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = a[r][0] * v[0] + a[r][1] * v[1] + a[r][2] * v[2] + a[r][3];
        }
        out
    }

    /// Same dims and (to a small relative tolerance) the same spacing.
    pub fn same_grid(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && self
                .spacing
                .iter()
                .zip(other.spacing.iter())
                .all(|(a, b)| (a - b).abs() <= SPACING_RTOL * a.abs().max(b.abs()))
    }

    pub fn ensure_same_grid(&self, other: &Geometry) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "dims {:?} spacing {:?} vs dims {:?} spacing {:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )))
        }
    }
}

/// Diagonal affine with the given voxel sizes and zero translation.
pub fn scaling_affine(spacing: [f64; 3]) -> Affine {
    [
        [spacing[0], 0.0, 0.0, 0.0],
        [0.0, spacing[1], 0.0, 0.0],
        [0.0, 0.0, spacing[2], 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// A dense field of values on a [`Geometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field3D<T> {
    geom: Geometry,
    data: Vec<T>,
}

/// Scalar intensity volume.
pub type Volume3D = Field3D<f64>;

/// Binary segmentation or ground-truth mask.
pub type BinaryMask3D = Field3D<bool>;

impl<T> Field3D<T> {
    pub fn new(geom: Geometry, data: Vec<T>) -> Result<Self> {
        if data.len() != geom.len() {
            return Err(Error::InvalidParameter(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                geom.dims
            )));
        }
        Ok(Self { geom, data })
    }

    pub fn from_fn(geom: Geometry, mut f: impl FnMut([usize; 3]) -> T) -> Self {
        let data = (0..geom.len()).map(|i| f(geom.coords(i))).collect();
        Self { geom, data }
    }

    #[inline]
    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.geom.dims
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        self.geom.spacing
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> &T {
        &self.data[self.geom.index(x, y, z)]
    }

    /// Field of a different value type on the same grid.
    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Field3D<U> {
        Field3D {
            geom: self.geom.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Replaces the geometry, keeping the voxel data.
    pub fn with_geometry(self, geom: Geometry) -> Result<Self> {
        Field3D::new(geom, self.data)
    }
}

impl Field3D<f64> {
    pub fn filled(geom: Geometry, value: f64) -> Self {
        let data = vec![value; geom.len()];
        Self { geom, data }
    }
}

impl Field3D<bool> {
    pub fn empty(geom: Geometry) -> Self {
        let data = vec![false; geom.len()];
        Self { geom, data }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        self.map(|&b| !b)
    }

    /// Linear indices of the true voxels, in storage order.
    pub fn true_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Number of voxels true in both masks.
    pub fn intersection_count(&self, other: &Self) -> usize {
        self.data
            .iter()
            .zip(other.data.iter())
            .filter(|(&a, &b)| a && b)
            .count()
    }

    /// Mask as 0/1 intensities.
    pub fn to_volume(&self) -> Volume3D {
        self.map(|&b| if b { 1.0 } else { 0.0 })
    }
}

/// A field of probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap3D(Field3D<f64>);

impl ProbabilityMap3D {
    pub fn new(field: Field3D<f64>) -> Result<Self> {
        if let Some((i, v)) = field
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidParameter(format!(
                "probability {v} at voxel {i} outside [0, 1]"
            )));
        }
        Ok(Self(field))
    }

    /// Hard 0/1 probabilities from a mask.
    pub fn from_mask(mask: &BinaryMask3D) -> Self {
        Self(mask.to_volume())
    }

    pub fn field(&self) -> &Field3D<f64> {
        &self.0
    }

    pub fn geometry(&self) -> &Geometry {
        self.0.geometry()
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn into_field(self) -> Field3D<f64> {
        self.0
    }
}

/// Default binarization threshold applied to model probability outputs.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Thresholds a probability map; a voxel is foreground iff `p >= threshold`.
pub fn binarize(prob: &ProbabilityMap3D, threshold: f64) -> Result<BinaryMask3D> {
    threshold_volume(prob.field(), threshold)
}

/// Same rule as [`binarize`] applied to an arbitrary scalar field, e.g. a
/// prediction file read from disk that may hold either probabilities or 0/1 labels.
pub fn threshold_volume(vol: &Volume3D, threshold: f64) -> Result<BinaryMask3D> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(vol.map(|&p| p >= threshold))
}

/// Interpolation used by [`resample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Trilinear,
    Nearest,
}

/// Per-axis sample positions: continuous input index for each output index.
fn sample_positions(n_in: usize, s_in: f64, s_out: f64) -> (usize, Vec<f64>) {
    let n_out = ((n_in as f64) * s_in / s_out).round().max(1.0) as usize;
    let ratio = s_out / s_in;
    let pos = (0..n_out)
        .map(|j| ((j as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n_in - 1) as f64))
        .collect();
    (n_out, pos)
}

/// Linear interpolation taps `(lo, hi, weight_of_hi)` for each position.
fn linear_taps(pos: &[f64], n_in: usize) -> Vec<(usize, usize, f64)> {
    pos.iter()
        .map(|&p| {
            let lo = p.floor() as usize;
            let hi = (lo + 1).min(n_in - 1);
            (lo, hi, p - lo as f64)
        })
        .collect()
}

fn nearest_taps(pos: &[f64], n_in: usize) -> Vec<usize> {
    pos.iter()
        .map(|&p| ((p + 0.5).floor() as usize).min(n_in - 1))
        .collect()
}

/// Output geometry of a resampling: voxel centres sit at `(j + 1/2)·s_out` in
/// the corner-aligned frame of the input, so the affine is rescaled and shifted
/// by half a voxel difference.
fn resampled_geometry(geom: &Geometry, target: [f64; 3], dims: [usize; 3]) -> Result<Geometry> {
    let mut affine = geom.affine;
    let mut shift = [0.0; 3];
    for axis in 0..3 {
        let ratio = target[axis] / geom.spacing[axis];
        shift[axis] = 0.5 * ratio - 0.5;
        for row in affine.iter_mut().take(3) {
            row[axis] *= ratio;
        }
    }
    let origin = geom.voxel_to_world(shift);
    for r in 0..3 {
        affine[r][3] = origin[r];
    }
    Geometry::with_affine(dims, target, affine)
}

/// Resamples a volume onto a grid with `target_spacing` mm voxels.
///
/// Output dims are `round(n·s/s')`, at least 1. Samples falling outside the
/// input's voxel centres are clamped to the border.
pub fn resample(vol: &Volume3D, target_spacing: [f64; 3], mode: Interpolation) -> Result<Volume3D> {
    if target_spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "target spacing must be positive, got {target_spacing:?}"
        )));
    }
    let g = vol.geometry();
    let axes: Vec<(usize, Vec<f64>)> = (0..3)
        .map(|a| sample_positions(g.dims[a], g.spacing[a], target_spacing[a]))
        .collect();
    let dims = [axes[0].0, axes[1].0, axes[2].0];
    let out_geom = resampled_geometry(g, target_spacing, dims)?;
    let src = vol.data();
    let mut out = Vec::with_capacity(out_geom.len());
    match mode {
        Interpolation::Nearest => {
            let t: Vec<Vec<usize>> = (0..3)
                .map(|a| nearest_taps(&axes[a].1, g.dims[a]))
                .collect();
            for &z in &t[2] {
                for &y in &t[1] {
                    let row = g.index(0, y, z);
                    out.extend(t[0].iter().map(|&x| src[row + x]));
                }
            }
        }
        Interpolation::Trilinear => {
            let t: Vec<Vec<(usize, usize, f64)>> =
                (0..3).map(|a| linear_taps(&axes[a].1, g.dims[a])).collect();
            for &(z0, z1, wz) in &t[2] {
                for &(y0, y1, wy) in &t[1] {
                    let r00 = g.index(0, y0, z0);
                    let r10 = g.index(0, y1, z0);
                    let r01 = g.index(0, y0, z1);
                    let r11 = g.index(0, y1, z1);
                    for &(x0, x1, wx) in &t[0] {
                        let lerp = |row: usize| src[row + x0] * (1.0 - wx) + src[row + x1] * wx;
                        let c0 = lerp(r00) * (1.0 - wy) + lerp(r10) * wy;
                        let c1 = lerp(r01) * (1.0 - wy) + lerp(r11) * wy;
                        out.push(c0 * (1.0 - wz) + c1 * wz);
                    }
                }
            }
        }
    }
    Field3D::new(out_geom, out)
}

/// Nearest-neighbour resampling of a mask.
pub fn resample_mask(mask: &BinaryMask3D, target_spacing: [f64; 3]) -> Result<BinaryMask3D> {
    let vol = resample(&mask.to_volume(), target_spacing, Interpolation::Nearest)?;
    Ok(vol.map(|&v| v > 0.5))
}

/// Default fraction of slices removed from each end of every axis.
pub const DEFAULT_TRIM_FRACTION: f64 = 1.0 / 12.0;

/// Number of slices removed from each end of an axis of length `n`.
pub fn trim_count(n: usize, fraction: f64) -> usize {
    // the epsilon keeps exact products such as 24/12 from flooring to 1
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Crops `floor(fraction·n)` slices off both ends of every axis. The affine
/// translation is moved so retained voxels keep their world coordinates.
pub fn trim_outer_slices<T: Clone>(field: &Field3D<T>, fraction: f64) -> Result<Field3D<T>> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "trim fraction must lie in [0, 0.5), got {fraction}"
        )));
    }
    let g = field.geometry();
    let k: Vec<usize> = g.dims.iter().map(|&n| trim_count(n, fraction)).collect();
    let mut dims = [0usize; 3];
    for a in 0..3 {
        if 2 * k[a] >= g.dims[a] {
            return Err(Error::EmptyResult(format!(
                "trimming {} slices from each end of an axis of length {}",
                k[a], g.dims[a]
            )));
        }
        dims[a] = g.dims[a] - 2 * k[a];
    }
    let origin = g.voxel_to_world([k[0] as f64, k[1] as f64, k[2] as f64]);
    let mut affine = g.affine;
    for r in 0..3 {
        affine[r][3] = origin[r];
    }
    let geom = Geometry::with_affine(dims, g.spacing, affine)?;
    let mut data = Vec::with_capacity(geom.len());
    let src = field.data();
    for z in k[2]..k[2] + dims[2] {
        for y in k[1]..k[1] + dims[1] {
            let row = g.index(k[0], y, z);
            data.extend_from_slice(&src[row..row + dims[0]]);
        }
    }
    Field3D::new(geom, data)
}
