//! Exact Euclidean distance transforms and mask surfaces.
//!
//! The transform is the separable lower-envelope-of-parabolas algorithm of
//! Felzenszwalb and Huttenlocher, run once per axis with the axis spacing
//! folded into the parabolas so distances come out in millimetres.

use crate::volume::{BinaryMask3D, Field3D, Geometry};

/// Inclusive-exclusive voxel box `[lo, lo + dims)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoxelBox {
    pub lo: [usize; 3],
    pub dims: [usize; 3],
}

impl VoxelBox {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn local_index(&self, c: [usize; 3]) -> usize {
        (c[0] - self.lo[0])
            + self.dims[0] * ((c[1] - self.lo[1]) + self.dims[1] * (c[2] - self.lo[2]))
    }
}

/// Smallest box holding every true voxel of all masks, or `None` if all are empty.
pub fn bounding_box<'a>(masks: impl IntoIterator<Item = &'a BinaryMask3D>) -> Option<VoxelBox> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for m in masks {
        let g = m.geometry();
        for i in m.true_indices() {
            let c = g.coords(i);
            any = true;
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    any.then(|| VoxelBox {
        lo,
        dims: std::array::from_fn(|a| hi[a] - lo[a] + 1),
    })
}

/// Foreground voxels with at least one face neighbour that is background or
/// outside the grid.
pub fn surface(mask: &BinaryMask3D) -> BinaryMask3D {
    let g = mask.geometry();
    let d = mask.data();
    let [nx, ny, nz] = g.dims;
    let (sy, sz) = (nx, nx * ny);
    let mut out = vec![false; d.len()];
    for i in mask.true_indices() {
        let [x, y, z] = g.coords(i);
        out[i] = x == 0
            || x + 1 == nx
            || y == 0
            || y + 1 == ny
            || z == 0
            || z + 1 == nz
            || !d[i - 1]
            || !d[i + 1]
            || !d[i - sy]
            || !d[i + sy]
            || !d[i - sz]
            || !d[i + sz];
    }
    Field3D::new(g.clone(), out).expect("same length as the mask")
}

/// One-dimensional squared distance transform with voxel spacing `s`:
/// `out[p] = min_q (s·(p − q))² + f[q]`. Infinite entries of `f` are not sites.
fn edt_1d(f: &[f64], s: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let s2 = s * s;
    let mut k: isize = -1;
    for q in 0..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let vk = v[k as usize];
            let (qf, vf) = (q as f64, vk as f64);
            let cross = ((f[q] + s2 * qf * qf) - (f[vk] + s2 * vf * vf)) / (2.0 * s2 * (qf - vf));
            if cross <= z[k as usize] {
                k -= 1;
            } else {
                k += 1;
                v[k as usize] = q;
                z[k as usize] = cross;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if k < 0 {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        let pf = p as f64;
        while z[j + 1] < pf {
            j += 1;
        }
        let dv = s * (pf - v[j] as f64);
        *o = dv * dv + f[v[j]];
    }
}

/// Squared distance (mm²) from every voxel of `dims` to the nearest site,
/// where `field` holds 0 at sites and +∞ elsewhere. Transformed in place.
fn edt_squared_in_place(field: &mut [f64], dims: [usize; 3], spacing: [f64; 3]) {
    let longest = *dims.iter().max().unwrap_or(&0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    let [nx, ny, nz] = dims;
    let strides = [1, nx, nx * ny];
    for axis in 0..3 {
        let n = dims[axis];
        let stride = strides[axis];
        let (ra, rb) = match axis {
            0 => ((ny, nx), (nz, nx * ny)),
            1 => ((nx, 1), (nz, nx * ny)),
            _ => ((nx, 1), (ny, nx)),
        };
        for b in 0..rb.0 {
            for a in 0..ra.0 {
                let base = a * ra.1 + b * rb.1;
                for i in 0..n {
                    line[i] = field[base + i * stride];
                }
                edt_1d(&line[..n], spacing[axis], &mut out[..n], &mut v, &mut z);
                for i in 0..n {
                    field[base + i * stride] = out[i];
                }
            }
        }
    }
}

/// Squared Euclidean distance in mm² from every voxel to the nearest true
/// voxel of `sites`; +∞ everywhere when `sites` is empty.
pub fn squared_distance_transform(sites: &BinaryMask3D) -> Field3D<f64> {
    let g: &Geometry = sites.geometry();
    let mut field: Vec<f64> = sites
        .data()
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    edt_squared_in_place(&mut field, g.dims, g.spacing);
    Field3D::new(g.clone(), field).expect("same length as the mask")
}

/// Distances (mm) from each true voxel of `from` to the nearest true voxel of
/// `to`, in storage order of `from`. Both masks must share a grid and `to`
/// must be nonempty. The transform is restricted to the bounding box of both
/// masks, which is exact since every site and query lies inside it.
pub fn distances_to_nearest(from: &BinaryMask3D, to: &BinaryMask3D) -> Vec<f64> {
    let g = from.geometry();
    let Some(bx) = bounding_box([from, to]) else {
        return Vec::new();
    };
    let mut field = vec![f64::INFINITY; bx.len()];
    for i in to.true_indices() {
        field[bx.local_index(g.coords(i))] = 0.0;
    }
    edt_squared_in_place(&mut field, bx.dims, g.spacing);
    from.true_indices()
        .map(|i| field[bx.local_index(g.coords(i))].sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_with_spacing() {
        let inf = f64::INFINITY;
        let f = [inf, inf, 0.0, inf, inf, inf, 0.0];
        let mut out = [0.0; 7];
        let mut v = [0usize; 7];
        let mut z = [0.0; 8];
        edt_1d(&f, 2.0, &mut out, &mut v, &mut z);
        assert_eq!(out, [16.0, 4.0, 0.0, 4.0, 16.0, 4.0, 0.0]);
    }

    #[test]
    fn empty_sites_are_infinite() {
        let g = Geometry::new([3, 3, 3], [1.0; 3]).unwrap();
        let d = squared_distance_transform(&BinaryMask3D::empty(g));
        assert!(d.data().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn matches_brute_force_anisotropic() {
        let g = Geometry::new([7, 5, 6], [1.2, 1.05, 0.7]).unwrap();
        let mut m = BinaryMask3D::empty(g.clone());
        for (k, i) in [3usize, 50, 101, 177, 200].iter().enumerate() {
            m.data_mut()[(i * 7 + k) % g.len()] = true;
        }
        let d = squared_distance_transform(&m);
        for p in 0..g.len() {
            let cp = g.coords(p);
            let best = m
                .true_indices()
                .map(|q| {
                    let cq = g.coords(q);
                    (0..3)
                        .map(|a| {
                            let t = (cp[a] as f64 - cq[a] as f64) * g.spacing[a];
                            t * t
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d.data()[p] - best).abs() < 1e-9, "voxel {p}");
        }
    }

    #[test]
    fn surface_of_solid_cube() {
        let g = Geometry::new([5, 5, 5], [1.0; 3]).unwrap();
        let m = BinaryMask3D::from_fn(g, |c| c.iter().all(|&v| (1..=3).contains(&v)));
        let s = surface(&m);
        assert_eq!(m.count(), 27);
        assert_eq!(s.count(), 26);
        assert!(!*s.at(2, 2, 2));
    }

    #[test]
    fn border_voxels_are_surface() {
        let g = Geometry::new([3, 3, 3], [1.0; 3]).unwrap();
        let full = BinaryMask3D::from_fn(g, |_| true);
        assert_eq!(surface(&full).count(), 26);
    }
}
