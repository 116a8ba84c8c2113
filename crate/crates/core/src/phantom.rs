//! Deterministic synthetic FLAIR-like volumes with known lesion masks, and
//! controlled corruption of masks to act as model predictions.
//!
//! All randomness comes from ChaCha8 streams keyed by the seed: stream 0
//! drives the image noise and stream `i + 1` drives lesion `i`, so a lesion's
//! candidate draws do not depend on how many draws earlier lesions used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::distance::surface;
use crate::error::{Error, Result};
use crate::morphology::{connected_components, Connectivity};
use crate::volume::{BinaryMask3D, Geometry, Volume3D};

const MIN_DIM: usize = 16;
const PLACEMENT_RETRIES: usize = 200;
const BASE_INTENSITY: f64 = 1.0;
const LESION_CONTRAST: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub seed: u64,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub n_lesions: usize,
    /// Range of lesion semi-axes in voxels.
    pub radius_range: (f64, f64),
    /// Standard deviation of additive Gaussian noise, in units of the
    /// background tissue intensity.
    pub noise_sigma: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dims: [64, 64, 64],
            spacing: [1.0, 1.0, 1.0],
            n_lesions: 5,
            radius_range: (1.0, 4.0),
            noise_sigma: 0.05,
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Normalised squared radius of `c` in the head ellipsoid.
fn head_radius2(c: [usize; 3], dims: [usize; 3]) -> f64 {
    (0..3)
        .map(|a| {
            let centre = (dims[a] as f64 - 1.0) / 2.0;
            let semi = 0.45 * dims[a] as f64;
            let t = (c[a] as f64 - centre) / semi;
            t * t
        })
        .sum()
}

/// Voxels of an axis-aligned ellipsoid, always including its centre voxel.
fn ellipsoid(geom: &Geometry, centre: [f64; 3], radii: [f64; 3]) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let l = (centre[a] - radii[a]).floor();
        let h = (centre[a] + radii[a]).ceil();
        if l < 0.0 || h > (geom.dims[a] - 1) as f64 {
            return None;
        }
        lo[a] = l as usize;
        hi[a] = h as usize;
    }
    let core: [usize; 3] = std::array::from_fn(|a| centre[a].round() as usize);
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let c = [x, y, z];
                let r2: f64 = (0..3)
                    .map(|a| {
                        let t = (c[a] as f64 - centre[a]) / radii[a];
                        t * t
                    })
                    .sum();
                if r2 <= 1.0 || c == core {
                    out.push(geom.index(x, y, z));
                }
            }
        }
    }
    Some(out)
}

/// True if any voxel or any of its 26 neighbours is set in `occupied`.
fn touches(geom: &Geometry, voxels: &[usize], occupied: &[bool]) -> bool {
    let d = geom.dims;
    voxels.iter().any(|&i| {
        let c = geom.coords(i);
        let range = |a: usize| c[a].saturating_sub(1)..=(c[a] + 1).min(d[a] - 1);
        range(2).any(|z| range(1).any(|y| range(0).any(|x| occupied[geom.index(x, y, z)])))
    })
}

/// Generates a phantom volume and its lesion mask. The lesions are pairwise
/// separated by at least one voxel, so the mask has exactly `n_lesions`
/// components at 26-connectivity.
pub fn generate_phantom(cfg: &PhantomConfig) -> Result<(Volume3D, BinaryMask3D)> {
    if cfg.dims.iter().any(|&d| d < MIN_DIM) {
        return Err(Error::InvalidParameter(format!(
            "phantom dims must be at least {MIN_DIM} per axis, got {:?}",
            cfg.dims
        )));
    }
    let (rmin, rmax) = cfg.radius_range;
    if !(rmin > 0.0 && rmax >= rmin) {
        return Err(Error::InvalidParameter(format!(
            "invalid radius range {:?}",
            cfg.radius_range
        )));
    }
    if !(cfg.noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(
            "noise sigma must be non-negative".into(),
        ));
    }
    let geom = Geometry::new(cfg.dims, cfg.spacing)?;
    let mut lesions = vec![false; geom.len()];

    for i in 0..cfg.n_lesions {
        let mut rng = stream(cfg.seed, i as u64 + 1);
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRIES {
            let radii: [f64; 3] = std::array::from_fn(|_| rng.random_range(rmin..=rmax));
            let centre: [f64; 3] = std::array::from_fn(|a| {
                let mid = (cfg.dims[a] as f64 - 1.0) / 2.0;
                let half = 0.3 * cfg.dims[a] as f64;
                mid + rng.random_range(-half..=half)
            });
            let Some(voxels) = ellipsoid(&geom, centre, radii) else {
                continue;
            };
            if touches(&geom, &voxels, &lesions) {
                continue;
            }
            for v in voxels {
                lesions[v] = true;
            }
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::LesionPlacement {
                achieved: i,
                requested: cfg.n_lesions,
            });
        }
    }

    let mut noise_rng = stream(cfg.seed, 0);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut data = Vec::with_capacity(geom.len());
    for i in 0..geom.len() {
        let c = geom.coords(i);
        let r2 = head_radius2(c, cfg.dims);
        let mut v = if r2 <= 1.0 {
            // slow variation across the head, brightest in the centre
            let shading = 0.1 * (std::f64::consts::PI * c[2] as f64 / cfg.dims[2] as f64).sin();
            BASE_INTENSITY * (0.9 + shading + 0.1 * (1.0 - r2))
        } else {
            0.0
        };
        if lesions[i] {
            v += LESION_CONTRAST;
        }
        let n = if cfg.noise_sigma > 0.0 {
            noise.sample(&mut noise_rng)
        } else {
            0.0
        };
        data.push(v + n);
    }
    Ok((
        Volume3D::new(geom.clone(), data)?,
        BinaryMask3D::new(geom, lesions)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradeConfig {
    pub seed: u64,
    /// Probability of removing each surface voxel.
    pub erode_prob: f64,
    /// Probability of adding each background voxel face-adjacent to the mask.
    pub dilate_prob: f64,
    /// Spurious blobs per ground-truth lesion, rounded up.
    pub fp_blob_rate: f64,
}

impl DegradeConfig {
    pub fn none(seed: u64) -> Self {
        Self {
            seed,
            erode_prob: 0.0,
            dilate_prob: 0.0,
            fp_blob_rate: 0.0,
        }
    }
}

/// Corrupts a mask with random boundary erosion and dilation and injects
/// small false-positive blobs away from the original lesions.
pub fn degrade_mask(mask: &BinaryMask3D, cfg: &DegradeConfig) -> Result<BinaryMask3D> {
    for (name, v) in [
        ("erode_prob", cfg.erode_prob),
        ("dilate_prob", cfg.dilate_prob),
        ("fp_blob_rate", cfg.fp_blob_rate),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "{name} = {v} outside [0, 1]"
            )));
        }
    }
    let geom = mask.geometry().clone();
    let src = mask.data();
    let mut out = src.to_vec();

    let mut rng = stream(cfg.seed, 1);
    for i in surface(mask).true_indices() {
        if rng.random::<f64>() < cfg.erode_prob {
            out[i] = false;
        }
    }

    let mut rng = stream(cfg.seed, 2);
    let [nx, ny, nz] = geom.dims;
    for i in 0..src.len() {
        if src[i] {
            continue;
        }
        let [x, y, z] = geom.coords(i);
        let near = (x > 0 && src[i - 1])
            || (x + 1 < nx && src[i + 1])
            || (y > 0 && src[i - nx])
            || (y + 1 < ny && src[i + nx])
            || (z > 0 && src[i - nx * ny])
            || (z + 1 < nz && src[i + nx * ny]);
        if near && rng.random::<f64>() < cfg.dilate_prob {
            out[i] = true;
        }
    }

    if cfg.fp_blob_rate > 0.0 {
        let n_lesions = connected_components(mask, Connectivity::TwentySix)
            .n_components
            .max(1);
        let n_blobs = (cfg.fp_blob_rate * n_lesions as f64).ceil() as usize;
        let mut rng = stream(cfg.seed, 3);
        let mut occupied: Vec<bool> = src.iter().zip(&out).map(|(&a, &b)| a || b).collect();
        for _ in 0..n_blobs {
            for _ in 0..PLACEMENT_RETRIES {
                let centre: [f64; 3] =
                    std::array::from_fn(|a| rng.random_range(0..geom.dims[a]) as f64);
                let Some(voxels) = ellipsoid(&geom, centre, [1.0, 1.0, 1.0]) else {
                    continue;
                };
                if touches(&geom, &voxels, &occupied) {
                    continue;
                }
                for v in voxels {
                    out[v] = true;
                    occupied[v] = true;
                }
                break;
            }
        }
    }
    BinaryMask3D::new(geom, out)
}
