//! Intensity preprocessing of FLAIR volumes: negative clamping, foreground
//! z-standardization and foreground intensity histograms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::volume::{BinaryMask3D, Volume3D};

/// Sets every negative voxel to zero.
pub fn clamp_negatives(vol: &Volume3D) -> Volume3D {
    vol.map(|&v| if v < 0.0 { 0.0 } else { v })
}

/// Voxels with intensity strictly above zero.
pub fn foreground_mask(vol: &Volume3D) -> BinaryMask3D {
    vol.map(|&v| v > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdConvention {
    /// Divisor `n`.
    #[default]
    Population,
    /// Divisor `n - 1`.
    Sample,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZScoreOptions {
    pub std: StdConvention,
    /// Leave background voxels at zero instead of shifting them with the foreground.
    pub keep_background_zero: bool,
}

/// Mean and standard deviation used by a z-standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZScoreStats {
    pub mean: f64,
    pub std: f64,
    pub n_foreground: usize,
}

/// Mean and standard deviation of the voxels selected by `mask`.
pub fn masked_stats(
    vol: &Volume3D,
    mask: &BinaryMask3D,
    convention: StdConvention,
) -> Result<ZScoreStats> {
    vol.geometry().ensure_same_grid(mask.geometry())?;
    let values: Vec<f64> = mask.true_indices().map(|i| vol.data()[i]).collect();
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyForeground);
    }
    if n < 2 {
        return Err(Error::InsufficientData(
            "z-standardization needs at least two foreground voxels".into(),
        ));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let divisor = match convention {
        StdConvention::Population => n as f64,
        StdConvention::Sample => (n - 1) as f64,
    };
    let std = (ss / divisor).sqrt();
    if !(std > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(ZScoreStats {
        mean,
        std,
        n_foreground: n,
    })
}

/// z-standardizes with statistics from the voxels above zero and returns the
/// statistics used.
pub fn zstandardize_foreground_with(
    vol: &Volume3D,
    opts: ZScoreOptions,
) -> Result<(Volume3D, ZScoreStats)> {
    let fg = foreground_mask(vol);
    let stats = masked_stats(vol, &fg, opts.std)?;
    let out = vol
        .data()
        .iter()
        .zip(fg.data())
        .map(|(&v, &f)| {
            if opts.keep_background_zero && !f {
                0.0
            } else {
                (v - stats.mean) / stats.std
            }
        })
        .collect();
    Ok((Volume3D::new(vol.geometry().clone(), out)?, stats))
}

/// `(v - mean(F)) / std(F)` for every voxel, where `F` is the set of voxels
/// above zero and the standard deviation is the population one.
pub fn zstandardize_foreground(vol: &Volume3D) -> Result<Volume3D> {
    zstandardize_foreground_with(vol, ZScoreOptions::default()).map(|(v, _)| v)
}

/// Density-normalised histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// `(bin_center, density)` rows.
    pub rows: Vec<(f64, f64)>,
}

impl Histogram {
    /// `Σ density · width`; one for any non-empty input up to rounding.
    pub fn integral(&self) -> f64 {
        self.rows.iter().map(|(_, d)| d * self.bin_width).sum()
    }
}

/// Histogram of `values` over `[min, max]` with `n_bins` equal bins, scaled so
/// it integrates to one. A degenerate range is widened to one unit centred on
/// the value.
pub fn density_histogram(values: &[f64], n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(Error::EmptyForeground);
    }
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite intensity values".into(),
        ));
    }
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let norm = values.len() as f64 * width;
    let rows = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| (lo + (b as f64 + 0.5) * width, c as f64 / norm))
        .collect();
    Ok(Histogram {
        bin_width: width,
        rows,
    })
}

/// Histogram of the voxels of `vol` selected by `mask`.
pub fn masked_distribution(
    vol: &Volume3D,
    mask: &BinaryMask3D,
    n_bins: usize,
) -> Result<Histogram> {
    vol.geometry().ensure_same_grid(mask.geometry())?;
    let values: Vec<f64> = mask.true_indices().map(|i| vol.data()[i]).collect();
    density_histogram(&values, n_bins)
}

/// Histogram of the voxels above zero.
pub fn foreground_distribution(vol: &Volume3D, n_bins: usize) -> Result<Histogram> {
    masked_distribution(vol, &foreground_mask(vol), n_bins)
}
