//! Segmentation quality metrics: Dice, 95th-percentile Hausdorff distance,
//! absolute volume difference, and lesion-wise recall/F1, plus recall and
//! precision stratified by lesion size.
//!
//! Degenerate cases follow the usual challenge conventions: Dice and lesion F1
//! are 1 when both masks are empty, HD95 is undefined unless both masks are
//! nonempty, and AVD and lesion recall are undefined for an empty ground truth.
//! Undefined values are returned as `None`.

use serde::{Deserialize, Serialize};

use crate::distance::{distances_to_nearest, surface};
use crate::error::{Error, Result};
use crate::morphology::{connected_components, lesion_records, Connectivity, LabelMap3D};
use crate::volume::BinaryMask3D;

/// Voxel-level confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_masks(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<Self> {
        pred.geometry().ensure_same_grid(gt.geometry())?;
        let mut c = ConfusionCounts::default();
        for (&p, &g) in pred.data().iter().zip(gt.data()) {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// `2|P∩G| / (|P|+|G|)`, 1 when both masks are empty.
pub fn dice(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<f64> {
    let c = ConfusionCounts::from_masks(pred, gt)?;
    let denom = 2 * c.tp + c.fp + c.fn_;
    Ok(if denom == 0 {
        1.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    })
}

/// `(2|P∩G| + smooth) / (|P|+|G| + smooth)`.
pub fn dice_smoothed(pred: &BinaryMask3D, gt: &BinaryMask3D, smooth: f64) -> Result<f64> {
    let c = ConfusionCounts::from_masks(pred, gt)?;
    Ok((2.0 * c.tp as f64 + smooth) / ((2 * c.tp + c.fp + c.fn_) as f64 + smooth))
}

/// How the two directed surface-distance sets are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HausdorffMode {
    /// Larger of the two directed percentiles.
    #[default]
    MaxOfDirected,
    /// Percentile of both directed sets pooled together.
    Pooled,
}

/// Percentile with linear interpolation between order statistics
/// (`rank = q/100 · (n − 1)`). Returns `None` for an empty sample.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let rank = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (rank - lo as f64))
}

/// Distances in mm from each surface voxel of `from` to the surface of `to`.
pub fn directed_surface_distances(from: &BinaryMask3D, to: &BinaryMask3D) -> Result<Vec<f64>> {
    from.geometry().ensure_same_grid(to.geometry())?;
    Ok(distances_to_nearest(&surface(from), &surface(to)))
}

/// Percentile Hausdorff distance between the surfaces of two masks.
pub fn hausdorff_percentile(
    pred: &BinaryMask3D,
    gt: &BinaryMask3D,
    q: f64,
    mode: HausdorffMode,
) -> Result<Option<f64>> {
    pred.geometry().ensure_same_grid(gt.geometry())?;
    if !pred.any() || !gt.any() {
        return Ok(None);
    }
    let (sp, sg) = (surface(pred), surface(gt));
    let d_pg = distances_to_nearest(&sp, &sg);
    let d_gp = distances_to_nearest(&sg, &sp);
    Ok(match mode {
        HausdorffMode::MaxOfDirected => {
            let a = percentile(&d_pg, q).unwrap_or(0.0);
            let b = percentile(&d_gp, q).unwrap_or(0.0);
            Some(a.max(b))
        }
        HausdorffMode::Pooled => {
            let mut all = d_pg;
            all.extend(d_gp);
            percentile(&all, q)
        }
    })
}

/// 95th-percentile Hausdorff distance in mm, max of the two directed values.
pub fn hd95(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<Option<f64>> {
    hausdorff_percentile(pred, gt, 95.0, HausdorffMode::MaxOfDirected)
}

/// `100 · ||P| − |G|| / |G|`.
pub fn avd(pred: &BinaryMask3D, gt: &BinaryMask3D) -> Result<Option<f64>> {
    pred.geometry().ensure_same_grid(gt.geometry())?;
    let (p, g) = (pred.count() as f64, gt.count() as f64);
    Ok((g > 0.0).then(|| 100.0 * (p - g).abs() / g))
}

/// Which components of each mask overlap the other mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LesionOverlap {
    pub gt_sizes: Vec<usize>,
    pub gt_detected: Vec<bool>,
    pub pred_sizes: Vec<usize>,
    pub pred_correct: Vec<bool>,
}

fn overlap_flags(labels: &LabelMap3D, other: &BinaryMask3D) -> Vec<bool> {
    let mut hit = vec![false; labels.n_components];
    for (&l, &o) in labels.labels.data().iter().zip(other.data()) {
        if l != 0 && o {
            hit[(l - 1) as usize] = true;
        }
    }
    hit
}

impl LesionOverlap {
    pub fn new(pred: &BinaryMask3D, gt: &BinaryMask3D, connectivity: Connectivity) -> Result<Self> {
        pred.geometry().ensure_same_grid(gt.geometry())?;
        let gl = connected_components(gt, connectivity);
        let pl = connected_components(pred, connectivity);
        Ok(Self {
            gt_sizes: lesion_records(&gl).iter().map(|r| r.voxel_count).collect(),
            gt_detected: overlap_flags(&gl, pred),
            pred_sizes: lesion_records(&pl).iter().map(|r| r.voxel_count).collect(),
            pred_correct: overlap_flags(&pl, gt),
        })
    }

    /// Detected ground-truth lesions over all ground-truth lesions.
    pub fn recall(&self) -> Option<f64> {
        let n = self.gt_detected.len();
        (n > 0).then(|| self.gt_detected.iter().filter(|&&h| h).count() as f64 / n as f64)
    }

    /// `2TP / (2TP + FP + FN)` with TP counted over predicted lesions.
    pub fn f1(&self) -> f64 {
        let tp = self.pred_correct.iter().filter(|&&h| h).count();
        let fp = self.pred_correct.len() - tp;
        let fn_ = self.gt_detected.iter().filter(|&&h| !h).count();
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    }
}

/// Fraction of ground-truth lesions touched by at least one predicted voxel.
pub fn lesion_recall(
    pred: &BinaryMask3D,
    gt: &BinaryMask3D,
    connectivity: Connectivity,
) -> Result<Option<f64>> {
    Ok(LesionOverlap::new(pred, gt, connectivity)?.recall())
}

/// Lesion-wise F1; 1 when both masks are empty.
pub fn lesion_f1(
    pred: &BinaryMask3D,
    gt: &BinaryMask3D,
    connectivity: Connectivity,
) -> Result<f64> {
    Ok(LesionOverlap::new(pred, gt, connectivity)?.f1())
}

/// Half-open lesion-size bins `[edges[i], edges[i+1])` in voxels. The last
/// edge may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeBins {
    edges: Vec<f64>,
}

impl SizeBins {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least two bin edges".into(),
            ));
        }
        if edges.iter().any(|e| e.is_nan()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "bin edges must be strictly increasing, got {edges:?}"
            )));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin_of(&self, size: usize) -> Option<usize> {
        let s = size as f64;
        self.edges.windows(2).position(|w| s >= w[0] && s < w[1])
    }
}

impl Default for SizeBins {
    fn default() -> Self {
        Self {
            edges: vec![1.0, 5.0, 15.0, 50.0, 150.0, 500.0, f64::INFINITY],
        }
    }
}

/// Lesion counts in one size bin. Summing rows of several cases pools them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBinRow {
    pub bin_low: f64,
    pub bin_high: f64,
    pub n_gt: usize,
    pub n_gt_detected: usize,
    pub n_pred: usize,
    pub n_pred_correct: usize,
}

impl SizeBinRow {
    pub fn recall(&self) -> Option<f64> {
        (self.n_gt > 0).then(|| self.n_gt_detected as f64 / self.n_gt as f64)
    }

    pub fn precision(&self) -> Option<f64> {
        (self.n_pred > 0).then(|| self.n_pred_correct as f64 / self.n_pred as f64)
    }
}

/// Per-bin lesion recall (ground-truth lesions binned by their own size) and
/// precision (predicted lesions binned by their own size).
pub fn size_stratified(overlap: &LesionOverlap, bins: &SizeBins) -> Vec<SizeBinRow> {
    let mut rows: Vec<SizeBinRow> = bins
        .edges
        .windows(2)
        .map(|w| SizeBinRow {
            bin_low: w[0],
            bin_high: w[1],
            n_gt: 0,
            n_gt_detected: 0,
            n_pred: 0,
            n_pred_correct: 0,
        })
        .collect();
    for (&size, &hit) in overlap.gt_sizes.iter().zip(&overlap.gt_detected) {
        if let Some(b) = bins.bin_of(size) {
            rows[b].n_gt += 1;
            rows[b].n_gt_detected += hit as usize;
        }
    }
    for (&size, &hit) in overlap.pred_sizes.iter().zip(&overlap.pred_correct) {
        if let Some(b) = bins.bin_of(size) {
            rows[b].n_pred += 1;
            rows[b].n_pred_correct += hit as usize;
        }
    }
    rows
}

pub fn size_stratified_pr(
    pred: &BinaryMask3D,
    gt: &BinaryMask3D,
    connectivity: Connectivity,
    bins: &SizeBins,
) -> Result<Vec<SizeBinRow>> {
    Ok(size_stratified(
        &LesionOverlap::new(pred, gt, connectivity)?,
        bins,
    ))
}

/// Adds the counts of `other` into `acc`; both must use the same bins.
pub fn pool_rows(acc: &mut [SizeBinRow], other: &[SizeBinRow]) {
    for (a, o) in acc.iter_mut().zip(other) {
        a.n_gt += o.n_gt;
        a.n_gt_detected += o.n_gt_detected;
        a.n_pred += o.n_pred;
        a.n_pred_correct += o.n_pred_correct;
    }
}

/// The five per-case metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub dsc: f64,
    pub hd95_mm: Option<f64>,
    pub avd_pct: Option<f64>,
    pub lesion_recall: Option<f64>,
    pub lesion_f1: f64,
}

/// Metric names in report order.
pub const METRIC_NAMES: [&str; 5] = ["dsc", "hd95_mm", "avd_pct", "lesion_recall", "lesion_f1"];

impl CaseMetrics {
    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 5] {
        [
            Some(self.dsc),
            self.hd95_mm,
            self.avd_pct,
            self.lesion_recall,
            Some(self.lesion_f1),
        ]
    }

    /// Whether a larger value of the metric is better.
    pub fn higher_is_better(name: &str) -> bool {
        matches!(name, "dsc" | "lesion_recall" | "lesion_f1")
    }
}

/// All five metrics plus the size-stratified lesion counts of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseEvaluation {
    pub metrics: CaseMetrics,
    pub stratified: Vec<SizeBinRow>,
}

pub fn evaluate_case(
    pred: &BinaryMask3D,
    gt: &BinaryMask3D,
    connectivity: Connectivity,
    bins: &SizeBins,
) -> Result<CaseEvaluation> {
    let overlap = LesionOverlap::new(pred, gt, connectivity)?;
    let metrics = CaseMetrics {
        dsc: dice(pred, gt)?,
        hd95_mm: hd95(pred, gt)?,
        avd_pct: avd(pred, gt)?,
        lesion_recall: overlap.recall(),
        lesion_f1: overlap.f1(),
    };
    Ok(CaseEvaluation {
        metrics,
        stratified: size_stratified(&overlap, bins),
    })
}
