//! Binary STAPLE: expectation-maximization fusion of several candidate
//! segmentations into one maximum-likelihood segmentation, with per-rater
//! sensitivity and specificity estimates.
//!
//! The E-step posterior of a voxel depends only on its vote pattern (which
//! raters marked it), so voxels are grouped by pattern and every iteration
//! runs over the distinct patterns, weighted by how many voxels share each.
//! The prior stays fixed at its initial value.

use std::collections::HashMap;

use serde::Serialize;

use crate::distance::{bounding_box, VoxelBox};
use crate::error::{Error, Result};
use crate::volume::{BinaryMask3D, Field3D, Geometry, ProbabilityMap3D};

/// Probabilities are kept within `[CLAMP, 1 − CLAMP]` while iterating.
pub const PROBABILITY_CLAMP: f64 = 1e-6;
pub const DEFAULT_INIT_PERFORMANCE: f64 = 0.9;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// One or more masks on the same grid.
#[derive(Debug, Clone)]
pub struct RaterStack {
    masks: Vec<BinaryMask3D>,
}

impl RaterStack {
    pub fn new(masks: Vec<BinaryMask3D>) -> Result<Self> {
        let first = masks.first().ok_or(Error::EmptyStack)?;
        for m in &masks[1..] {
            first.geometry().ensure_same_grid(m.geometry())?;
        }
        Ok(Self { masks })
    }

    pub fn masks(&self) -> &[BinaryMask3D] {
        &self.masks
    }

    pub fn n_raters(&self) -> usize {
        self.masks.len()
    }

    pub fn geometry(&self) -> &Geometry {
        self.masks[0].geometry()
    }

    /// Fraction of all (voxel, rater) pairs voted foreground.
    pub fn mean_vote_rate(&self) -> f64 {
        let votes: usize = self.masks.iter().map(|m| m.count()).sum();
        votes as f64 / (self.geometry().len() * self.masks.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StapleParams {
    /// Per-rater sensitivity `p_j`.
    pub sensitivity: Vec<f64>,
    /// Per-rater specificity `q_j`.
    pub specificity: Vec<f64>,
    /// Prior probability that a voxel is foreground.
    pub prior: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl StapleParams {
    /// `p_j = q_j = 0.9`, prior = mean vote rate, 100 iterations, tol 1e-6.
    pub fn initial(stack: &RaterStack) -> Self {
        Self::symmetric(
            stack.n_raters(),
            DEFAULT_INIT_PERFORMANCE,
            stack.mean_vote_rate(),
        )
    }

    pub fn symmetric(n_raters: usize, performance: f64, prior: f64) -> Self {
        Self {
            sensitivity: vec![performance; n_raters],
            specificity: vec![performance; n_raters],
            prior,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }

    fn validate(&self, n_raters: usize) -> Result<()> {
        if self.sensitivity.len() != n_raters || self.specificity.len() != n_raters {
            return Err(Error::InvalidParameter(format!(
                "expected {n_raters} sensitivities and specificities, got {} and {}",
                self.sensitivity.len(),
                self.specificity.len()
            )));
        }
        let all = self
            .sensitivity
            .iter()
            .chain(&self.specificity)
            .chain(std::iter::once(&self.prior));
        for &v in all {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "probability {v} outside [0, 1]"
                )));
            }
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol {} is negative",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Voxels taking part in the estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StapleRegion {
    /// Bounding box of all votes grown by one voxel; voxels outside it get
    /// weight 0 and do not enter the M-step. Approximate.
    #[default]
    BoundingBox,
    /// Every voxel of the grid. Exact.
    Full,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StapleOptions {
    pub region: StapleRegion,
}

#[derive(Debug, Clone)]
pub struct StapleResult {
    /// Posterior foreground probability of each voxel.
    pub weights: ProbabilityMap3D,
    /// `weights >= 0.5`.
    pub fused: BinaryMask3D,
    pub params: StapleParams,
    /// Number of M-steps performed.
    pub n_iters: usize,
    pub converged: bool,
    /// Observed-data log-likelihood after each E-step, starting with the
    /// initial parameters.
    pub log_likelihood: Vec<f64>,
}

#[inline]
fn clamp_prob(v: f64) -> f64 {
    v.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}

/// Distinct vote patterns with their voxel counts.
struct Patterns {
    votes: Vec<Vec<bool>>,
    counts: Vec<f64>,
    /// Pattern id per voxel; `None` outside the region.
    ids: Vec<Option<u32>>,
}

fn in_box(bx: &VoxelBox, c: [usize; 3]) -> bool {
    (0..3).all(|a| c[a] >= bx.lo[a] && c[a] < bx.lo[a] + bx.dims[a])
}

fn collect_patterns(stack: &RaterStack, region: StapleRegion) -> Patterns {
    let g = stack.geometry();
    let r = stack.n_raters();
    let words = r.div_ceil(64);
    let grown = match region {
        StapleRegion::Full => None,
        StapleRegion::BoundingBox => Some(bounding_box(stack.masks()).map(|b| {
            let lo: [usize; 3] = std::array::from_fn(|a| b.lo[a].saturating_sub(1));
            let hi: [usize; 3] = std::array::from_fn(|a| (b.lo[a] + b.dims[a] + 1).min(g.dims[a]));
            VoxelBox {
                lo,
                dims: std::array::from_fn(|a| hi[a] - lo[a]),
            }
        })),
    };
    let mut lookup: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut votes = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    let mut ids = Vec::with_capacity(g.len());
    let mut key = vec![0u64; words];
    let data: Vec<&[bool]> = stack.masks().iter().map(|m| m.data()).collect();
    for i in 0..g.len() {
        let inside = match &grown {
            None => true,
            Some(None) => false,
            Some(Some(bx)) => in_box(bx, g.coords(i)),
        };
        if !inside {
            ids.push(None);
            continue;
        }
        key.iter_mut().for_each(|w| *w = 0);
        for (j, d) in data.iter().enumerate() {
            if d[i] {
                key[j / 64] |= 1 << (j % 64);
            }
        }
        let id = match lookup.get(key.as_slice()) {
            Some(&id) => id,
            None => {
                let id = votes.len() as u32;
                lookup.insert(key.clone(), id);
                votes.push(data.iter().map(|d| d[i]).collect());
                counts.push(0.0);
                id
            }
        };
        counts[id as usize] += 1.0;
        ids.push(Some(id));
    }
    Patterns { votes, counts, ids }
}

/// Log of `exp(a) + exp(b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Posterior weight of each pattern and the observed-data log-likelihood.
fn e_step(pat: &Patterns, p: &[f64], q: &[f64], prior: f64) -> (Vec<f64>, f64) {
    let mut ll = 0.0;
    let w = pat
        .votes
        .iter()
        .zip(&pat.counts)
        .map(|(votes, &n)| {
            let mut la = prior.ln();
            let mut lb = (1.0 - prior).ln();
            for (j, &v) in votes.iter().enumerate() {
                if v {
                    la += p[j].ln();
                    lb += (1.0 - q[j]).ln();
                } else {
                    la += (1.0 - p[j]).ln();
                    lb += q[j].ln();
                }
            }
            ll += n * log_add(la, lb);
            1.0 / (1.0 + (lb - la).exp())
        })
        .collect();
    (w, ll)
}

fn m_step(pat: &Patterns, w: &[f64], p: &mut [f64], q: &mut [f64]) {
    let total_fg: f64 = w.iter().zip(&pat.counts).map(|(w, n)| n * w).sum();
    let total_bg: f64 = w.iter().zip(&pat.counts).map(|(w, n)| n * (1.0 - w)).sum();
    for j in 0..p.len() {
        let mut fg_hit = 0.0;
        let mut bg_miss = 0.0;
        for ((votes, &n), &wi) in pat.votes.iter().zip(&pat.counts).zip(w) {
            if votes[j] {
                fg_hit += n * wi;
            } else {
                bg_miss += n * (1.0 - wi);
            }
        }
        if total_fg > 0.0 {
            p[j] = clamp_prob(fg_hit / total_fg);
        }
        if total_bg > 0.0 {
            q[j] = clamp_prob(bg_miss / total_bg);
        }
    }
}

/// STAPLE over the default bounding-box region.
pub fn staple(stack: &RaterStack, init: &StapleParams) -> Result<StapleResult> {
    staple_with(stack, init, StapleOptions::default())
}

pub fn staple_with(
    stack: &RaterStack,
    init: &StapleParams,
    opts: StapleOptions,
) -> Result<StapleResult> {
    init.validate(stack.n_raters())?;
    let geom = stack.geometry().clone();

    if stack.n_raters() == 1 {
        let only = stack.masks()[0].clone();
        return Ok(StapleResult {
            weights: ProbabilityMap3D::from_mask(&only),
            fused: only,
            params: init.clone(),
            n_iters: 0,
            converged: true,
            log_likelihood: Vec::new(),
        });
    }

    let pat = collect_patterns(stack, opts.region);
    let mut p: Vec<f64> = init.sensitivity.iter().map(|&v| clamp_prob(v)).collect();
    let mut q: Vec<f64> = init.specificity.iter().map(|&v| clamp_prob(v)).collect();
    let prior = clamp_prob(init.prior);

    let (mut w, ll0) = e_step(&pat, &p, &q, prior);
    let mut log_likelihood = vec![ll0];
    let mut n_iters = 0;
    let mut converged = pat.votes.is_empty();
    while !converged && n_iters < init.max_iters {
        m_step(&pat, &w, &mut p, &mut q);
        let (next, ll) = e_step(&pat, &p, &q, prior);
        n_iters += 1;
        log_likelihood.push(ll);
        let delta = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        converged = delta < init.tol;
    }

    let weights: Vec<f64> = pat
        .ids
        .iter()
        .map(|id| id.map_or(0.0, |k| w[k as usize]))
        .collect();
    let weights = ProbabilityMap3D::new(Field3D::new(geom, weights)?)?;
    let fused = weights.field().map(|&v| v >= 0.5);
    Ok(StapleResult {
        weights,
        fused,
        params: StapleParams {
            sensitivity: p,
            specificity: q,
            prior,
            max_iters: init.max_iters,
            tol: init.tol,
        },
        n_iters,
        converged,
        log_likelihood,
    })
}

/// Voxel is foreground iff strictly more than half the raters marked it.
pub fn majority_vote(stack: &RaterStack) -> Result<BinaryMask3D> {
    let r = stack.n_raters();
    let mut votes = vec![0usize; stack.geometry().len()];
    for m in stack.masks() {
        for i in m.true_indices() {
            votes[i] += 1;
        }
    }
    Field3D::new(
        stack.geometry().clone(),
        votes.into_iter().map(|v| 2 * v > r).collect(),
    )
}
