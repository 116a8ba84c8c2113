//! Slow, obviously-correct reference computations for tests.
//!
//! Everything here works on plain slices in x-fastest order and shares no
//! code with `wmh-core`, so the two can be checked against each other.

pub type Dims = [usize; 3];

pub fn coords(dims: Dims, i: usize) -> [i64; 3] {
    [
        (i % dims[0]) as i64,
        ((i / dims[0]) % dims[1]) as i64,
        (i / (dims[0] * dims[1])) as i64,
    ]
}

/// Adjacency of two distinct voxels under 6/18/26 connectivity, by the
/// definition: Chebyshev distance 1 and at most 1/2/3 differing coordinates.
pub fn adjacent(a: [i64; 3], b: [i64; 3], connectivity: u32) -> bool {
    let mut changed = 0;
    for k in 0..3 {
        match (a[k] - b[k]).abs() {
            0 => {}
            1 => changed += 1,
            _ => return false,
        }
    }
    let max_changed = match connectivity {
        6 => 1,
        18 => 2,
        26 => 3,
        _ => panic!("bad connectivity"),
    };
    changed >= 1 && changed <= max_changed
}

/// Component id per voxel (`usize::MAX` for background) by depth-first flood
/// fill that tests every pair of foreground voxels for adjacency.
pub fn flood_fill(dims: Dims, mask: &[bool], connectivity: u32) -> (Vec<usize>, usize) {
    let fg: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let mut comp = vec![usize::MAX; mask.len()];
    let mut n = 0;
    for &seed in &fg {
        if comp[seed] != usize::MAX {
            continue;
        }
        let mut stack = vec![seed];
        comp[seed] = n;
        while let Some(i) = stack.pop() {
            for &j in &fg {
                if comp[j] == usize::MAX && adjacent(coords(dims, i), coords(dims, j), connectivity)
                {
                    comp[j] = n;
                    stack.push(j);
                }
            }
        }
        n += 1;
    }
    (comp, n)
}

/// Whether two labelings induce the same partition of the foreground.
/// `background` is the label used for non-foreground voxels in `b`.
pub fn same_partition(a: &[usize], b: &[u32], background: u32) -> bool {
    use std::collections::HashMap;
    let mut fwd: HashMap<usize, u32> = HashMap::new();
    let mut back: HashMap<u32, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x == usize::MAX) != (y == background) {
            return false;
        }
        if x == usize::MAX {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Voxel count and bounding-box extents of each component.
pub fn component_boxes(dims: Dims, comp: &[usize], n: usize) -> Vec<(usize, [i64; 3])> {
    let mut out = Vec::new();
    for c in 0..n {
        let members: Vec<[i64; 3]> = (0..comp.len())
            .filter(|&i| comp[i] == c)
            .map(|i| coords(dims, i))
            .collect();
        let ext = std::array::from_fn(|k| {
            let lo = members.iter().map(|m| m[k]).min().unwrap();
            let hi = members.iter().map(|m| m[k]).max().unwrap();
            hi - lo + 1
        });
        out.push((members.len(), ext));
    }
    out
}

/// Removes components whose largest bounding-box extent is below `min_diameter`.
pub fn diameter_filter(
    dims: Dims,
    mask: &[bool],
    min_diameter: i64,
    connectivity: u32,
) -> Vec<bool> {
    let (comp, n) = flood_fill(dims, mask, connectivity);
    let boxes = component_boxes(dims, &comp, n);
    comp.iter()
        .map(|&c| c != usize::MAX && *boxes[c].1.iter().max().unwrap() >= min_diameter)
        .collect()
}

pub fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

pub fn dice(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let total = count(a) + count(b);
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}

pub fn avd(pred: &[bool], gt: &[bool]) -> Option<f64> {
    let g = count(gt) as f64;
    if g == 0.0 {
        None
    } else {
        Some(100.0 * (count(pred) as f64 - g).abs() / g)
    }
}

/// Per-component "touches the other mask" flags.
fn hits(comp: &[usize], n: usize, other: &[bool]) -> Vec<bool> {
    (0..n)
        .map(|c| (0..comp.len()).any(|i| comp[i] == c && other[i]))
        .collect()
}

pub fn lesion_recall(dims: Dims, pred: &[bool], gt: &[bool], connectivity: u32) -> Option<f64> {
    let (comp, n) = flood_fill(dims, gt, connectivity);
    if n == 0 {
        return None;
    }
    let h = hits(&comp, n, pred);
    Some(h.iter().filter(|&&x| x).count() as f64 / n as f64)
}

pub fn lesion_f1(dims: Dims, pred: &[bool], gt: &[bool], connectivity: u32) -> f64 {
    let (gc, gn) = flood_fill(dims, gt, connectivity);
    let (pc, pn) = flood_fill(dims, pred, connectivity);
    let tp = hits(&pc, pn, gt).iter().filter(|&&x| x).count();
    let fp = pn - tp;
    let fn_ = hits(&gc, gn, pred).iter().filter(|&&x| !x).count();
    if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Foreground voxels with a background (or out-of-grid) face neighbour.
pub fn boundary(dims: Dims, mask: &[bool]) -> Vec<[i64; 3]> {
    let inside = |c: [i64; 3]| (0..3).all(|k| c[k] >= 0 && c[k] < dims[k] as i64);
    let idx = |c: [i64; 3]| c[0] as usize + dims[0] * (c[1] as usize + dims[1] * c[2] as usize);
    let faces = [
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [0, 0, 1],
        [0, 0, -1],
    ];
    (0..mask.len())
        .filter(|&i| mask[i])
        .map(|i| coords(dims, i))
        .filter(|&c| {
            faces.iter().any(|f| {
                let n = [c[0] + f[0], c[1] + f[1], c[2] + f[2]];
                !inside(n) || !mask[idx(n)]
            })
        })
        .collect()
}

/// Linear-interpolation percentile on a sorted copy.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (v.len() - 1) as f64 * q / 100.0;
    let i = h as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    v[i] + (h - i as f64) * (v[i + 1] - v[i])
}

/// Nearest-point distances from every point of `from` to the set `to`, by all pairs.
pub fn directed(from: &[[i64; 3]], to: &[[i64; 3]], spacing: [f64; 3]) -> Vec<f64> {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| {
                    (0..3)
                        .map(|k| ((a[k] - b[k]) as f64 * spacing[k]).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// All-pairs percentile Hausdorff distance; `pooled` selects the pooled rule
/// instead of the max of the two directed percentiles.
pub fn hausdorff(
    dims: Dims,
    spacing: [f64; 3],
    a: &[bool],
    b: &[bool],
    q: f64,
    pooled: bool,
) -> Option<f64> {
    if count(a) == 0 || count(b) == 0 {
        return None;
    }
    let (sa, sb) = (boundary(dims, a), boundary(dims, b));
    let ab = directed(&sa, &sb, spacing);
    let ba = directed(&sb, &sa, spacing);
    if pooled {
        let all: Vec<f64> = ab.iter().chain(&ba).copied().collect();
        Some(percentile(&all, q))
    } else {
        Some(percentile(&ab, q).max(percentile(&ba, q)))
    }
}

/// Output of the reference EM loop.
#[derive(Debug, Clone)]
pub struct EmTrace {
    pub weights: Vec<f64>,
    pub sensitivity: Vec<f64>,
    pub specificity: Vec<f64>,
    pub n_iters: usize,
    pub converged: bool,
    pub log_likelihood: Vec<f64>,
}

/// Binary STAPLE as a straight voxel loop with linear-domain products.
/// `votes[j][i]` is rater `j`'s vote at voxel `i`.
pub fn staple_em(
    votes: &[Vec<bool>],
    p0: &[f64],
    q0: &[f64],
    prior: f64,
    max_iters: usize,
    tol: f64,
) -> EmTrace {
    let clamp = |v: f64| v.clamp(1e-6, 1.0 - 1e-6);
    let r = votes.len();
    let n = votes[0].len();
    let mut p: Vec<f64> = p0.iter().map(|&v| clamp(v)).collect();
    let mut q: Vec<f64> = q0.iter().map(|&v| clamp(v)).collect();
    let prior = clamp(prior);
    let estep = |p: &[f64], q: &[f64]| -> (Vec<f64>, f64) {
        let mut w = vec![0.0; n];
        let mut ll = 0.0;
        for i in 0..n {
            let mut a = prior;
            let mut b = 1.0 - prior;
            for j in 0..r {
                if votes[j][i] {
                    a *= p[j];
                    b *= 1.0 - q[j];
                } else {
                    a *= 1.0 - p[j];
                    b *= q[j];
                }
            }
            w[i] = a / (a + b);
            ll += (a + b).ln();
        }
        (w, ll)
    };
    let (mut w, ll) = estep(&p, &q);
    let mut lls = vec![ll];
    let mut it = 0;
    let mut converged = false;
    while it < max_iters {
        let sw: f64 = w.iter().sum();
        let sb: f64 = w.iter().map(|x| 1.0 - x).sum();
        for j in 0..r {
            let mut num_p = 0.0;
            let mut num_q = 0.0;
            for i in 0..n {
                if votes[j][i] {
                    num_p += w[i];
                } else {
                    num_q += 1.0 - w[i];
                }
            }
            if sw > 0.0 {
                p[j] = clamp(num_p / sw);
            }
            if sb > 0.0 {
                q[j] = clamp(num_q / sb);
            }
        }
        let (nw, ll) = estep(&p, &q);
        it += 1;
        lls.push(ll);
        let delta = nw
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = nw;
        if delta < tol {
            converged = true;
            break;
        }
    }
    EmTrace {
        weights: w,
        sensitivity: p,
        specificity: q,
        n_iters: it,
        converged,
        log_likelihood: lls,
    }
}

/// Rank of each value among `row` by counting: `1 + #smaller + (#equal − 1)/2`.
pub fn counting_ranks(row: &[f64]) -> Vec<f64> {
    row.iter()
        .map(|&v| {
            let less = row.iter().filter(|&&u| u < v).count() as f64;
            let equal = row.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Tie-corrected Friedman statistic from counting ranks; lower values rank first.
pub fn friedman_chi2(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len() as f64;
    let k = rows[0].len();
    let kf = k as f64;
    let mut sums = vec![0.0; k];
    let mut ties = 0.0;
    for row in rows {
        for (s, r) in sums.iter_mut().zip(counting_ranks(row)) {
            *s += r;
        }
        let mut seen: Vec<f64> = Vec::new();
        for &v in row {
            if !seen.contains(&v) {
                seen.push(v);
                let t = row.iter().filter(|&&u| u == v).count() as f64;
                ties += t * t * t - t;
            }
        }
    }
    // equivalent form: 12/(nk(k+1)) Σ (R_j − n(k+1)/2)²
    let centre = n * (kf + 1.0) / 2.0;
    let s: f64 = sums.iter().map(|r| (r - centre).powi(2)).sum();
    let chi = 12.0 * s / (n * kf * (kf + 1.0));
    chi / (1.0 - ties / (n * (kf * kf * kf - kf)))
}

/// Exact Wilcoxon signed-rank p-values by enumerating all sign assignments of
/// the nonzero differences: `(two_sided, greater, less)`.
pub fn wilcoxon_enumerate(diffs: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|&x| x != 0.0).collect();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = counting_ranks(&abs);
    let n = d.len();
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let total = 1u64 << n;
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0..total {
        let w: f64 = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let lower = le as f64 / total as f64;
    let upper = ge as f64 / total as f64;
    ((2.0 * lower.min(upper)).min(1.0), upper, lower)
}

/// Deterministic xorshift generator for building random fixtures.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn bool(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn mask(&mut self, len: usize, p: f64) -> Vec<bool> {
        (0..len).map(|_| self.bool(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_all_positive() {
        let (two, greater, _) = wilcoxon_enumerate(&[1.0, 2.0, 3.0]);
        assert_eq!(greater, 1.0 / 8.0);
        assert_eq!(two, 0.25);
    }

    #[test]
    fn flood_fill_line() {
        let (c, n) = flood_fill([3, 1, 1], &[true, false, true], 26);
        assert_eq!(n, 2);
        assert_ne!(c[0], c[2]);
    }

    #[test]
    fn friedman_consistent_ordering() {
        let rows = vec![vec![1.0, 2.0, 3.0]; 10];
        assert!((friedman_chi2(&rows) - 20.0).abs() < 1e-12);
    }
}
