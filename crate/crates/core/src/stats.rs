//! Nonparametric comparison of models over per-case metric tables: the
//! Friedman rank test across all models and pairwise Wilcoxon signed-rank
//! (or sign) tests, plus the small amount of special-function support they
//! need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::percentile;

/// Significance level used for the `significant` flags.
pub const ALPHA: f64 = 0.05;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series for P
        let mut sum = 1.0 / a;
        let mut term = sum;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (1.0 - sum * log_prefix.exp()).clamp(0.0, 1.0)
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        (log_prefix.exp() * h).clamp(0.0, 1.0)
    }
}

/// Upper-tail probability of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    if df.is_multiple_of(2) {
        // Q(k, y) = e^{-y} Σ_{i<k} y^i / i! for integer k
        let y = x / 2.0;
        let k = df / 2;
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..k {
            term *= y / i as f64;
            sum += term;
        }
        return ((-y).exp() * sum).clamp(0.0, 1.0);
    }
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// `P(Z > z)` for a standard normal `Z`.
pub fn normal_sf(z: f64) -> f64 {
    let tail = 0.5 * chi_square_sf(z * z, 1);
    if z >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Sizes of the tie groups in `values`.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        out.push(j - i + 1);
        i = j + 1;
    }
    out
}

/// Cases × models table of one metric. `None` (or NaN) marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub models: Vec<String>,
    pub cases: Vec<String>,
    /// `values[case][model]`.
    pub values: Vec<Vec<Option<f64>>>,
}

impl MetricTable {
    pub fn new(
        models: Vec<String>,
        cases: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if values.len() != cases.len() || values.iter().any(|r| r.len() != models.len()) {
            return Err(Error::InvalidParameter(format!(
                "table shape does not match {} cases x {} models",
                cases.len(),
                models.len()
            )));
        }
        Ok(Self {
            models,
            cases,
            values,
        })
    }

    /// Builds a table with generated case names from rows of complete values.
    pub fn from_rows(models: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let cases = (0..rows.len()).map(|i| format!("case{i}")).collect();
        let values = rows
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect();
        Self::new(models, cases, values)
    }

    fn value(&self, case: usize, model: usize) -> Option<f64> {
        self.values[case][model].filter(|v| !v.is_nan())
    }

    /// Rows where every listed model has a value.
    fn complete_rows(&self, models: &[usize]) -> Vec<Vec<f64>> {
        (0..self.cases.len())
            .filter_map(|c| {
                models
                    .iter()
                    .map(|&m| self.value(c, m))
                    .collect::<Option<Vec<f64>>>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: u32,
    pub p_value: f64,
    pub n_used: usize,
    pub n_dropped: usize,
    /// Mean within-case rank per model; rank 1 is the best value.
    pub mean_ranks: Vec<f64>,
    /// Every case tied across all models; the statistic is reported as 0.
    pub all_ties: bool,
    pub significant: bool,
}

/// Friedman rank test with the standard tie correction. Cases with any
/// missing value are dropped.
pub fn friedman_test(table: &MetricTable, higher_is_better: bool) -> Result<FriedmanResult> {
    let k = table.models.len();
    if k < 2 {
        return Err(Error::InsufficientData(format!(
            "Friedman test needs at least 2 models, got {k}"
        )));
    }
    let all: Vec<usize> = (0..k).collect();
    let rows = table.complete_rows(&all);
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "Friedman test needs at least 2 complete cases, got {n}"
        )));
    }
    let sign = if higher_is_better { -1.0 } else { 1.0 };
    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in &rows {
        let keyed: Vec<f64> = row.iter().map(|v| sign * v).collect();
        for (s, r) in rank_sums.iter_mut().zip(average_ranks(&keyed)) {
            *s += r;
        }
        tie_term += tie_sizes(&keyed)
            .iter()
            .map(|&t| (t * t * t - t) as f64)
            .sum::<f64>();
    }
    let (nf, kf) = (n as f64, k as f64);
    let ss: f64 = rank_sums.iter().map(|r| r * r).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * ss - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_term / (nf * (kf * kf * kf - kf));
    let all_ties = correction <= 1e-12;
    let chi2 = if all_ties {
        0.0
    } else {
        (raw / correction).max(0.0)
    };
    let df = (k - 1) as u32;
    let p_value = chi_square_sf(chi2, df);
    Ok(FriedmanResult {
        chi2,
        df,
        p_value,
        n_used: n,
        n_dropped: table.cases.len() - n,
        mean_ranks: rank_sums.iter().map(|s| s / nf).collect(),
        all_ties,
        significant: p_value < ALPHA,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// First sample tends to be larger.
    Greater,
    /// First sample tends to be smaller.
    Less,
}

/// Samples up to this size use the exact null distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs with a nonzero difference.
    pub n_nonzero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W−)`.
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
    pub all_zero: bool,
}

/// Exact tail probabilities of `W+` for the given ranks, as counts of the
/// `2^n` equally likely sign assignments indexed by doubled rank sum.
fn signed_rank_distribution(ranks: &[f64]) -> Vec<f64> {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Wilcoxon signed-rank test on paired samples. Zero differences are dropped;
/// up to [`WILCOXON_EXACT_MAX_N`] remaining pairs use the exact distribution,
/// larger samples a tie-corrected normal approximation with continuity correction.
pub fn wilcoxon_signed_rank(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n_nonzero: 0,
            w_plus: 0.0,
            w_minus: 0.0,
            statistic: 0.0,
            p_value: 1.0,
            exact: true,
            all_zero: true,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let exact = n <= WILCOXON_EXACT_MAX_N;
    let p_value = if exact {
        let counts = signed_rank_distribution(&ranks);
        let all: f64 = counts.iter().sum();
        let obs = (2.0 * w_plus).round() as usize;
        let lower: f64 = counts[..=obs].iter().sum::<f64>() / all;
        let upper: f64 = counts[obs..].iter().sum::<f64>() / all;
        match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Greater => upper,
            Alternative::Less => lower,
        }
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_sizes(&abs)
            .iter()
            .map(|&t| (t * t * t - t) as f64)
            .sum();
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0).sqrt();
        match alternative {
            Alternative::TwoSided => {
                let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
                chi_square_sf(z * z, 1).min(1.0)
            }
            Alternative::Greater => normal_sf((w_plus - mean - 0.5) / sd),
            Alternative::Less => 1.0 - normal_sf((w_plus - mean + 0.5) / sd),
        }
    };
    Ok(WilcoxonResult {
        n_nonzero: n,
        w_plus,
        w_minus,
        statistic: w_plus.min(w_minus),
        p_value,
        exact,
        all_zero: false,
    })
}

/// Exact two-sided sign test on paired samples (zero differences dropped).
pub fn sign_test(a: &[f64], b: &[f64]) -> Result<(usize, usize, f64)> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(
            "paired samples differ in length".into(),
        ));
    }
    let pos = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let neg = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let n = pos + neg;
    if n == 0 {
        return Ok((0, 0, 1.0));
    }
    // binomial(n, 1/2) tails via log-factorials
    let ln_choose = |k: usize| {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    };
    let pmf = |k: usize| (ln_choose(k) - n as f64 * std::f64::consts::LN_2).exp();
    let lower: f64 = (0..=pos).map(pmf).sum();
    let upper: f64 = (pos..=n).map(pmf).sum();
    Ok((pos, n, (2.0 * lower.min(upper)).min(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    Bonferroni,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseTest {
    #[default]
    Wilcoxon,
    Sign,
}

/// Recommended minimum number of cases per pair.
pub const PAIRWISE_MIN_CASES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub model_a: String,
    pub model_b: String,
    pub test: PairwiseTest,
    pub n_used: usize,
    pub statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub all_zero: bool,
    pub significant: bool,
}

/// Two-sided tests between every pair of models on the cases complete for that pair.
pub fn pairwise_tests(
    table: &MetricTable,
    correction: Correction,
    test: PairwiseTest,
) -> Result<Vec<PairwiseResult>> {
    let k = table.models.len();
    let n_pairs = k * k.saturating_sub(1) / 2;
    let mut out = Vec::with_capacity(n_pairs);
    for i in 0..k {
        for j in i + 1..k {
            let rows = table.complete_rows(&[i, j]);
            if rows.len() < PAIRWISE_MIN_CASES {
                log::warn!(
                    "only {} paired cases for {} vs {}",
                    rows.len(),
                    table.models[i],
                    table.models[j]
                );
            }
            let a: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let b: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            let (statistic, p_raw, all_zero) = match test {
                PairwiseTest::Wilcoxon => {
                    let w = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided)?;
                    (w.statistic, w.p_value, w.all_zero)
                }
                PairwiseTest::Sign => {
                    let (pos, n, p) = sign_test(&a, &b)?;
                    (pos as f64, p, n == 0)
                }
            };
            let p_adjusted = match correction {
                Correction::Bonferroni => (p_raw * n_pairs as f64).min(1.0),
                Correction::None => p_raw,
            };
            out.push(PairwiseResult {
                model_a: table.models[i].clone(),
                model_b: table.models[j].clone(),
                test,
                n_used: rows.len(),
                statistic,
                p_raw,
                p_adjusted,
                all_zero,
                significant: p_adjusted < ALPHA,
            });
        }
    }
    Ok(out)
}

/// Wilcoxon signed-rank tests between every pair of models.
pub fn pairwise_wilcoxon(
    table: &MetricTable,
    correction: Correction,
) -> Result<Vec<PairwiseResult>> {
    pairwise_tests(table, correction, PairwiseTest::Wilcoxon)
}

/// Descriptive statistics of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n − 1`); 0 for a single value.
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// `None` for an empty sample; NaNs are ignored.
    pub fn of(values: &[f64]) -> Option<Self> {
        let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            n,
            mean,
            std,
            median: percentile(&v, 50.0)?,
            q1: percentile(&v, 25.0)?,
            q3: percentile(&v, 75.0)?,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// `median unit (q1, q3)`, e.g. `3.35 mL (1.14, 5.0)`.
    pub fn median_iqr(&self, unit: &str) -> String {
        format!(
            "{} {unit} ({}, {})",
            short_decimal(self.median),
            short_decimal(self.q1),
            short_decimal(self.q3)
        )
    }
}

/// Two decimals with trailing zeros trimmed, keeping at least one decimal.
fn short_decimal(v: f64) -> String {
    let s = format!("{v:.2}");
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_closed_forms() {
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
        assert!((chi_square_sf(20.0, 2) - (-10.0f64).exp()).abs() < 1e-15);
        assert!((chi_square_sf(3.0, 4) - (-1.5f64).exp() * 2.5).abs() < 1e-15);
    }

    #[test]
    fn chi_square_high_precision_values() {
        // reference values from a 40-digit evaluation of Q(df/2, x/2)
        let cases = [
            (1.145, 5, 0.950_043_778_447_922_7),
            (3.7, 3, 0.295_734_032_375_275_87),
            (0.5, 1, 0.479_500_122_186_953_5),
            (12.3, 7, 0.091_114_886_000_313_03),
            (40.0, 1, 2.539_628_589_470_865e-10),
            (2.2, 15, 0.999_944_440_126_295_8),
            (0.01, 4, 0.999_987_541_588_645_7),
        ];
        for (x, df, want) in cases {
            let got = chi_square_sf(x, df);
            assert!((got - want).abs() < 1e-10, "x={x} df={df}: {got} vs {want}");
        }
    }

    #[test]
    fn ln_gamma_integers() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn normal_tail() {
        assert!((normal_sf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_sf(1.959_963_984_540_054) - 0.025).abs() < 1e-12);
        assert!((normal_sf(-1.959_963_984_540_054) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn friedman_perfect_ordering() {
        let rows = vec![vec![0.9, 0.8, 0.7]; 10];
        let t = MetricTable::from_rows(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let r = friedman_test(&t, true).unwrap();
        assert!((r.chi2 - 20.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert!((r.p_value - (-10.0f64).exp()).abs() < 1e-12);
        assert_eq!(r.mean_ranks, vec![1.0, 2.0, 3.0]);
        let lower = friedman_test(&t, false).unwrap();
        assert_eq!(lower.mean_ranks, vec![3.0, 2.0, 1.0]);
        assert_eq!(lower.chi2, r.chi2);
    }

    #[test]
    fn friedman_all_ties() {
        let rows = vec![vec![0.5, 0.5, 0.5]; 6];
        let t = MetricTable::from_rows(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let r = friedman_test(&t, true).unwrap();
        assert!(r.all_ties);
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn friedman_drops_incomplete_rows() {
        let t = MetricTable::new(
            vec!["a".into(), "b".into()],
            vec!["1".into(), "2".into(), "3".into()],
            vec![
                vec![Some(1.0), Some(2.0)],
                vec![None, Some(2.0)],
                vec![Some(3.0), Some(f64::NAN)],
            ],
        )
        .unwrap();
        assert!(matches!(
            friedman_test(&t, true),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn friedman_needs_two_models() {
        let t = MetricTable::from_rows(vec!["a".into()], vec![vec![1.0]; 4]).unwrap();
        assert!(friedman_test(&t, true).is_err());
    }

    #[test]
    fn wilcoxon_identical_columns() {
        let a = [1.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank(&a, &a, Alternative::TwoSided).unwrap();
        assert!(r.all_zero);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_small_exact() {
        // all 5 differences positive with distinct ranks: P(W+ = 15) = 1/32
        let a = [2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.9, 2.8, 3.7, 4.6, 5.5];
        let r = wilcoxon_signed_rank(&a, &b, Alternative::Greater).unwrap();
        assert!((r.p_value - 1.0 / 32.0).abs() < 1e-15);
        let r = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided).unwrap();
        assert!((r.p_value - 2.0 / 32.0).abs() < 1e-15);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn wilcoxon_large_uses_normal() {
        let a: Vec<f64> = (0..40)
            .map(|i| i as f64 + 0.5 * ((i * 7) % 5) as f64)
            .collect();
        let b: Vec<f64> = (0..40).map(|i| i as f64 + 1.0).collect();
        let r = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided).unwrap();
        assert!(!r.exact);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn bonferroni_triples_and_caps() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                vec![
                    i as f64 + 1.0,
                    i as f64 + 0.5,
                    i as f64 + 0.5 + 0.1 * ((i % 3) as f64 - 1.0),
                ]
            })
            .collect();
        let t = MetricTable::from_rows(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let raw = pairwise_wilcoxon(&t, Correction::None).unwrap();
        let adj = pairwise_wilcoxon(&t, Correction::Bonferroni).unwrap();
        assert_eq!(raw.len(), 3);
        for (r, a) in raw.iter().zip(&adj) {
            assert_eq!(a.p_raw, r.p_raw);
            assert_eq!(a.p_adjusted, (3.0 * r.p_raw).min(1.0));
        }
    }

    #[test]
    fn sign_test_counts() {
        let (pos, n, p) = sign_test(&[2.0, 3.0, 4.0, 1.0], &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((pos, n), (3, 3));
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn summary_and_format() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let s = Summary {
            median: 3.35,
            q1: 1.14,
            q3: 5.0,
            ..s
        };
        assert_eq!(s.median_iqr("mL"), "3.35 mL (1.14, 5.0)");
        assert!(Summary::of(&[]).is_none());
    }
}
