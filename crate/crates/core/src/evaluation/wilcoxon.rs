//! Two-sided Wilcoxon signed-rank test for paired scores.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by the exact method.
pub const EXACT_LIMIT: usize = 25;
/// Smallest number of non-zero differences accepted.
pub const MIN_DIFFERENCES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// The smaller of the two signed-rank sums.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n_effective: usize,
    pub method: WilcoxonMethod,
    /// Rank sum of the differences where `a > b`.
    pub w_plus: f64,
    /// Rank sum of the differences where `a < b`.
    pub w_minus: f64,
}

/// Average ranks (1-based) of `values`, with tied values sharing the mean
/// of their positions. Returned doubled so that they are integers.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1..=end average to (start + 1 + end) / 2
        let doubled = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = doubled;
        }
        start = end;
    }
    ranks
}

/// Number of sign patterns whose doubled positive rank sum is at most
/// `bound`, by dynamic programming over the achievable sums.
fn count_at_most(ranks: &[u64], bound: u64) -> u64 {
    let total: u64 = ranks.iter().sum();
    let mut ways = vec![0u64; total as usize + 1];
    ways[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (r..=reach + r).rev() {
            ways[s] += ways[s - r];
        }
        reach += r;
    }
    ways.iter().take(bound as usize + 1).sum()
}

/// Tests whether paired scores differ. Zero differences are discarded and
/// tied absolute differences receive average ranks.
///
/// The p-value is exact for up to [`EXACT_LIMIT`] non-zero differences,
/// conditional on the observed ranks. Beyond that a normal approximation
/// with tie-corrected variance and a continuity correction of 0.5 is used.
pub fn wilcoxon_signed_rank(scores_a: &[f64], scores_b: &[f64]) -> Result<WilcoxonResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::DimensionMismatch {
            expected: scores_a.len(),
            found: scores_b.len(),
        });
    }
    let diffs: Vec<f64> = scores_a
        .iter()
        .zip(scores_b)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Err(Error::NoNonZeroDifferences);
    }
    if n < MIN_DIFFERENCES {
        return Err(Error::TooFewDifferences {
            found: n,
            required: MIN_DIFFERENCES,
        });
    }

    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&magnitudes);
    let plus2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let minus2: u64 = ranks.iter().sum::<u64>() - plus2;
    let w2 = plus2.min(minus2);

    let (p_value, method) = if n <= EXACT_LIMIT {
        let count = count_at_most(&ranks, w2);
        let p = 2.0 * count as f64 / 2f64.powi(n as i32);
        (p.min(1.0), WilcoxonMethod::Exact)
    } else {
        (normal_p(&magnitudes, &ranks, w2), WilcoxonMethod::NormalApprox)
    };
    Ok(WilcoxonResult {
        statistic: w2 as f64 / 2.0,
        p_value,
        n_effective: n,
        method,
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
    })
}

fn normal_p(magnitudes: &[f64], ranks: &[u64], w2: u64) -> f64 {
    let n = magnitudes.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // ties share a doubled rank, so group sizes can be read off the ranks
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let w = w2 as f64 / 2.0;
    let z = (w - mean + 0.5) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.cdf(z)).clamp(f64::MIN_POSITIVE, 1.0)
}
