//! Wilcoxon rank-sum test (Mann-Whitney), normal approximation or exact.

use super::special::normal_sf;
use super::{TestMethod, TestOutcome};
use crate::error::{Error, Result};

/// Largest pooled size the exact mode enumerates.
pub const EXACT_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RanksumMode {
    /// Normal approximation with midrank tie correction and a continuity
    /// correction of 1/2 toward the null mean.
    #[default]
    Approx,
    /// Exact permutation distribution over all C(n_a + n_b, n_a) rank
    /// assignments; requires no ties and n_a + n_b <= 16.
    Exact,
}

/// Midranks of the pooled sample, returned split back into the two groups,
/// plus the tie-group sizes.
fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = a.len() + b.len();
    let mut pooled: Vec<(f64, usize)> = a
        .iter()
        .chain(b.iter())
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0.0; n];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for k in i..=j {
            ranks[pooled[k].1] = midrank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    let (ra, rb) = ranks.split_at(a.len());
    (ra.to_vec(), rb.to_vec(), ties)
}

/// Two-sided rank-sum test. The statistic is the z score in approx mode and
/// the rank sum of `a` in exact mode.
pub fn ranksum_test(a: &[f64], b: &[f64], mode: RanksumMode) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Stats("rank-sum test requires non-empty groups".into()));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Stats("rank-sum sample contains non-finite values".into()));
    }
    match mode {
        RanksumMode::Approx => approx(a, b),
        RanksumMode::Exact => exact(a, b),
    }
}

fn approx(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    let (ra, _, ties) = midranks(a, b);
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let n = na + nb;
    let w: f64 = ra.iter().sum();
    let mean = na * (n + 1.0) / 2.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        // Everything tied: the rank sum equals its null mean exactly.
        return Ok(TestOutcome::new(0.0, 1.0, TestMethod::RanksumApprox, vec![a.len(), b.len()]));
    }
    let diff = w - mean;
    let cc = if diff > 0.0 {
        0.5
    } else if diff < 0.0 {
        -0.5
    } else {
        0.0
    };
    let z = (diff - cc) / var.sqrt();
    let p = (2.0 * normal_sf(z.abs())).min(1.0);
    Ok(TestOutcome::new(z, p, TestMethod::RanksumApprox, vec![a.len(), b.len()]))
}

fn exact(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    let n = a.len() + b.len();
    if n > EXACT_MAX_N {
        return Err(Error::Stats(format!(
            "exact rank-sum limited to n_a + n_b <= {EXACT_MAX_N}, got {n}"
        )));
    }
    let (ra, _, ties) = midranks(a, b);
    if ties.iter().any(|&t| t > 1) {
        return Err(Error::Stats("exact rank-sum requires tie-free data".into()));
    }
    // Tie-free midranks are exactly 1..=n, so the observed sum is integral.
    let w_obs: f64 = ra.iter().sum();
    let w_obs = w_obs.round() as usize;

    let dist = rank_sum_distribution(n, a.len());
    let total: f64 = dist.iter().map(|&c| c as f64).sum();
    let le: u64 = dist.iter().take(w_obs + 1).sum();
    let ge: u64 = dist.iter().skip(w_obs).sum();
    let p = (2.0 * (le.min(ge) as f64) / total).min(1.0);
    Ok(TestOutcome::new(
        w_obs as f64,
        p,
        TestMethod::RanksumExact,
        vec![a.len(), b.len()],
    ))
}

/// dist[s] = number of size-k subsets of {1..n} with rank sum s.
fn rank_sum_distribution(n: usize, k: usize) -> Vec<u64> {
    let max_sum = n * (n + 1) / 2;
    let mut counts = vec![vec![0u64; max_sum + 1]; k + 1];
    counts[0][0] = 1;
    for v in 1..=n {
        for kk in (1..=k).rev() {
            for s in (v..=max_sum).rev() {
                counts[kk][s] += counts[kk - 1][s - v];
            }
        }
    }
    counts.pop().unwrap()
}
