//! Kruskal–Wallis omnibus test with tie correction, Dunn's pairwise
//! post-hoc comparisons with Bonferroni adjustment, and medians.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("at least two groups are required, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("at least three observations are required, got {0}")]
    TooFewObservations(usize),
    #[error("sample is empty")]
    EmptySample,
    #[error("argument outside the function domain: {0}")]
    DomainError(f64),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KwResult {
    pub h: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub medians: Vec<f64>,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosthocResult {
    pub group_a: usize,
    pub group_b: usize,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Median using the midpoint of the two middle values for even sizes.
pub fn median(sample: &[f64]) -> Result<f64, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) })
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64, StatsError> {
    if !(x >= 0.0) || df == 0 {
        return Err(StatsError::DomainError(x));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new(df as f64).map_err(|_| StatsError::DomainError(df as f64))?;
    Ok(dist.sf(x).clamp(0.0, 1.0))
}

/// Pooled mid-ranks plus the tie term `Σ(t³ − t)`.
struct PooledRanks {
    /// Rank sum per group.
    rank_sums: Vec<f64>,
    sizes: Vec<usize>,
    n: usize,
    tie_term: f64,
}

fn pooled_ranks(groups: &[&[f64]]) -> Result<PooledRanks, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    let mut pooled: Vec<(f64, usize)> = Vec::with_capacity(groups.iter().map(|g| g.len()).sum());
    for (gi, g) in groups.iter().enumerate() {
        for &x in g.iter() {
            if !x.is_finite() {
                return Err(StatsError::NonFinite);
            }
            pooled.push((x, gi));
        }
    }
    let n = pooled.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations(n));
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_sums = vec![0.0; groups.len()];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // ranks start+1 ..= end share their average
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        for &(_, gi) in &pooled[start..end] {
            rank_sums[gi] += mid_rank;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    Ok(PooledRanks { rank_sums, sizes: groups.iter().map(|g| g.len()).collect(), n, tie_term })
}

/// Mid-ranks (1-based, ties share their average rank) in input order.
pub fn mid_ranks(sample: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| sample[a].total_cmp(&sample[b]));
    let mut ranks = vec![0.0; sample.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && sample[order[end]] == sample[order[start]] {
            end += 1;
        }
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

/// Kruskal–Wallis H test with tie correction.
///
/// When every observation is tied the correction factor is zero; H is
/// then reported as 0 with p = 1. A p-value that underflows to zero is
/// reported as `f64::MIN_POSITIVE`.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KwResult, StatsError> {
    let slices: Vec<&[f64]> = groups.iter().map(AsRef::as_ref).collect();
    let ranks = pooled_ranks(&slices)?;
    let n = ranks.n as f64;
    let centre = (n + 1.0) / 2.0;
    let raw: f64 = ranks
        .rank_sums
        .iter()
        .zip(&ranks.sizes)
        .map(|(&sum, &size)| {
            let size = size as f64;
            size * (sum / size - centre).powi(2)
        })
        .sum::<f64>()
        * 12.0
        / (n * (n + 1.0));
    let correction = 1.0 - ranks.tie_term / (n * n * n - n);
    let h = if correction > 0.0 { (raw / correction).max(0.0) } else { 0.0 };
    let df = slices.len() - 1;
    let p = chi_square_sf(h, df)?;
    let medians = slices.iter().map(|g| median(g)).collect::<Result<Vec<_>, _>>()?;
    Ok(KwResult {
        h,
        degrees_of_freedom: df,
        p_value: if p == 0.0 { f64::MIN_POSITIVE } else { p },
        medians,
        sizes: ranks.sizes,
    })
}

/// Dunn's pairwise z tests on pooled mid-ranks with tie-corrected
/// variance, Bonferroni-adjusted over all k(k−1)/2 pairs.
pub fn posthoc_bonferroni<G: AsRef<[f64]>>(groups: &[G]) -> Result<Vec<PosthocResult>, StatsError> {
    let slices: Vec<&[f64]> = groups.iter().map(AsRef::as_ref).collect();
    let ranks = pooled_ranks(&slices)?;
    let n = ranks.n as f64;
    let k = slices.len();
    let pairs = (k * (k - 1) / 2) as f64;
    let variance_base = n * (n + 1.0) / 12.0 - ranks.tie_term / (12.0 * (n - 1.0));
    let normal = Normal::standard();

    let mut out = Vec::with_capacity(pairs as usize);
    for a in 0..k {
        for b in a + 1..k {
            let mean_a = ranks.rank_sums[a] / ranks.sizes[a] as f64;
            let mean_b = ranks.rank_sums[b] / ranks.sizes[b] as f64;
            let se = (variance_base * (1.0 / ranks.sizes[a] as f64 + 1.0 / ranks.sizes[b] as f64)).sqrt();
            let z = if se > 0.0 { (mean_a - mean_b) / se } else { 0.0 };
            let mut p_raw = (2.0 * normal.sf(z.abs())).min(1.0);
            if p_raw == 0.0 {
                p_raw = f64::MIN_POSITIVE;
            }
            let p_adjusted = (p_raw * pairs).min(1.0);
            out.push(PosthocResult { group_a: a, group_b: b, z, p_raw, p_adjusted, significant: p_adjusted < 0.05 });
        }
    }
    Ok(out)
}
