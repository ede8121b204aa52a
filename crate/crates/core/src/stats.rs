//! Nonparametric statistics for the evaluation protocol: Wilcoxon
//! signed-rank tests (exact for small samples, tie-corrected normal
//! approximation above n = 25), Holm step-down adjustment, and
//! five-number summaries for box plots.

use statrs::distribution::{ContinuousCDF, Normal};

/// Largest sample size handled by the exact distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    /// All differences were zero; p = 1.0 by convention.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct WilcoxonResult {
    /// Two-sided p-value.
    pub p_value: f64,
    /// Sum of ranks of positive differences (W+).
    pub statistic: f64,
    /// Pairs remaining after dropping zero differences.
    pub n_used: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks of |values|, ties sharing the mean rank. Returned in
/// input order; every rank is a multiple of 0.5.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are
/// dropped (standard convention); if none remain the result is flagged
/// degenerate with p = 1.0.
pub fn wilcoxon_signed_rank(xs: &[f64], ys: &[f64]) -> WilcoxonResult {
    assert_eq!(xs.len(), ys.len(), "paired samples must align");
    let diffs: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return WilcoxonResult {
            p_value: 1.0,
            statistic: 0.0,
            n_used: 0,
            method: WilcoxonMethod::Degenerate,
        };
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if n <= WILCOXON_EXACT_MAX_N {
        let p = exact_two_sided_p(&ranks, w_plus);
        WilcoxonResult {
            p_value: p,
            statistic: w_plus,
            n_used: n,
            method: WilcoxonMethod::Exact,
        }
    } else {
        let p = normal_two_sided_p(&ranks, w_plus, n);
        WilcoxonResult {
            p_value: p,
            statistic: w_plus,
            n_used: n,
            method: WilcoxonMethod::NormalApprox,
        }
    }
}

/// Exact two-sided p: 2 * min(P(W+ <= w), P(W+ >= w)) over all 2^n sign
/// assignments, computed by dynamic programming over doubled ranks
/// (average ranks are multiples of 0.5, so doubling makes them
/// integral). Conditioning on the observed (tied) ranks keeps the
/// enumeration exact in the presence of ties.
fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks
        .iter()
        .map(|r| {
            let d = (r * 2.0).round();
            debug_assert!((r * 2.0 - d).abs() < 1e-9);
            d as usize
        })
        .collect();
    let max_sum: usize = doubled.iter().sum();
    // counts of sign assignments reaching each doubled sum; counts stay
    // below 2^25 so f64 keeps them exact
    let mut dist = vec![0.0f64; max_sum + 1];
    dist[0] = 1.0;
    for &r in &doubled {
        for s in (0..=max_sum).rev() {
            if s >= r && dist[s - r] > 0.0 {
                dist[s] += dist[s - r];
            }
        }
    }
    let total: f64 = 2f64.powi(ranks.len() as i32);
    let w2 = (w_plus * 2.0).round() as usize;
    let p_le: f64 = dist[..=w2.min(max_sum)].iter().sum::<f64>() / total;
    let p_ge: f64 = dist[w2.min(max_sum)..].iter().sum::<f64>() / total;
    (2.0 * p_le.min(p_ge)).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction toward the mean.
fn normal_two_sided_p(ranks: &[f64], w_plus: f64, n: usize) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 over tie groups
    let mut sorted: Vec<f64> = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        if t > 1.0 {
            variance -= (t * t * t - t) / 48.0;
        }
        i = j + 1;
    }
    if variance <= 0.0 {
        return 1.0;
    }
    let correction = if w_plus > mean {
        -0.5
    } else if w_plus < mean {
        0.5
    } else {
        0.0
    };
    let z = (w_plus - mean + correction) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0)
}

/// Holm step-down adjustment: sort p ascending, multiply the j-th
/// smallest by (k - j), take running maxima, cap at 1, and map back to
/// the original order.
pub fn holm_adjust(p_values: &[f64]) -> Vec<f64> {
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; k];
    let mut running_max = 0.0f64;
    for (j, &idx) in order.iter().enumerate() {
        let stepped = ((k - j) as f64 * p_values[idx]).min(1.0);
        running_max = running_max.max(stepped);
        adjusted[idx] = running_max;
    }
    adjusted
}

/// Box-plot summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

/// Linear-interpolation quantile (R type 7) of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn five_number_summary(values: &[f64]) -> Option<FiveNumberSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Some(FiveNumberSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        mean,
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        count: sorted.len(),
    })
}
