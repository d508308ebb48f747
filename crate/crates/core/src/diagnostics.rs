//! Posterior summaries, traces and the truncated ℓ₁ error.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gibbs::PosteriorSamples;
use crate::model::LevyMeasure;

/// Number of coordinates entering [`err_l1`].
pub const ERR_TRUNCATION: usize = 50;

/// Percentile convention used by [`summarize`].
pub const PERCENTILE_METHOD: &str = "linear interpolation between order statistics (type 7)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSummary {
    pub k: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Type-7 percentile of sorted data at level `pct` (in percent).
pub fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * pct / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-coordinate mean and percentile interval at `levels` (percent, e.g. `(2.5, 97.5)`).
pub fn summarize(samples: &PosteriorSamples, levels: (f64, f64)) -> Result<Vec<CoordinateSummary>> {
    if samples.is_empty() {
        return Err(Error::Input("no posterior draws to summarize".into()));
    }
    let (lo, hi) = levels;
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo > hi {
        return Err(invalid(format!("bad percentile levels ({lo}, {hi})")));
    }
    let rows = samples.rows() as f64;
    Ok((1..=samples.m())
        .map(|k| {
            let mut col = samples.column(k);
            let mean = col.iter().sum::<f64>() / rows;
            col.sort_by(f64::total_cmp);
            CoordinateSummary {
                k,
                mean,
                lo: percentile_sorted(&col, lo),
                hi: percentile_sorted(&col, hi),
            }
        })
        .collect())
}

/// Posterior mean of every coordinate.
pub fn posterior_mean(samples: &PosteriorSamples) -> Vec<f64> {
    let rows = samples.rows().max(1) as f64;
    let mut acc = vec![0.0; samples.m()];
    for row in samples.iter_rows() {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / rows).collect()
}

/// `∑_{k=1}^{50} |â_k − b_k|`, missing entries counted as zero.
pub fn err_l1_vec(a: &[f64], b: &[f64]) -> f64 {
    (0..ERR_TRUNCATION)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0.0);
            let y = b.get(i).copied().unwrap_or(0.0);
            (x - y).abs()
        })
        .sum()
}

/// Truncated ℓ₁ error of an estimate against the true Lévy measure.
pub fn err_l1(truth: &LevyMeasure, estimate: &[f64]) -> f64 {
    err_l1_vec(truth.values(), estimate)
}

/// Column `k` (1-based) subsampled every `stride` rows, starting at row 0.
pub fn extract_trace(samples: &PosteriorSamples, k: usize, stride: usize) -> Result<Vec<f64>> {
    if k == 0 || k > samples.m() {
        return Err(invalid(format!(
            "coordinate {k} outside 1..={}",
            samples.m()
        )));
    }
    if stride == 0 {
        return Err(invalid("stride must be positive"));
    }
    Ok(samples
        .iter_rows()
        .step_by(stride)
        .map(|r| r[k - 1])
        .collect())
}
