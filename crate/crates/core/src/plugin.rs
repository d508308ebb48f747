//! Frequentist plug-in estimator: empirical increment pmf, inverse Panjer
//! recursion, truncation of negative jump probabilities and renormalisation.
//!
//! Only defined for equidistant observations with at least one zero
//! increment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{panjer_inverse, CompoundPmf, IncrementData};

/// How negative values of the inverse recursion are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Each `p_k` is clipped at zero as soon as it is produced, and later
    /// terms of the recursion are built from the clipped values.
    #[default]
    Recursive,
    /// The untruncated recursion is run to the end and negatives are zeroed.
    PositivePart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginEstimate {
    pub lambda_hat: f64,
    /// Renormalised jump law over `{1..k_max}`.
    pub p_hat: Vec<f64>,
    /// `lambda_hat · p_hat`.
    pub nu_hat: Vec<f64>,
    /// Inverse-Panjer output before truncation; may contain negative entries.
    pub raw_p: Vec<f64>,
    /// Common time gap of the data.
    pub delta: f64,
    pub truncation: Truncation,
}

/// Empirical pmf `q̂_k = #{i : z_i = k} / n` for `k = 0..max z`.
pub fn empirical_pmf(data: &IncrementData) -> Result<CompoundPmf> {
    if data.common_delta().is_none() {
        return Err(Error::NotApplicable(
            "observation times are not equidistant; the plug-in estimator needs a uniform grid"
                .into(),
        ));
    }
    let n = data.len() as f64;
    let mut counts = vec![0usize; data.max_z() as usize + 1];
    for z in data.zs() {
        counts[z as usize] += 1;
    }
    if counts[0] == 0 {
        return Err(Error::Breakdown(
            "no zero increments observed, so q̂_0 = 0".into(),
        ));
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    CompoundPmf::new(probs)
}

/// Plug-in estimate with recursive truncation; see [`estimate_with`].
pub fn estimate(data: &IncrementData, k_max: Option<usize>) -> Result<PluginEstimate> {
    estimate_with(data, k_max, Truncation::default())
}

/// Plug-in estimate with the jump law truncated at `k_max` (default: max observed z).
///
/// The estimate is per unit of the common time gap `Δ`: when `Δ ≠ 1` the
/// intensity is divided by `Δ` so that `nu_hat` is a Lévy measure per unit time.
pub fn estimate_with(
    data: &IncrementData,
    k_max: Option<usize>,
    truncation: Truncation,
) -> Result<PluginEstimate> {
    let q = empirical_pmf(data)?;
    let delta = data.common_delta().expect("checked by empirical_pmf");
    let k_max = k_max.unwrap_or(data.max_z() as usize).max(1);
    let (lambda, raw_p) = panjer_inverse(&q, k_max)?;
    let p_hat = match truncation {
        Truncation::PositivePart => truncate_renormalise(&raw_p)?,
        Truncation::Recursive => truncate_renormalise(&recursive_inverse(&q, k_max))?,
    };
    let lambda_hat = lambda / delta;
    let nu_hat = p_hat.iter().map(|p| lambda_hat * p).collect();
    Ok(PluginEstimate {
        lambda_hat,
        p_hat,
        nu_hat,
        raw_p,
        delta,
        truncation,
    })
}

/// Inverse recursion `p_k = (q_k − (λ/k) ∑_{j<k} j p_j q_{k−j}) / (λ q_0)` with
/// every `p_k` clipped at zero before it enters later terms. Requires `0 < q_0 < 1`.
pub fn recursive_inverse(q: &CompoundPmf, k_max: usize) -> Vec<f64> {
    let q0 = q.get(0);
    let lambda = -q0.ln();
    let mut p: Vec<f64> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let acc: f64 = (1..k).map(|j| j as f64 * p[j - 1] * q.get(k - j)).sum();
        let v = (q.get(k) - lambda * acc / k as f64) / (lambda * q0);
        p.push(v.max(0.0));
    }
    p
}

/// Positive part of `raw`, rescaled to sum to one.
pub fn truncate_renormalise(raw: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = raw.iter().map(|p| p.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateEstimate(
            "inverse recursion produced no positive jump probabilities".into(),
        ));
    }
    Ok(raw.iter().map(|p| p.max(0.0) / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{panjer_forward, BaseDistribution};

    fn horse_kick() -> IncrementData {
        IncrementData::from_counts(&[109, 65, 22, 3, 1], 1.0).unwrap()
    }

    #[test]
    fn horse_kick_pmf() {
        let q = empirical_pmf(&horse_kick()).unwrap();
        let expected = [0.545, 0.325, 0.11, 0.015, 0.005];
        for (a, b) in q.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(q.tail_mass() < 1e-15);
    }

    #[test]
    fn horse_kick_estimate() {
        let est = estimate(&horse_kick(), None).unwrap();
        let lambda = -(0.545f64).ln();
        assert!((est.lambda_hat - lambda).abs() < 1e-15);
        assert!((est.lambda_hat - 0.6069).abs() < 1e-4);
        // p̂_1 = q̂_1 / (q̂_0 λ̂) before renormalisation
        assert!((est.raw_p[0] - 0.325 / (0.545 * lambda)).abs() < 1e-12);
        assert!((est.raw_p[0] - 0.9825).abs() < 1e-3);
        assert!((est.p_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(est.nu_hat[0] > 3.0 * est.nu_hat[1]);
    }

    #[test]
    fn non_equidistant_is_not_applicable() {
        let data = IncrementData::from_parts(&[1.0, 0.5], &[0, 1]).unwrap();
        assert!(matches!(empirical_pmf(&data), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn no_zeros_breaks_down() {
        let data = IncrementData::from_parts(&[1.0], &[3]).unwrap();
        assert!(matches!(empirical_pmf(&data), Err(Error::Breakdown(_))));
    }

    #[test]
    fn all_zeros_is_degenerate() {
        let data = IncrementData::from_parts(&[1.0; 4], &[0; 4]).unwrap();
        assert_eq!(empirical_pmf(&data).unwrap().probs(), &[1.0]);
        assert!(matches!(
            estimate(&data, None),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn recursive_truncation_matches_clipping_when_no_negatives() {
        let p = BaseDistribution::new(vec![0.3, 0.0, 0.7]).unwrap();
        let q = panjer_forward(1.1, &p, 15).unwrap();
        let (_, raw) = panjer_inverse(&q, 15).unwrap();
        let rec = recursive_inverse(&q, 15);
        for (a, b) in rec.iter().zip(&raw) {
            assert!((a - b.max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn recursive_truncation_stops_negative_feedback() {
        // q̂ with a hole at 1: the untruncated p_2 recursion sees p_1 = 0 either way,
        // but a negative p_3 would feed p_4 in the untruncated scheme.
        let q = CompoundPmf::new(vec![0.5, 0.3, 0.0, 0.0, 0.2]).unwrap();
        let (_, raw) = panjer_inverse(&q, 4).unwrap();
        let rec = recursive_inverse(&q, 4);
        assert!(raw.iter().any(|v| *v < 0.0));
        assert!(rec.iter().all(|v| *v >= 0.0));
        assert!((rec[0] - raw[0]).abs() < 1e-15);
        let data = IncrementData::from_counts(&[5, 3, 0, 0, 2], 1.0).unwrap();
        let a = estimate_with(&data, None, Truncation::Recursive).unwrap();
        let b = estimate_with(&data, None, Truncation::PositivePart).unwrap();
        assert_eq!(a.raw_p, b.raw_p);
        assert_ne!(a.p_hat, b.p_hat);
        assert!((a.p_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_panjer_image_is_untouched_by_truncation() {
        // q̂ built to equal a compound law exactly on its support
        let p = BaseDistribution::new(vec![0.5, 0.5]).unwrap();
        let q = panjer_forward(0.8, &p, 12).unwrap();
        let (lambda, raw) = panjer_inverse(&q, 12).unwrap();
        let clean: Vec<f64> = raw
            .iter()
            .map(|v| if v.abs() < 1e-15 { 0.0 } else { *v })
            .collect();
        assert!(clean.iter().all(|v| *v >= 0.0));
        let p_hat = truncate_renormalise(&clean).unwrap();
        for (a, b) in p_hat.iter().zip(&clean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((lambda - 0.8).abs() < 1e-12);
        assert!(matches!(
            truncate_renormalise(&[-0.1, 0.0]),
            Err(Error::DegenerateEstimate(_))
        ));
    }
}
