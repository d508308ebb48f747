//! Probability types for an integer-valued compound Poisson process and the
//! algebra that connects them.
//!
//! The process `X_t = Y_1 + ... + Y_{N_t}` has a Poisson clock of intensity
//! `λ` and i.i.d. jumps `Y_j` on `{1, 2, ...}` with law `p`. It is
//! parametrised either by the pair `(λ, p)` or by its Lévy measure
//! `ν_k = λ p_k`. Increments over a window of length `Δ` have the compound
//! law `q`, which is linked to `(λ, p)` through the Panjer recursion.

mod divergence;
mod panjer;

pub use divergence::{hellinger, hellinger_sq, kl_divergence, l1_distance, v_divergence};
pub use panjer::{
    adaptive_k_max, convolve, inverse_sequence, panjer_forward, panjer_forward_adaptive,
    panjer_inverse, stability_bound, ADAPTIVE_K_CAP, ADAPTIVE_TAIL_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on `∑ p_k = 1` for a base distribution.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Lévy measure `(ν_1, ..., ν_m)` indexed by jump size `k = 1..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasure {
    values: Vec<f64>,
}

impl LevyMeasure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("Lévy measure needs at least one jump size"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!(
                "Lévy measure entries must be finite and >= 0, got {v}"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_parts(lambda: f64, p: &BaseDistribution) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(format!(
                "intensity must be finite and >= 0, got {lambda}"
            )));
        }
        Self::new(p.probs().iter().map(|pk| lambda * pk).collect())
    }

    /// Support cap `m`.
    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// Total mass `λ = ∑ ν_k`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `ν_k` for jump size `k` (1-based); zero outside `1..=m`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.values.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Splits `ν` into intensity and base distribution.
    pub fn to_parts(&self) -> Result<(f64, BaseDistribution)> {
        let lambda = self.total_mass();
        if lambda <= 0.0 {
            return Err(Error::DegenerateInput(
                "Lévy measure has zero total mass".into(),
            ));
        }
        let probs = self.values.iter().map(|v| v / lambda).collect();
        Ok((lambda, BaseDistribution::new_renormalised(probs)?))
    }
}

/// Jump-size law `(p_1, ..., p_m)`; there is no atom at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDistribution {
    probs: Vec<f64>,
}

impl BaseDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("base distribution needs at least one jump size"));
        }
        if let Some(v) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!(
                "base probabilities must be finite and >= 0, got {v}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(invalid(format!("base probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Like [`BaseDistribution::new`] but divides by the sum first.
    pub fn new_renormalised(mut probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(invalid("base weights must have a positive finite sum"));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(probs)
    }

    /// Uniform law on the given jump sizes (1-based, distinct).
    pub fn uniform_on(support: &[usize]) -> Result<Self> {
        let m = support.iter().copied().max().unwrap_or(0);
        if m == 0 || support.contains(&0) {
            return Err(invalid("support must be a nonempty subset of {1, 2, ...}"));
        }
        let mut probs = vec![0.0; m];
        for &k in support {
            probs[k - 1] += 1.0;
        }
        Self::new_renormalised(probs)
    }

    pub fn point_mass(k: usize) -> Result<Self> {
        Self::uniform_on(&[k])
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    /// `p_k` for jump size `k` (1-based); zero outside `1..=m`.
    pub fn get(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.probs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mean jump size `E[Y]`.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// The law as a sequence indexed from 0 (with `p_0 = 0`).
    pub fn as_sequence(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.probs.iter().copied())
            .collect()
    }
}

/// Truncated pmf `(q_0, ..., q_K)` of an increment together with the mass it
/// leaves beyond `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundPmf {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl CompoundPmf {
    /// Builds a truncated pmf; the tail mass is `1 - ∑ probs`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("pmf needs at least the entry q_0"));
        }
        if let Some(v) = probs.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!(
                "pmf entries must be finite and >= 0, got {v}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + PMF_SUM_TOL {
            return Err(invalid(format!("pmf entries sum to {total} > 1")));
        }
        Ok(Self {
            probs,
            tail_mass: (1.0 - total).max(0.0),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Truncation point `K`.
    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// `q_k`, zero beyond the truncation point.
    pub fn get(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }
}

/// Convolution inverse `r` of a compound pmf, `r * q = δ_0`, truncated to the
/// same length as `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseSequence {
    values: Vec<f64>,
}

impl InverseSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `‖r‖₁` over the truncated sequence. This is a lower bound on the norm of
    /// the infinite sequence; the truncation length is [`Self::len`].
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One observed increment `Z_i = X_{t_i} - X_{t_{i-1}}` over a gap `Δ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub delta: f64,
    pub z: u32,
}

/// Observed increments `(Δ_i, z_i)`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementData {
    records: Vec<Increment>,
}

impl IncrementData {
    pub fn new(records: Vec<Increment>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Input("dataset has no increments".into()));
        }
        if let Some(r) = records
            .iter()
            .find(|r| !(r.delta.is_finite() && r.delta > 0.0))
        {
            return Err(Error::Input(format!(
                "time gaps must be positive, got {}",
                r.delta
            )));
        }
        Ok(Self { records })
    }

    pub fn from_parts(deltas: &[f64], zs: &[u32]) -> Result<Self> {
        if deltas.len() != zs.len() {
            return Err(Error::Input(format!(
                "{} time gaps but {} increments",
                deltas.len(),
                zs.len()
            )));
        }
        Self::new(
            deltas
                .iter()
                .zip(zs)
                .map(|(&delta, &z)| Increment { delta, z })
                .collect(),
        )
    }

    /// Equidistant dataset from a frequency table: `counts[k]` increments equal to `k`.
    pub fn from_counts(counts: &[usize], delta: f64) -> Result<Self> {
        let records = counts
            .iter()
            .enumerate()
            .flat_map(|(z, &c)| std::iter::repeat_n(Increment { delta, z: z as u32 }, c))
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[Increment] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total observation time `T = ∑ Δ_i`.
    pub fn total_time(&self) -> f64 {
        self.records.iter().map(|r| r.delta).sum()
    }

    /// Largest increment `Z_(n)`.
    pub fn max_z(&self) -> u32 {
        self.records.iter().map(|r| r.z).max().unwrap_or(0)
    }

    pub fn zs(&self) -> impl Iterator<Item = u32> + '_ {
        self.records.iter().map(|r| r.z)
    }

    /// The common gap if all `Δ_i` agree exactly.
    pub fn common_delta(&self) -> Option<f64> {
        let first = self.records[0].delta;
        self.records
            .iter()
            .all(|r| r.delta == first)
            .then_some(first)
    }
}
