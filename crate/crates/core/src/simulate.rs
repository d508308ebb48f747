//! Synthetic increments from a compound Poisson process.
//!
//! Increments are drawn through the Poisson-multiplicity representation:
//! over a gap `Δ_i` the number of jumps of size `j` is `μ_ij ~ Poisson(Δ_i ν_j)`,
//! independently over `j`, and `z_i = ∑ j·μ_ij`. No path is simulated.

use rand::Rng;
use rand_distr::{Distribution, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{BaseDistribution, Increment, IncrementData, LevyMeasure};
use crate::rng::{stream_rng, GRID_STREAM};

/// Truncation threshold for the geometric ground truth.
pub const GEOMETRIC_NU_TOL: f64 = 1e-12;

/// Observation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    Uniform { n: usize, delta: f64 },
    RandomUniform { n: usize, lo: f64, hi: f64 },
}

pub fn make_grid(kind: GridKind, seed: u64) -> Result<Vec<f64>> {
    match kind {
        GridKind::Uniform { n, delta } => {
            if n == 0 || !(delta.is_finite() && delta > 0.0) {
                return Err(Error::Input(format!(
                    "uniform grid needs n >= 1 and delta > 0, got n = {n}, delta = {delta}"
                )));
            }
            Ok(vec![delta; n])
        }
        GridKind::RandomUniform { n, lo, hi } => {
            if n == 0 || !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::Input(format!(
                    "random grid needs n >= 1 and 0 <= lo < hi, got n = {n}, lo = {lo}, hi = {hi}"
                )));
            }
            let dist = Uniform::new(lo, hi).map_err(|e| Error::Input(e.to_string()))?;
            let mut rng = stream_rng(seed, GRID_STREAM, 0);
            Ok((0..n)
                .map(|_| loop {
                    let d: f64 = dist.sample(&mut rng);
                    if d > 0.0 {
                        break d;
                    }
                })
                .collect())
        }
    }
}

/// Jump counts `μ_ij ~ Poisson(Δ ν_j)` for one increment.
pub fn sample_counts<R: Rng + ?Sized>(nu: &[f64], delta: f64, rng: &mut R) -> Vec<u32> {
    nu.iter()
        .map(|&v| {
            let rate = delta * v;
            if rate > 0.0 {
                let draw: f64 = Poisson::new(rate)
                    .expect("positive finite rate")
                    .sample(rng);
                draw as u32
            } else {
                0
            }
        })
        .collect()
}

fn weighted(counts: &[u32]) -> u32 {
    counts
        .iter()
        .enumerate()
        .map(|(j, &c)| (j as u32 + 1) * c)
        .sum()
}

/// Simulates increments and also returns the latent counts (row-major `n × m`).
pub fn simulate_with_counts(
    nu: &LevyMeasure,
    deltas: &[f64],
    seed: u64,
) -> Result<(IncrementData, Vec<u32>)> {
    if deltas.is_empty() {
        return Err(Error::Input("no time gaps given".into()));
    }
    let mut rows = Vec::with_capacity(deltas.len() * nu.m());
    let mut records = Vec::with_capacity(deltas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Input(format!(
                "time gaps must be positive, got {delta}"
            )));
        }
        let mut rng = stream_rng(seed, i as u64, 0);
        let counts = sample_counts(nu.values(), delta, &mut rng);
        records.push(Increment {
            delta,
            z: weighted(&counts),
        });
        rows.extend(counts);
    }
    Ok((IncrementData::new(records)?, rows))
}

/// Increments of a CPP with intensity `lambda` and jump law `p` over the given gaps.
pub fn simulate_increments(
    lambda: f64,
    p: &BaseDistribution,
    deltas: &[f64],
    seed: u64,
) -> Result<IncrementData> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("intensity must be positive, got {lambda}")));
    }
    let nu = LevyMeasure::from_parts(lambda, p)?;
    Ok(simulate_with_counts(&nu, deltas, seed)?.0)
}

/// Named simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    /// `λ = 2`, jumps uniform on `{1, 4, 6}`, `n = 100`, `Δ = 1`.
    Uniform146A,
    /// As (a) with `n = 500`; the first 100 increments coincide with (a).
    Uniform146B,
    /// As (b) with `Δ_i ~ Uniform(0, 2)`.
    Uniform146C,
    /// Geometric compound law `q_k = (1-α)^k α`, i.e. `ν_k = (1-α)^k / k`, `Δ = 1`.
    Geometric { alpha: f64, n: usize },
}

impl Preset {
    pub fn parse(name: &str, alpha: Option<f64>, n: Option<usize>) -> Result<Self> {
        match name {
            "uniform146_a" | "a" => Ok(Self::Uniform146A),
            "uniform146_b" | "b" => Ok(Self::Uniform146B),
            "uniform146_c" | "c" => Ok(Self::Uniform146C),
            "geometric" => Ok(Self::Geometric {
                alpha: alpha.ok_or_else(|| invalid("geometric preset needs alpha"))?,
                n: n.unwrap_or(500),
            }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform146A => "uniform146_a",
            Self::Uniform146B => "uniform146_b",
            Self::Uniform146C => "uniform146_c",
            Self::Geometric { .. } => "geometric",
        }
    }
}

/// `ν_k = 2/3` at `k ∈ {1, 4, 6}`.
pub fn uniform146_truth() -> LevyMeasure {
    let mut v = vec![0.0; 6];
    for k in [1, 4, 6] {
        v[k - 1] = 2.0 / 3.0;
    }
    LevyMeasure::new(v).expect("valid")
}

/// `ν_k = (1-α)^k / k`, truncated at the first `k` where it drops below
/// [`GEOMETRIC_NU_TOL`].
pub fn geometric_truth(alpha: f64) -> Result<LevyMeasure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut v = Vec::new();
    let mut k = 1;
    loop {
        let nu = (1.0 - alpha).powi(k) / f64::from(k);
        if nu < GEOMETRIC_NU_TOL {
            break;
        }
        v.push(nu);
        k += 1;
    }
    LevyMeasure::new(v)
}

/// Simulated data for a preset together with the true Lévy measure.
pub fn preset(p: Preset, seed: u64) -> Result<(IncrementData, LevyMeasure)> {
    let (truth, grid) = match p {
        Preset::Uniform146A => (uniform146_truth(), GridKind::Uniform { n: 100, delta: 1.0 }),
        Preset::Uniform146B => (uniform146_truth(), GridKind::Uniform { n: 500, delta: 1.0 }),
        Preset::Uniform146C => (
            uniform146_truth(),
            GridKind::RandomUniform {
                n: 500,
                lo: 0.0,
                hi: 2.0,
            },
        ),
        Preset::Geometric { alpha, n } => {
            (geometric_truth(alpha)?, GridKind::Uniform { n, delta: 1.0 })
        }
    };
    let deltas = make_grid(grid, seed)?;
    let (data, _) = simulate_with_counts(&truth, &deltas, seed)?;
    Ok((data, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_intensity_gives_zeros() {
        let p = BaseDistribution::point_mass(1).unwrap();
        let data = simulate_increments(1e-9, &p, &vec![1.0; 1000], 4).unwrap();
        assert!(data.zs().all(|z| z == 0));
        assert!(simulate_increments(0.0, &p, &[1.0], 4).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(
            make_grid(GridKind::Uniform { n: 100, delta: 1.0 }, 0).unwrap(),
            vec![1.0; 100]
        );
        let g = make_grid(
            GridKind::RandomUniform {
                n: 100_000,
                lo: 0.0,
                hi: 2.0,
            },
            3,
        )
        .unwrap();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        assert!((mean - 1.0).abs() < 0.01);
        assert!(g.iter().all(|d| *d > 0.0 && *d < 2.0));
        assert!(make_grid(
            GridKind::RandomUniform {
                n: 5,
                lo: 1.0,
                hi: 1.0
            },
            0
        )
        .is_err());
        assert!(make_grid(GridKind::Uniform { n: 0, delta: 1.0 }, 0).is_err());
        assert!(make_grid(GridKind::Uniform { n: 3, delta: -1.0 }, 0).is_err());
    }

    #[test]
    fn presets_and_truths() {
        let t = uniform146_truth();
        assert_eq!(
            t.values(),
            &[2.0 / 3.0, 0.0, 0.0, 2.0 / 3.0, 0.0, 2.0 / 3.0]
        );

        let g = geometric_truth(1.0 / 3.0).unwrap();
        assert!((g.get(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.get(2) - 2.0 / 9.0).abs() < 1e-15);
        assert!((g.get(3) - 8.0 / 81.0).abs() < 1e-15);
        assert!((g.total_mass() - 3f64.ln()).abs() < 1e-11);
        let g6 = geometric_truth(1.0 / 6.0).unwrap();
        assert!((g6.total_mass() - 6f64.ln()).abs() < 1e-10);
        assert!(geometric_truth(1.5).is_err());

        let (a, _) = preset(Preset::Uniform146A, 1).unwrap();
        let (b, _) = preset(Preset::Uniform146B, 1).unwrap();
        let (c, _) = preset(Preset::Uniform146C, 1).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(b.len(), 500);
        assert_eq!(&b.records()[..100], a.records());
        assert!(c.common_delta().is_none());
        assert!(matches!(
            Preset::parse("nope", None, None),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn deterministic_under_seed() {
        let p = BaseDistribution::uniform_on(&[1, 4, 6]).unwrap();
        let a = simulate_increments(2.0, &p, &[1.0; 50], 9).unwrap();
        let b = simulate_increments(2.0, &p, &[1.0; 50], 9).unwrap();
        assert_eq!(a, b);
    }
}
