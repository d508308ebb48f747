//! Metropolis–Hastings imputation of the latent jump counts.
//!
//! Given `Z_i = z_i` and the current `ν`, the counts `(μ_i1, ..., μ_im)` have
//! conditional law proportional to `∏_j (Δ_i ν_j)^{k_j} / k_j!` on the
//! solution set `S_i` of `∑ j·k_j = z_i`. Each increment runs its own MH chain
//! on `S_i`, mixing a neighbour move (one of the two adjacent elements in the
//! fixed ordering, wrapping at the ends) with a uniform draw from `S_i`.
//! Both proposals are symmetric, so the acceptance ratio is the target ratio.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::diophantine::{SolutionCache, SolutionSet};
use crate::error::{invalid, Error, Result};
use crate::model::{IncrementData, LevyMeasure};
use crate::rng::stream_rng;

/// Floor applied to `ν_k` before taking logs inside the sampler.
pub const NU_FLOOR: f64 = 1e-300;

/// Proposal mixture for the imputation chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Probability of the neighbour move; the rest goes to the uniform move.
    pub pi_neighbor: f64,
    /// MH steps per increment per Gibbs iteration.
    pub sweeps: usize,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            pi_neighbor: 0.8,
            sweeps: 1,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pi_neighbor > 0.0 && self.pi_neighbor <= 1.0) {
            return Err(invalid(format!(
                "pi_neighbor must lie in (0, 1], got {}",
                self.pi_neighbor
            )));
        }
        if self.sweeps == 0 {
            return Err(invalid("sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// Imputed jump counts `μ_ij` for every increment, with column sums `μ_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImputedCounts {
    m: usize,
    rows: Vec<u32>,
    /// Position of each row within its solution set.
    positions: Vec<usize>,
    totals: Vec<u64>,
}

impl ImputedCounts {
    /// Every increment starts at the first element of its solution set.
    pub fn initial(data: &IncrementData, m: usize, cache: &SolutionCache) -> Result<Self> {
        let mut rows = Vec::with_capacity(data.len() * m);
        for z in data.zs() {
            rows.extend_from_slice(cache.get(m, z as usize)?.get(0));
        }
        Ok(Self::assemble(m, rows, vec![0; data.len()]))
    }

    /// Builds a state from explicit rows (row-major, `n × m`).
    pub fn from_rows(
        data: &IncrementData,
        m: usize,
        rows: Vec<u32>,
        cache: &SolutionCache,
    ) -> Result<Self> {
        if m == 0 || rows.len() != data.len() * m {
            return Err(invalid(format!(
                "expected {} × {} counts, got {}",
                data.len(),
                m,
                rows.len()
            )));
        }
        let positions = data
            .zs()
            .zip(rows.chunks_exact(m))
            .map(|(z, row)| cache.get(m, z as usize)?.index_of(row))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(m, rows, positions))
    }

    fn assemble(m: usize, rows: Vec<u32>, positions: Vec<usize>) -> Self {
        let mut s = Self {
            m,
            rows,
            positions,
            totals: vec![0; m],
        };
        s.totals = s.column_sums();
        s
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// `(μ_i1, ..., μ_im)`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i * self.m..(i + 1) * self.m]
    }

    pub fn position(&self, i: usize) -> usize {
        self.positions[i]
    }

    /// Aggregates `μ_k = ∑_i μ_ik`.
    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.m];
        for row in self.rows.chunks_exact(self.m) {
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c as u64;
            }
        }
        sums
    }

    /// Checks `∑ j·μ_ij = z_i` for every row and that the aggregates match.
    pub fn validate(&self, data: &IncrementData) -> Result<()> {
        if self.n() != data.len() {
            return Err(Error::InvalidState(
                "row count differs from dataset size".into(),
            ));
        }
        for (i, z) in data.zs().enumerate() {
            let sum: u64 = self
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, &c)| (j as u64 + 1) * c as u64)
                .sum();
            if sum != z as u64 {
                return Err(Error::InvalidState(format!(
                    "row {i} sums to {sum}, expected {z}"
                )));
            }
        }
        if self.totals != self.column_sums() {
            return Err(Error::InvalidState(
                "aggregates differ from column sums".into(),
            ));
        }
        Ok(())
    }

    fn set_row(&mut self, i: usize, position: usize, row: &[u32]) {
        let m = self.m;
        let old = &mut self.rows[i * m..(i + 1) * m];
        for ((total, o), &n) in self.totals.iter_mut().zip(old.iter_mut()).zip(row) {
            *total = *total + n as u64 - *o as u64;
            *o = n;
        }
        self.positions[i] = position;
    }
}

/// Log acceptance ratio of a move `μ → μ°` for one increment:
/// `∑_k (μ°_k − μ_k) log(Δ ν_k) + ∑_k [log μ_k! − log μ°_k!]`.
///
/// Returns `-∞` when the proposal puts jumps on a component with `ν_k = 0`,
/// and an error if the current state already does.
pub fn log_acceptance(mu: &[u32], mu_prop: &[u32], nu: &LevyMeasure, delta: f64) -> Result<f64> {
    if mu.len() != mu_prop.len() || mu.len() > nu.m() {
        return Err(invalid(
            "count vectors and Lévy measure have incompatible lengths",
        ));
    }
    let mut acc = 0.0;
    for (k, (&cur, &prop)) in mu.iter().zip(mu_prop).enumerate() {
        let nu_k = nu.values()[k];
        if nu_k == 0.0 {
            if cur > 0 {
                return Err(Error::InvalidState(format!(
                    "{cur} jumps of size {} imputed but ν_{} = 0",
                    k + 1,
                    k + 1
                )));
            }
            if prop > 0 {
                return Ok(f64::NEG_INFINITY);
            }
            continue;
        }
        if cur != prop {
            acc += (prop as f64 - cur as f64) * (delta * nu_k).ln();
            acc += ln_gamma(cur as f64 + 1.0) - ln_gamma(prop as f64 + 1.0);
        }
    }
    Ok(acc)
}

/// Draws a proposal index from the neighbour/uniform mixture.
fn propose<R: Rng + ?Sized>(
    set: &SolutionSet,
    current: usize,
    pi_neighbor: f64,
    rng: &mut R,
) -> usize {
    if rng.random::<f64>() < pi_neighbor {
        let (a, b) = set.neighbors(current).expect("caller checked |S| >= 2");
        if rng.random::<bool>() {
            a
        } else {
            b
        }
    } else {
        rng.random_range(0..set.len())
    }
}

/// Per-dataset imputation context: the solution set of every increment, `log Δ_i`
/// and a table of `log k!`.
#[derive(Debug, Clone)]
pub struct Imputer {
    m: usize,
    sets: Vec<Arc<SolutionSet>>,
    log_delta: Vec<f64>,
    log_fact: Vec<f64>,
    /// Increments whose solution set has more than one element.
    active: Vec<usize>,
}

impl Imputer {
    pub fn new(data: &IncrementData, m: usize, cache: &SolutionCache) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        let sets = data
            .zs()
            .map(|z| cache.get(m, z as usize))
            .collect::<Result<Vec<_>>>()?;
        let active = (0..sets.len()).filter(|&i| sets[i].len() > 1).collect();
        let max_z = data.max_z() as usize;
        let log_fact = (0..=max_z).map(|k| ln_gamma(k as f64 + 1.0)).collect();
        Ok(Self {
            m,
            sets,
            log_delta: data.records().iter().map(|r| r.delta.ln()).collect(),
            log_fact,
            active,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn set(&self, i: usize) -> &SolutionSet {
        &self.sets[i]
    }

    /// Increments that need MH updates (`|S_i| > 1`).
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// State where each increment sits at the first element of its set.
    pub fn initial_state(&self) -> ImputedCounts {
        let rows = self
            .sets
            .iter()
            .flat_map(|s| s.get(0).iter().copied())
            .collect();
        ImputedCounts::assemble(self.m, rows, vec![0; self.sets.len()])
    }

    fn log_ratio(&self, i: usize, from: &[u32], to: &[u32], log_nu: &[f64]) -> f64 {
        let log_delta = self.log_delta[i];
        let mut acc = 0.0;
        for k in 0..self.m {
            let (c, p) = (from[k], to[k]);
            if c != p {
                acc += (p as f64 - c as f64) * (log_delta + log_nu[k]);
                acc += self.log_fact[c as usize] - self.log_fact[p as usize];
            }
        }
        acc
    }

    /// Runs `sweeps` MH steps on increment `i`, starting at `position`.
    /// Returns the final position and the number of accepted moves.
    fn chain<R: Rng + ?Sized>(
        &self,
        i: usize,
        mut position: usize,
        log_nu: &[f64],
        cfg: &ProposalConfig,
        rng: &mut R,
    ) -> (usize, usize) {
        let set = &*self.sets[i];
        if set.len() < 2 {
            return (position, 0);
        }
        let mut accepted = 0;
        for _ in 0..cfg.sweeps {
            let prop = propose(set, position, cfg.pi_neighbor, rng);
            if prop == position {
                accepted += 1;
                continue;
            }
            let log_a = self.log_ratio(i, set.get(position), set.get(prop), log_nu);
            let u: f64 = rng.random();
            if u.ln() <= log_a {
                position = prop;
                accepted += 1;
            }
        }
        (position, accepted)
    }

    /// One MH step (or `cfg.sweeps` steps) for increment `i` using `rng`.
    /// Returns the number of accepted moves.
    pub fn step<R: Rng + ?Sized>(
        &self,
        i: usize,
        state: &mut ImputedCounts,
        nu: &LevyMeasure,
        cfg: &ProposalConfig,
        rng: &mut R,
    ) -> usize {
        let log_nu = floored_log(nu);
        let (pos, acc) = self.chain(i, state.positions[i], &log_nu, cfg, rng);
        if pos != state.positions[i] {
            state.set_row(i, pos, self.sets[i].get(pos));
        }
        acc
    }

    /// Updates every increment with `|S_i| > 1`. The stream for increment `i`
    /// is `(seed, i, block)`, so the outcome is independent of `threads`.
    /// Returns the number of accepted moves.
    pub fn sweep(
        &self,
        state: &mut ImputedCounts,
        nu: &LevyMeasure,
        cfg: &ProposalConfig,
        seed: u64,
        block: u64,
        pool: Option<&rayon::ThreadPool>,
    ) -> usize {
        let log_nu = floored_log(nu);
        let run = |&i: &usize| {
            let mut rng = stream_rng(seed, i as u64, block);
            let (pos, acc) = self.chain(i, state.positions[i], &log_nu, cfg, &mut rng);
            (i, pos, acc)
        };
        let moves: Vec<(usize, usize, usize)> = match pool {
            Some(pool) => pool.install(|| self.active.par_iter().map(run).collect()),
            None => self.active.iter().map(run).collect(),
        };
        let mut accepted = 0;
        for (i, pos, acc) in moves {
            accepted += acc;
            if pos != state.positions[i] {
                state.set_row(i, pos, self.sets[i].get(pos));
            }
        }
        accepted
    }

    /// Total MH proposals made by one [`Imputer::sweep`].
    pub fn proposals_per_sweep(&self, cfg: &ProposalConfig) -> usize {
        self.active.len() * cfg.sweeps
    }
}

fn floored_log(nu: &LevyMeasure) -> Vec<f64> {
    nu.values().iter().map(|v| v.max(NU_FLOOR).ln()).collect()
}

/// One MH update of increment `i` (a no-op when `|S_i| = 1`, which covers
/// `z_i ∈ {0, 1}`). Returns whether the state changed or an identity
/// proposal was accepted.
pub fn mh_step<R: Rng + ?Sized>(
    i: usize,
    state: &mut ImputedCounts,
    nu: &LevyMeasure,
    data: &IncrementData,
    sols: &SolutionCache,
    cfg: &ProposalConfig,
    rng: &mut R,
) -> Result<bool> {
    cfg.validate()?;
    let m = state.m();
    let record = data
        .records()
        .get(i)
        .ok_or_else(|| invalid(format!("increment {i} out of range")))?;
    if nu.m() < m {
        return Err(invalid("Lévy measure shorter than the imputed vectors"));
    }
    let set = sols.get(m, record.z as usize)?;
    if set.len() < 2 {
        return Ok(false);
    }
    let current = state.position(i);
    let prop = propose(&set, current, cfg.pi_neighbor, rng);
    let log_a = log_acceptance(set.get(current), set.get(prop), nu, record.delta)?;
    let u: f64 = rng.random();
    if u.ln() <= log_a {
        if prop != current {
            state.set_row(i, prop, set.get(prop));
        }
        return Ok(true);
    }
    Ok(false)
}

/// Applies `cfg.sweeps` MH steps to every increment with `z_i ∉ {0, 1}`,
/// drawing increment `i` from stream `(seed, i, block)`.
pub fn impute_all(
    state: &mut ImputedCounts,
    nu: &LevyMeasure,
    data: &IncrementData,
    sols: &SolutionCache,
    cfg: &ProposalConfig,
    seed: u64,
    block: u64,
) -> Result<usize> {
    cfg.validate()?;
    let imputer = Imputer::new(data, state.m(), sols)?;
    if state.n() != data.len() {
        return Err(Error::InvalidState("state and dataset sizes differ".into()));
    }
    Ok(imputer.sweep(state, nu, cfg, seed, block, None))
}
