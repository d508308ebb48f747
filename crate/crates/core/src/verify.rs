//! Randomised numerical checks of the compounding inequalities.
//!
//! For random pairs `(λ, p)`, `(λ', p')` with small support the suite checks:
//!
//! * `KL(q, q') ≤ λ KL(p, p') + λ' − λ + λ log(λ/λ')`
//! * `V(q, q') ≤ 2λ(V(p, p') + 2 KL(p, p')) + 2λ² KL(p, p')² + 2 V(N, N')`
//! * `h(q, q') ≤ √λ h(p, p') + h(N, N') ≤ √λ h(p, p') + |√λ − √λ'|`
//! * n-fold convolutions, `n ≤ 5`: `KL(p^{*n}, p'^{*n}) ≤ n KL(p, p')`,
//!   `h²(p^{*n}, p'^{*n}) ≤ n h²(p, p')` and
//!   `V(p^{*n}, p'^{*n}) ≤ n V + 4n KL + n(n−1) KL²`
//! * the stability bound `‖ν' − ν‖₁ ≤ ‖r‖₁ d / (1 − ‖r‖₁ d)`, `d = ‖q' − q‖₁`,
//!   whenever `‖r‖₁ d < 1`.
//!
//! Here `N ~ Poisson(λ)`, `N' ~ Poisson(λ')` and `h² = ∑ (√a − √b)²`.
//! Compound pmfs are truncated at a common point where both tails are below
//! 1e-12; instances with tails above [`MAX_TAIL`] are skipped.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::model::{
    adaptive_k_max, convolve, hellinger, hellinger_sq, inverse_sequence, kl_divergence,
    l1_distance, panjer_forward, stability_bound, v_divergence, BaseDistribution,
};
use crate::rng::{stream_rng, AUX_STREAM};

/// Tail mass above which an instance is skipped.
pub const MAX_TAIL: f64 = 1e-10;

/// Additive slack allowed for truncation and rounding.
pub const DEFAULT_SLACK: f64 = 1e-8;

/// Largest convolution power in the n-fold checks.
pub const MAX_FOLD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub instances: usize,
    pub seed: u64,
    pub slack: f64,
    /// Flips the sign of the Poisson term in the KL bound. Used to check that
    /// the harness reports violations.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: 1000,
            seed: 0,
            slack: DEFAULT_SLACK,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` seen (negative when every check had room to spare).
    pub worst_excess: f64,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            skipped: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, slack: f64) {
        self.checked += 1;
        let excess = lhs - rhs;
        if excess.is_nan() || excess > slack {
            self.violations += 1;
        }
        if excess.is_nan() || excess > self.worst_excess {
            self.worst_excess = excess;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckReport::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `KL(Poisson(λ), Poisson(λ')) = λ' − λ + λ log(λ/λ')`.
pub fn poisson_kl(lambda: f64, lambda_p: f64) -> f64 {
    lambda_p - lambda + lambda * (lambda / lambda_p).ln()
}

/// `V(Poisson(λ), Poisson(λ')) = E[(λ' − λ + N log(λ/λ'))²]`, `N ~ Poisson(λ)`.
pub fn poisson_v(lambda: f64, lambda_p: f64) -> f64 {
    let c = lambda_p - lambda;
    let l = (lambda / lambda_p).ln();
    c * c + 2.0 * c * l * lambda + l * l * (lambda + lambda * lambda)
}

/// Hellinger distance between Poisson laws, `sqrt(2(1 − exp(−(√λ − √λ')²/2)))`.
pub fn poisson_hellinger(lambda: f64, lambda_p: f64) -> f64 {
    let d = lambda.sqrt() - lambda_p.sqrt();
    (-2.0 * (-0.5 * d * d).exp_m1()).sqrt()
}

/// Right-hand side of the compound KL bound.
pub fn kl_compound_bound(lambda: f64, lambda_p: f64, kl_p: f64) -> f64 {
    lambda * kl_p + poisson_kl(lambda, lambda_p)
}

/// Right-hand side of the compound V bound.
pub fn v_compound_bound(lambda: f64, lambda_p: f64, kl_p: f64, v_p: f64) -> f64 {
    2.0 * lambda * (v_p + 2.0 * kl_p)
        + 2.0 * kl_p * kl_p * lambda * lambda
        + 2.0 * poisson_v(lambda, lambda_p)
}

/// Right-hand side `√λ h(p, p') + |√λ − √λ'|` of the compound Hellinger bound.
pub fn hellinger_compound_bound(lambda: f64, lambda_p: f64, h_p: f64) -> f64 {
    lambda.sqrt() * h_p + (lambda.sqrt() - lambda_p.sqrt()).abs()
}

struct Instance {
    lambda: f64,
    p: BaseDistribution,
    lambda_p: f64,
    p_p: BaseDistribution,
}

fn random_weights<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Vec<f64> {
    (0..s)
        .map(|_| Exp1.sample(rng))
        .map(|w: f64| w + 1e-3)
        .collect()
}

fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> Instance {
    let s = rng.random_range(1..=5);
    let lambda = rng.random_range(0.1..5.0);
    let p = random_weights(s, rng);
    let (lambda_p, p_p) = if rng.random::<bool>() {
        (rng.random_range(0.1..5.0), random_weights(s, rng))
    } else {
        // nearby pair so the stability bound is applicable
        let eps = 10f64.powf(-rng.random_range(1.0..7.0));
        let other = random_weights(s, rng);
        let total: f64 = p.iter().sum();
        let other_total: f64 = other.iter().sum();
        let mixed = p
            .iter()
            .zip(&other)
            .map(|(a, b)| (1.0 - eps) * a / total + eps * b / other_total)
            .collect();
        let z: f64 = StandardNormal.sample(rng);
        (lambda * (eps * z).exp(), mixed)
    };
    Instance {
        lambda,
        p: BaseDistribution::new_renormalised(p).expect("positive weights"),
        lambda_p,
        p_p: BaseDistribution::new_renormalised(p_p).expect("positive weights"),
    }
}

fn convolution_power(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = p.to_vec();
    for _ in 1..n {
        out = convolve(&out, p);
    }
    out
}

/// Runs every check on `cfg.instances` random instances.
pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let slack = cfg.slack;
    let mut kl = CheckReport::new("kl_compound");
    let mut v = CheckReport::new("v_compound");
    let mut h_sharp = CheckReport::new("hellinger_compound_sharp");
    let mut h = CheckReport::new("hellinger_compound");
    let mut kl_fold = CheckReport::new("kl_n_fold");
    let mut v_fold = CheckReport::new("v_n_fold");
    let mut h_fold = CheckReport::new("hellinger_sq_n_fold");
    let mut stability = CheckReport::new("stability_bound");

    for idx in 0..cfg.instances {
        let mut rng = stream_rng(cfg.seed, AUX_STREAM, idx as u64);
        let inst = random_instance(&mut rng);
        let (lambda, lambda_p) = (inst.lambda, inst.lambda_p);
        let p = inst.p.as_sequence();
        let p_p = inst.p_p.as_sequence();
        let kl_p = kl_divergence(&p, &p_p);
        let v_p = v_divergence(&p, &p_p);
        let h_p = hellinger(&p, &p_p);

        for n in 2..=MAX_FOLD {
            let a = convolution_power(&p, n);
            let b = convolution_power(&p_p, n);
            let nf = n as f64;
            kl_fold.record(kl_divergence(&a, &b), nf * kl_p, slack);
            v_fold.record(
                v_divergence(&a, &b),
                nf * v_p + 4.0 * nf * kl_p + nf * (nf - 1.0) * kl_p * kl_p,
                slack,
            );
            h_fold.record(hellinger_sq(&a, &b), nf * hellinger_sq(&p, &p_p), slack);
        }

        let k_max = adaptive_k_max(lambda, &inst.p)?.max(adaptive_k_max(lambda_p, &inst.p_p)?);
        let q = panjer_forward(lambda, &inst.p, k_max)?;
        let q_p = panjer_forward(lambda_p, &inst.p_p, k_max)?;
        let compound = [&mut kl, &mut v, &mut h_sharp, &mut h, &mut stability];
        if q.tail_mass() > MAX_TAIL || q_p.tail_mass() > MAX_TAIL {
            compound.into_iter().for_each(|c| c.skipped += 1);
            continue;
        }
        let (qa, qb) = (q.probs(), q_p.probs());

        h_sharp.record(
            hellinger(qa, qb),
            lambda.sqrt() * h_p + poisson_hellinger(lambda, lambda_p),
            slack,
        );
        h.record(
            hellinger(qa, qb),
            hellinger_compound_bound(lambda, lambda_p, h_p),
            slack,
        );

        // entries that underflowed on one side only make KL/V infinite spuriously
        let underflow = qa.iter().zip(qb).any(|(x, y)| (*x > 0.0) != (*y > 0.0));
        if underflow {
            kl.skipped += 1;
            v.skipped += 1;
        } else {
            let kl_rhs = if cfg.inject_fault {
                lambda * kl_p + (lambda - lambda_p) + lambda * (lambda / lambda_p).ln()
            } else {
                kl_compound_bound(lambda, lambda_p, kl_p)
            };
            kl.record(kl_divergence(qa, qb), kl_rhs, slack);
            v.record(
                v_divergence(qa, qb),
                v_compound_bound(lambda, lambda_p, kl_p, v_p),
                slack,
            );
        }

        let r = inverse_sequence(&q)?;
        match stability_bound(&r, l1_distance(qa, qb)) {
            Some(bound) => {
                let nu: Vec<f64> = inst.p.probs().iter().map(|x| lambda * x).collect();
                let nu_p: Vec<f64> = inst.p_p.probs().iter().map(|x| lambda_p * x).collect();
                stability.record(l1_distance(&nu, &nu_p), bound, slack);
            }
            None => stability.skipped += 1,
        }
    }

    Ok(VerifyReport {
        instances: cfg.instances,
        checks: vec![kl, v, h_sharp, h, kl_fold, v_fold, h_fold, stability],
    })
}
