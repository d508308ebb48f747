use super::{BaseDistribution, CompoundPmf, InverseSequence};
use crate::error::{invalid, Error, Result};

/// Tail mass below which [`adaptive_k_max`] stops growing the truncation.
pub const ADAPTIVE_TAIL_TOL: f64 = 1e-12;

/// Hard cap on the adaptive truncation point.
pub const ADAPTIVE_K_CAP: usize = 10_000;

/// Compound pmf of `(λ, p)` on `{0, ..., k_max}` via the Panjer recursion
/// `q_0 = e^{-λ}`, `q_k = (λ/k) ∑_{j=1}^{k} j p_j q_{k-j}`.
pub fn panjer_forward(lambda: f64, p: &BaseDistribution, k_max: usize) -> Result<CompoundPmf> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("intensity must be positive, got {lambda}")));
    }
    let m = p.m();
    let probs = p.probs();
    let mut q = Vec::with_capacity(k_max + 1);
    q.push((-lambda).exp());
    for k in 1..=k_max {
        let acc: f64 = (1..=k.min(m))
            .map(|j| j as f64 * probs[j - 1] * q[k - j])
            .sum();
        q.push(lambda / k as f64 * acc);
    }
    CompoundPmf::new(q)
}

/// Smallest `K` with tail mass below [`ADAPTIVE_TAIL_TOL`], capped at
/// [`ADAPTIVE_K_CAP`].
pub fn adaptive_k_max(lambda: f64, p: &BaseDistribution) -> Result<usize> {
    Ok(panjer_forward_adaptive(lambda, p)?.k_max())
}

/// [`panjer_forward`] with the truncation chosen by [`adaptive_k_max`].
pub fn panjer_forward_adaptive(lambda: f64, p: &BaseDistribution) -> Result<CompoundPmf> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid(format!("intensity must be positive, got {lambda}")));
    }
    let m = p.m();
    let probs = p.probs();
    let mut q = vec![(-lambda).exp()];
    let mut total = q[0];
    let mut k = 0;
    while 1.0 - total >= ADAPTIVE_TAIL_TOL && k < ADAPTIVE_K_CAP {
        k += 1;
        let acc: f64 = (1..=k.min(m))
            .map(|j| j as f64 * probs[j - 1] * q[k - j])
            .sum();
        let qk = lambda / k as f64 * acc;
        total += qk;
        q.push(qk);
    }
    CompoundPmf::new(q)
}

/// Inverts the Panjer recursion: `λ = -log q_0` and
/// `p_k = -q_k/(q_0 log q_0) - (1/(k q_0)) ∑_{j=1}^{k-1} j p_j q_{k-j}`
/// for `k = 1..=k_max`.
///
/// Entries `q_k` beyond the stored truncation are taken as zero. The returned
/// `p` may contain negative values when `q` is not an exact compound law (for
/// instance an empirical pmf).
pub fn panjer_inverse(q: &CompoundPmf, k_max: usize) -> Result<(f64, Vec<f64>)> {
    let q0 = q.get(0);
    if q0 <= 0.0 {
        return Err(Error::DegenerateInput(
            "q_0 = 0: intensity undefined".into(),
        ));
    }
    if q0 >= 1.0 {
        return Err(Error::DegenerateInput("q_0 = 1: intensity is zero".into()));
    }
    let log_q0 = q0.ln();
    let lambda = -log_q0;
    let mut p = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let acc: f64 = (1..k).map(|j| j as f64 * p[j - 1] * q.get(k - j)).sum();
        p.push(-q.get(k) / (q0 * log_q0) - acc / (k as f64 * q0));
    }
    Ok((lambda, p))
}

/// Convolution inverse `r` with `r_0 = 1/q_0`, `r_k = -(1/q_0) ∑_{j=1}^{k} q_j r_{k-j}`.
pub fn inverse_sequence(q: &CompoundPmf) -> Result<InverseSequence> {
    let probs = q.probs();
    let q0 = probs[0];
    if q0 <= 0.0 {
        return Err(Error::DegenerateInput(
            "q_0 = 0: no convolution inverse".into(),
        ));
    }
    let mut r = Vec::with_capacity(probs.len());
    r.push(1.0 / q0);
    for k in 1..probs.len() {
        let acc: f64 = (1..=k).map(|j| probs[j] * r[k - j]).sum();
        r.push(-acc / q0);
    }
    Ok(InverseSequence { values: r })
}

/// Full linear convolution of two finite sequences.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Bound on `‖ν' - ν‖₁` given `‖q' - q‖₁ = q_dist`:
/// `‖r‖₁ d / (1 - ‖r‖₁ d)`, or `None` when `‖r‖₁ d ≥ 1`.
pub fn stability_bound(r: &InverseSequence, q_dist: f64) -> Option<f64> {
    let x = r.l1_norm() * q_dist;
    (x < 1.0).then(|| x / (1.0 - x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_rejects_nonpositive_intensity() {
        let p = BaseDistribution::point_mass(1).unwrap();
        assert!(panjer_forward(0.0, &p, 3).is_err());
        assert!(panjer_forward(-1.0, &p, 3).is_err());
    }

    #[test]
    fn forward_k0_is_exp_minus_lambda() {
        let p = BaseDistribution::uniform_on(&[1, 4, 6]).unwrap();
        let q = panjer_forward(2.0, &p, 0).unwrap();
        assert_eq!(q.probs(), &[(-2.0f64).exp()]);
        assert!((q.probs()[0] - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn unit_jumps_give_poisson() {
        let p = BaseDistribution::point_mass(1).unwrap();
        let q = panjer_forward(1.0, &p, 5).unwrap();
        let mut fact = 1.0;
        for k in 0..=5 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((q.get(k) - (-1.0f64).exp() / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_of_poisson_is_unit_jump() {
        let mut probs = Vec::new();
        let mut term = (-1.0f64).exp();
        for k in 0..=20 {
            if k > 0 {
                term /= k as f64;
            }
            probs.push(term);
        }
        let q = CompoundPmf::new(probs).unwrap();
        let (lambda, p) = panjer_inverse(&q, 20).unwrap();
        assert!((lambda - 1.0).abs() < 1e-9);
        assert!((p[0] - 1.0).abs() < 1e-9);
        assert!(p[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn inverse_roundtrip_uniform146() {
        let p = BaseDistribution::uniform_on(&[1, 4, 6]).unwrap();
        let q = panjer_forward(2.0, &p, 60).unwrap();
        let (lambda, p_hat) = panjer_inverse(&q, 60).unwrap();
        assert!((lambda - 2.0).abs() < 1e-8);
        for k in 1..=60 {
            assert!((p_hat[k - 1] - p.get(k)).abs() < 1e-8, "k = {k}");
        }
    }

    #[test]
    fn inverse_degenerate_q0() {
        let q = CompoundPmf::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            panjer_inverse(&q, 2),
            Err(Error::DegenerateInput(_))
        ));
        let q = CompoundPmf::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(
            panjer_inverse(&q, 2),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            inverse_sequence(&q),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn inverse_sequence_of_delta_is_delta() {
        let q = CompoundPmf::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            inverse_sequence(&q).unwrap().values(),
            &[1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn inverse_sequence_half_half() {
        let q = CompoundPmf::new(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let r = inverse_sequence(&q).unwrap();
        for (k, v) in r.values().iter().enumerate() {
            let expected = 2.0 * if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(*v, expected);
        }
        // direct convolution check
        let c = convolve(r.values(), q.probs());
        assert_eq!(c[0], 1.0);
        assert!(c[1..q.probs().len()].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn stability_bound_cases() {
        let r = InverseSequence {
            values: vec![1.5, -0.5],
        };
        assert_eq!(r.l1_norm(), 2.0);
        assert_eq!(stability_bound(&r, 0.0), Some(0.0));
        assert!((stability_bound(&r, 0.1).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(stability_bound(&r, 0.6), None);
        assert_eq!(stability_bound(&r, 0.5), None);
    }

    #[test]
    fn adaptive_truncation_hits_tolerance() {
        let p = BaseDistribution::uniform_on(&[1, 4, 6]).unwrap();
        let q = panjer_forward_adaptive(2.0, &p).unwrap();
        assert!(q.tail_mass() < ADAPTIVE_TAIL_TOL);
        let shorter = panjer_forward(2.0, &p, q.k_max() - 1).unwrap();
        assert!(shorter.tail_mass() >= ADAPTIVE_TAIL_TOL);
    }
}
