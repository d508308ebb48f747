//! Discrete divergences between pmfs on a common finite index set. Shorter
//! inputs are padded with zeros.

fn padded<'a>(a: &'a [f64], b: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    let n = a.len().max(b.len());
    (0..n).map(move |i| {
        (
            a.get(i).copied().unwrap_or(0.0),
            b.get(i).copied().unwrap_or(0.0),
        )
    })
}

/// `KL(a, b) = ∑ a_i log(a_i / b_i)`; `+∞` if some `a_i > 0 = b_i`.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in padded(a, b) {
        if x > 0.0 {
            if y <= 0.0 {
                return f64::INFINITY;
            }
            acc += x * (x / y).ln();
        }
    }
    acc
}

/// `V(a, b) = ∑ a_i log²(a_i / b_i)`; `+∞` if some `a_i > 0 = b_i`.
pub fn v_divergence(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in padded(a, b) {
        if x > 0.0 {
            if y <= 0.0 {
                return f64::INFINITY;
            }
            let l = (x / y).ln();
            acc += x * l * l;
        }
    }
    acc
}

/// Squared Hellinger distance without the 1/2 factor: `∑ (√a_i - √b_i)²`.
pub fn hellinger_sq(a: &[f64], b: &[f64]) -> f64 {
    padded(a, b)
        .map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2))
        .sum()
}

/// Hellinger distance `sqrt(∑ (√a_i - √b_i)²)`.
pub fn hellinger(a: &[f64], b: &[f64]) -> f64 {
    hellinger_sq(a, b).sqrt()
}

/// `∑ |a_i - b_i|`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    padded(a, b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_arguments() {
        let a = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&a, &a), 0.0);
        assert_eq!(v_divergence(&a, &a), 0.0);
        assert_eq!(hellinger(&a, &a), 0.0);
    }

    #[test]
    fn kl_half_vs_quarter() {
        let kl = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]);
        // 0.5 log 2 + 0.5 log(2/3), summed by hand
        let oracle = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl - oracle).abs() < 1e-15);
        assert!((kl - 0.143841).abs() < 1e-6);
    }

    #[test]
    fn support_violation_is_infinite() {
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.0, 1.0]), f64::INFINITY);
        assert_eq!(v_divergence(&[0.5, 0.5], &[1.0]), f64::INFINITY);
        // a has no mass where b vanishes: finite
        assert!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).is_finite());
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn hellinger_unnormalised_convention() {
        // disjoint supports: ∑(√a - √b)² = 2
        assert!((hellinger_sq(&[1.0, 0.0], &[0.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn padding_with_zeros() {
        assert_eq!(l1_distance(&[1.0], &[0.5, 0.5]), 1.0);
    }
}
