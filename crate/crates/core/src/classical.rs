//! Classical space formulas for Hidden Matching.

use std::f64::consts::{E, LN_2};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct DomainError(pub String);

/// Sampling sketch size `⌈√(ln 3 · n / α)⌉` that reaches success 2/3.
pub fn classical_sketch_size(n: f64, alpha: f64) -> u64 {
    (3f64.ln() * n / alpha).sqrt().ceil() as u64
}

/// Lower bound in bits for any one-pass classical algorithm with worst-case
/// error `epsilon`: `(1/(e ln 2)) (1/2 − ε) √((n − 1)/(2α))`.
pub fn classical_lower_bound(n: f64, alpha: f64, epsilon: f64) -> Result<f64, DomainError> {
    if !(epsilon < 0.5) {
        return Err(DomainError(format!("epsilon = {epsilon} must be below 1/2")));
    }
    if n < 1.0 || !(alpha > 0.0) {
        return Err(DomainError(format!("need n ≥ 1 and α > 0, got n = {n}, α = {alpha}")));
    }
    Ok((0.5 - epsilon) * ((n - 1.0) / (2.0 * alpha)).sqrt() / (E * LN_2))
}

/// Upper bound `exp(−αk²/n)` on the chance that `k` random vertices contain
/// no matching edge.
pub fn collision_bound(n: f64, alpha: f64, k: f64) -> f64 {
    (-alpha * k * k / n).exp()
}

/// Exact probability that a uniform `k`-subset of `n` vertices contains no
/// edge of a fixed `m`-edge matching, by inclusion-exclusion.
pub fn exact_miss_probability(n: u64, m: u64, k: u64) -> f64 {
    let mut total = 0.0;
    // term_j = C(m, j) · C(n − 2j, k − 2j) / C(n, k)
    let mut choose_m = 1.0;
    let mut ratio = 1.0;
    for j in 0..=m.min(k / 2) {
        if j > 0 {
            choose_m *= (m - j + 1) as f64 / j as f64;
            let (kk, nn) = ((k - 2 * j) as f64, (n - 2 * j) as f64);
            ratio *= (kk + 2.0) * (kk + 1.0) / ((nn + 2.0) * (nn + 1.0));
        }
        let term = choose_m * ratio;
        total += if j % 2 == 0 { term } else { -term };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sketch_sizes() {
        assert_eq!(classical_sketch_size(4.0, 0.25), 5);
        // √(4096 ln 3) = 67.08
        assert_eq!(classical_sketch_size(1024.0, 0.25), 68);
        let s = classical_sketch_size(1e6, 0.25) as f64;
        assert!((s / 2.10e3 - 1.0).abs() < 0.01);
    }

    #[test]
    fn lower_bounds() {
        let b = classical_lower_bound(1e6, 0.25, 1.0 / 3.0).unwrap();
        assert!((b / 1.25e2 - 1.0).abs() < 0.01, "{b}");
        assert!(classical_lower_bound(1e6, 0.25, 0.5).is_err());
        assert!(classical_lower_bound(1e6, 0.25, 0.5 - 1e-12).unwrap() < 1e-6);
    }

    #[test]
    fn collision() {
        assert_eq!(collision_bound(1024.0, 0.25, 0.0), 1.0);
        assert!((collision_bound(1024.0, 0.25, 64.0) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exact_miss_small_cases() {
        // n = 4, one edge, k = 2: 5 of 6 pairs miss it
        assert!((exact_miss_probability(4, 1, 2) - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(exact_miss_probability(10, 2, 1), 1.0);
        assert!(exact_miss_probability(8, 4, 8).abs() < 1e-12);
    }
}
