//! Majority vote over independent sketch copies.
//!
//! Each copy answers correctly, wrongly or not at all. The vote returns the
//! majority of the answers; a tie, including the case where every copy is
//! null, is settled by a fair coin.

use crate::circuit::ceil_log2;

/// Success probability of the vote over `k` copies with per-copy outcome
/// probabilities `p_correct`, `p_wrong` and `1 − p_correct − p_wrong`.
pub fn vote_success_with(k: u64, p_correct: f64, p_wrong: f64) -> f64 {
    let p_null = (1.0 - p_correct - p_wrong).max(0.0);
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=k).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln = |p: f64, e: u64| if e == 0 { 0.0 } else { e as f64 * p.ln() };
    let mut total = 0.0;
    for c in 0..=k {
        for w in 0..=(k - c).min(c) {
            let nul = k - c - w;
            let ln_term = ln_fact[k as usize] - ln_fact[c as usize] - ln_fact[w as usize] - ln_fact[nul as usize]
                + ln(p_correct, c)
                + ln(p_wrong, w)
                + ln(p_null, nul);
            let term = ln_term.exp();
            total += if c > w { term } else { 0.5 * term };
        }
    }
    total.min(1.0)
}

/// Vote success with the ideal per-copy probabilities `(α, α/2)`.
pub fn vote_success(k: u64, alpha: f64) -> f64 {
    vote_success_with(k, alpha, alpha / 2.0)
}

/// Smallest `k ≤ k_max` whose vote reaches `target`.
pub fn min_copies_with(p_correct: f64, p_wrong: f64, target: f64, k_max: u64) -> Option<u64> {
    (1..=k_max).find(|&k| vote_success_with(k, p_correct, p_wrong) >= target)
}

/// Smallest `k` with `vote_success(k, α) ≥ target`. Searches up to `⌈10/α⌉`.
pub fn min_copies(alpha: f64, target: f64) -> Option<u64> {
    min_copies_with(alpha, alpha / 2.0, target, (10.0 / alpha).ceil() as u64)
}

/// Failure probability `δ(k, α) + k(1 − γ)`, clamped to `[0, 1]`.
pub fn noisy_failure(k: u64, alpha: f64, gamma: f64) -> f64 {
    let delta = 1.0 - vote_success(k, alpha);
    (delta + k as f64 * (1.0 - gamma)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Largest per-copy infidelity `1 − γ` that keeps failure within budget.
    pub infidelity: f64,
    /// `false` when the noiseless vote already misses the budget.
    pub feasible: bool,
}

pub fn max_tolerable_infidelity(k: u64, alpha: f64, budget: f64) -> Tolerance {
    let delta = 1.0 - vote_success(k, alpha);
    if delta >= budget {
        Tolerance { infidelity: 0.0, feasible: false }
    } else {
        Tolerance { infidelity: (budget - delta) / k as f64, feasible: true }
    }
}

/// Logical sketch qubits over all copies: `copies · (⌈log₂n⌉ + 2)`.
pub fn total_quantum_space(n: u64, copies: u64) -> u64 {
    copies * (u64::from(ceil_log2(n)) + 2)
}
