//! Closed-form noise scales.
//!
//! `log` inside these formulas is the real base-2 logarithm; level counts
//! elsewhere use `floor(log2 n) + 1`.

use crate::error::{domain, Result};

fn check_common(epsilon: f64, delta: f64, horizon: usize) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if horizon < 2 {
        return Err(domain(format!("horizon must be at least 2, got {horizon}")));
    }
    Ok(())
}

/// One-fold tree: `sigma = (8 sqrt(K) / eps) log T sqrt(ln(log T / delta))`.
pub fn onefold_sigma(dim: usize, epsilon: f64, delta: f64, horizon: usize) -> Result<f64> {
    check_common(epsilon, delta, horizon)?;
    if dim == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let log_t = (horizon as f64).log2();
    Ok(8.0 * (dim as f64).sqrt() / epsilon * log_t * (log_t / delta).ln().sqrt())
}

/// Two-fold tree: `sigma = (8 log T log K / eps) sqrt(ln(log K log T / delta))`.
pub fn twofold_sigma(dim: usize, epsilon: f64, delta: f64, horizon: usize) -> Result<f64> {
    check_common(epsilon, delta, horizon)?;
    if dim < 2 {
        return Err(domain(format!("two-fold tree needs K >= 2, got {dim}")));
    }
    let log_t = (horizon as f64).log2();
    let log_k = (dim as f64).log2();
    Ok(8.0 * log_t * log_k / epsilon * (log_k * log_t / delta).ln().sqrt())
}

/// Bandit estimator tree: `sigma = (8 K / (alpha eps)) log T sqrt(ln(log T / delta))`.
pub fn bandit_sigma(dim: usize, alpha: f64, epsilon: f64, delta: f64, horizon: usize) -> Result<f64> {
    check_common(epsilon, delta, horizon)?;
    if !(alpha > 0.0) {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    let log_t = (horizon as f64).log2();
    Ok(8.0 * dim as f64 / (alpha * epsilon) * log_t * (log_t / delta).ln().sqrt())
}

/// Smallest Gaussian-mechanism scale for an `(eps, delta)` release of a
/// function with the given L2 sensitivity.
pub fn gaussian_mechanism_sigma(epsilon: f64, delta: f64, l2_sensitivity: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((2.0 * (1.25 / delta).ln()).sqrt() * l2_sensitivity / epsilon)
}
