//! Gaussian tail bounds used in diagnostics.

/// Mill's-type bound `Pr(|Z| >= x) <= exp(-x^2 / 2)` for standard normal `Z`, `x >= 0`.
pub fn mills_bound(x: f64) -> f64 {
    (-0.5 * x * x).exp()
}

/// Exact `Pr(|Z| >= x)`.
pub fn two_sided_tail(x: f64) -> f64 {
    libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Smallest `x` with `mills_bound(x) <= p`.
pub fn mills_quantile(p: f64) -> f64 {
    (-2.0 * p.ln()).sqrt()
}
