//! Reference candidate selection: an ascending clock with noisy demand counts.
//!
//! Each bidder draws a private priority `u_i` in `[0, 1)` and is active at
//! clock point `x` (in units of alpha) while `level_i + u_i >= x`. The clock
//! visits `x = r / R` for `r = 0, ..., K R` and stops at the first point whose
//! noisy active count is at most `m - 1.5 E`; the last point sits above every
//! bid, where it always stops. The candidates are the active bidders at the
//! stopping point (the `m - E` lowest indices if more remain) and the price is
//! the first grid price at or above it.
//!
//! An underbid only changes counts at clock points above the new bid, which
//! the clock can reach only after the bidder has dropped out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::grid::PriceGrid;
use crate::rng::{standard_normal, StreamRng};

/// Constant `c` in `E = ceil(c sigma_c sqrt(ln(K T)))`.
pub const SLACK_CONSTANT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClockParams {
    /// Clock points per grid step (`R`).
    pub substeps: usize,
    /// Per-point noise scale `sigma_c`; zero disables noise.
    pub sigma: f64,
    /// Error parameter `E`.
    pub error_slack: usize,
}

impl ClockParams {
    /// Number of clock points for a grid: `K R + 1`.
    pub fn points(grid: &PriceGrid, substeps: usize) -> usize {
        grid.len() * substeps + 1
    }

    /// `sigma_c = (8 sqrt(N) / eps) sqrt(ln(N / delta))` for `N` clock points.
    pub fn clock_sigma(points: usize, epsilon: f64, delta: f64) -> Result<f64> {
        if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(domain(format!("invalid privacy parameters ({epsilon}, {delta})")));
        }
        let n = points as f64;
        Ok(8.0 * n.sqrt() / epsilon * (n / delta).ln().sqrt())
    }

    /// `E = ceil(c sigma_c sqrt(ln(K T)))`.
    pub fn calibrated_slack(sigma: f64, grid: &PriceGrid, horizon: usize) -> usize {
        let kt = (grid.len() * horizon.max(1)) as f64;
        (SLACK_CONSTANT * sigma * kt.ln().sqrt()).ceil().max(1.0) as usize
    }

    /// Calibrated parameters; `slack` overrides `E`, `noise = false` zeroes `sigma_c`.
    pub fn calibrated(
        grid: &PriceGrid,
        substeps: usize,
        epsilon: f64,
        delta: f64,
        horizon: usize,
        slack: Option<usize>,
        noise: bool,
    ) -> Result<Self> {
        if substeps == 0 {
            return Err(config("clock needs at least one point per grid step"));
        }
        let sigma = Self::clock_sigma(Self::points(grid, substeps), epsilon, delta)?;
        let error_slack = slack.unwrap_or_else(|| Self::calibrated_slack(sigma, grid, horizon));
        Ok(Self {
            substeps,
            sigma: if noise { sigma } else { 0.0 },
            error_slack,
        })
    }

    /// `m >= 3E >= 3` is required for the size guarantee to be meaningful.
    pub fn check(&self, copies: usize, bidders: usize) -> Result<()> {
        if self.error_slack == 0 || copies < 3 * self.error_slack {
            return Err(config(format!(
                "error slack E = {} needs 1 <= 3E <= m = {copies}",
                self.error_slack
            )));
        }
        if bidders < copies {
            return Err(config(format!("need n >= m, got n = {bidders}, m = {copies}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    /// Candidate bidders, ascending index.
    pub set: Vec<usize>,
    /// `j2`: the price in units of alpha (may be `K` when the clock ran off the grid).
    pub price_level: usize,
    pub price: f64,
    pub error_slack: usize,
    /// Stopping clock point in units of alpha.
    pub stop: f64,
}

/// Everything random about one clock run, drawn before the clock starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockDraws {
    pub priorities: Vec<f64>,
    pub noise: Vec<f64>,
}

impl ClockDraws {
    pub fn draw(bidders: usize, points: usize, sigma: f64, rng: &mut StreamRng) -> Self {
        let priorities = (0..bidders).map(|_| rng.random::<f64>()).collect();
        let noise = (0..points)
            .map(|_| {
                let z = standard_normal(rng);
                sigma * z
            })
            .collect();
        Self { priorities, noise }
    }
}

/// Runs the clock on grid bid levels with pre-drawn randomness.
pub fn pmatch_with_draws(
    bid_levels: &[usize],
    copies: usize,
    grid: &PriceGrid,
    params: &ClockParams,
    draws: &ClockDraws,
) -> Result<CandidateResult> {
    params.check(copies, bid_levels.len())?;
    let r = params.substeps;
    let points = ClockParams::points(grid, r);
    if draws.priorities.len() != bid_levels.len() || draws.noise.len() != points {
        return Err(domain("clock draws do not match the instance"));
    }
    if let Some(&b) = bid_levels.iter().find(|&&b| b > grid.steps()) {
        return Err(domain(format!("bid level {b} above the grid")));
    }
    let e = params.error_slack as f64;
    let threshold = copies as f64 - 1.5 * e;
    let effective: Vec<f64> = bid_levels
        .iter()
        .zip(&draws.priorities)
        .map(|(&b, &u)| b as f64 + u)
        .collect();
    let mut stop_r = points - 1;
    for step in 0..points {
        let x = step as f64 / r as f64;
        let active = effective.iter().filter(|&&v| v >= x).count() as f64;
        if active + draws.noise[step] <= threshold {
            stop_r = step;
            break;
        }
    }
    let stop = stop_r as f64 / r as f64;
    let cap = copies - params.error_slack;
    let set: Vec<usize> = (0..bid_levels.len())
        .filter(|&i| effective[i] >= stop)
        .take(cap)
        .collect();
    let price_level = stop_r.div_ceil(r);
    Ok(CandidateResult {
        set,
        price_level,
        price: price_level as f64 * grid.alpha(),
        error_slack: params.error_slack,
        stop,
    })
}

/// Draws the clock randomness from `rng` and runs the clock.
pub fn pmatch_reference(
    bid_levels: &[usize],
    copies: usize,
    grid: &PriceGrid,
    params: &ClockParams,
    rng: &mut StreamRng,
) -> Result<CandidateResult> {
    let draws = ClockDraws::draw(
        bid_levels.len(),
        ClockParams::points(grid, params.substeps),
        params.sigma,
        rng,
    );
    pmatch_with_draws(bid_levels, copies, grid, params, &draws)
}

/// Replays the clock with bidder `i` lowered to `lower_level`; true iff the
/// outcome is unchanged or `i` left the candidate set.
pub fn pmatch_underbid_monotonicity_check(
    bid_levels: &[usize],
    i: usize,
    lower_level: usize,
    copies: usize,
    grid: &PriceGrid,
    params: &ClockParams,
    rng: &StreamRng,
) -> Result<bool> {
    if i >= bid_levels.len() || lower_level > bid_levels[i] {
        return Err(domain("underbid must lower an existing bid"));
    }
    let base = pmatch_reference(bid_levels, copies, grid, params, &mut rng.clone())?;
    let mut lowered = bid_levels.to_vec();
    lowered[i] = lower_level;
    let alt = pmatch_reference(&lowered, copies, grid, params, &mut rng.clone())?;
    let same = alt.set == base.set && alt.price_level == base.price_level;
    Ok(same || !alt.set.contains(&i))
}

/// Size and bid guarantees of one run, evaluated against the submitted bids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClaimCheck {
    pub size: bool,
    pub members_above: bool,
    pub outsiders_below: bool,
}

impl ClaimCheck {
    pub fn evaluate(bid_levels: &[usize], copies: usize, result: &CandidateResult) -> Self {
        let e = result.error_slack;
        let size = result.set.len() + 2 * e >= copies && result.set.len() + e <= copies;
        // bid >= p - alpha  <=>  level + 1 >= j2
        let members_above = result.set.iter().all(|&i| bid_levels[i] + 1 >= result.price_level);
        let outsiders = (0..bid_levels.len())
            .filter(|i| !result.set.contains(i) && bid_levels[*i] >= result.price_level)
            .count();
        Self {
            size,
            members_above,
            outsiders_below: outsiders <= e,
        }
    }

    pub fn all(&self) -> bool {
        self.size && self.members_above && self.outsiders_below
    }
}
