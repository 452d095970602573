use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::{multi_gain_units, PriceGrid};

/// Relative gap below which two f64 revenues count as tied.
pub const REVENUE_TIE: f64 = 1e-12;

fn beats(revenue: f64, best: f64) -> bool {
    revenue > best + REVENUE_TIE * best.abs().max(1.0)
}

fn ties(revenue: f64, best: f64) -> bool {
    (revenue - best).abs() <= REVENUE_TIE * best.abs().max(1.0)
}

/// Best fixed price by direct scan over `{0} ∪ distinct values`:
/// `max_p p * |{t : v_t >= p}|`. Ties (up to [`REVENUE_TIE`]) go to the lowest price.
pub fn opt_fixed_price(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(domain("need at least one value"));
    }
    let mut candidates: Vec<f64> = values.to_vec();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = (0.0, 0.0);
    for &p in &candidates {
        let count = values.iter().filter(|&&v| v >= p).count();
        let revenue = p * count as f64;
        if beats(revenue, best.1) {
            best = (p, revenue);
        }
    }
    Ok(best)
}

/// Same optimum via one descending sort.
pub fn opt_fixed_price_sorted(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(domain("need at least one value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = (0.0, 0.0);
    for i in 0..sorted.len() {
        // Only the last element of a tie group sees the full count.
        if i + 1 < sorted.len() && sorted[i + 1] == sorted[i] {
            continue;
        }
        let revenue = sorted[i] * (i + 1) as f64;
        if revenue > 0.0 && (beats(revenue, best.1) || ties(revenue, best.1)) {
            best = (sorted[i], revenue);
        }
    }
    Ok(best)
}

/// Single-bidder optimum on grid levels: `(level, revenue in alpha units)`.
pub fn opt_fixed_level(levels: &[usize]) -> (usize, u64) {
    let mut candidates = levels.to_vec();
    candidates.push(0);
    candidates.sort_unstable();
    candidates.dedup();
    let mut best = (0, 0);
    for &p in &candidates {
        let revenue = (p * levels.iter().filter(|&&v| v >= p).count()) as u64;
        if revenue > best.1 {
            best = (p, revenue);
        }
    }
    best
}

/// Best anonymous reserve for repeated Vickrey auctions, over grid reserves:
/// `(reserve level, revenue in alpha units)`.
pub fn opt_reserve_levels(rounds: &[Vec<usize>], copies: usize, grid: &PriceGrid) -> (usize, u64) {
    let mut totals = vec![0u64; grid.len()];
    for bids in rounds {
        for (t, g) in totals.iter_mut().zip(multi_gain_units(bids, copies, grid)) {
            *t += g;
        }
    }
    let mut best = (0, 0);
    for (j, &r) in totals.iter().enumerate() {
        let level = grid.level(j);
        if r > best.1 || (r == best.1 && level < best.0) {
            best = (level, r);
        }
    }
    best
}

/// Regret split into a learning part (against submitted bids) and a
/// game-theoretic part (lost to strategic bidding). Revenues are also kept
/// as exact integers in units of alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rounds: usize,
    pub copies: usize,
    pub alpha: f64,
    pub opt_values: f64,
    pub opt_values_price: f64,
    pub opt_bids: f64,
    pub opt_bids_price: f64,
    pub alg: f64,
    pub learning_regret: f64,
    pub game_regret: f64,
    pub total_regret: f64,
    pub regret_per_round: f64,
    pub regret_per_copy_round: f64,
    pub opt_values_units: u64,
    pub opt_bids_units: u64,
    pub alg_units: u64,
    /// Cumulative revenue after each round.
    #[serde(skip)]
    pub trajectory: Vec<f64>,
}

impl RegretReport {
    pub fn from_units(
        grid: &PriceGrid,
        rounds: usize,
        copies: usize,
        opt_values: (usize, u64),
        opt_bids: (usize, u64),
        alg_units: u64,
        trajectory: Vec<f64>,
    ) -> Self {
        let s = grid.steps() as f64;
        let learning = opt_bids.1 as i64 - alg_units as i64;
        let game = opt_values.1 as i64 - opt_bids.1 as i64;
        let total = learning + game;
        Self {
            rounds,
            copies,
            alpha: grid.alpha(),
            opt_values: opt_values.1 as f64 / s,
            opt_values_price: grid.level_price(opt_values.0),
            opt_bids: opt_bids.1 as f64 / s,
            opt_bids_price: grid.level_price(opt_bids.0),
            alg: alg_units as f64 / s,
            learning_regret: learning as f64 / s,
            game_regret: game as f64 / s,
            total_regret: total as f64 / s,
            regret_per_round: total as f64 / s / rounds as f64,
            regret_per_copy_round: total as f64 / s / (rounds * copies) as f64,
            opt_values_units: opt_values.1,
            opt_bids_units: opt_bids.1,
            alg_units,
            trajectory,
        }
    }

    /// `OPT_values - ALG` in alpha units.
    pub fn total_units(&self) -> i64 {
        self.opt_values_units as i64 - self.alg_units as i64
    }
}
