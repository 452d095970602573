//! Discretized price grid and per-round gain vectors.
//!
//! Prices are multiples of `alpha` in `[0, 1]`. Internally a price is carried
//! as an integer *level* (price / alpha) so that revenue bookkeeping stays
//! exact; `f64` prices are produced on demand as `level / steps`, which is the
//! correctly rounded value of the grid price.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};

/// Values within this distance of a grid price are treated as that price.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// Ordering of experts over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceOrder {
    /// Expert `j` (0-based) carries price `j * alpha`.
    Ascending,
    /// Expert `j` (0-based) carries price `(K - 1 - j) * alpha`.
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    steps: usize,
    order: PriceOrder,
}

impl PriceGrid {
    /// Builds the grid of multiples of `alpha`. `1 / alpha` must be an integer.
    pub fn new(alpha: f64, order: PriceOrder) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(domain(format!("alpha must lie in (0, 0.5], got {alpha}")));
        }
        let inv = 1.0 / alpha;
        let steps = inv.round();
        if (inv - steps).abs() > 1e-6 * inv {
            return Err(domain(format!("1/alpha must be an integer, got 1/{alpha} = {inv}")));
        }
        Self::from_steps(steps as usize, order)
    }

    /// Grid with `steps + 1` prices `0, 1/steps, ..., 1`.
    pub fn from_steps(steps: usize, order: PriceOrder) -> Result<Self> {
        if steps < 2 {
            return Err(domain(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { steps, order })
    }

    pub fn with_order(self, order: PriceOrder) -> Self {
        Self { order, ..self }
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.steps as f64
    }

    /// Number of price steps, `1 / alpha`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of experts `K = 1/alpha + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn order(&self) -> PriceOrder {
        self.order
    }

    /// Price level (multiple of alpha) of expert `index`.
    pub fn level(&self, index: usize) -> usize {
        debug_assert!(index < self.len());
        match self.order {
            PriceOrder::Ascending => index,
            PriceOrder::Descending => self.steps - index,
        }
    }

    /// Expert index carrying price level `level`.
    pub fn index_of_level(&self, level: usize) -> usize {
        debug_assert!(level <= self.steps);
        match self.order {
            PriceOrder::Ascending => level,
            PriceOrder::Descending => self.steps - level,
        }
    }

    pub fn level_price(&self, level: usize) -> f64 {
        level as f64 / self.steps as f64
    }

    pub fn price(&self, index: usize) -> f64 {
        self.level_price(self.level(index))
    }

    pub fn prices(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.price(j)).collect()
    }

    /// Level of the largest grid price not exceeding `value`.
    pub fn snap_level(&self, value: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&value) {
            return Err(domain(format!("value {value} outside [0, 1]")));
        }
        let level = (value * self.steps as f64 + GRID_TOLERANCE).floor() as usize;
        Ok(level.min(self.steps))
    }

    /// Index (under this grid's order) of the largest grid price `<= value`.
    pub fn snap_to_grid(&self, value: f64) -> Result<usize> {
        Ok(self.index_of_level(self.snap_level(value)?))
    }

    /// Level of `value`, which must already be a grid price.
    pub fn level_of(&self, value: f64) -> Result<usize> {
        let level = self
            .snap_level(value)
            .map_err(|_| contract(format!("bid {value} is not a grid price")))?;
        if (self.level_price(level) - value).abs() > GRID_TOLERANCE {
            return Err(contract(format!(
                "bid {value} is not a multiple of alpha = {}",
                self.alpha()
            )));
        }
        Ok(level)
    }

    /// Snaps `value` down to the grid, warning when it was not already on it.
    pub fn level_or_snap(&self, value: f64) -> Result<usize> {
        match self.level_of(value) {
            Ok(level) => Ok(level),
            Err(_) => {
                let level = self.snap_level(value)?;
                log::warn!(
                    "off-grid bid {value} snapped down to {}",
                    self.level_price(level)
                );
                Ok(level)
            }
        }
    }
}

/// Per-expert gains of one round, indexed in the grid's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainVector(pub Vec<f64>);

impl GainVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|g| g * factor).collect())
    }
}

impl Deref for GainVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Single-bidder gain in alpha units: entry `j` is `level(j)` if the bid level
/// reaches it, else 0.
pub fn single_gain_units(bid_level: usize, grid: &PriceGrid) -> Vec<u64> {
    (0..grid.len())
        .map(|j| {
            let level = grid.level(j);
            if bid_level >= level {
                level as u64
            } else {
                0
            }
        })
        .collect()
}

pub fn single_gain_levels(bid_level: usize, grid: &PriceGrid) -> GainVector {
    let steps = grid.steps() as f64;
    GainVector(
        single_gain_units(bid_level, grid)
            .into_iter()
            .map(|u| u as f64 / steps)
            .collect(),
    )
}

/// Gain vector of a single grid bid: entry `j` is `price(j)` if
/// `bid >= price(j)` and 0 otherwise.
pub fn single_gain(bid: f64, grid: &PriceGrid) -> Result<GainVector> {
    Ok(single_gain_levels(grid.level_of(bid)?, grid))
}

/// Vickrey-with-reserve revenue (in alpha units) for every grid reserve,
/// indexed in the grid's order.
pub fn multi_gain_units(bid_levels: &[usize], copies: usize, grid: &PriceGrid) -> Vec<u64> {
    let mut sorted = bid_levels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    // (m+1)-th highest bid, if any.
    let runner_up = sorted.get(copies).copied();
    (0..grid.len())
        .map(|j| {
            let reserve = grid.level(j);
            let eligible = sorted.partition_point(|&b| b >= reserve);
            if eligible <= copies {
                (reserve * eligible) as u64
            } else {
                // eligible > copies implies a runner-up exists and clears the reserve.
                (runner_up.expect("runner-up exists when demand exceeds supply") * copies) as u64
            }
        })
        .collect()
}

pub fn multi_gain_levels(bid_levels: &[usize], copies: usize, grid: &PriceGrid) -> GainVector {
    let steps = grid.steps() as f64;
    GainVector(
        multi_gain_units(bid_levels, copies, grid)
            .into_iter()
            .map(|u| u as f64 / steps)
            .collect(),
    )
}

/// Gain vector of a multi-bidder round: entry `j` is the revenue of a Vickrey
/// auction for `copies` identical goods with reserve `price(j)`.
pub fn multi_gain(bids: &[f64], copies: usize, grid: &PriceGrid) -> Result<GainVector> {
    if bids.is_empty() {
        return Err(domain("multi-bidder gain needs at least one bid"));
    }
    if copies == 0 {
        return Err(domain("at least one copy must be for sale"));
    }
    let levels = bids
        .iter()
        .map(|&b| grid.level_of(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(multi_gain_levels(&levels, copies, grid))
}

/// Position `i_t` of a bid among descending-order experts, with its prefix
/// indicator `c(b)` (zeros before `i_t`, ones from `i_t` on).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentificationVector {
    pub index: usize,
    pub len: usize,
}

impl IdentificationVector {
    /// `grid` is read as descending regardless of its own order.
    pub fn from_level(bid_level: usize, grid: &PriceGrid) -> Self {
        let desc = grid.with_order(PriceOrder::Descending);
        Self {
            index: desc.index_of_level(bid_level),
            len: desc.len(),
        }
    }

    pub fn indicator(&self) -> Vec<f64> {
        (0..self.len)
            .map(|i| if i == self.index { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn prefix(&self) -> Vec<f64> {
        (0..self.len)
            .map(|i| if i >= self.index { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Diagonal of `P = diag(1, 1 - alpha, ..., alpha, 0)`.
pub fn descending_price_diagonal(grid: &PriceGrid) -> Vec<f64> {
    grid.with_order(PriceOrder::Descending).prices()
}
