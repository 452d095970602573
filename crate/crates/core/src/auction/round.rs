use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MarketConfig, PmatchOptions};
use crate::error::{contract, domain, Result};
use crate::grid::{multi_gain_levels, PriceGrid, PriceOrder};
use crate::pricing::argmax_lowest;
use crate::rng::{stream, SeedTree, StreamRng};
use crate::tree::{onefold_sigma, OneFoldTree};

use super::pmatch::{pmatch_reference, CandidateResult, ClockParams};

/// What one bidder learns about a round. Nothing else is ever handed back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidderOutcome {
    pub offered: bool,
    pub offer_price: f64,
    pub won: bool,
    pub payment: f64,
}

impl BidderOutcome {
    pub const NOT_OFFERED: Self = Self {
        offered: false,
        offer_price: 0.0,
        won: false,
        payment: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundAllocation {
    pub t: usize,
    pub explored: bool,
    /// FTPL pick `j1` (1-based), exploit branch only.
    pub j1: Option<usize>,
    /// Clock price `j2` in units of alpha, exploit branch only.
    pub j2: Option<usize>,
    pub offered: Vec<usize>,
    pub offer_level: usize,
    pub offer_price: f64,
    /// Indexed by bidder slot.
    pub outcomes: Vec<BidderOutcome>,
    pub candidate: Option<CandidateResult>,
}

impl RoundAllocation {
    pub fn copies_sold(&self) -> usize {
        self.outcomes.iter().filter(|o| o.won).count()
    }

    /// Revenue in units of alpha.
    pub fn revenue_units(&self) -> u64 {
        (self.copies_sold() * self.offer_level) as u64
    }

    pub fn revenue(&self) -> f64 {
        self.outcomes.iter().map(|o| o.payment).sum()
    }

    pub fn record(&self) -> MultiRoundRecord {
        MultiRoundRecord {
            t: self.t,
            explored: self.explored,
            j1: self.j1,
            j2: self.j2,
            offer_price: self.offer_price,
            set_size: self.offered.len(),
            copies_sold: self.copies_sold(),
            revenue: self.revenue(),
        }
    }
}

/// One row of the per-round CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRoundRecord {
    pub t: usize,
    pub explored: bool,
    pub j1: Option<usize>,
    pub j2: Option<usize>,
    pub offer_price: f64,
    pub set_size: usize,
    pub copies_sold: usize,
    pub revenue: f64,
}

/// Offer level `(j - 1)` with `j = max(j1 - 1, j2)`, floored at 0.
pub fn exploit_offer_level(j1: usize, j2: usize) -> usize {
    let j = (j1 as isize - 1).max(j2 as isize);
    (j - 1).max(0) as usize
}

/// Posted-price offers: each offered bidder wins iff its bid reaches the price.
pub fn post_offers(bid_levels: &[usize], offered: &[usize], offer_level: usize, grid: &PriceGrid) -> Vec<BidderOutcome> {
    let price = grid.level_price(offer_level);
    let mut out = vec![BidderOutcome::NOT_OFFERED; bid_levels.len()];
    for &i in offered {
        let won = bid_levels[i] >= offer_level;
        out[i] = BidderOutcome {
            offered: true,
            offer_price: price,
            won,
            payment: if won { price } else { 0.0 },
        };
    }
    out
}

#[derive(Debug, Clone)]
pub struct MultiParams {
    pub alpha: f64,
    pub horizon: usize,
    pub epsilon: f64,
    pub bidders: usize,
    pub copies: usize,
    pub exploration: f64,
    pub sigma: Option<f64>,
    pub pmatch: PmatchOptions,
}

impl MultiParams {
    pub fn from_config(cfg: &MarketConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            horizon: cfg.rounds,
            epsilon: cfg.epsilon,
            bidders: cfg.bidders_per_round,
            copies: cfg.copies,
            exploration: cfg.exploration(),
            sigma: cfg.mechanism.sigma,
            pmatch: cfg.mechanism.pmatch.clone(),
        }
    }

    pub fn clock(&self, grid: &PriceGrid) -> Result<ClockParams> {
        let eps = self.pmatch.epsilon.unwrap_or(self.epsilon);
        ClockParams::calibrated(
            grid,
            self.pmatch.substeps,
            eps,
            eps / self.horizon as f64,
            self.horizon,
            self.pmatch.error_slack,
            self.pmatch.noise,
        )
    }
}

/// Seller side of the multi-bidder game.
#[derive(Debug, Clone)]
pub struct MultiEngine {
    grid: PriceGrid,
    tree: OneFoldTree,
    clock: ClockParams,
    bidders: usize,
    copies: usize,
    exploration: f64,
    horizon: usize,
    completed: usize,
    coin: StreamRng,
    clock_rng: StreamRng,
    last_gain: Vec<f64>,
}

impl MultiEngine {
    pub fn new(params: &MultiParams, seeds: &SeedTree) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.exploration) {
            return Err(domain(format!(
                "exploration probability {} outside [0, 1]",
                params.exploration
            )));
        }
        let grid = PriceGrid::new(params.alpha, PriceOrder::Ascending)?;
        let clock = params.clock(&grid)?;
        clock.check(params.copies, params.bidders)?;
        let sigma = match params.sigma {
            Some(s) => s,
            None => onefold_sigma(grid.len(), params.epsilon, params.epsilon / params.horizon as f64, params.horizon)?,
        };
        Ok(Self {
            tree: OneFoldTree::new(grid.len(), params.horizon, sigma, seeds)?,
            clock,
            bidders: params.bidders,
            copies: params.copies,
            exploration: params.exploration,
            horizon: params.horizon,
            completed: 0,
            coin: seeds.rng(stream::EXPLORATION),
            clock_rng: seeds.rng(stream::CLOCK_NOISE),
            last_gain: vec![0.0; grid.len()],
            grid,
        })
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn tree(&self) -> &OneFoldTree {
        &self.tree
    }

    pub fn clock(&self) -> &ClockParams {
        &self.clock
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    /// Normalized gain absorbed in the last round.
    pub fn last_gain(&self) -> &[f64] {
        &self.last_gain
    }

    /// Runs one round on the submitted grid bid levels (one per slot).
    pub fn run_round(&mut self, bid_levels: &[usize]) -> Result<RoundAllocation> {
        if self.completed >= self.horizon {
            return Err(contract("horizon exhausted"));
        }
        if bid_levels.len() != self.bidders {
            return Err(contract(format!(
                "expected {} bids, got {}",
                self.bidders,
                bid_levels.len()
            )));
        }
        if bid_levels.iter().any(|&b| b > self.grid.steps()) {
            return Err(contract("bid level above the grid"));
        }
        let t = self.completed + 1;
        let explored = self.coin.random::<f64>() < self.exploration;
        let (offered, offer_level, j1, j2, candidate) = if explored {
            let mut set = sample(&mut self.coin, self.bidders, self.copies).into_vec();
            set.sort_unstable();
            let j = self.coin.random_range(0..self.grid.len());
            (set, self.grid.level(j), None, None, None)
        } else {
            let j1 = argmax_lowest(&self.tree.query(t - 1)?) + 1;
            let cand = pmatch_reference(bid_levels, self.copies, &self.grid, &self.clock, &mut self.clock_rng)?;
            let level = exploit_offer_level(j1, cand.price_level);
            (cand.set.clone(), level, Some(j1), Some(cand.price_level), Some(cand))
        };
        let outcomes = post_offers(bid_levels, &offered, offer_level, &self.grid);

        let gain = multi_gain_levels(bid_levels, self.copies, &self.grid);
        let m = self.copies as f64;
        self.last_gain = gain.iter().map(|g| g / m).collect();
        self.tree.update(t, &self.last_gain)?;
        self.completed = t;
        Ok(RoundAllocation {
            t,
            explored,
            j1,
            j2,
            offered,
            offer_level,
            offer_price: self.grid.level_price(offer_level),
            outcomes,
            candidate,
        })
    }
}
