//! Full-information single-bidder pricing: explore uniformly with probability
//! `alpha`, otherwise post the price whose noisy cumulative gain is largest.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Backend, MarketConfig};
use crate::error::{contract, domain, Result};
use crate::grid::{single_gain_levels, IdentificationVector, PriceGrid, PriceOrder};
use crate::rng::{stream, SeedTree, StreamRng};
use crate::tree::{gamma, level_count, onefold_sigma, twofold_sigma, OneFoldTree, TreeSnapshot, TwoFoldTree};

use super::argmax::{argmax_lowest, argmax_probabilities};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceDecision {
    /// Expert index under the engine's grid order.
    pub index: usize,
    /// Price in units of alpha.
    pub level: usize,
    pub price: f64,
    pub explored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub sold: bool,
    pub payment: f64,
    /// Payment in units of alpha.
    pub payment_units: u64,
}

/// One row of the per-round CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRoundRecord {
    pub t: usize,
    pub explored: bool,
    pub price: f64,
    pub bid: f64,
    pub sold: bool,
    pub payment: f64,
}

#[derive(Debug, Clone)]
pub enum TreeBackend {
    OneFold(OneFoldTree),
    TwoFold(TwoFoldTree),
}

impl TreeBackend {
    pub fn snapshot(&self) -> TreeSnapshot {
        match self {
            Self::OneFold(t) => t.snapshot(),
            Self::TwoFold(t) => t.snapshot(),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Self::OneFold(t) => t.sigma(),
            Self::TwoFold(t) => t.sigma(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineParams {
    pub alpha: f64,
    pub horizon: usize,
    pub epsilon: f64,
    pub backend: Backend,
    /// Per-round exploration probability (normally `alpha`).
    pub exploration: f64,
    /// Noise scale override; the closed-form calibration when `None`.
    pub sigma: Option<f64>,
}

impl EngineParams {
    pub fn new(alpha: f64, horizon: usize, epsilon: f64, backend: Backend) -> Self {
        Self {
            alpha,
            horizon,
            epsilon,
            backend,
            exploration: alpha,
            sigma: None,
        }
    }

    pub fn from_config(cfg: &MarketConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            horizon: cfg.rounds,
            epsilon: cfg.epsilon,
            backend: cfg.mechanism.backend,
            exploration: cfg.exploration(),
            sigma: cfg.mechanism.sigma,
        }
    }

    pub fn delta(&self) -> f64 {
        self.epsilon / self.horizon as f64
    }

    pub fn calibrated_sigma(&self) -> Result<f64> {
        if let Some(s) = self.sigma {
            return Ok(s);
        }
        let k = PriceGrid::new(self.alpha, PriceOrder::Ascending)?.len();
        match self.backend {
            Backend::OneFold => onefold_sigma(k, self.epsilon, self.delta(), self.horizon),
            Backend::TwoFold => twofold_sigma(k, self.epsilon, self.delta(), self.horizon),
        }
    }
}

/// Seller side of the single-bidder game as a `choose_price` / `observe_bid`
/// state machine.
#[derive(Debug, Clone)]
pub struct PricingEngine {
    grid: PriceGrid,
    tree: TreeBackend,
    horizon: usize,
    completed: usize,
    pending: Option<PriceDecision>,
    exploration: f64,
    coin: StreamRng,
}

impl PricingEngine {
    pub fn new(params: &EngineParams, seeds: &SeedTree) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.exploration) {
            return Err(domain(format!(
                "exploration probability {} outside [0, 1]",
                params.exploration
            )));
        }
        let sigma = params.calibrated_sigma()?;
        let (grid, tree) = match params.backend {
            Backend::OneFold => {
                let grid = PriceGrid::new(params.alpha, PriceOrder::Ascending)?;
                let tree = OneFoldTree::new(grid.len(), params.horizon, sigma, seeds)?;
                (grid, TreeBackend::OneFold(tree))
            }
            Backend::TwoFold => {
                let grid = PriceGrid::new(params.alpha, PriceOrder::Descending)?;
                let tree = TwoFoldTree::new(&grid, params.horizon, sigma, seeds)?;
                (grid, TreeBackend::TwoFold(tree))
            }
        };
        Ok(Self {
            grid,
            tree,
            horizon: params.horizon,
            completed: 0,
            pending: None,
            exploration: params.exploration,
            coin: seeds.rng(stream::EXPLORATION),
        })
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn tree(&self) -> &TreeBackend {
        &self.tree
    }

    pub fn sigma(&self) -> f64 {
        self.tree.sigma()
    }

    pub fn exploration(&self) -> f64 {
        self.exploration
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Rounds fully completed.
    pub fn completed(&self) -> usize {
        self.completed
    }

    fn query_previous(&mut self) -> Result<Vec<f64>> {
        let t = self.completed;
        match &mut self.tree {
            TreeBackend::OneFold(tree) => tree.query(t),
            TreeBackend::TwoFold(tree) => tree.query(t),
        }
    }

    pub fn choose_price(&mut self) -> Result<PriceDecision> {
        if self.pending.is_some() {
            return Err(contract("price already chosen for this round"));
        }
        if self.completed >= self.horizon {
            return Err(contract("horizon exhausted"));
        }
        let explored = self.coin.random::<f64>() < self.exploration;
        let index = if explored {
            self.coin.random_range(0..self.grid.len())
        } else {
            argmax_lowest(&self.query_previous()?)
        };
        let level = self.grid.level(index);
        let decision = PriceDecision {
            index,
            level,
            price: self.grid.level_price(level),
            explored,
        };
        self.pending = Some(decision);
        Ok(decision)
    }

    /// Closes the round with the bidder's bid; off-grid bids are snapped down.
    pub fn observe_bid(&mut self, bid: f64) -> Result<RoundOutcome> {
        let level = self.grid.level_or_snap(bid)?;
        self.observe_bid_level(level)
    }

    pub fn observe_bid_level(&mut self, bid_level: usize) -> Result<RoundOutcome> {
        let decision = self
            .pending
            .ok_or_else(|| contract("bid observed before a price was chosen"))?;
        if bid_level > self.grid.steps() {
            return Err(contract(format!("bid level {bid_level} above the grid")));
        }
        let t = self.completed + 1;
        match &mut self.tree {
            TreeBackend::OneFold(tree) => tree.update(t, &single_gain_levels(bid_level, &self.grid))?,
            TreeBackend::TwoFold(tree) => {
                let position = IdentificationVector::from_level(bid_level, &self.grid).index;
                tree.update(t, position)?;
            }
        }
        self.pending = None;
        self.completed = t;
        let sold = bid_level >= decision.level;
        let payment_units = if sold { decision.level as u64 } else { 0 };
        Ok(RoundOutcome {
            sold,
            payment: if sold { decision.price } else { 0.0 },
            payment_units,
        })
    }

    /// Exact distribution of the next posted price index given the current
    /// node values: exploration mass plus the argmax law of the fresh top-up
    /// noise around the committed partial sums.
    pub fn price_distribution(&self) -> Result<Vec<f64>> {
        if self.pending.is_some() {
            return Err(contract("price already chosen for this round"));
        }
        let t = self.completed;
        let nodes = gamma(t);
        let (means, stds) = match &self.tree {
            TreeBackend::OneFold(tree) => {
                let mut means = vec![0.0; tree.dim()];
                for &j in &nodes {
                    for (m, a) in means.iter_mut().zip(tree.node(j)) {
                        *m += a;
                    }
                }
                let sd = tree.sigma() * ((level_count(tree.horizon()) - nodes.len()) as f64).sqrt();
                (means, vec![sd; tree.dim()])
            }
            TreeBackend::TwoFold(tree) => {
                let lt = level_count(tree.horizon());
                let lk = level_count(tree.dim());
                let prices = self.grid.prices();
                let mut means = Vec::with_capacity(tree.dim());
                let mut stds = Vec::with_capacity(tree.dim());
                for i in 1..=tree.dim() {
                    let price_nodes = gamma(i);
                    let mut count = 0.0;
                    for &j in &nodes {
                        for &k in &price_nodes {
                            count += tree.node(j, k);
                        }
                    }
                    let spare = (lt * lk - nodes.len() * price_nodes.len()) as f64;
                    means.push(prices[i - 1] * count);
                    stds.push(prices[i - 1] * tree.sigma() * spare.sqrt());
                }
                (means, stds)
            }
        };
        let exploit = argmax_probabilities(&means, &stds)?;
        let k = self.grid.len() as f64;
        Ok(exploit
            .into_iter()
            .map(|q| (1.0 - self.exploration) * q + self.exploration / k)
            .collect())
    }
}
