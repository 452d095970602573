//! Bandit posted pricing: the seller sees only whether the posted price sold
//! and feeds an importance-weighted estimate of the full gain vector to the
//! tree.

use std::ops::Div;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ArmSelection, MarketConfig};
use crate::error::{contract, domain, Result};
use crate::grid::{PriceGrid, PriceOrder};
use crate::rng::{stream, SeedTree, StreamRng};
use crate::tree::{bandit_sigma, level_count, OneFoldTree};

use super::argmax::{argmax_lowest, arm_probabilities};
use super::single::RoundOutcome;

/// `ḡ`: `payment / prob` at the chosen arm, zero elsewhere.
pub fn importance_weighted<T>(dim: usize, arm: usize, payment: T, prob: T) -> Vec<T>
where
    T: Clone + Zero + Div<Output = T>,
{
    let mut g = vec![T::zero(); dim];
    g[arm] = payment / prob;
    g
}

#[derive(Debug, Clone)]
pub struct BanditParams {
    pub alpha: f64,
    pub horizon: usize,
    pub epsilon: f64,
    pub exploration: f64,
    pub sigma: Option<f64>,
    pub arm_selection: ArmSelection,
}

impl BanditParams {
    pub fn new(alpha: f64, horizon: usize, epsilon: f64) -> Self {
        Self {
            alpha,
            horizon,
            epsilon,
            exploration: alpha,
            sigma: None,
            arm_selection: ArmSelection::Marginal,
        }
    }

    pub fn from_config(cfg: &MarketConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            horizon: cfg.rounds,
            epsilon: cfg.epsilon,
            exploration: cfg.exploration(),
            sigma: cfg.mechanism.sigma,
            arm_selection: cfg.mechanism.arm_selection,
        }
    }

    pub fn calibrated_sigma(&self) -> Result<f64> {
        if let Some(s) = self.sigma {
            return Ok(s);
        }
        let k = PriceGrid::new(self.alpha, PriceOrder::Ascending)?.len();
        bandit_sigma(k, self.alpha, self.epsilon, self.epsilon / self.horizon as f64, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmChoice {
    pub index: usize,
    pub price: f64,
    /// `q~` of the chosen arm.
    pub probability: f64,
}

/// One row of the per-round CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditRoundRecord {
    pub t: usize,
    pub arm: usize,
    pub price: f64,
    pub q_arm: f64,
    pub sold: bool,
    pub payment: f64,
    pub estimator: f64,
}

#[derive(Debug, Clone)]
pub struct BanditEngine {
    grid: PriceGrid,
    tree: OneFoldTree,
    cumulative: Vec<f64>,
    mixed: Option<Vec<f64>>,
    noise_sd: f64,
    exploration: f64,
    selection: ArmSelection,
    horizon: usize,
    completed: usize,
    pending: Option<ArmChoice>,
    arms: StreamRng,
    last_estimator: f64,
}

impl BanditEngine {
    pub fn new(params: &BanditParams, seeds: &SeedTree) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.exploration) {
            return Err(domain(format!(
                "exploration probability {} outside [0, 1]",
                params.exploration
            )));
        }
        let grid = PriceGrid::new(params.alpha, PriceOrder::Ascending)?;
        let sigma = params.calibrated_sigma()?;
        let tree = OneFoldTree::new(grid.len(), params.horizon, sigma, seeds)?;
        Ok(Self {
            cumulative: vec![0.0; grid.len()],
            mixed: None,
            noise_sd: sigma * (level_count(params.horizon) as f64).sqrt(),
            exploration: params.exploration,
            selection: params.arm_selection,
            horizon: params.horizon,
            completed: 0,
            pending: None,
            arms: seeds.rng(stream::ARMS),
            last_estimator: 0.0,
            grid,
            tree,
        })
    }

    pub fn grid(&self) -> &PriceGrid {
        &self.grid
    }

    pub fn tree(&self) -> &OneFoldTree {
        &self.tree
    }

    pub fn sigma(&self) -> f64 {
        self.tree.sigma()
    }

    /// Standard deviation `s` of the marginal noise behind `q`.
    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// Exact running sum `Ḡ` of the estimators.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    pub fn last_estimator(&self) -> f64 {
        self.last_estimator
    }

    /// `q~ = (1 - alpha) q + alpha / K` at the current state.
    pub fn mixed_distribution(&mut self) -> Result<&[f64]> {
        if self.mixed.is_none() {
            let k = self.grid.len();
            let q = if self.noise_sd > 0.0 {
                arm_probabilities(&self.cumulative, self.noise_sd)?
            } else {
                let mut q = vec![0.0; k];
                q[argmax_lowest(&self.cumulative)] = 1.0;
                q
            };
            let floor = self.exploration / k as f64;
            self.mixed = Some(q.into_iter().map(|p| (1.0 - self.exploration) * p + floor).collect());
        }
        Ok(self.mixed.as_deref().expect("just filled"))
    }

    pub fn choose_arm(&mut self) -> Result<ArmChoice> {
        if self.pending.is_some() {
            return Err(contract("arm already chosen for this round"));
        }
        if self.completed >= self.horizon {
            return Err(contract("horizon exhausted"));
        }
        let index = match self.selection {
            ArmSelection::Marginal => {
                let u: f64 = self.arms.random();
                let q = self.mixed_distribution()?;
                let mut acc = 0.0;
                let mut pick = q.len() - 1;
                for (i, p) in q.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            }
            ArmSelection::RealizedTree => {
                if self.arms.random::<f64>() < self.exploration {
                    self.arms.random_range(0..self.grid.len())
                } else {
                    argmax_lowest(&self.tree.query(self.completed)?)
                }
            }
        };
        let probability = self.mixed_distribution()?[index];
        let choice = ArmChoice {
            index,
            price: self.grid.price(index),
            probability,
        };
        self.pending = Some(choice);
        Ok(choice)
    }

    /// Closes the round. `payment` must be 0 or the posted price.
    pub fn observe_reward(&mut self, sold: bool, payment: f64) -> Result<RoundOutcome> {
        let choice = self
            .pending
            .ok_or_else(|| contract("reward observed before an arm was chosen"))?;
        let expected = if sold { choice.price } else { 0.0 };
        if payment != expected {
            return Err(contract(format!(
                "payment {payment} inconsistent with price {} (sold = {sold})",
                choice.price
            )));
        }
        let k = self.grid.len();
        let g = importance_weighted(k, choice.index, payment, choice.probability);
        let t = self.completed + 1;
        self.tree.update(t, &g)?;
        if g[choice.index] != 0.0 {
            self.cumulative[choice.index] += g[choice.index];
            self.mixed = None;
        }
        self.last_estimator = g[choice.index];
        self.pending = None;
        self.completed = t;
        Ok(RoundOutcome {
            sold,
            payment,
            payment_units: if sold { self.grid.level(choice.index) as u64 } else { 0 },
        })
    }

    /// Convenience: posts the price to a bidder with the given bid.
    pub fn observe_bid(&mut self, bid: f64) -> Result<RoundOutcome> {
        let choice = self
            .pending
            .ok_or_else(|| contract("bid observed before an arm was chosen"))?;
        let level = self.grid.level_or_snap(bid)?;
        let sold = level >= self.grid.level(choice.index);
        self.observe_reward(sold, if sold { choice.price } else { 0.0 })
    }
}
