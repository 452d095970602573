use crate::error::{contract, domain, Result};
use crate::grid::{PriceGrid, PriceOrder};
use crate::rng::{standard_normal, stream, SeedTree, StreamRng};

use super::index::{covering, gamma, level_count};
use super::{TreeKind, TreeSnapshot};

/// Tree aggregation over both rounds and (descending) price positions.
///
/// Bids arrive as their descending-order position `i_t`; node `(j, i)` counts
/// rounds in `Λ(j)` whose position lies in `Λ(i)`. Coordinate `i` of the
/// output is `p_i` times the noisy count of bids at or above `p_i`.
#[derive(Debug, Clone)]
pub struct TwoFoldTree {
    horizon: usize,
    dim: usize,
    sigma: f64,
    time_levels: usize,
    price_levels: usize,
    prices: Vec<f64>,
    nodes: Vec<f64>,
    absorbed: usize,
    top_up: StreamRng,
}

impl TwoFoldTree {
    pub fn new(grid: &PriceGrid, horizon: usize, sigma: f64, seeds: &SeedTree) -> Result<Self> {
        if horizon == 0 {
            return Err(domain("tree needs a positive horizon"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(domain(format!("noise scale must be finite and >= 0, got {sigma}")));
        }
        let prices = grid.with_order(PriceOrder::Descending).prices();
        let dim = prices.len();
        let mut node_rng = seeds.rng(stream::TREE_NODES);
        let nodes = (0..dim * horizon)
            .map(|_| sigma * standard_normal(&mut node_rng))
            .collect();
        Ok(Self {
            horizon,
            dim,
            sigma,
            time_levels: level_count(horizon),
            price_levels: level_count(dim),
            prices,
            nodes,
            absorbed: 0,
            top_up: seeds.rng(stream::TREE_TOP_UP),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rounds(&self) -> usize {
        self.absorbed
    }

    /// Variance of the noisy count behind every coordinate (before scaling by `p_i`).
    pub fn count_variance(&self) -> f64 {
        (self.time_levels * self.price_levels) as f64 * self.sigma * self.sigma
    }

    /// Node `(j, i)`, both 1-based.
    pub fn node(&self, j: usize, i: usize) -> f64 {
        self.nodes[(j - 1) * self.dim + (i - 1)]
    }

    /// Absorbs round `t` whose bid sits at 0-based descending position `position`.
    /// Returns the number of nodes incremented.
    pub fn update(&mut self, t: usize, position: usize) -> Result<usize> {
        if t != self.absorbed + 1 || t > self.horizon {
            return Err(contract(format!(
                "expected update for round {}, got {t}",
                self.absorbed + 1
            )));
        }
        if position >= self.dim {
            return Err(contract(format!(
                "bid position {position} outside [0, {})",
                self.dim
            )));
        }
        let price_nodes: Vec<usize> = covering(position + 1, self.dim).collect();
        let mut touched = 0;
        for j in covering(t, self.horizon) {
            for &i in &price_nodes {
                self.nodes[(j - 1) * self.dim + (i - 1)] += 1.0;
                touched += 1;
            }
        }
        self.absorbed = t;
        Ok(touched)
    }

    /// Noisy cumulative gain after round `t`, descending price order.
    pub fn query(&mut self, t: usize) -> Result<Vec<f64>> {
        if t > self.absorbed {
            return Err(contract(format!(
                "query at round {t} before it was absorbed ({} so far)",
                self.absorbed
            )));
        }
        let time_nodes = gamma(t);
        let full = (self.time_levels * self.price_levels) as f64;
        let mut out = Vec::with_capacity(self.dim);
        for i in 1..=self.dim {
            let price_nodes = gamma(i);
            let mut count = 0.0;
            for &j in &time_nodes {
                for &k in &price_nodes {
                    count += self.node(j, k);
                }
            }
            let used = (time_nodes.len() * price_nodes.len()) as f64;
            count += self.sigma * (full - used).sqrt() * standard_normal(&mut self.top_up);
            out.push(self.prices[i - 1] * count);
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> TreeSnapshot {
        TreeSnapshot {
            kind: TreeKind::TwoFold,
            horizon: self.horizon,
            dim: self.dim,
            sigma: self.sigma,
            rounds: self.absorbed,
            values: self.nodes.clone(),
        }
    }
}
