//! Two-branch replays that differ only in one bid, compared on threshold
//! events of later posted prices.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Backend;
use crate::error::{config, Result};
use crate::grid::{PriceGrid, PriceOrder};
use crate::pricing::{EngineParams, PricingEngine};
use crate::rng::{stream, SeedTree};

/// Fewer replays than this make the report inconclusive.
pub const MIN_SEEDS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub rounds: usize,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub exploration: Option<f64>,
    /// Round whose bid differs between the branches.
    pub t0: usize,
    pub bid_a: f64,
    pub bid_b: f64,
    /// Events look at the price of round `t0 + lag`.
    pub lags: Vec<usize>,
    /// Events are `price >= threshold`.
    pub thresholds: Vec<f64>,
    pub seeds: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventResult {
    pub lag: usize,
    pub threshold: f64,
    pub freq_a: f64,
    pub freq_b: f64,
    /// Largest of `f_x - e^eps f_y - delta T - 3 se` over both directions.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub seeds: usize,
    pub multiplier: f64,
    pub additive: f64,
    pub conclusive: bool,
    pub events: Vec<EventResult>,
    pub max_excess: f64,
    /// Conclusive and no event exceeds its band.
    pub within_bound: bool,
}

impl StabilityConfig {
    fn validate(&self) -> Result<()> {
        let last = self.t0 + self.lags.iter().copied().max().unwrap_or(0);
        if self.t0 == 0 || last > self.rounds || self.lags.contains(&0) {
            return Err(config("need 1 <= t0 and 1 <= lag with t0 + lag <= T"));
        }
        if self.lags.is_empty() || self.thresholds.is_empty() {
            return Err(config("need at least one lag and one threshold"));
        }
        Ok(())
    }
}

/// Bids of the other rounds: one truthful uniform-grid stream shared by all replays.
fn background_bids(cfg: &StabilityConfig, grid: &PriceGrid) -> Vec<usize> {
    let mut rng = SeedTree::new(cfg.seed).rng(stream::VALUES);
    (0..cfg.rounds).map(|_| rng.random_range(0..grid.len())).collect()
}

fn replay(cfg: &StabilityConfig, params: &EngineParams, bids: &[usize], probe: usize, seeds: &SeedTree) -> Result<Vec<f64>> {
    let mut engine = PricingEngine::new(params, seeds)?;
    let last = cfg.t0 + cfg.lags.iter().copied().max().expect("validated");
    let mut prices = Vec::with_capacity(last);
    for t in 1..=last {
        prices.push(engine.choose_price()?.price);
        let bid = if t == cfg.t0 { probe } else { bids[t - 1] };
        engine.observe_bid_level(bid)?;
    }
    Ok(prices)
}

pub fn stability_experiment(cfg: &StabilityConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    let grid = PriceGrid::new(cfg.alpha, PriceOrder::Ascending)?;
    let mut params = EngineParams::new(cfg.alpha, cfg.rounds, cfg.epsilon, cfg.backend);
    params.sigma = cfg.sigma;
    if let Some(p) = cfg.exploration {
        params.exploration = p;
    }
    let bids = background_bids(cfg, &grid);
    let probe_a = grid.level_or_snap(cfg.bid_a)?;
    let probe_b = grid.level_or_snap(cfg.bid_b)?;
    let events: Vec<(usize, f64)> = cfg
        .lags
        .iter()
        .flat_map(|&l| cfg.thresholds.iter().map(move |&p| (l, p)))
        .collect();
    let root = SeedTree::new(cfg.seed);

    let counts = (0..cfg.seeds)
        .into_par_iter()
        .map(|s| -> Result<Vec<(u32, u32)>> {
            let seeds = root.child(s as u64);
            let pa = replay(cfg, &params, &bids, probe_a, &seeds)?;
            let pb = replay(cfg, &params, &bids, probe_b, &seeds)?;
            Ok(events
                .iter()
                .map(|&(lag, p)| {
                    let i = cfg.t0 + lag - 1;
                    ((pa[i] >= p) as u32, (pb[i] >= p) as u32)
                })
                .collect())
        })
        .try_reduce(
            || vec![(0, 0); events.len()],
            |mut acc, x| {
                for (a, b) in acc.iter_mut().zip(x) {
                    a.0 += b.0;
                    a.1 += b.1;
                }
                Ok(acc)
            },
        )?;

    let n = cfg.seeds.max(1) as f64;
    let multiplier = cfg.epsilon.exp();
    let delta = cfg.epsilon / cfg.rounds as f64;
    let additive = delta * cfg.rounds as f64;
    let band = |fx: f64, fy: f64| {
        let se = (fx * (1.0 - fx) / n + multiplier * multiplier * fy * (1.0 - fy) / n).sqrt();
        fx - multiplier * fy - additive - 3.0 * se
    };
    let results: Vec<EventResult> = events
        .iter()
        .zip(&counts)
        .map(|(&(lag, threshold), &(a, b))| {
            let (fa, fb) = (a as f64 / n, b as f64 / n);
            EventResult {
                lag,
                threshold,
                freq_a: fa,
                freq_b: fb,
                excess: band(fa, fb).max(band(fb, fa)),
            }
        })
        .collect();
    let max_excess = results.iter().map(|e| e.excess).fold(f64::NEG_INFINITY, f64::max);
    let conclusive = cfg.seeds >= MIN_SEEDS;
    Ok(StabilityReport {
        seeds: cfg.seeds,
        multiplier,
        additive,
        conclusive,
        within_bound: conclusive && max_excess <= 0.0,
        events: results,
        max_excess,
    })
}
