use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auction::BidderOutcome;
use crate::config::StrategySpec;
use crate::error::{contract, Error, Result};
use crate::grid::PriceGrid;

/// One of this bidder's own past rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OwnRecord {
    pub bidder: usize,
    pub round: usize,
    pub value: f64,
    pub bid: f64,
    pub outcome: BidderOutcome,
}

/// Tabulated bids keyed by the bidder's own `(value, bid)` history (grid
/// levels) and its current value level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponsePolicy {
    pub steps: usize,
    pub entries: Vec<PolicyEntry>,
    #[serde(skip)]
    index: HashMap<(Vec<(usize, usize)>, usize), usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub history: Vec<(usize, usize)>,
    pub value: usize,
    pub bid: usize,
}

impl BestResponsePolicy {
    pub fn new(steps: usize, entries: Vec<PolicyEntry>) -> Self {
        let mut p = Self {
            steps,
            entries,
            index: HashMap::new(),
        };
        p.reindex();
        p
    }

    fn reindex(&mut self) {
        self.index = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| ((e.history.clone(), e.value), k))
            .collect();
    }

    pub fn lookup(&self, history: &[(usize, usize)], value: usize) -> Option<usize> {
        self.index
            .get(&(history.to_vec(), value))
            .map(|&k| self.entries[k].bid)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.reindex();
        Ok(p)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Truthful,
    /// Bid `value + d`, clamped to `[0, 1]` and snapped down to the grid.
    FixedDeviation(f64),
    MyopicBestResponse,
    TabularBestResponse(Arc<BestResponsePolicy>),
}

impl Strategy {
    pub fn from_spec(spec: &StrategySpec) -> Result<Self> {
        Ok(match spec {
            StrategySpec::Truthful => Self::Truthful,
            StrategySpec::FixedDeviation { offset } => Self::FixedDeviation(*offset),
            StrategySpec::MyopicBestResponse => Self::MyopicBestResponse,
            StrategySpec::TabularBestResponse { policy } => {
                Self::TabularBestResponse(Arc::new(BestResponsePolicy::from_json_file(policy)?))
            }
        })
    }

    /// Whether every bid stays within `2 alpha` of the value.
    pub fn within_envelope(&self, alpha: f64) -> bool {
        let limit = 2.0 * alpha + 1e-9;
        match self {
            Self::Truthful | Self::MyopicBestResponse => true,
            Self::FixedDeviation(d) => d.abs() <= limit,
            Self::TabularBestResponse(p) => p
                .entries
                .iter()
                .all(|e| (e.bid as f64 - e.value as f64).abs() / p.steps as f64 <= limit),
        }
    }
}

/// Rejects histories that contain another bidder's rounds.
pub fn check_own_history(bidder: usize, history: &[OwnRecord]) -> Result<()> {
    match history.iter().find(|r| r.bidder != bidder) {
        Some(r) => Err(Error::InformationLeak(format!(
            "bidder {bidder} was handed a record of bidder {} (round {})",
            r.bidder, r.round
        ))),
        None => Ok(()),
    }
}

/// The bid of `bidder` with the given value after seeing only its own history.
pub fn next_bid(
    bidder: usize,
    strategy: &Strategy,
    value: f64,
    history: &[OwnRecord],
    grid: &PriceGrid,
) -> Result<f64> {
    check_own_history(bidder, history)?;
    match strategy {
        Strategy::Truthful | Strategy::MyopicBestResponse => Ok(value),
        Strategy::FixedDeviation(d) => {
            let level = grid.snap_level((value + d).clamp(0.0, 1.0))?;
            Ok(grid.level_price(level))
        }
        Strategy::TabularBestResponse(policy) => {
            if policy.steps != grid.steps() {
                return Err(contract("policy was computed for a different grid"));
            }
            let past = history
                .iter()
                .map(|r| Ok((grid.level_of(r.value)?, grid.level_of(r.bid)?)))
                .collect::<Result<Vec<_>>>()?;
            let v = grid.level_of(value)?;
            let bid = policy
                .lookup(&past, v)
                .ok_or_else(|| contract(format!("policy has no entry for history {past:?}, value {v}")))?;
            Ok(grid.level_price(bid))
        }
    }
}
