//! Market configuration, loaded from JSON.
//!
//! ```json
//! {
//!   "rounds": 1024,              // T
//!   "bidders_per_round": 1,      // n (default 1)
//!   "copies": 1,                 // m (default 1)
//!   "alpha": 0.1,                // grid step, 1/alpha must be an integer
//!   "epsilon": 0.5,              // privacy budget; delta is always epsilon / T
//!   "gamma": 0.9,                // discount factor in [0, 1] (default 0)
//!   "tau": 4,                    // max appearances per bidder
//!   "seed": 7,                   // default 0
//!   "population": null,          // pool size, default ceil(T n / tau)
//!   "values": {"kind": "uniform_grid"},
//!   "strategies": {"default": {"kind": "truthful"}, "overrides": {"3": {"kind": "fixed_deviation", "offset": -0.2}}},
//!   "mechanism": {"backend": "one_fold", "exploration": null, "sigma": null,
//!                 "arm_selection": "marginal",
//!                 "pmatch": {"substeps": 32, "error_slack": null, "epsilon": null, "noise": true}},
//!   "enforce_envelope": false
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::{PriceGrid, PriceOrder};

/// Which tree backs the full-information engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    OneFold,
    TwoFold,
}

/// How the bandit engine turns its state into an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmSelection {
    /// Draw from the mixed marginal argmax distribution (the estimator's weights).
    #[default]
    Marginal,
    /// Exploit the realized argmax of the noisy tree output.
    RealizedTree,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueStreamSpec {
    /// i.i.d. uniform over grid prices, per appearance.
    #[default]
    UniformGrid,
    /// The same value on every appearance.
    Fixed { value: f64 },
    /// A fresh uniform grid level every `block` rounds, shared within the block.
    Blocks { block: usize },
    /// CSV with header `round,bidder,value`; round is 1-based, bidder is the
    /// slot within the round (0-based).
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    #[default]
    Truthful,
    /// Bid `value + offset`, clamped to `[0, 1]` and snapped to the grid.
    FixedDeviation { offset: f64 },
    MyopicBestResponse,
    /// Policy table produced by the best-response oracle (JSON file).
    TabularBestResponse { policy: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategyAssignment {
    #[serde(default)]
    pub default: StrategySpec,
    /// Per-bidder overrides keyed by population id.
    #[serde(default)]
    pub overrides: BTreeMap<usize, StrategySpec>,
}

impl StrategyAssignment {
    pub fn for_bidder(&self, id: usize) -> &StrategySpec {
        self.overrides.get(&id).unwrap_or(&self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmatchOptions {
    /// Clock points per grid step.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Error parameter `E`; calibrated from the clock noise when absent.
    #[serde(default)]
    pub error_slack: Option<usize>,
    /// Budget for the clock; the market epsilon when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Disable to run the clock on exact counts (testing).
    #[serde(default = "default_true")]
    pub noise: bool,
}

fn default_substeps() -> usize {
    32
}

fn default_true() -> bool {
    true
}

impl Default for PmatchOptions {
    fn default() -> Self {
        Self {
            substeps: default_substeps(),
            error_slack: None,
            epsilon: None,
            noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MechanismOptions {
    #[serde(default)]
    pub backend: Backend,
    /// Per-round uniform exploration probability; `alpha` when absent.
    #[serde(default)]
    pub exploration: Option<f64>,
    /// Tree noise scale; the closed-form calibration when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub arm_selection: ArmSelection,
    #[serde(default)]
    pub pmatch: PmatchOptions,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub rounds: usize,
    #[serde(default = "one")]
    pub bidders_per_round: usize,
    #[serde(default = "one")]
    pub copies: usize,
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub gamma: f64,
    pub tau: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub population: Option<usize>,
    #[serde(default)]
    pub values: ValueStreamSpec,
    #[serde(default)]
    pub strategies: StrategyAssignment,
    #[serde(default)]
    pub mechanism: MechanismOptions,
    /// Refuse strategies whose bids can leave `[v - 2 alpha, v + 2 alpha]`.
    #[serde(default)]
    pub enforce_envelope: bool,
}

impl MarketConfig {
    /// Minimal single-bidder configuration with truthful bidders.
    pub fn single(rounds: usize, alpha: f64, epsilon: f64, tau: usize, seed: u64) -> Self {
        Self {
            rounds,
            bidders_per_round: 1,
            copies: 1,
            alpha,
            epsilon,
            gamma: 0.0,
            tau,
            seed,
            population: None,
            values: ValueStreamSpec::UniformGrid,
            strategies: StrategyAssignment::default(),
            mechanism: MechanismOptions::default(),
            enforce_envelope: false,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `delta = epsilon / T`.
    pub fn delta(&self) -> f64 {
        self.epsilon / self.rounds as f64
    }

    pub fn grid(&self, order: PriceOrder) -> Result<PriceGrid> {
        PriceGrid::new(self.alpha, order)
    }

    pub fn exploration(&self) -> f64 {
        self.mechanism.exploration.unwrap_or(self.alpha)
    }

    /// Pool size: explicit, or the smallest pool that respects `tau`.
    pub fn population_size(&self) -> usize {
        self.population.unwrap_or_else(|| {
            let need = (self.rounds * self.bidders_per_round).div_ceil(self.tau.max(1));
            need.max(self.bidders_per_round)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds < 2 {
            return Err(config(format!("rounds must be >= 2, got {}", self.rounds)));
        }
        if self.tau == 0 || self.tau > self.rounds {
            return Err(config(format!("tau must lie in [1, T], got {}", self.tau)));
        }
        if self.copies == 0 || self.copies > self.bidders_per_round {
            return Err(config(format!(
                "copies must lie in [1, n = {}], got {}",
                self.bidders_per_round, self.copies
            )));
        }
        PriceGrid::new(self.alpha, PriceOrder::Ascending).map_err(|e| config(e.to_string()))?;
        if !(self.epsilon > 0.0) {
            return Err(config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if let Some(p) = self.mechanism.exploration {
            if !(0.0..=1.0).contains(&p) {
                return Err(config(format!("exploration must lie in [0, 1], got {p}")));
            }
        }
        if let Some(s) = self.mechanism.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(config(format!("sigma override must be finite and >= 0, got {s}")));
            }
        }
        if self.mechanism.pmatch.substeps == 0 {
            return Err(config("pmatch substeps must be positive"));
        }
        let pop = self.population_size();
        if pop < self.bidders_per_round || pop * self.tau < self.rounds * self.bidders_per_round {
            return Err(config(format!(
                "population {pop} cannot fill {} slots with at most {} appearances each",
                self.rounds * self.bidders_per_round,
                self.tau
            )));
        }
        if let ValueStreamSpec::Fixed { value } = self.values {
            if !(0.0..=1.0).contains(&value) {
                return Err(config(format!("fixed value {value} outside [0, 1]")));
            }
        }
        if let ValueStreamSpec::Blocks { block } = self.values {
            if block == 0 {
                return Err(config("value block length must be positive"));
            }
        }
        Ok(())
    }
}
