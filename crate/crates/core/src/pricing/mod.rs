//! Single-bidder pricing engines.

pub mod argmax;
pub mod bandit;
pub mod single;

pub use argmax::{argmax_lowest, argmax_probabilities, arm_probabilities};
pub use bandit::{importance_weighted, ArmChoice, BanditEngine, BanditParams, BanditRoundRecord};
pub use single::{EngineParams, PriceDecision, PricingEngine, RoundOutcome, SingleRoundRecord, TreeBackend};
