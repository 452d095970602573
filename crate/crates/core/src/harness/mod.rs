pub mod best_response;
pub mod experiment;
pub mod regret;
pub mod stability;
pub mod sweep;
pub mod tail;

pub use best_response::{best_response_oracle, enumerate_policies_value, BestResponseConfig, BestResponseReport, DeviationState};
pub use experiment::{run_experiment, Experiment, Mechanism, RoundLog, Summary};
pub use regret::{opt_fixed_level, opt_fixed_price, opt_fixed_price_sorted, opt_reserve_levels, RegretReport};
pub use stability::{stability_experiment, EventResult, StabilityConfig, StabilityReport, MIN_SEEDS};
pub use sweep::{sweep, SweepCell, SweepResult, SweepRow, SweepSpec};
