//! Bidder populations, value streams, strategies and utility bookkeeping.

pub mod population;
pub mod strategy;
pub mod utility;

pub use population::{draw_values, load_values_csv, schedule_population, Schedule};
pub use strategy::{check_own_history, next_bid, BestResponsePolicy, OwnRecord, PolicyEntry, Strategy};
pub use utility::{discounted_sum, expected_posted_utility, UtilityEntry, UtilityLedger};
