//! Multi-bidder mechanism: uniform exploration, FTPL reserve, clock-based
//! candidate selection and posted-price offers.

pub mod pmatch;
pub mod round;

pub use pmatch::{
    pmatch_reference, pmatch_underbid_monotonicity_check, pmatch_with_draws, CandidateResult, ClaimCheck,
    ClockDraws, ClockParams, SLACK_CONSTANT,
};
pub use round::{
    exploit_offer_level, post_offers, BidderOutcome, MultiEngine, MultiParams, MultiRoundRecord, RoundAllocation,
};
