use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::auction::BidderOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityEntry {
    pub round: usize,
    pub utility: f64,
}

/// Per-bidder realized utilities in appearance order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UtilityLedger {
    pub bidder: usize,
    pub gamma: f64,
    pub entries: Vec<UtilityEntry>,
}

impl UtilityLedger {
    pub fn new(bidder: usize, gamma: f64) -> Self {
        Self {
            bidder,
            gamma,
            entries: Vec::new(),
        }
    }

    /// Quasi-linear utility `(v - p) 1[won]`.
    pub fn record(&mut self, round: usize, value: f64, outcome: &BidderOutcome) -> f64 {
        let utility = if outcome.won { value - outcome.payment } else { 0.0 };
        self.entries.push(UtilityEntry { round, utility });
        utility
    }

    /// `sum_k gamma^k u_k` over appearances at or after `from_round`, rank 0 first.
    pub fn discounted_utility(&self, from_round: usize) -> f64 {
        discounted_sum(
            self.entries
                .iter()
                .filter(|e| e.round >= from_round)
                .map(|e| e.utility),
            self.gamma,
        )
    }
}

pub fn discounted_sum(utilities: impl IntoIterator<Item = f64>, gamma: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for u in utilities {
        total += weight * u;
        weight *= gamma;
    }
    total
}

/// Expected utility of bidding `bid` with value `value` against a posted price
/// drawn from `probs` over `prices`.
pub fn expected_posted_utility<T>(value: &T, bid: &T, prices: &[T], probs: &[T]) -> T
where
    T: Clone + Num + PartialOrd,
{
    prices
        .iter()
        .zip(probs)
        .filter(|(p, _)| bid >= *p)
        .fold(T::zero(), |acc, (p, q)| acc + q.clone() * (value.clone() - p.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn won(payment: f64) -> BidderOutcome {
        BidderOutcome {
            offered: true,
            offer_price: payment,
            won: true,
            payment,
        }
    }

    #[test]
    fn discounting_examples() {
        let mut l = UtilityLedger::new(0, 0.5);
        for t in [2, 5, 9] {
            l.record(t, 1.0, &won(0.0));
        }
        assert_eq!(l.discounted_utility(1), 1.75);
        assert_eq!(l.discounted_utility(5), 1.5);
        l.gamma = 0.0;
        assert_eq!(l.discounted_utility(2), 1.0);
        l.gamma = 1.0;
        assert_eq!(l.discounted_utility(1), 3.0);
    }

    #[test]
    fn losing_is_worth_nothing() {
        let mut l = UtilityLedger::new(0, 1.0);
        assert_eq!(l.record(1, 0.75, &BidderOutcome::NOT_OFFERED), 0.0);
        assert_eq!(l.record(2, 0.75, &won(0.5)), 0.25);
    }

    #[test]
    fn posted_utility_truthful_dominates() {
        let prices = [0.0, 0.25, 0.5, 0.75, 1.0];
        let probs = [0.1, 0.2, 0.3, 0.2, 0.2];
        for v in prices {
            let truthful = expected_posted_utility(&v, &v, &prices, &probs);
            for b in prices {
                assert!(expected_posted_utility(&v, &b, &prices, &probs) <= truthful + 1e-15);
            }
        }
    }
}
