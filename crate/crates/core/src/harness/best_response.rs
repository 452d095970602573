//! Backward-induction best response of one strategic bidder against the
//! committed full-information pricing engine, at tiny scale.
//!
//! The bidder appears in the rounds listed in `slots`; every other round is
//! taken by a truthful bidder with a known value. Own values are i.i.d.
//! uniform over the grid. The posted price of round `t` is drawn from
//! `alpha / K + (1 - alpha) q(G_{t-1})`, where `q` is the argmax law of the
//! exact cumulative gain plus the marginal tree noise. Per-round noises are
//! independent for `T <= 3`, which makes the computation exact there; at
//! `T = 4` shared tree nodes correlate rounds 3 and 4 and the per-round
//! marginal is an approximation.

use serde::{Deserialize, Serialize};

use crate::bidders::{expected_posted_utility, BestResponsePolicy, PolicyEntry};
use crate::error::{config, Error, Result};
use crate::grid::{single_gain_levels, PriceGrid, PriceOrder};
use crate::pricing::{argmax_lowest, arm_probabilities};
use crate::tree::{level_count, onefold_sigma};

pub const MAX_ROUNDS: usize = 4;
pub const MAX_PRICES: usize = 4;

/// Bids whose continuation value is within this of the best count as optimal.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseConfig {
    pub rounds: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub tau: usize,
    /// 1-based rounds of the studied bidder.
    pub slots: Vec<usize>,
    /// Values of the truthful bidders in the remaining rounds, in round order.
    #[serde(default)]
    pub others: Vec<f64>,
    #[serde(default)]
    pub exploration: Option<f64>,
    /// Tree noise scale; calibrated from epsilon when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationState {
    pub history: Vec<(usize, usize)>,
    pub value: f64,
    pub bid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub sigma: f64,
    /// Expected discounted utility of the optimal policy.
    pub value: f64,
    /// Largest `|b - v|` over states reached under the optimal policy.
    pub max_deviation: f64,
    pub worst_state: Option<DeviationState>,
    /// False when the per-round marginal price law is an approximation.
    pub exact: bool,
    pub policy: BestResponsePolicy,
}

struct Game {
    grid: PriceGrid,
    gamma: f64,
    exploration: f64,
    noise_sd: f64,
    slots: Vec<usize>,
    /// Bid level per round for the other bidders (`None` in own slots).
    fixed: Vec<Option<usize>>,
}

impl Game {
    fn new(cfg: &BestResponseConfig) -> Result<Self> {
        let grid = PriceGrid::new(cfg.alpha, PriceOrder::Ascending)?;
        if cfg.rounds > MAX_ROUNDS || grid.len() > MAX_PRICES {
            return Err(Error::Scale(format!(
                "best response is limited to T <= {MAX_ROUNDS}, K <= {MAX_PRICES} (got T = {}, K = {})",
                cfg.rounds,
                grid.len()
            )));
        }
        let mut slots = cfg.slots.clone();
        slots.sort_unstable();
        slots.dedup();
        if slots.is_empty() || slots.len() != cfg.slots.len() || slots.len() > cfg.tau {
            return Err(config("slots must be distinct, non-empty and at most tau"));
        }
        if slots.iter().any(|&s| s == 0 || s > cfg.rounds) {
            return Err(config("slots must lie in 1..=T"));
        }
        if cfg.others.len() + slots.len() != cfg.rounds {
            return Err(config(format!(
                "{} other values given for {} free rounds",
                cfg.others.len(),
                cfg.rounds - slots.len()
            )));
        }
        if !(0.0..=1.0).contains(&cfg.gamma) {
            return Err(config("gamma must lie in [0, 1]"));
        }
        let mut others = cfg.others.iter();
        let fixed = (1..=cfg.rounds)
            .map(|t| {
                if slots.contains(&t) {
                    Ok(None)
                } else {
                    Ok(Some(grid.level_or_snap(*others.next().expect("counted above"))?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let sigma = match cfg.sigma {
            Some(s) => s,
            None => onefold_sigma(grid.len(), cfg.epsilon, cfg.epsilon / cfg.rounds as f64, cfg.rounds)?,
        };
        Ok(Self {
            noise_sd: sigma * (level_count(cfg.rounds) as f64).sqrt(),
            exploration: cfg.exploration.unwrap_or(cfg.alpha),
            gamma: cfg.gamma,
            slots,
            fixed,
            grid,
        })
    }

    fn k(&self) -> usize {
        self.grid.len()
    }

    /// Price law of round `t` given own past bids (one per earlier slot).
    fn price_law(&self, t: usize, own_bids: &[usize]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.k()];
        let mut own = own_bids.iter();
        for r in 1..t {
            let level = match self.fixed[r - 1] {
                Some(l) => l,
                None => *own.next().expect("one own bid per earlier slot"),
            };
            for (a, b) in g.iter_mut().zip(single_gain_levels(level, &self.grid).iter()) {
                *a += b;
            }
        }
        let q = if self.noise_sd > 0.0 {
            arm_probabilities(&g, self.noise_sd)?
        } else {
            let mut q = vec![0.0; self.k()];
            q[argmax_lowest(&g)] = 1.0;
            q
        };
        let floor = self.exploration / self.k() as f64;
        Ok(q.into_iter().map(|p| (1.0 - self.exploration) * p + floor).collect())
    }

    fn utility(&self, value: usize, bid: usize, law: &[f64]) -> f64 {
        let prices = self.grid.prices();
        expected_posted_utility(&self.grid.level_price(value), &self.grid.level_price(bid), &prices, law)
    }

    /// Optimal continuation from appearance `a` with own history `history`
    /// (before the value of appearance `a` is drawn). Fills `table`.
    fn solve(&self, a: usize, history: &mut Vec<(usize, usize)>, table: &mut Vec<PolicyEntry>) -> Result<f64> {
        if a == self.slots.len() {
            return Ok(0.0);
        }
        let own: Vec<usize> = history.iter().map(|&(_, b)| b).collect();
        let law = self.price_law(self.slots[a], &own)?;
        let k = self.k();
        // Continuation depends on the bid only.
        let mut cont = vec![0.0; k];
        for (b, c) in cont.iter_mut().enumerate() {
            history.push((usize::MAX, b));
            *c = self.solve_values(a + 1, history, table)?;
            history.pop();
        }
        let mut expected = 0.0;
        for v in 0..k {
            let scores: Vec<f64> = (0..k).map(|b| self.utility(v, b, &law) + self.gamma * cont[b]).collect();
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let bid = (0..k)
                .filter(|&b| scores[b] >= best - TIE_TOLERANCE)
                .min_by_key(|&b| (b.abs_diff(v), b))
                .expect("non-empty grid");
            table.push(PolicyEntry {
                history: history.clone(),
                value: v,
                bid,
            });
            expected += scores[bid] / k as f64;
        }
        Ok(expected)
    }

    /// Expands the placeholder value of the last history entry over all
    /// values (past values do not move the seller, so the continuation is
    /// the same; the table still needs an entry per history).
    fn solve_values(&self, a: usize, history: &mut Vec<(usize, usize)>, table: &mut Vec<PolicyEntry>) -> Result<f64> {
        let last = history.len() - 1;
        let bid = history[last].1;
        let mut value = 0.0;
        for v in 0..self.k() {
            history[last] = (v, bid);
            value = self.solve(a, history, table)?;
        }
        history[last] = (usize::MAX, bid);
        Ok(value)
    }
}

/// Exact discounted-optimal bids at every own-history state.
pub fn best_response_oracle(cfg: &BestResponseConfig) -> Result<BestResponseReport> {
    let game = Game::new(cfg)?;
    let mut table = Vec::new();
    let value = game.solve(0, &mut Vec::new(), &mut table)?;
    let policy = BestResponsePolicy::new(game.grid.steps(), table);

    // Walk the states reachable under the policy.
    let alpha = game.grid.alpha();
    let mut max_deviation = 0.0;
    let mut worst_state = None;
    let mut frontier: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for _ in 0..game.slots.len() {
        let mut next = Vec::new();
        for h in &frontier {
            for v in 0..game.k() {
                let bid = policy.lookup(h, v).expect("policy covers every history");
                let dev = bid.abs_diff(v) as f64 * alpha;
                if dev > max_deviation {
                    max_deviation = dev;
                    worst_state = Some(DeviationState {
                        history: h.clone(),
                        value: game.grid.level_price(v),
                        bid: game.grid.level_price(bid),
                    });
                }
                let mut h2 = h.clone();
                h2.push((v, bid));
                next.push(h2);
            }
        }
        frontier = next;
    }
    Ok(BestResponseReport {
        sigma: game.noise_sd / (level_count(cfg.rounds) as f64).sqrt(),
        value,
        max_deviation,
        worst_state,
        exact: cfg.rounds <= 3,
        policy,
    })
}

/// Best expected discounted utility over every deterministic policy, by
/// explicit enumeration (at most two appearances).
pub fn enumerate_policies_value(cfg: &BestResponseConfig) -> Result<f64> {
    let game = Game::new(cfg)?;
    let k = game.k();
    let a = game.slots.len();
    if a > 2 {
        return Err(Error::Scale("policy enumeration supports at most two appearances".into()));
    }
    let first = game.price_law(game.slots[0], &[])?;
    let later: Vec<Vec<f64>> = if a == 2 {
        (0..k)
            .map(|b1| game.price_law(game.slots[1], &[b1]))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut total = 0.0;
    for v1 in 0..k {
        let mut best = f64::NEG_INFINITY;
        for b1 in 0..k {
            let u1 = game.utility(v1, b1, &first);
            if a == 1 {
                best = best.max(u1);
                continue;
            }
            // Every second-stage map v2 -> b2, encoded in base K.
            let maps = k.pow(k as u32);
            for code in 0..maps {
                let mut c = code;
                let mut u2 = 0.0;
                for v2 in 0..k {
                    let b2 = c % k;
                    c /= k;
                    u2 += game.utility(v2, b2, &later[b1]) / k as f64;
                }
                best = best.max(u1 + game.gamma * u2);
            }
        }
        total += best / k as f64;
    }
    Ok(total)
}
