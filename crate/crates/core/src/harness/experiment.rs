use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auction::{BidderOutcome, MultiEngine, MultiParams, MultiRoundRecord};
use crate::bidders::{
    draw_values, next_bid, schedule_population, BestResponsePolicy, OwnRecord, Schedule, Strategy, UtilityLedger,
};
use crate::config::{MarketConfig, StrategySpec};
use crate::error::{config, Result};
use crate::grid::{PriceGrid, PriceOrder};
use crate::pricing::{BanditEngine, BanditParams, BanditRoundRecord, EngineParams, PricingEngine, SingleRoundRecord};
use crate::rng::{stream, SeedTree};

use super::regret::{opt_fixed_level, opt_reserve_levels, RegretReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Single,
    Bandit,
    Multi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundLog {
    Single(Vec<SingleRoundRecord>),
    Bandit(Vec<BanditRoundRecord>),
    Multi(Vec<MultiRoundRecord>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mechanism: Mechanism,
    pub seed: u64,
    pub rounds: usize,
    pub sigma: f64,
    pub explored_rounds: usize,
    pub mean_discounted_utility: f64,
    pub report: RegretReport,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub mechanism: Mechanism,
    pub config: MarketConfig,
    pub sigma: f64,
    pub report: RegretReport,
    pub log: RoundLog,
    pub schedule: Schedule,
    /// Each bidder's own records, indexed by population id.
    pub histories: Vec<Vec<OwnRecord>>,
    pub ledgers: Vec<UtilityLedger>,
    pub explored_rounds: usize,
}

#[derive(Serialize)]
struct PrivateRow {
    round: usize,
    value: f64,
    bid: f64,
    offered: bool,
    offer_price: f64,
    won: bool,
    payment: f64,
}

impl Experiment {
    pub fn summary(&self) -> Summary {
        let n = self.ledgers.len().max(1) as f64;
        Summary {
            mechanism: self.mechanism,
            seed: self.config.seed,
            rounds: self.config.rounds,
            sigma: self.sigma,
            explored_rounds: self.explored_rounds,
            mean_discounted_utility: self.ledgers.iter().map(|l| l.discounted_utility(1)).sum::<f64>() / n,
            report: self.report.clone(),
        }
    }

    pub fn write_rounds_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match &self.log {
            RoundLog::Single(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
            RoundLog::Bandit(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
            RoundLog::Multi(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `summary.json`, `rounds.csv`, `schedule.csv` and, for the
    /// multi-bidder market, one private outcome log per bidder under `bidders/`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary())?)?;
        self.write_rounds_csv(fs::File::create(dir.join("rounds.csv"))?)?;
        self.schedule.write_csv(fs::File::create(dir.join("schedule.csv"))?)?;
        if self.mechanism == Mechanism::Multi {
            let sub = dir.join("bidders");
            fs::create_dir_all(&sub)?;
            for (id, history) in self.histories.iter().enumerate() {
                if history.is_empty() {
                    continue;
                }
                let mut w = csv::Writer::from_path(sub.join(format!("bidder_{id}.csv")))?;
                for r in history {
                    w.serialize(PrivateRow {
                        round: r.round,
                        value: r.value,
                        bid: r.bid,
                        offered: r.outcome.offered,
                        offer_price: r.outcome.offer_price,
                        won: r.outcome.won,
                        payment: r.outcome.payment,
                    })?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn build_strategies(cfg: &MarketConfig, population: usize) -> Result<Vec<Strategy>> {
    let mut policies: HashMap<&Path, Arc<BestResponsePolicy>> = HashMap::new();
    let mut out = Vec::with_capacity(population);
    for id in 0..population {
        let spec = cfg.strategies.for_bidder(id);
        let s = match spec {
            StrategySpec::TabularBestResponse { policy } => {
                if !policies.contains_key(policy.as_path()) {
                    policies.insert(policy.as_path(), Arc::new(BestResponsePolicy::from_json_file(policy)?));
                }
                Strategy::TabularBestResponse(policies[policy.as_path()].clone())
            }
            other => Strategy::from_spec(other)?,
        };
        if cfg.enforce_envelope && !s.within_envelope(cfg.alpha) {
            return Err(config(format!("bidder {id} strategy {spec:?} leaves the 2-alpha envelope")));
        }
        out.push(s);
    }
    Ok(out)
}

struct Market {
    grid: PriceGrid,
    schedule: Schedule,
    values: Vec<Vec<usize>>,
    strategies: Vec<Strategy>,
    histories: Vec<Vec<OwnRecord>>,
    ledgers: Vec<UtilityLedger>,
    bids: Vec<Vec<usize>>,
}

impl Market {
    fn new(cfg: &MarketConfig, seeds: &SeedTree) -> Result<Self> {
        let grid = PriceGrid::new(cfg.alpha, PriceOrder::Ascending)?;
        let population = cfg.population_size();
        let schedule = schedule_population(
            cfg.rounds,
            cfg.bidders_per_round,
            cfg.tau,
            population,
            &mut seeds.rng(stream::SCHEDULE),
        )?;
        let values = draw_values(cfg, &grid, &mut seeds.rng(stream::VALUES))?;
        Ok(Self {
            strategies: build_strategies(cfg, population)?,
            histories: vec![Vec::new(); population],
            ledgers: (0..population).map(|id| UtilityLedger::new(id, cfg.gamma)).collect(),
            bids: Vec::with_capacity(cfg.rounds),
            grid,
            schedule,
            values,
        })
    }

    /// Sealed bids of round `t` (1-based), as grid levels.
    fn collect_bids(&mut self, t: usize) -> Result<Vec<usize>> {
        let seats = &self.schedule.rounds[t - 1];
        let levels = seats
            .iter()
            .zip(&self.values[t - 1])
            .map(|(&id, &v)| {
                let bid = next_bid(
                    id,
                    &self.strategies[id],
                    self.grid.level_price(v),
                    &self.histories[id],
                    &self.grid,
                )?;
                self.grid.level_or_snap(bid)
            })
            .collect::<Result<Vec<_>>>()?;
        self.bids.push(levels.clone());
        Ok(levels)
    }

    fn settle(&mut self, t: usize, outcomes: &[BidderOutcome]) {
        let seats = self.schedule.rounds[t - 1].clone();
        for (slot, &id) in seats.iter().enumerate() {
            let value = self.grid.level_price(self.values[t - 1][slot]);
            let outcome = outcomes[slot];
            self.ledgers[id].record(t, value, &outcome);
            self.histories[id].push(OwnRecord {
                bidder: id,
                round: t,
                value,
                bid: self.grid.level_price(self.bids[t - 1][slot]),
                outcome,
            });
        }
    }

    fn single_report(&self, cfg: &MarketConfig, alg_units: u64, trajectory: Vec<f64>) -> RegretReport {
        let values: Vec<usize> = self.values.iter().map(|r| r[0]).collect();
        let bids: Vec<usize> = self.bids.iter().map(|r| r[0]).collect();
        RegretReport::from_units(
            &self.grid,
            cfg.rounds,
            1,
            opt_fixed_level(&values),
            opt_fixed_level(&bids),
            alg_units,
            trajectory,
        )
    }
}

/// Runs one market end to end. Deterministic given the configuration (and seed).
pub fn run_experiment(cfg: &MarketConfig, mechanism: Mechanism) -> Result<Experiment> {
    cfg.validate()?;
    if mechanism != Mechanism::Multi && (cfg.bidders_per_round != 1 || cfg.copies != 1) {
        return Err(config("single-bidder mechanisms need bidders_per_round = copies = 1"));
    }
    let seeds = SeedTree::new(cfg.seed);
    let mut market = Market::new(cfg, &seeds)?;
    let engine_seeds = seeds.child(0);
    let mut alg_units = 0u64;
    let mut trajectory = Vec::with_capacity(cfg.rounds);
    let mut explored_rounds = 0;
    let steps = market.grid.steps() as f64;

    let (log, sigma, report) = match mechanism {
        Mechanism::Single => {
            let mut engine = PricingEngine::new(&EngineParams::from_config(cfg), &engine_seeds)?;
            let mut rows = Vec::with_capacity(cfg.rounds);
            for t in 1..=cfg.rounds {
                let decision = engine.choose_price()?;
                let bid = market.collect_bids(t)?[0];
                let out = engine.observe_bid_level(bid)?;
                alg_units += out.payment_units;
                trajectory.push(alg_units as f64 / steps);
                explored_rounds += decision.explored as usize;
                market.settle(
                    t,
                    &[BidderOutcome {
                        offered: true,
                        offer_price: decision.price,
                        won: out.sold,
                        payment: out.payment,
                    }],
                );
                rows.push(SingleRoundRecord {
                    t,
                    explored: decision.explored,
                    price: decision.price,
                    bid: market.grid.level_price(bid),
                    sold: out.sold,
                    payment: out.payment,
                });
            }
            let report = market.single_report(cfg, alg_units, trajectory);
            (RoundLog::Single(rows), engine.sigma(), report)
        }
        Mechanism::Bandit => {
            let mut engine = BanditEngine::new(&BanditParams::from_config(cfg), &engine_seeds)?;
            let mut rows = Vec::with_capacity(cfg.rounds);
            for t in 1..=cfg.rounds {
                let choice = engine.choose_arm()?;
                let bid = market.collect_bids(t)?[0];
                let out = engine.observe_bid(market.grid.level_price(bid))?;
                alg_units += out.payment_units;
                trajectory.push(alg_units as f64 / steps);
                market.settle(
                    t,
                    &[BidderOutcome {
                        offered: true,
                        offer_price: choice.price,
                        won: out.sold,
                        payment: out.payment,
                    }],
                );
                rows.push(BanditRoundRecord {
                    t,
                    arm: choice.index,
                    price: choice.price,
                    q_arm: choice.probability,
                    sold: out.sold,
                    payment: out.payment,
                    estimator: engine.last_estimator(),
                });
            }
            let report = market.single_report(cfg, alg_units, trajectory);
            (RoundLog::Bandit(rows), engine.sigma(), report)
        }
        Mechanism::Multi => {
            let mut engine = MultiEngine::new(&MultiParams::from_config(cfg), &engine_seeds)?;
            let mut rows = Vec::with_capacity(cfg.rounds);
            for t in 1..=cfg.rounds {
                let bids = market.collect_bids(t)?;
                let alloc = engine.run_round(&bids)?;
                alg_units += alloc.revenue_units();
                trajectory.push(alg_units as f64 / steps);
                explored_rounds += alloc.explored as usize;
                market.settle(t, &alloc.outcomes);
                rows.push(alloc.record());
            }
            let report = RegretReport::from_units(
                &market.grid,
                cfg.rounds,
                cfg.copies,
                opt_reserve_levels(&market.values, cfg.copies, &market.grid),
                opt_reserve_levels(&market.bids, cfg.copies, &market.grid),
                alg_units,
                trajectory,
            );
            (RoundLog::Multi(rows), engine.tree().sigma(), report)
        }
    };
    Ok(Experiment {
        mechanism,
        config: cfg.clone(),
        sigma,
        report,
        log,
        schedule: market.schedule,
        histories: market.histories,
        ledgers: market.ledgers,
        explored_rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ValueStreamSpec;

    #[test]
    fn constant_values_noiseless_single() {
        let mut cfg = MarketConfig::single(200, 0.25, 1.0, 200, 3);
        cfg.values = ValueStreamSpec::Fixed { value: 0.75 };
        cfg.mechanism.sigma = Some(0.0);
        cfg.mechanism.exploration = Some(0.0);
        let e = run_experiment(&cfg, Mechanism::Single).unwrap();
        // Round 1 posts 0; afterwards the argmax is the value itself.
        assert_eq!(e.report.alg, 0.75 * 199.0);
        assert_eq!(e.report.learning_regret, 0.75);
        assert_eq!(e.report.game_regret, 0.0);
    }

    #[test]
    fn myopic_bidders_leave_no_game_regret() {
        let mut cfg = MarketConfig::single(64, 0.25, 1.0, 4, 3);
        cfg.strategies.default = StrategySpec::MyopicBestResponse;
        let e = run_experiment(&cfg, Mechanism::Single).unwrap();
        assert_eq!(e.report.game_regret, 0.0);
    }

    #[test]
    fn envelope_enforcement() {
        let mut cfg = MarketConfig::single(16, 0.25, 1.0, 4, 3);
        cfg.enforce_envelope = true;
        cfg.strategies.default = StrategySpec::FixedDeviation { offset: -0.75 };
        assert!(matches!(run_experiment(&cfg, Mechanism::Single), Err(crate::Error::Config(_))));
        cfg.strategies.default = StrategySpec::FixedDeviation { offset: -0.5 };
        assert!(run_experiment(&cfg, Mechanism::Single).is_ok());
    }

    #[test]
    fn histories_are_private() {
        let mut cfg = MarketConfig::single(32, 0.25, 1.0, 4, 1);
        cfg.bidders_per_round = 4;
        cfg.copies = 3;
        cfg.mechanism.pmatch.error_slack = Some(1);
        let e = run_experiment(&cfg, Mechanism::Multi).unwrap();
        for (id, h) in e.histories.iter().enumerate() {
            assert!(h.iter().all(|r| r.bidder == id));
            assert!(h.len() <= cfg.tau);
        }
    }
}
