use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MarketConfig, ValueStreamSpec};
use crate::error::{config, Result};
use crate::grid::PriceGrid;
use crate::rng::StreamRng;

/// Which bidders show up in which round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub population: usize,
    /// `rounds[t - 1]` lists the bidder ids of round `t`, one per slot.
    pub rounds: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct ScheduleRow {
    round: usize,
    slot: usize,
    bidder: usize,
}

impl Schedule {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn appearances(&self) -> Vec<usize> {
        let mut counts = vec![0; self.population];
        for round in &self.rounds {
            for &b in round {
                counts[b] += 1;
            }
        }
        counts
    }

    /// Rounds (1-based) in which `bidder` appears.
    pub fn rounds_of(&self, bidder: usize) -> Vec<usize> {
        (0..self.rounds.len())
            .filter(|&t| self.rounds[t].contains(&bidder))
            .map(|t| t + 1)
            .collect()
    }

    /// Per-bidder cap and distinct bidders within each round.
    pub fn satisfies(&self, tau: usize) -> bool {
        let distinct = self.rounds.iter().all(|r| {
            let mut s = r.clone();
            s.sort_unstable();
            s.dedup();
            s.len() == r.len() && r.iter().all(|&b| b < self.population)
        });
        distinct && self.appearances().iter().all(|&c| c <= tau)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (t, round) in self.rounds.iter().enumerate() {
            for (slot, &bidder) in round.iter().enumerate() {
                w.serialize(ScheduleRow {
                    round: t + 1,
                    slot,
                    bidder,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, population: usize) -> Result<Self> {
        let mut rounds: Vec<Vec<usize>> = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: ScheduleRow = row?;
            if row.round == 0 {
                return Err(config("schedule rounds are 1-based"));
            }
            if rounds.len() < row.round {
                rounds.resize(row.round, Vec::new());
            }
            let r = &mut rounds[row.round - 1];
            if r.len() <= row.slot {
                r.resize(row.slot + 1, usize::MAX);
            }
            r[row.slot] = row.bidder;
        }
        Ok(Self { population, rounds })
    }
}

/// Random schedule with `per_round` distinct bidders per round and at most
/// `tau` appearances per bidder.
pub fn schedule_population(
    rounds: usize,
    per_round: usize,
    tau: usize,
    population: usize,
    rng: &mut StreamRng,
) -> Result<Schedule> {
    if per_round == 0 || population < per_round || population * tau < rounds * per_round {
        return Err(config(format!(
            "cannot seat {per_round} bidders in each of {rounds} rounds from a pool of {population} with cap {tau}"
        )));
    }
    let mut perm: Vec<usize> = (0..population).collect();
    perm.shuffle(rng);
    let mut table: Vec<Vec<usize>> = (0..rounds)
        .map(|t| (0..per_round).map(|k| perm[(t * per_round + k) % population]).collect())
        .collect();
    table.shuffle(rng);
    Ok(Schedule {
        population,
        rounds: table,
    })
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct ValueRow {
    round: usize,
    bidder: usize,
    value: f64,
}

/// Grid value levels `[t - 1][slot]` for every seat in the schedule.
pub fn draw_values(cfg: &MarketConfig, grid: &PriceGrid, rng: &mut StreamRng) -> Result<Vec<Vec<usize>>> {
    let (t_max, n) = (cfg.rounds, cfg.bidders_per_round);
    let k = grid.len();
    Ok(match &cfg.values {
        ValueStreamSpec::UniformGrid => (0..t_max)
            .map(|_| (0..n).map(|_| rng.random_range(0..k)).collect())
            .collect(),
        ValueStreamSpec::Fixed { value } => vec![vec![grid.level_or_snap(*value)?; n]; t_max],
        ValueStreamSpec::Blocks { block } => {
            let mut out = Vec::with_capacity(t_max);
            let mut current = 0;
            for t in 0..t_max {
                if t % block == 0 {
                    current = rng.random_range(0..k);
                }
                out.push(vec![current; n]);
            }
            out
        }
        ValueStreamSpec::Csv { path } => load_values_csv(path, t_max, n, grid)?,
    })
}

/// Reads `round,bidder,value` rows; every seat must be covered.
pub fn load_values_csv(path: impl AsRef<Path>, rounds: usize, per_round: usize, grid: &PriceGrid) -> Result<Vec<Vec<usize>>> {
    let mut out = vec![vec![None; per_round]; rounds];
    let mut reader = csv::Reader::from_path(path)?;
    for row in reader.deserialize() {
        let row: ValueRow = row?;
        if row.round == 0 || row.round > rounds || row.bidder >= per_round {
            return Err(config(format!(
                "value row (round {}, bidder {}) outside the {rounds} x {per_round} market",
                row.round, row.bidder
            )));
        }
        out[row.round - 1][row.bidder] = Some(grid.level_or_snap(row.value)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(t, r)| {
            r.into_iter()
                .enumerate()
                .map(|(s, v)| v.ok_or_else(|| config(format!("no value for round {}, bidder {s}", t + 1))))
                .collect()
        })
        .collect()
}
