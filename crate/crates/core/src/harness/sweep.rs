use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::MarketConfig;
use crate::error::{config, Result};

use super::experiment::{run_experiment, Mechanism};

/// Cartesian grid over the listed axes; an empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: MarketConfig,
    pub mechanism: Mechanism,
    #[serde(default)]
    pub rounds: Vec<usize>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub taus: Vec<usize>,
    #[serde(default)]
    pub gammas: Vec<f64>,
    pub replicas: usize,
    /// Set `epsilon = alpha^3 / (4 tau)` at every point instead of using the epsilon axis.
    #[serde(default)]
    pub epsilon_from_alpha: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rounds: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub tau: usize,
    pub gamma: f64,
    pub replica: usize,
    pub seed: u64,
    pub opt_values: f64,
    pub opt_bids: f64,
    pub alg: f64,
    pub learning_regret: f64,
    pub game_regret: f64,
    pub total_regret: f64,
    pub regret_per_round: f64,
    pub regret_per_copy_round: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rounds: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub tau: usize,
    pub gamma: f64,
    pub replicas: usize,
    pub mean_regret_per_round: f64,
    /// Half-width of the normal 95% interval of the mean.
    pub ci95_regret_per_round: f64,
    pub mean_learning_regret: f64,
    pub mean_game_regret: f64,
    pub mean_regret_per_copy_round: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub table: Vec<SweepCell>,
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

impl SweepSpec {
    /// One configuration per grid point, in row-major axis order.
    pub fn points(&self) -> Vec<MarketConfig> {
        let b = &self.base;
        let mut out = Vec::new();
        for &rounds in &axis(&self.rounds, b.rounds) {
            for &alpha in &axis(&self.alphas, b.alpha) {
                for &epsilon in &axis(&self.epsilons, b.epsilon) {
                    for &tau in &axis(&self.taus, b.tau) {
                        for &gamma in &axis(&self.gammas, b.gamma) {
                            let mut c = b.clone();
                            c.rounds = rounds;
                            c.alpha = alpha;
                            c.tau = tau;
                            c.gamma = gamma;
                            c.epsilon = if self.epsilon_from_alpha {
                                alpha.powi(3) / (4.0 * tau as f64)
                            } else {
                                epsilon
                            };
                            if !out.contains(&c) {
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.replicas == 0 {
        return Err(config("a sweep needs at least one replica"));
    }
    let points = spec.points();
    for p in &points {
        p.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..spec.replicas).map(move |r| (i, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, r)| {
            let mut cfg = points[i].clone();
            cfg.seed = cfg.seed.wrapping_add(r as u64);
            let rep = run_experiment(&cfg, spec.mechanism)?.report;
            Ok(SweepRow {
                rounds: cfg.rounds,
                alpha: cfg.alpha,
                epsilon: cfg.epsilon,
                tau: cfg.tau,
                gamma: cfg.gamma,
                replica: r,
                seed: cfg.seed,
                opt_values: rep.opt_values,
                opt_bids: rep.opt_bids,
                alg: rep.alg,
                learning_regret: rep.learning_regret,
                game_regret: rep.game_regret,
                total_regret: rep.total_regret,
                regret_per_round: rep.regret_per_round,
                regret_per_copy_round: rep.regret_per_copy_round,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = rows
        .chunks(spec.replicas)
        .map(|cell| {
            let n = cell.len() as f64;
            let mean = |f: fn(&SweepRow) -> f64| cell.iter().map(f).sum::<f64>() / n;
            let m = mean(|r| r.regret_per_round);
            let var = if cell.len() > 1 {
                cell.iter().map(|r| (r.regret_per_round - m).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let first = &cell[0];
            SweepCell {
                rounds: first.rounds,
                alpha: first.alpha,
                epsilon: first.epsilon,
                tau: first.tau,
                gamma: first.gamma,
                replicas: cell.len(),
                mean_regret_per_round: m,
                ci95_regret_per_round: 1.96 * (var / n).sqrt(),
                mean_learning_regret: mean(|r| r.learning_regret),
                mean_game_regret: mean(|r| r.game_regret),
                mean_regret_per_copy_round: mean(|r| r.regret_per_copy_round),
            }
        })
        .collect();
    Ok(SweepResult { rows, table })
}

impl SweepResult {
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        self.rows.iter().try_for_each(|r| w.serialize(r))?;
        w.flush()?;
        Ok(())
    }

    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        self.table.iter().try_for_each(|r| w.serialize(r))?;
        w.flush()?;
        Ok(())
    }
}
