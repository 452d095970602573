use crate::error::{contract, domain, Result};
use crate::rng::{standard_normal, stream, SeedTree, StreamRng};

use super::index::{covering, gamma, level_count};
use super::{TreeKind, TreeSnapshot};

/// Tree aggregation over `K`-dimensional gain vectors.
///
/// Node `j` starts as i.i.d. `N(0, sigma^2)` noise per coordinate and absorbs
/// the gain of every round in `Λ(j)`. A query at `t` sums the nodes in `Γ(t)`
/// and tops up with fresh noise so that every coordinate of the error has
/// variance `(floor(log2 T) + 1) sigma^2`.
#[derive(Debug, Clone)]
pub struct OneFoldTree {
    horizon: usize,
    dim: usize,
    sigma: f64,
    levels: usize,
    nodes: Vec<f64>,
    absorbed: usize,
    top_up: StreamRng,
}

impl OneFoldTree {
    pub fn new(dim: usize, horizon: usize, sigma: f64, seeds: &SeedTree) -> Result<Self> {
        if dim == 0 || horizon == 0 {
            return Err(domain("tree needs positive dimension and horizon"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(domain(format!("noise scale must be finite and >= 0, got {sigma}")));
        }
        let mut node_rng = seeds.rng(stream::TREE_NODES);
        let nodes = (0..dim * horizon)
            .map(|_| sigma * standard_normal(&mut node_rng))
            .collect();
        Ok(Self {
            horizon,
            dim,
            sigma,
            levels: level_count(horizon),
            nodes,
            absorbed: 0,
            top_up: seeds.rng(stream::TREE_TOP_UP),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Rounds absorbed so far.
    pub fn rounds(&self) -> usize {
        self.absorbed
    }

    /// Per-coordinate variance of `G~_t - G_t`.
    pub fn output_variance(&self) -> f64 {
        self.levels as f64 * self.sigma * self.sigma
    }

    /// Current value of node `j` (1-based).
    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[(j - 1) * self.dim..j * self.dim]
    }

    /// Absorbs the gain of round `t`; rounds must arrive as `1, 2, ..., T`.
    pub fn update(&mut self, t: usize, gain: &[f64]) -> Result<()> {
        if t != self.absorbed + 1 || t > self.horizon {
            return Err(contract(format!(
                "expected update for round {}, got {t}",
                self.absorbed + 1
            )));
        }
        if gain.len() != self.dim {
            return Err(contract(format!(
                "gain has {} entries, tree dimension is {}",
                gain.len(),
                self.dim
            )));
        }
        for j in covering(t, self.horizon) {
            let node = &mut self.nodes[(j - 1) * self.dim..j * self.dim];
            for (a, g) in node.iter_mut().zip(gain) {
                *a += g;
            }
        }
        self.absorbed = t;
        Ok(())
    }

    /// Noisy cumulative gain after round `t`. `t = 0` yields pure noise.
    pub fn query(&mut self, t: usize) -> Result<Vec<f64>> {
        if t > self.absorbed {
            return Err(contract(format!(
                "query at round {t} before it was absorbed ({} so far)",
                self.absorbed
            )));
        }
        let nodes = gamma(t);
        let mut out = vec![0.0; self.dim];
        for &j in &nodes {
            for (o, a) in out.iter_mut().zip(self.node(j)) {
                *o += a;
            }
        }
        let top_up_sd = self.sigma * ((self.levels - nodes.len()) as f64).sqrt();
        for o in out.iter_mut() {
            *o += top_up_sd * standard_normal(&mut self.top_up);
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> TreeSnapshot {
        TreeSnapshot {
            kind: TreeKind::OneFold,
            horizon: self.horizon,
            dim: self.dim,
            sigma: self.sigma,
            rounds: self.absorbed,
            values: self.nodes.clone(),
        }
    }

    /// Rebuilds a tree from a snapshot; top-up noise restarts from `seeds`.
    pub fn restore(snapshot: &TreeSnapshot, seeds: &SeedTree) -> Result<Self> {
        if snapshot.kind != TreeKind::OneFold || snapshot.values.len() != snapshot.horizon * snapshot.dim {
            return Err(contract("snapshot is not a well-formed one-fold tree"));
        }
        Ok(Self {
            horizon: snapshot.horizon,
            dim: snapshot.dim,
            sigma: snapshot.sigma,
            levels: level_count(snapshot.horizon),
            nodes: snapshot.values.clone(),
            absorbed: snapshot.rounds,
            top_up: seeds.rng(stream::TREE_TOP_UP),
        })
    }
}
