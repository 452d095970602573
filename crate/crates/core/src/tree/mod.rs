//! Private continual counting via tree aggregation, over time only
//! (`OneFoldTree`) or over time and price (`TwoFoldTree`).

pub mod index;
mod onefold;
pub mod sigma;
mod twofold;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

pub use index::{gamma, index_sets, lambda, level_count, IndexSets};
pub use onefold::OneFoldTree;
pub use sigma::{bandit_sigma, gaussian_mechanism_sigma, onefold_sigma, twofold_sigma};
pub use twofold::TwoFoldTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    OneFold,
    TwoFold,
}

/// Detached copy of every node of a tree.
///
/// `values` is row-major: node `j` (1-based) occupies
/// `values[(j - 1) * dim .. j * dim]`. For two-fold trees the column is the
/// 1-based price position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub kind: TreeKind,
    pub horizon: usize,
    pub dim: usize,
    pub sigma: f64,
    pub rounds: usize,
    pub values: Vec<f64>,
}

const MAGIC: &[u8; 8] = b"RLTREE01";

#[derive(Serialize)]
struct NodeEntry<'a> {
    node: usize,
    values: &'a [f64],
}

#[derive(Serialize)]
struct SnapshotDump<'a> {
    kind: TreeKind,
    horizon: usize,
    dim: usize,
    sigma: f64,
    rounds: usize,
    nodes: Vec<NodeEntry<'a>>,
}

impl TreeSnapshot {
    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[(j - 1) * self.dim..j * self.dim]
    }

    /// JSON dump keyed by node index.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let dump = SnapshotDump {
            kind: self.kind,
            horizon: self.horizon,
            dim: self.dim,
            sigma: self.sigma,
            rounds: self.rounds,
            nodes: (1..=self.horizon)
                .map(|j| NodeEntry {
                    node: j,
                    values: self.node(j),
                })
                .collect(),
        };
        serde_json::to_writer(out, &dump)?;
        Ok(())
    }

    /// Little-endian binary dump: magic, kind, horizon, dim, rounds, sigma,
    /// then `horizon * dim` node values.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        let kind: u64 = match self.kind {
            TreeKind::OneFold => 1,
            TreeKind::TwoFold => 2,
        };
        for v in [kind, self.horizon as u64, self.dim as u64, self.rounds as u64] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&self.sigma.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(contract("not a tree snapshot"));
        }
        let mut word = [0u8; 8];
        let mut next = |input: &mut R| -> Result<[u8; 8]> {
            input.read_exact(&mut word)?;
            Ok(word)
        };
        let kind = match u64::from_le_bytes(next(&mut input)?) {
            1 => TreeKind::OneFold,
            2 => TreeKind::TwoFold,
            other => return Err(contract(format!("unknown tree kind {other}"))),
        };
        let horizon = u64::from_le_bytes(next(&mut input)?) as usize;
        let dim = u64::from_le_bytes(next(&mut input)?) as usize;
        let rounds = u64::from_le_bytes(next(&mut input)?) as usize;
        let sigma = f64::from_le_bytes(next(&mut input)?);
        let values = (0..horizon * dim)
            .map(|_| next(&mut input).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            horizon,
            dim,
            sigma,
            rounds,
            values,
        })
    }
}
