//! Block structure of a dynamic precision matrix.
//!
//! Variables are laid out time-major: flat index `i + k * g` is gene `i` at
//! time `k`. An upper-triangular coordinate `(p, q)` therefore belongs to
//! the block pairing time `k = time(p)` with time `k + s = time(q)`, where
//! `s` is the lag. Entries pairing a gene with itself are self-self terms,
//! all others are network terms.
//!
//! Times are zero-based throughout the library; reports render them
//! one-based.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    SelfSelf,
    Network,
}

/// Position of an upper-triangular coordinate inside the block structure.
///
/// `gene_i` is the gene at `time`, `gene_j` the gene at `time + lag`. For
/// lag 0 the pair is normalized so that `gene_i <= gene_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub kind: BlockKind,
    pub lag: usize,
    pub time: usize,
    pub gene_i: usize,
    pub gene_j: usize,
}

impl fmt::Display for BlockDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            BlockKind::SelfSelf => "S",
            BlockKind::Network => "N",
        };
        write!(
            f,
            "{}{}^{}[{},{}]",
            kind,
            self.lag,
            self.time + 1,
            self.gene_i,
            self.gene_j
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    genes: usize,
    times: usize,
    lag_cap: usize,
}

impl BlockLayout {
    pub fn new(genes: usize, times: usize, lag_cap: usize) -> Result<Self> {
        if genes == 0 || times == 0 {
            return Err(Error::InvalidParameter(format!(
                "layout needs at least one gene and one time point (got g={genes}, t={times})"
            )));
        }
        if lag_cap >= times {
            return Err(Error::LagCap { lag_cap, times });
        }
        Ok(Self {
            genes,
            times,
            lag_cap,
        })
    }

    pub fn genes(&self) -> usize {
        self.genes
    }

    pub fn times(&self) -> usize {
        self.times
    }

    pub fn lag_cap(&self) -> usize {
        self.lag_cap
    }

    pub fn dim(&self) -> usize {
        self.genes * self.times
    }

    /// Number of upper-triangular off-diagonal entries.
    pub fn upper_count(&self) -> usize {
        let d = self.dim();
        d * (d - 1) / 2
    }

    pub fn index(&self, gene: usize, time: usize) -> usize {
        debug_assert!(gene < self.genes && time < self.times);
        gene + time * self.genes
    }

    pub fn gene_of(&self, p: usize) -> usize {
        p % self.genes
    }

    pub fn time_of(&self, p: usize) -> usize {
        p / self.genes
    }

    pub fn lag(&self, p: usize, q: usize) -> usize {
        self.time_of(p).abs_diff(self.time_of(q))
    }

    /// Classify a coordinate. The arguments are swapped when `p > q`, so any
    /// valid pair of indices is accepted.
    pub fn classify(&self, p: usize, q: usize) -> BlockDescriptor {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        let time = self.time_of(p);
        let lag = self.time_of(q) - time;
        let gene_i = self.gene_of(p);
        let gene_j = self.gene_of(q);
        let kind = if gene_i == gene_j {
            BlockKind::SelfSelf
        } else {
            BlockKind::Network
        };
        BlockDescriptor {
            kind,
            lag,
            time,
            gene_i,
            gene_j,
        }
    }

    /// Inverse of [`classify`](Self::classify).
    pub fn locate(&self, d: &BlockDescriptor) -> (usize, usize) {
        (
            self.index(d.gene_i, d.time),
            self.index(d.gene_j, d.time + d.lag),
        )
    }

    pub fn forced_zero_mask(&self) -> SupportMask {
        let dim = self.dim();
        let mut zero = vec![false; dim * dim];
        for p in 0..dim {
            for q in 0..dim {
                zero[p * dim + q] = self.lag(p, q) > self.lag_cap;
            }
        }
        SupportMask { dim, zero }
    }

    /// All chains of same-lag, same-pair coordinates ordered by time.
    ///
    /// Every unmasked upper-triangular off-diagonal coordinate appears in
    /// exactly one chain. When `fuse_self_self` is false, lagged self-self
    /// coordinates are returned as singleton chains.
    pub fn chains(&self, fuse_self_self: bool) -> Vec<Vec<(usize, usize)>> {
        let g = self.genes;
        let mut out = Vec::new();
        for lag in 0..=self.lag_cap {
            let len = self.times - lag;
            for gi in 0..g {
                for gj in 0..g {
                    if lag == 0 && gi >= gj {
                        continue;
                    }
                    let chain: Vec<_> = (0..len)
                        .map(|k| (self.index(gi, k), self.index(gj, k + lag)))
                        .collect();
                    if gi == gj && !fuse_self_self {
                        out.extend(chain.into_iter().map(|c| vec![c]));
                    } else {
                        out.push(chain);
                    }
                }
            }
        }
        out
    }

    /// Number of lag-0 network pairs per time point.
    pub fn pairs_per_time(&self) -> usize {
        self.genes * (self.genes - 1) / 2
    }
}

/// Entries of a symmetric matrix forced to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMask {
    dim: usize,
    zero: Vec<bool>,
}

impl SupportMask {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            zero: vec![false; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_masked(&self, p: usize, q: usize) -> bool {
        self.zero[p * self.dim + q]
    }

    /// Upper-triangular masked coordinates.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.dim {
            for q in p + 1..self.dim {
                if self.is_masked(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        !self.zero.iter().any(|&z| z)
    }

    pub fn apply(&self, m: &mut DMatrix<f64>) {
        for p in 0..self.dim {
            for q in 0..self.dim {
                if self.is_masked(p, q) {
                    m[(p, q)] = 0.0;
                }
            }
        }
    }
}

/// One penalized difference: `theta[plus] - theta[minus]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceRow {
    pub plus: (usize, usize),
    pub minus: (usize, usize),
}

/// Sparse ±1 operator mapping a symmetric matrix to the differences between
/// the same lag block at consecutive times.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMap {
    dim: usize,
    rows: Vec<DifferenceRow>,
    chains: Vec<Vec<(usize, usize)>>,
}

impl DifferenceMap {
    pub fn build(layout: &BlockLayout, fuse_self_self: bool) -> Self {
        let chains: Vec<_> = layout
            .chains(fuse_self_self)
            .into_iter()
            .filter(|c| c.len() >= 2)
            .collect();
        let rows = chains
            .iter()
            .flat_map(|c| {
                c.windows(2).map(|w| DifferenceRow {
                    plus: w[0],
                    minus: w[1],
                })
            })
            .collect();
        Self {
            dim: layout.dim(),
            rows,
            chains,
        }
    }

    pub fn rows(&self) -> &[DifferenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Coordinate chains of length at least two; consecutive members are the
    /// rows of the operator.
    pub fn chains(&self) -> &[Vec<(usize, usize)>] {
        &self.chains
    }

    pub fn apply(&self, theta: &DMatrix<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| theta[r.plus] - theta[r.minus])
            .collect()
    }

    /// `row col value` triples, one per nonzero. Columns index the row-major
    /// vectorization of the full matrix.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::from("# row col value\n");
        for (r, row) in self.rows.iter().enumerate() {
            let plus = row.plus.0 * self.dim + row.plus.1;
            let minus = row.minus.0 * self.dim + row.minus.1;
            out.push_str(&format!("{r} {plus} 1\n{r} {minus} -1\n"));
        }
        out
    }
}
