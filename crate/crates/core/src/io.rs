//! On-disk artifacts: dense matrix text, the block JSON report and edge
//! lists.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{Diagnostics, PenaltyConfig, PrecisionEstimate};
use crate::structure::{BlockKind, BlockLayout};

/// One row per line, values separated by single spaces, shortest
/// round-trip formatting.
pub fn matrix_to_text(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parse whitespace-separated rows. Blank lines and lines starting with `#`
/// are skipped.
pub fn matrix_from_text(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Malformed(format!("line {}: bad number `{t}`", k + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Malformed("rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_text(m)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    matrix_from_text(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub gene_i: String,
    pub gene_j: String,
    pub value: f64,
}

/// All entries of one block at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGroup {
    pub kind: BlockKind,
    pub lag: usize,
    /// 0-based index of the earlier time.
    pub time: usize,
    pub time_label: String,
    pub entries: Vec<BlockEntry>,
}

/// Self-describing JSON form of an estimate. `theta` is authoritative;
/// `blocks` repeats the upper triangle grouped by block for readers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub genes: usize,
    pub times: usize,
    pub lag_cap: usize,
    pub gene_names: Vec<String>,
    pub time_labels: Vec<String>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub penalize_diagonal: bool,
    pub fuse_self_self: bool,
    pub edge_threshold: f64,
    pub diagnostics: Diagnostics,
    pub theta: Vec<Vec<f64>>,
    pub blocks: Vec<BlockGroup>,
}

impl BlockReport {
    pub fn from_estimate(
        est: &PrecisionEstimate,
        gene_names: &[String],
        time_labels: &[String],
    ) -> Result<Self> {
        let layout = est.layout();
        if gene_names.len() != layout.genes() || time_labels.len() != layout.times() {
            return Err(Error::Dimension(format!(
                "{} gene names and {} time labels for a {}-gene, {}-time layout",
                gene_names.len(),
                time_labels.len(),
                layout.genes(),
                layout.times()
            )));
        }
        let theta = est.theta();
        let mut blocks: Vec<BlockGroup> = Vec::new();
        for lag in 0..=layout.lag_cap() {
            for kind in [BlockKind::SelfSelf, BlockKind::Network] {
                for time in 0..layout.times() - lag {
                    let mut entries = Vec::new();
                    for i in 0..layout.genes() {
                        for j in 0..layout.genes() {
                            let keep = match (kind, lag) {
                                (BlockKind::SelfSelf, _) => i == j,
                                (BlockKind::Network, 0) => i < j,
                                (BlockKind::Network, _) => i != j,
                            };
                            if keep {
                                let p = layout.index(i, time);
                                let q = layout.index(j, time + lag);
                                entries.push(BlockEntry {
                                    gene_i: gene_names[i].clone(),
                                    gene_j: gene_names[j].clone(),
                                    value: theta[(p, q)],
                                });
                            }
                        }
                    }
                    if !entries.is_empty() {
                        blocks.push(BlockGroup {
                            kind,
                            lag,
                            time,
                            time_label: time_labels[time].clone(),
                            entries,
                        });
                    }
                }
            }
        }
        let config = est.config();
        Ok(Self {
            genes: layout.genes(),
            times: layout.times(),
            lag_cap: layout.lag_cap(),
            gene_names: gene_names.to_vec(),
            time_labels: time_labels.to_vec(),
            lambda1: config.lambda1,
            lambda2: config.lambda2,
            penalize_diagonal: config.penalize_diagonal,
            fuse_self_self: config.fuse_self_self,
            edge_threshold: est.edge_threshold(),
            diagnostics: est.diagnostics().clone(),
            theta: theta
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            blocks,
        })
    }

    /// Rebuild the estimate from `theta` without re-solving.
    pub fn to_estimate(&self) -> Result<PrecisionEstimate> {
        let layout = BlockLayout::new(self.genes, self.times, self.lag_cap)?;
        if self.gene_names.len() != self.genes || self.time_labels.len() != self.times {
            return Err(Error::Malformed(
                "gene_names or time_labels do not match the layout".into(),
            ));
        }
        let d = layout.dim();
        if self.theta.len() != d || self.theta.iter().any(|r| r.len() != d) {
            return Err(Error::Malformed(format!("theta must be {d}x{d}")));
        }
        let theta = DMatrix::from_fn(d, d, |i, j| self.theta[i][j]);
        let mut config = PenaltyConfig::new(&layout, self.lambda1, self.lambda2)?;
        config.penalize_diagonal = self.penalize_diagonal;
        config.fuse_self_self = self.fuse_self_self;
        Ok(
            PrecisionEstimate::from_parts(theta, layout, config, self.edge_threshold)?
                .with_diagnostics(self.diagnostics.clone()),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `p,q,kind,lag,time,gene_i,gene_j,weight` for every edge of the estimate.
/// `time` is the label of the earlier time point.
pub fn edge_list_csv(
    est: &PrecisionEstimate,
    gene_names: &[String],
    time_labels: &[String],
) -> String {
    let mut out = String::from("p,q,kind,lag,time,gene_i,gene_j,weight\n");
    for e in est.edge_set() {
        let b = e.block;
        let kind = match b.kind {
            BlockKind::SelfSelf => "self",
            BlockKind::Network => "network",
        };
        let name = |g: usize| gene_names.get(g).cloned().unwrap_or_else(|| format!("G{}", g + 1));
        let time = time_labels
            .get(b.time)
            .cloned()
            .unwrap_or_else(|| (b.time + 1).to_string());
        let _ = writeln!(
            out,
            "{},{},{kind},{},{time},{},{},{}",
            e.p,
            e.q,
            b.lag,
            name(b.gene_i),
            name(b.gene_j),
            e.weight
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn estimate() -> PrecisionEstimate {
        let layout = BlockLayout::new(3, 2, 1).unwrap();
        let mut theta = DMatrix::identity(6, 6) * 2.0;
        for (p, q, v) in [(0, 1, 0.25), (1, 4, -0.5), (2, 5, 0.125)] {
            theta[(p, q)] = v;
            theta[(q, p)] = v;
        }
        let config = PenaltyConfig::new(&layout, 0.1, 0.2).unwrap();
        PrecisionEstimate::from_parts(theta, layout, config, 1e-4).unwrap()
    }

    proptest! {
        #[test]
        fn matrix_text_round_trips(
            vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 12)
        ) {
            let m = DMatrix::from_row_slice(3, 4, &vals);
            let back = matrix_from_text(&matrix_to_text(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn malformed_matrix_text() {
        assert!(matches!(matrix_from_text("1 2\n3"), Err(Error::Malformed(_))));
        assert!(matches!(matrix_from_text("1 x"), Err(Error::Malformed(_))));
        let m = matrix_from_text("# header\n\n1 2\n3 4\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn report_round_trips() {
        let est = estimate();
        let report = BlockReport::from_estimate(&est, &names("G", 3), &names("t", 2)).unwrap();
        let back = BlockReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
        let est2 = back.to_estimate().unwrap();
        assert_eq!(est2.theta(), est.theta());
        assert_eq!(est2.config(), est.config());
    }

    #[test]
    fn report_groups_blocks() {
        let report = BlockReport::from_estimate(&estimate(), &names("G", 3), &names("t", 2)).unwrap();
        // lag 0: self and network at two times; lag 1: self and network once
        let keys: Vec<_> = report.blocks.iter().map(|b| (b.kind, b.lag, b.time)).collect();
        assert_eq!(
            keys,
            vec![
                (BlockKind::SelfSelf, 0, 0),
                (BlockKind::SelfSelf, 0, 1),
                (BlockKind::Network, 0, 0),
                (BlockKind::Network, 0, 1),
                (BlockKind::SelfSelf, 1, 0),
                (BlockKind::Network, 1, 0),
            ]
        );
        let lag1_net = &report.blocks[5];
        assert_eq!(lag1_net.entries.len(), 6);
        let e = lag1_net.entries.iter().find(|e| e.gene_i == "G2" && e.gene_j == "G2");
        assert!(e.is_none());
        let e = lag1_net.entries.iter().find(|e| e.gene_i == "G1" && e.gene_j == "G3").unwrap();
        assert_eq!(e.value, 0.0);
        let s = &report.blocks[4];
        assert_eq!(s.entries[2].value, 0.125);
    }

    #[test]
    fn report_rejects_bad_shapes() {
        let est = estimate();
        assert!(BlockReport::from_estimate(&est, &names("G", 2), &names("t", 2)).is_err());
        let mut r = BlockReport::from_estimate(&est, &names("G", 3), &names("t", 2)).unwrap();
        r.theta.pop();
        assert!(matches!(r.to_estimate(), Err(Error::Malformed(_))));
        assert!(matches!(BlockReport::from_json("{"), Err(Error::Malformed(_))));
    }

    #[test]
    fn edge_list_rows() {
        let csv = edge_list_csv(&estimate(), &names("G", 3), &names("t", 2));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,1,network,0,t1,G1,G2,0.25");
        assert_eq!(lines[2], "1,4,self,1,t1,G2,G2,-0.5");
        assert_eq!(lines[3], "2,5,self,1,t1,G3,G3,0.125");
    }
}
