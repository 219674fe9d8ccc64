//! Support recovery metrics and per-time graph reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::PrecisionEstimate;
use crate::structure::{BlockLayout, SupportMask};

/// Confusion counts over a universe of candidate edges and their rates.
///
/// Rates use the usual definitions; a ratio whose denominator is zero is
/// reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
    pub fd_rate: f64,
    pub fnd_rate: f64,
}

impl ConfusionMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self {
            tp,
            fp,
            tn,
            fn_,
            fp_rate: ratio(fp, fp + tn),
            fn_rate: ratio(fn_, fn_ + tp),
            fd_rate: ratio(fp, fp + tp),
            fnd_rate: ratio(fn_, fn_ + tn),
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion<T: Ord>(
    estimated: &BTreeSet<T>,
    truth: &BTreeSet<T>,
    universe: &BTreeSet<T>,
) -> Result<ConfusionMetrics> {
    if !estimated.is_subset(universe) || !truth.is_subset(universe) {
        return Err(Error::OutsideUniverse);
    }
    let tp = estimated.intersection(truth).count();
    let fp = estimated.len() - tp;
    let fn_ = truth.len() - tp;
    let tn = universe.len() - tp - fp - fn_;
    Ok(ConfusionMetrics::from_counts(tp, fp, tn, fn_))
}

/// Which coordinates take part in support comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonScope {
    /// Same-time gene pairs only.
    #[default]
    Lag0Network,
    /// Every unmasked off-diagonal coordinate, including lagged ones.
    AllUnmasked,
}

/// Candidate coordinates `(p, q)`, `p < q`, under a scope.
pub fn comparison_universe(
    layout: &BlockLayout,
    mask: &SupportMask,
    scope: ComparisonScope,
) -> BTreeSet<(usize, usize)> {
    let d = layout.dim();
    let mut out = BTreeSet::new();
    for p in 0..d {
        for q in p + 1..d {
            let keep = match scope {
                ComparisonScope::Lag0Network => layout.lag(p, q) == 0,
                ComparisonScope::AllUnmasked => !mask.is_masked(p, q),
            };
            if keep {
                out.insert((p, q));
            }
        }
    }
    out
}

/// Coordinates of the universe whose magnitude exceeds `threshold`.
pub fn support_of(
    theta: &DMatrix<f64>,
    universe: &BTreeSet<(usize, usize)>,
    threshold: f64,
) -> BTreeSet<(usize, usize)> {
    universe
        .iter()
        .copied()
        .filter(|&pq| theta[pq].abs() > threshold)
        .collect()
}

pub fn estimate_support(
    est: &PrecisionEstimate,
    scope: ComparisonScope,
) -> BTreeSet<(usize, usize)> {
    let universe = comparison_universe(est.layout(), &est.config().mask, scope);
    support_of(est.theta(), &universe, est.edge_threshold())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelEdge {
    pub gene_i: usize,
    pub gene_j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeChange {
    pub gene_i: usize,
    pub gene_j: usize,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

impl EdgeChange {
    fn new(gene_i: usize, gene_j: usize, before: f64, after: f64) -> Self {
        Self {
            gene_i,
            gene_j,
            before,
            after,
            delta: after - before,
        }
    }
}

/// Lag-0 graphs at times `time` and `time + 1` and how they differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDiffReport {
    pub time: usize,
    pub graph_k: Vec<PanelEdge>,
    pub graph_k1: Vec<PanelEdge>,
    pub intersection: Vec<EdgeChange>,
    pub born: Vec<EdgeChange>,
    pub died: Vec<EdgeChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    GraphK,
    GraphK1,
    Intersection,
    Difference,
}

impl Panel {
    pub const ALL: [Panel; 4] = [
        Panel::GraphK,
        Panel::GraphK1,
        Panel::Intersection,
        Panel::Difference,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Panel::GraphK => "graph_k",
            Panel::GraphK1 => "graph_k1",
            Panel::Intersection => "intersection",
            Panel::Difference => "difference",
        }
    }
}

impl GraphDiffReport {
    pub fn is_unchanged(&self) -> bool {
        self.born.is_empty() && self.died.is_empty()
    }

    /// Undirected DOT graph for one panel. Genes without edges in the panel
    /// are omitted. In the difference panel born edges are solid and died
    /// edges dashed.
    pub fn to_dot(&self, panel: Panel, gene_names: &[String]) -> String {
        let t0 = self.time + 1;
        let title = match panel {
            Panel::GraphK => format!("time {t0}"),
            Panel::GraphK1 => format!("time {}", t0 + 1),
            Panel::Intersection => format!("intersection time {t0} and {}", t0 + 1),
            Panel::Difference => format!("difference time {t0} to {}", t0 + 1),
        };
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", panel.name());
        let _ = writeln!(out, "  label=\"{title}\";");
        let name = |i: usize| {
            gene_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("G{}", i + 1))
        };
        let mut edge = |i: usize, j: usize, w: f64, style: Option<&str>| {
            let style = style.map(|s| format!(", style={s}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [weight={w}{style}];",
                name(i),
                name(j)
            );
        };
        match panel {
            Panel::GraphK => self
                .graph_k
                .iter()
                .for_each(|e| edge(e.gene_i, e.gene_j, e.weight, None)),
            Panel::GraphK1 => self
                .graph_k1
                .iter()
                .for_each(|e| edge(e.gene_i, e.gene_j, e.weight, None)),
            Panel::Intersection => self
                .intersection
                .iter()
                .for_each(|e| edge(e.gene_i, e.gene_j, e.after, None)),
            Panel::Difference => {
                self.born
                    .iter()
                    .for_each(|e| edge(e.gene_i, e.gene_j, e.after, Some("solid")));
                self.died
                    .iter()
                    .for_each(|e| edge(e.gene_i, e.gene_j, e.before, Some("dashed")));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn lag0_weights(est: &PrecisionEstimate, time: usize) -> Vec<PanelEdge> {
    let layout = est.layout();
    let g = layout.genes();
    let theta = est.theta();
    let mut out = Vec::new();
    for i in 0..g {
        for j in i + 1..g {
            let w = theta[(layout.index(i, time), layout.index(j, time))];
            if w.abs() > est.edge_threshold() {
                out.push(PanelEdge {
                    gene_i: i,
                    gene_j: j,
                    weight: w,
                });
            }
        }
    }
    out
}

/// Compare the lag-0 networks at zero-based times `time` and `time + 1`.
pub fn graph_diff(est: &PrecisionEstimate, time: usize) -> Result<GraphDiffReport> {
    let layout = est.layout();
    if time + 1 >= layout.times() {
        return Err(Error::TimeIndex {
            k: time,
            times: layout.times(),
        });
    }
    let graph_k = lag0_weights(est, time);
    let graph_k1 = lag0_weights(est, time + 1);
    let theta = est.theta();
    let w = |i: usize, j: usize, k: usize| theta[(layout.index(i, k), layout.index(j, k))];
    let before: BTreeSet<(usize, usize)> =
        graph_k.iter().map(|e| (e.gene_i, e.gene_j)).collect();
    let after: BTreeSet<(usize, usize)> =
        graph_k1.iter().map(|e| (e.gene_i, e.gene_j)).collect();
    let change = |&(i, j): &(usize, usize)| EdgeChange::new(i, j, w(i, j, time), w(i, j, time + 1));
    Ok(GraphDiffReport {
        time,
        intersection: before.intersection(&after).map(change).collect(),
        born: after.difference(&before).map(change).collect(),
        died: before.difference(&after).map(change).collect(),
        graph_k,
        graph_k1,
    })
}

/// Statistics of the lag-0 graph at one time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeStats {
    pub time: usize,
    pub edges: usize,
    /// Genes with at least one edge.
    pub active_nodes: usize,
    /// Connected components, isolated genes counting as singletons.
    pub components: usize,
    pub largest_component: usize,
}

pub fn evolution_diagnostics(est: &PrecisionEstimate) -> Vec<TimeStats> {
    let g = est.layout().genes();
    (0..est.layout().times())
        .map(|time| {
            let edges = lag0_weights(est, time);
            let mut uf = UnionFind::new(g);
            let mut degree = vec![0usize; g];
            for e in &edges {
                uf.union(e.gene_i, e.gene_j);
                degree[e.gene_i] += 1;
                degree[e.gene_j] += 1;
            }
            let mut sizes = vec![0usize; g];
            for v in 0..g {
                sizes[uf.find(v)] += 1;
            }
            TimeStats {
                time,
                edges: edges.len(),
                active_nodes: degree.iter().filter(|&&d| d > 0).count(),
                components: sizes.iter().filter(|&&s| s > 0).count(),
                largest_component: sizes.iter().copied().max().unwrap_or(0),
            }
        })
        .collect()
}

pub fn diagnostics_csv(stats: &[TimeStats], time_labels: &[String]) -> String {
    let mut out = String::from("time,edges,active_nodes,components,largest_component\n");
    for s in stats {
        let label = time_labels
            .get(s.time)
            .cloned()
            .unwrap_or_else(|| (s.time + 1).to_string());
        let _ = writeln!(
            out,
            "{label},{},{},{},{}",
            s.edges, s.active_nodes, s.components, s.largest_component
        );
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
