//! Slowly evolving ground-truth networks, Gaussian sampling, and the
//! support-recovery study built on them.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeCourseDataset;
use crate::error::{Error, Result};
use crate::evaluation::{confusion, ComparisonScope, ConfusionMetrics};
use crate::selection::{grid_search_with, Criterion, GridSpec, SelectionOptions};
use crate::solver::{PenaltyConfig, SolverSettings};
use crate::structure::BlockLayout;

/// Parameters of a simulated dynamic network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Genes carrying the evolving network.
    pub genes: usize,
    pub times: usize,
    /// Replicates per dataset.
    pub n: usize,
    /// Lag-0 edges at the first time.
    pub m0: usize,
    /// Edges born per transition.
    pub births: usize,
    /// Edges removed per transition.
    pub deaths: usize,
    /// Independent genes appended after the active ones.
    pub independent_pad: usize,
    pub seed: u64,
    /// Edge weight magnitudes are uniform on this range with a random sign.
    pub weight_range: (f64, f64),
    /// Precision entry linking each active gene to itself at the next time.
    pub autocorrelation: f64,
    /// Lag-1 edges between distinct active genes, per transition.
    pub lag1_edges: usize,
    /// Smallest eigenvalue enforced by the diagonal shift.
    pub eigen_floor: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            genes: 20,
            times: 3,
            n: 50,
            m0: 20,
            births: 2,
            deaths: 2,
            independent_pad: 0,
            seed: 0,
            weight_range: (0.3, 0.7),
            autocorrelation: 0.2,
            lag1_edges: 0,
            eigen_floor: 0.1,
        }
    }
}

impl ScenarioSpec {
    /// Study scenarios 1 to 4: a 20-gene network over three times with 0,
    /// 20, 40 or 60 independent genes added, 50 replicates each.
    pub fn scenario(k: usize) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "scenario must be 1 to 4, got {k}"
            )));
        }
        Ok(Self {
            independent_pad: 20 * (k - 1),
            ..Self::default()
        })
    }

    pub fn total_genes(&self) -> usize {
        self.genes + self.independent_pad
    }

    pub fn dim(&self) -> usize {
        self.total_genes() * self.times
    }

    /// Layout with lag cap 1 (or 0 for a single time).
    pub fn layout(&self) -> Result<BlockLayout> {
        BlockLayout::new(self.total_genes(), self.times, self.times.saturating_sub(1).min(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.genes == 0 || self.times == 0 || self.n == 0 {
            return bad("genes, times and n must be positive".into());
        }
        let pairs = self.genes * (self.genes - 1) / 2;
        if self.m0 > pairs {
            return bad(format!("m0 = {} exceeds the {pairs} gene pairs", self.m0));
        }
        let (lo, hi) = self.weight_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!("invalid weight range [{lo}, {hi}]"));
        }
        if !(self.eigen_floor > 0.0 && self.eigen_floor.is_finite()) {
            return bad("eigen_floor must be positive".into());
        }
        if !self.autocorrelation.is_finite() {
            return bad("autocorrelation must be finite".into());
        }
        if self.times > 1 && self.lag1_edges > self.genes * (self.genes - 1) {
            return bad(format!("lag1_edges = {} exceeds the ordered pairs", self.lag1_edges));
        }
        Ok(())
    }
}

/// A true dynamic precision matrix with its lag-0 supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthNetwork {
    #[serde(with = "matrix_rows")]
    pub theta: DMatrix<f64>,
    pub layout: BlockLayout,
    /// Lag-0 gene pairs `(i, j)`, `i < j`, per time.
    pub supports: Vec<BTreeSet<(usize, usize)>>,
    /// Lag-1 `(gene at k, gene at k+1)` network edges per transition.
    pub lag1_supports: Vec<BTreeSet<(usize, usize)>>,
    pub births: usize,
    pub deaths: usize,
    /// Amount added to the diagonal to reach the eigenvalue floor.
    pub diagonal_shift: f64,
}

impl GroundTruthNetwork {
    /// Lag-0 support as flat matrix coordinates `(p, q)`, `p < q`.
    pub fn lag0_coordinates(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for (k, s) in self.supports.iter().enumerate() {
            for &(i, j) in s {
                out.insert((self.layout.index(i, k), self.layout.index(j, k)));
            }
        }
        out
    }
}

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("matrix rows must form a square"));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

fn draw_weight(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    let m = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

/// Draw a ground-truth network.
///
/// The first lag-0 graph is a uniform random `m0`-edge graph on the active
/// genes. Each later time removes `deaths` uniform edges of the previous
/// graph and adds `births` uniform pairs that were not edges of it, so
/// consecutive supports differ by exactly that many edges. Surviving edges
/// keep their weights. The assembled matrix has unit diagonal and is then
/// shifted along the diagonal until its smallest eigenvalue is at least
/// `eigen_floor`.
pub fn generate_network(spec: &ScenarioSpec) -> Result<GroundTruthNetwork> {
    spec.validate()?;
    let layout = spec.layout()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g = spec.genes;
    let all_pairs: Vec<(usize, usize)> = (0..g)
        .flat_map(|i| (i + 1..g).map(move |j| (i, j)))
        .collect();

    let mut weights: Vec<std::collections::BTreeMap<(usize, usize), f64>> = Vec::new();
    let first: std::collections::BTreeMap<_, _> = index::sample(&mut rng, all_pairs.len(), spec.m0)
        .into_iter()
        .map(|k| (all_pairs[k], draw_weight(&mut rng, spec.weight_range)))
        .collect();
    weights.push(first);
    for k in 1..spec.times {
        let prev = &weights[k - 1];
        let edges: Vec<(usize, usize)> = prev.keys().copied().collect();
        let free: Vec<(usize, usize)> = all_pairs
            .iter()
            .filter(|p| !prev.contains_key(p))
            .copied()
            .collect();
        if spec.deaths > edges.len() {
            return Err(Error::Simulation(format!(
                "time {k}: {} deaths requested but only {} edges",
                spec.deaths,
                edges.len()
            )));
        }
        if spec.births > free.len() {
            return Err(Error::Simulation(format!(
                "time {k}: {} births requested but only {} free pairs",
                spec.births,
                free.len()
            )));
        }
        let mut next = prev.clone();
        for i in index::sample(&mut rng, edges.len(), spec.deaths) {
            next.remove(&edges[i]);
        }
        for i in index::sample(&mut rng, free.len(), spec.births) {
            next.insert(free[i], draw_weight(&mut rng, spec.weight_range));
        }
        weights.push(next);
    }

    let mut theta = DMatrix::identity(layout.dim(), layout.dim());
    let set = |theta: &mut DMatrix<f64>, p: usize, q: usize, v: f64| {
        theta[(p, q)] = v;
        theta[(q, p)] = v;
    };
    for (k, w) in weights.iter().enumerate() {
        for (&(i, j), &v) in w {
            set(&mut theta, layout.index(i, k), layout.index(j, k), v);
        }
    }
    let mut lag1_supports = Vec::new();
    for k in 0..spec.times.saturating_sub(1) {
        for i in 0..g {
            set(&mut theta, layout.index(i, k), layout.index(i, k + 1), spec.autocorrelation);
        }
        let ordered: Vec<(usize, usize)> = (0..g)
            .flat_map(|i| (0..g).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let mut chosen = BTreeSet::new();
        for idx in index::sample(&mut rng, ordered.len(), spec.lag1_edges) {
            let (i, j) = ordered[idx];
            let v = draw_weight(&mut rng, spec.weight_range);
            set(&mut theta, layout.index(i, k), layout.index(j, k + 1), v);
            chosen.insert((i, j));
        }
        lag1_supports.push(chosen);
    }

    let min_eig = theta.clone().symmetric_eigenvalues().min();
    let shift = if min_eig < spec.eigen_floor {
        spec.eigen_floor - min_eig
    } else {
        0.0
    };
    for p in 0..layout.dim() {
        theta[(p, p)] += shift;
    }

    Ok(GroundTruthNetwork {
        theta,
        layout,
        supports: weights
            .into_iter()
            .map(|w| w.into_keys().collect())
            .collect(),
        lag1_supports,
        births: spec.births,
        deaths: spec.deaths,
        diagonal_shift: shift,
    })
}

/// `n` independent draws from `N(0, Θ⁻¹)`.
///
/// With `Θ = L Lᵀ`, each replicate solves `Lᵀ x = z` for a standard normal
/// `z`, which has covariance `Θ⁻¹`.
pub fn sample_gaussian(
    net: &GroundTruthNetwork,
    n: usize,
    seed: u64,
) -> Result<TimeCourseDataset> {
    let chol = net
        .theta
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?;
    let lt = chol.l().transpose();
    let dim = net.theta.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = DMatrix::zeros(n, dim);
    for r in 0..n {
        let z = DVector::from_fn(dim, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let x = lt
            .solve_upper_triangular(&z)
            .ok_or(Error::NotPositiveDefinite)?;
        values.row_mut(r).copy_from(&x.transpose());
    }
    TimeCourseDataset::unlabeled(values, net.layout.genes(), net.layout.times())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub criteria: Vec<Criterion>,
    pub scope: ComparisonScope,
    pub standardize: bool,
    pub selection: SelectionOptions,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            criteria: Criterion::ALL.to_vec(),
            scope: ComparisonScope::default(),
            standardize: true,
            selection: SelectionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub criterion: Criterion,
    pub lambda1: f64,
    pub lambda2: f64,
    pub metrics: ConfusionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub network_seed: u64,
    pub sample_seed: u64,
    pub outcomes: Vec<CriterionOutcome>,
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: Criterion,
    /// Replicates that produced a selected model for this criterion.
    pub replicates: usize,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fd: f64,
    pub fnd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub label: String,
    pub spec: ScenarioSpec,
    pub grid: GridSpec,
    pub settings: SolverSettings,
    pub options: StudyOptions,
    pub replicates: Vec<ReplicateOutcome>,
    pub summary: Vec<CriterionSummary>,
    pub seconds: f64,
}

impl StudyReport {
    pub fn summary_for(&self, c: Criterion) -> Option<&CriterionSummary> {
        self.summary.iter().find(|s| s.criterion == c)
    }

    pub fn failed(&self) -> usize {
        self.replicates.iter().filter(|r| r.error.is_some()).count()
    }

    /// `scenario,criterion,fp,fn,fd,fnd`, one row per criterion.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,criterion,fp,fn,fd,fnd\n");
        self.append_csv_rows(&mut out);
        out
    }

    pub fn append_csv_rows(&self, out: &mut String) {
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.label,
                s.criterion.name(),
                s.fp,
                s.fn_,
                s.fd,
                s.fnd
            );
        }
    }
}

/// Seeds for replicate `r`: stream `r` of a ChaCha8 generator seeded with
/// the study seed, so replicates are independent of scheduling.
pub fn replicate_seeds(study_seed: u64, r: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(study_seed);
    rng.set_stream(r as u64);
    (rng.next_u64(), rng.next_u64())
}

/// Repeat generate, sample, grid search and score `reps` times and average
/// the confusion rates of each criterion's selected model.
///
/// Each replicate draws a fresh network. A failing replicate is recorded
/// with its error and left out of the means.
pub fn run_study(
    label: &str,
    spec: &ScenarioSpec,
    reps: usize,
    grid: &GridSpec,
    settings: &SolverSettings,
    options: &StudyOptions,
) -> Result<StudyReport> {
    spec.validate()?;
    settings.validate()?;
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let start = Instant::now();
    let replicates: Vec<ReplicateOutcome> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let t0 = Instant::now();
            let (network_seed, sample_seed) = replicate_seeds(spec.seed, r);
            let result = run_replicate(spec, network_seed, sample_seed, grid, settings, options);
            let (outcomes, error) = match result {
                Ok(o) => (o, None),
                Err(e) => (Vec::new(), Some(e.to_string())),
            };
            ReplicateOutcome {
                replicate: r,
                network_seed,
                sample_seed,
                outcomes,
                error,
                seconds: t0.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let summary = options
        .criteria
        .iter()
        .map(|&c| {
            let ms: Vec<&ConfusionMetrics> = replicates
                .iter()
                .flat_map(|r| r.outcomes.iter())
                .filter(|o| o.criterion == c)
                .map(|o| &o.metrics)
                .collect();
            let mean = |f: fn(&ConfusionMetrics) -> f64| {
                if ms.is_empty() {
                    f64::NAN
                } else {
                    ms.iter().map(|m| f(m)).sum::<f64>() / ms.len() as f64
                }
            };
            CriterionSummary {
                criterion: c,
                replicates: ms.len(),
                fp: mean(|m| m.fp_rate),
                fn_: mean(|m| m.fn_rate),
                fd: mean(|m| m.fd_rate),
                fnd: mean(|m| m.fnd_rate),
            }
        })
        .collect();

    Ok(StudyReport {
        label: label.to_string(),
        spec: spec.clone(),
        grid: grid.clone(),
        settings: *settings,
        options: options.clone(),
        replicates,
        summary,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_replicate(
    spec: &ScenarioSpec,
    network_seed: u64,
    sample_seed: u64,
    grid: &GridSpec,
    settings: &SolverSettings,
    options: &StudyOptions,
) -> Result<Vec<CriterionOutcome>> {
    let net = generate_network(&ScenarioSpec {
        seed: network_seed,
        ..spec.clone()
    })?;
    let mut data = sample_gaussian(&net, spec.n, sample_seed)?;
    if options.standardize {
        data = data.standardize()?;
    }
    let s = data.empirical_covariance()?;
    let template = PenaltyConfig::new(&net.layout, 0.0, 0.0)?;
    let selection = grid_search_with(&s, &net.layout, grid, &template, settings, &options.selection)?;

    let universe = crate::evaluation::comparison_universe(&net.layout, &template.mask, options.scope);
    let truth = crate::evaluation::support_of(&net.theta, &universe, 0.0);
    let mut outcomes = Vec::new();
    for &c in &options.criteria {
        let (Some(point), Some(est)) = (selection.best_point(c), selection.best_estimate(c)) else {
            continue;
        };
        let found = crate::evaluation::estimate_support(est, options.scope);
        outcomes.push(CriterionOutcome {
            criterion: c,
            lambda1: point.lambda1,
            lambda2: point.lambda2,
            metrics: confusion(&found, &truth, &universe)?,
        });
    }
    Ok(outcomes)
}
