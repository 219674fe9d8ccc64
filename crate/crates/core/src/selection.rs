//! Tuning-parameter selection by information criteria over a `(λ1, λ2)`
//! grid, and edge stability by subsampling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{EmpiricalCovariance, TimeCourseDataset};
use crate::error::{Error, Result};
use crate::solver::{solve, solve_warm, trace_product, PenaltyConfig, PrecisionEstimate, SolverSettings};
use crate::structure::{BlockDescriptor, BlockLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lambda1: Vec<f64>,
    lambda2: Vec<f64>,
}

impl GridSpec {
    /// Both lists must be nonempty, finite, nonnegative and strictly
    /// increasing.
    pub fn new(lambda1: Vec<f64>, lambda2: Vec<f64>) -> Result<Self> {
        for (name, v) in [("lambda1", &lambda1), ("lambda2", &lambda2)] {
            if v.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} grid is empty")));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "{name} grid values must be finite and nonnegative"
                )));
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} grid must be strictly increasing"
                )));
            }
        }
        Ok(Self { lambda1, lambda2 })
    }

    pub fn single(lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::new(vec![lambda1], vec![lambda2])
    }

    pub fn lambda1(&self) -> &[f64] {
        &self.lambda1
    }

    pub fn lambda2(&self) -> &[f64] {
        &self.lambda2
    }

    pub fn len(&self) -> usize {
        self.lambda1.len() * self.lambda2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pairs in table order: `λ2` major, `λ1` increasing within a row.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambda2
            .iter()
            .flat_map(move |&l2| self.lambda1.iter().map(move |&l1| (l1, l2)))
    }
}

/// `count` values from `lo` to `hi` evenly spaced on a log scale.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
        return Err(Error::InvalidParameter(
            "log_space needs 0 < lo < hi and count >= 2".into(),
        ));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Aicc,
    Bic,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Aic, Criterion::Aicc, Criterion::Bic];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "AIC",
            Criterion::Aicc => "AICc",
            Criterion::Bic => "BIC",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Criterion::Aic),
            "aicc" => Ok(Criterion::Aicc),
            "bic" => Ok(Criterion::Bic),
            _ => Err(Error::InvalidParameter(format!("unknown criterion {s:?}"))),
        }
    }
}

/// How the degrees of freedom of an estimate are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfConvention {
    /// `dim` plus the number of unmasked upper-triangular entries above the
    /// edge threshold.
    Entries,
    /// Number of distinct nonzero off-diagonal parameters: runs of equal
    /// values along a time chain count once. The diagonal is left out.
    #[default]
    FusedGroups,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub loglik: f64,
    pub df: usize,
    pub aic: f64,
    /// `+inf` when `n <= df + 1`.
    pub aicc: f64,
    pub bic: f64,
}

impl InformationCriteria {
    pub fn get(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Aic => self.aic,
            Criterion::Aicc => self.aicc,
            Criterion::Bic => self.bic,
        }
    }

    pub fn from_loglik(loglik: f64, df: usize, n: usize) -> Self {
        let (k, nf) = (df as f64, n as f64);
        let aic = -2.0 * loglik + 2.0 * k;
        let aicc = if n > df + 1 {
            aic + 2.0 * k * (k + 1.0) / (nf - k - 1.0)
        } else {
            f64::INFINITY
        };
        Self {
            loglik,
            df,
            aic,
            aicc,
            bic: -2.0 * loglik + k * nf.ln(),
        }
    }
}

/// Gaussian log-likelihood of `n` replicates with covariance `s`.
pub fn gaussian_loglik(est: &PrecisionEstimate, s: &EmpiricalCovariance, n: usize) -> Result<f64> {
    let theta = est.theta();
    let chol = theta.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let (nf, d) = (n as f64, theta.nrows() as f64);
    Ok(0.5 * nf * (logdet - trace_product(s.matrix(), theta))
        - 0.5 * nf * d * (2.0 * std::f64::consts::PI).ln())
}

pub fn degrees_of_freedom(est: &PrecisionEstimate, convention: DfConvention) -> usize {
    let theta = est.theta();
    let thr = est.edge_threshold();
    match convention {
        DfConvention::Entries => est.layout().dim() + est.edge_set().len(),
        DfConvention::FusedGroups => {
            let mut df = 0;
            for chain in est.layout().chains(est.config().fuse_self_self) {
                let mut prev: Option<f64> = None;
                for &pq in &chain {
                    let v = theta[pq];
                    if v.abs() > thr && prev.is_none_or(|u| (u - v).abs() > thr) {
                        df += 1;
                    }
                    prev = Some(v);
                }
            }
            df
        }
    }
}

/// Log-likelihood, degrees of freedom and AIC/AICc/BIC of an estimate.
pub fn information_criteria(
    est: &PrecisionEstimate,
    s: &EmpiricalCovariance,
    n: usize,
    convention: DfConvention,
) -> Result<InformationCriteria> {
    if n < 2 {
        return Err(Error::TooFewReplicates { needed: 2, got: n });
    }
    let loglik = gaussian_loglik(est, s, n)?;
    Ok(InformationCriteria::from_loglik(
        loglik,
        degrees_of_freedom(est, convention),
        n,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub scores: Option<InformationCriteria>,
    pub converged: bool,
    pub iterations: usize,
    pub edges: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub df: DfConvention,
    /// Keep every fitted matrix, not only the winners.
    pub retain_all: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionResult {
    pub grid: GridSpec,
    pub df_convention: DfConvention,
    /// One entry per grid point in [`GridSpec::pairs`] order.
    pub points: Vec<GridPoint>,
    /// Index into `points` of each criterion's minimizer among converged
    /// points. Ties go to the smaller df, then to table order.
    pub best: BTreeMap<Criterion, usize>,
    #[serde(skip)]
    estimates: Vec<Option<PrecisionEstimate>>,
}

impl SelectionResult {
    pub fn best_point(&self, c: Criterion) -> Option<&GridPoint> {
        self.best.get(&c).map(|&i| &self.points[i])
    }

    pub fn best_estimate(&self, c: Criterion) -> Option<&PrecisionEstimate> {
        self.best.get(&c).and_then(|&i| self.estimates[i].as_ref())
    }

    /// Retained estimate for a grid point, if any.
    pub fn estimate(&self, index: usize) -> Option<&PrecisionEstimate> {
        self.estimates.get(index).and_then(Option::as_ref)
    }

    /// `lambda1,lambda2,loglik,df,aic,aicc,bic,converged`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda1,lambda2,loglik,df,aic,aicc,bic,converged\n");
        for p in &self.points {
            match &p.scores {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        p.lambda1, p.lambda2, s.loglik, s.df, s.aic, s.aicc, s.bic, p.converged
                    );
                }
                None => {
                    let _ = writeln!(out, "{},{},,,,,,{}", p.lambda1, p.lambda2, p.converged);
                }
            }
        }
        out
    }
}

/// Grid search on the empirical covariance of `data` with default penalty
/// flags and selection options. `data` is used as given; standardize it
/// first if the variables are on different scales.
pub fn grid_search(
    data: &TimeCourseDataset,
    layout: &BlockLayout,
    grid: &GridSpec,
    settings: &SolverSettings,
) -> Result<SelectionResult> {
    let s = data.empirical_covariance()?;
    let template = PenaltyConfig::new(layout, 0.0, 0.0)?;
    grid_search_with(&s, layout, grid, &template, settings, &SelectionOptions::default())
}

/// Fit and score every grid point.
///
/// Rows of equal `λ2` run in parallel. Within a row the fits go from the
/// largest `λ1` down, each warm-started from the previous one, so results
/// do not depend on the thread count. A solver failure or non-convergence is
/// recorded on its point and does not stop the sweep.
pub fn grid_search_with(
    s: &EmpiricalCovariance,
    layout: &BlockLayout,
    grid: &GridSpec,
    template: &PenaltyConfig,
    settings: &SolverSettings,
    options: &SelectionOptions,
) -> Result<SelectionResult> {
    settings.validate()?;
    let n = s.n_source();
    if n < 2 {
        return Err(Error::TooFewReplicates { needed: 2, got: n });
    }
    if s.dim() != layout.dim() {
        return Err(Error::Dimension(format!(
            "covariance is {0}x{0}, layout needs {1}x{1}",
            s.dim(),
            layout.dim()
        )));
    }
    let n1 = grid.lambda1.len();
    let rows: Vec<Vec<(GridPoint, Option<PrecisionEstimate>)>> = grid
        .lambda2
        .par_iter()
        .map(|&l2| {
            let mut row = Vec::with_capacity(n1);
            let mut warm: Option<PrecisionEstimate> = None;
            for &l1 in grid.lambda1.iter().rev() {
                let fitted = template
                    .with_lambdas(l1, l2)
                    .and_then(|c| solve_warm(s, layout, &c, settings, warm.as_ref()));
                let point = match &fitted {
                    Ok(est) => {
                        let scores = information_criteria(est, s, n, options.df);
                        GridPoint {
                            lambda1: l1,
                            lambda2: l2,
                            converged: est.converged(),
                            iterations: est.diagnostics().iterations,
                            edges: est.edge_set().len(),
                            error: scores.as_ref().err().map(ToString::to_string),
                            scores: scores.ok(),
                        }
                    }
                    Err(e) => GridPoint {
                        lambda1: l1,
                        lambda2: l2,
                        scores: None,
                        converged: false,
                        iterations: 0,
                        edges: 0,
                        error: Some(e.to_string()),
                    },
                };
                let est = fitted.ok();
                if est.is_some() {
                    warm = est.clone();
                }
                row.push((point, est));
            }
            row.reverse();
            row
        })
        .collect();

    let (points, mut estimates): (Vec<_>, Vec<_>) = rows.into_iter().flatten().unzip();
    let mut best = BTreeMap::new();
    for c in Criterion::ALL {
        let winner = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.converged)
            .filter_map(|(i, p)| p.scores.map(|s| (i, s)))
            .min_by(|(i, a), (j, b)| {
                a.get(c)
                    .total_cmp(&b.get(c))
                    .then(a.df.cmp(&b.df))
                    .then(i.cmp(j))
            });
        if let Some((i, _)) = winner {
            best.insert(c, i);
        }
    }
    if !options.retain_all {
        for (i, e) in estimates.iter_mut().enumerate() {
            if !best.values().any(|&b| b == i) {
                *e = None;
            }
        }
    }
    Ok(SelectionResult {
        grid: grid.clone(),
        df_convention: options.df,
        points,
        best,
        estimates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub subsamples: usize,
    /// Share of replicates drawn, without replacement, per subsample.
    pub fraction: f64,
    pub threshold: f64,
    pub seed: u64,
    /// Standardize each subsample before computing its covariance.
    pub standardize: bool,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            subsamples: 100,
            fraction: 0.5,
            threshold: 0.8,
            seed: 0,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrequency {
    pub p: usize,
    pub q: usize,
    pub block: BlockDescriptor,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    /// Every unmasked upper-triangular coordinate, in coordinate order.
    pub frequencies: Vec<EdgeFrequency>,
    pub threshold: f64,
    pub subsamples: usize,
    pub subsample_size: usize,
    /// Subsample fits that hit the iteration limit. Their estimates are
    /// still counted.
    pub unconverged: usize,
}

impl StabilityResult {
    pub fn stable_edges(&self) -> Vec<EdgeFrequency> {
        self.frequencies
            .iter()
            .filter(|e| e.frequency >= self.threshold)
            .copied()
            .collect()
    }

    /// `edge,p,q,frequency` with the block descriptor as the edge label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge,p,q,frequency\n");
        for e in &self.frequencies {
            let _ = writeln!(out, "{},{},{},{}", e.block, e.p, e.q, e.frequency);
        }
        out
    }
}

/// Sorted index sets of `floor(fraction·n)` rows each, one per subsample.
/// Subsample `b` uses stream `b` of a ChaCha8 generator seeded with `seed`.
pub fn subsample_indices(
    n: usize,
    subsamples: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if subsamples < 2 {
        return Err(Error::InvalidParameter("need at least 2 subsamples".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "subsample fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let m = (fraction * n as f64).floor() as usize;
    if m < 2 {
        return Err(Error::TooFewReplicates { needed: 2, got: m });
    }
    Ok((0..subsamples)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut idx = index::sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect())
}

/// Edge selection frequencies over random subsamples at a fixed penalty.
pub fn stability_selection(
    data: &TimeCourseDataset,
    layout: &BlockLayout,
    config: &PenaltyConfig,
    settings: &SolverSettings,
    options: &StabilityOptions,
) -> Result<StabilityResult> {
    let sets = subsample_indices(data.n(), options.subsamples, options.fraction, options.seed)?;
    stability_selection_with_indices(
        data,
        layout,
        config,
        settings,
        &sets,
        options.threshold,
        options.standardize,
    )
}

/// Stability selection over caller-supplied subsamples. Rows are taken in
/// the order given.
pub fn stability_selection_with_indices(
    data: &TimeCourseDataset,
    layout: &BlockLayout,
    config: &PenaltyConfig,
    settings: &SolverSettings,
    index_sets: &[Vec<usize>],
    threshold: f64,
    standardize: bool,
) -> Result<StabilityResult> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "stability threshold must lie in [0, 1], got {threshold}"
        )));
    }
    if index_sets.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 subsamples".into()));
    }
    let size = index_sets[0].len();
    if size < 2 {
        return Err(Error::TooFewReplicates { needed: 2, got: size });
    }
    if let Some(bad) = index_sets.iter().flatten().find(|&&i| i >= data.n()) {
        return Err(Error::InvalidParameter(format!(
            "subsample row {bad} out of range for {} replicates",
            data.n()
        )));
    }
    let fits: Vec<PrecisionEstimate> = index_sets
        .par_iter()
        .map(|rows| {
            let mut sub = data.select_rows(rows);
            if standardize {
                sub = sub.standardize()?;
            }
            solve(&sub.empirical_covariance()?, layout, config, settings)
        })
        .collect::<Result<_>>()?;

    let dim = layout.dim();
    let mut frequencies = Vec::new();
    for p in 0..dim {
        for q in p + 1..dim {
            if config.mask.is_masked(p, q) {
                continue;
            }
            let hits = fits
                .iter()
                .filter(|e| e.theta()[(p, q)].abs() > e.edge_threshold())
                .count();
            frequencies.push(EdgeFrequency {
                p,
                q,
                block: layout.classify(p, q),
                frequency: hits as f64 / fits.len() as f64,
            });
        }
    }
    Ok(StabilityResult {
        frequencies,
        threshold,
        subsamples: fits.len(),
        subsample_size: size,
        unconverged: fits.iter().filter(|e| !e.converged()).count(),
    })
}
