//! Penalized log-det estimation of a dynamic precision matrix.
//!
//! Minimizes
//!
//! ```text
//! −log det Θ + tr(SΘ) + λ1 Σ_{p≠q} |θ_pq| + λ2 Σ_{p≠q} |(DΘ)_pq|
//! ```
//!
//! over symmetric positive definite `Θ` with the lag mask forced to zero.
//! Both penalties run over the full matrix, so each symmetric pair of
//! entries (and each symmetric pair of fused differences) is counted twice;
//! with this convention the empty graph is optimal exactly when
//! `λ1 ≥ max_{p≠q} |S_pq|`, matching the usual graphical lasso scaling.
//!
//! The solver is a two-block ADMM splitting `Θ = Z`:
//!
//! * the `Θ` step is the log-det proximal map, solved in closed form from one
//!   symmetric eigendecomposition and always positive definite;
//! * the `Z` step carries both ℓ1 terms. Coordinates sharing a lag and a gene
//!   pair form a time chain, and the fused lasso prox on a chain is the exact
//!   1D total-variation solution soft-thresholded by `λ1/ρ`.
//!
//! The slack pairs of the equality-constrained formulation (`x⁺ − x⁻` for the
//! entries, `y⁺ − y⁻` for the differences) are never materialized: at the
//! optimum `x⁺ + x⁻ = |Z_pq|` and `y⁺ + y⁻ = |(DZ)_r|`, which is exactly the
//! penalty evaluated on `Z`. The scaled dual `U` plays the role of their
//! multipliers.
//!
//! The returned matrix is the `Z` iterate, so zeros and fused equalities are
//! exact. Near-zero entries can still occur when a coordinate is only just
//! active; [`SolverSettings::edge_threshold`] decides what counts as an edge.

mod certificate;
pub mod tv;

pub use certificate::{check_optimality, directional_derivative, CertificateReport};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::EmpiricalCovariance;
use crate::error::{Error, Result};
use crate::structure::{BlockDescriptor, BlockLayout, DifferenceMap, SupportMask};

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub penalize_diagonal: bool,
    /// Fuse lagged self-self coordinates as well as network coordinates.
    pub fuse_self_self: bool,
    pub mask: SupportMask,
}

impl PenaltyConfig {
    /// Penalties with the layout's lag mask and default flags.
    pub fn new(layout: &BlockLayout, lambda1: f64, lambda2: f64) -> Result<Self> {
        let c = Self {
            lambda1,
            lambda2,
            penalize_diagonal: false,
            fuse_self_self: true,
            mask: layout.forced_zero_mask(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_lambdas(&self, lambda1: f64, lambda2: f64) -> Result<Self> {
        let c = Self {
            lambda1,
            lambda2,
            ..self.clone()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn difference_map(&self, layout: &BlockLayout) -> DifferenceMap {
        DifferenceMap::build(layout, self.fuse_self_self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Stationarity tolerance in gradient units, the same scale as the
    /// directional derivatives of [`check_optimality`].
    pub tol: f64,
    pub max_iter: usize,
    /// Initial augmented Lagrangian parameter.
    pub rho: f64,
    /// Rebalance `rho` when one residual dominates the other.
    pub adaptive_rho: bool,
    /// Entries with magnitude at or below this are not edges.
    pub edge_threshold: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            rho: 1.0,
            adaptive_rho: true,
            edge_threshold: 1e-4,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.rho > 0.0) {
            return Err(Error::InvalidParameter(
                "solver settings need tol > 0, max_iter >= 1 and rho > 0".into(),
            ));
        }
        if !(self.edge_threshold >= 0.0) {
            return Err(Error::InvalidParameter("edge_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub rho: f64,
    /// Objective at the `Θ` iterate, one entry per iteration.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

/// An off-diagonal entry above the edge threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
    pub block: BlockDescriptor,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    theta: DMatrix<f64>,
    layout: BlockLayout,
    config: PenaltyConfig,
    edge_threshold: f64,
    diagnostics: Diagnostics,
    /// Unscaled dual `ρU`, kept for warm starts.
    dual: DMatrix<f64>,
}

impl PrecisionEstimate {
    /// Wrap an existing matrix, e.g. one read back from disk. The matrix must
    /// be symmetric positive definite and zero on the mask.
    pub fn from_parts(
        theta: DMatrix<f64>,
        layout: BlockLayout,
        config: PenaltyConfig,
        edge_threshold: f64,
    ) -> Result<Self> {
        let d = layout.dim();
        if theta.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, layout needs {d}x{d}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        if (&theta - theta.transpose()).amax() > 1e-10 * theta.amax().max(1.0) {
            return Err(Error::InvalidParameter("matrix is not symmetric".into()));
        }
        if config.mask.entries().iter().any(|&pq| theta[pq] != 0.0) {
            return Err(Error::InvalidParameter(
                "matrix has nonzero entries in the forced-zero mask".into(),
            ));
        }
        if theta.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            dual: DMatrix::zeros(d, d),
            theta,
            layout,
            config,
            edge_threshold,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Attach diagnostics, e.g. those stored next to a matrix on disk.
    pub fn with_diagnostics(mut self, diagnostics: Diagnostics) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn config(&self) -> &PenaltyConfig {
        &self.config
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.converged
    }

    pub fn edge_threshold(&self) -> f64 {
        self.edge_threshold
    }

    pub fn set_edge_threshold(&mut self, threshold: f64) {
        self.edge_threshold = threshold;
    }

    /// Turn a non-converged estimate into an error carrying it.
    pub fn require_converged(self) -> Result<Self> {
        if self.diagnostics.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.diagnostics.iterations,
                estimate: Box::new(self),
            })
        }
    }

    /// Unmasked upper-triangular off-diagonal entries with
    /// `|θ| > edge_threshold`, ordered by coordinate.
    pub fn edge_set(&self) -> Vec<Edge> {
        let d = self.layout.dim();
        let mut out = Vec::new();
        for p in 0..d {
            for q in p + 1..d {
                let w = self.theta[(p, q)];
                if w.abs() > self.edge_threshold && !self.config.mask.is_masked(p, q) {
                    out.push(Edge {
                        p,
                        q,
                        block: self.layout.classify(p, q),
                        weight: w,
                    });
                }
            }
        }
        out
    }
}

/// Penalty part of the objective.
pub fn penalty(theta: &DMatrix<f64>, config: &PenaltyConfig, d: &DifferenceMap) -> f64 {
    let dim = theta.nrows();
    let mut l1 = 0.0;
    for p in 0..dim {
        for q in p + 1..dim {
            if !config.mask.is_masked(p, q) {
                l1 += 2.0 * theta[(p, q)].abs();
            }
        }
    }
    if config.penalize_diagonal {
        l1 += theta.diagonal().iter().map(|v| v.abs()).sum::<f64>();
    }
    let fused: f64 = d.apply(theta).iter().map(|v| 2.0 * v.abs()).sum();
    config.lambda1 * l1 + config.lambda2 * fused
}

/// Penalized negative log-likelihood (up to constants and the factor `n/2`).
pub fn objective(
    theta: &DMatrix<f64>,
    s: &EmpiricalCovariance,
    config: &PenaltyConfig,
    d: &DifferenceMap,
) -> Result<f64> {
    let chol = theta.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-logdet + trace_product(s.matrix(), theta) + penalty(theta, config, d))
}

/// `tr(AB)` for symmetric `A`, `B`.
pub(crate) fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn solve(
    s: &EmpiricalCovariance,
    layout: &BlockLayout,
    config: &PenaltyConfig,
    settings: &SolverSettings,
) -> Result<PrecisionEstimate> {
    solve_warm(s, layout, config, settings, None)
}

/// Like [`solve`], starting from a previous estimate on the same layout.
pub fn solve_warm(
    s: &EmpiricalCovariance,
    layout: &BlockLayout,
    config: &PenaltyConfig,
    settings: &SolverSettings,
    warm: Option<&PrecisionEstimate>,
) -> Result<PrecisionEstimate> {
    config.validate()?;
    settings.validate()?;
    let dim = layout.dim();
    if s.dim() != dim || config.mask.dim() != dim {
        return Err(Error::Dimension(format!(
            "covariance is {0}x{0}, mask {1}x{1}, layout needs {2}x{2}",
            s.dim(),
            config.mask.dim(),
            dim
        )));
    }
    let smat = s.matrix();
    if (!config.penalize_diagonal || config.lambda1 == 0.0)
        && smat.diagonal().iter().any(|&v| !(v > 0.0))
    {
        return Err(Error::SingularCovariance);
    }
    if config.lambda1 == 0.0 {
        let eig = smat.clone().symmetric_eigenvalues();
        if eig.min() <= 1e-10 * eig.max().abs().max(f64::MIN_POSITIVE) {
            return Err(Error::SingularCovariance);
        }
    }

    let dmap = config.difference_map(layout);
    let mut admm = Admm::new(smat, config, &dmap, settings, warm);
    admm.run();
    admm.finish(*layout, config.clone(), s, &dmap, settings)
}

struct Admm<'a> {
    s: &'a DMatrix<f64>,
    config: &'a PenaltyConfig,
    dmap: &'a DifferenceMap,
    settings: &'a SolverSettings,
    rho: f64,
    theta: DMatrix<f64>,
    z: DMatrix<f64>,
    /// scaled dual
    u: DMatrix<f64>,
    iterations: usize,
    converged: bool,
    r_norm: f64,
    s_norm: f64,
    /// smallest eigenvalue of the last `Θ` iterate
    theta_min: f64,
    trace: Vec<f64>,
    chain_in: Vec<f64>,
    chain_out: Vec<f64>,
}

impl<'a> Admm<'a> {
    fn new(
        s: &'a DMatrix<f64>,
        config: &'a PenaltyConfig,
        dmap: &'a DifferenceMap,
        settings: &'a SolverSettings,
        warm: Option<&PrecisionEstimate>,
    ) -> Self {
        let dim = s.nrows();
        let (rho, z, u) = match warm {
            Some(w) if w.theta.nrows() == dim => {
                let rho = if w.diagnostics.rho > 0.0 {
                    w.diagnostics.rho
                } else {
                    settings.rho
                };
                (rho, w.theta.clone(), &w.dual / rho)
            }
            _ => {
                let diag = s.diagonal().map(|v| if v > 0.0 { 1.0 / v } else { 1.0 });
                (
                    settings.rho,
                    DMatrix::from_diagonal(&diag),
                    DMatrix::zeros(dim, dim),
                )
            }
        };
        let longest = dmap.chains().iter().map(Vec::len).max().unwrap_or(0);
        Self {
            s,
            config,
            dmap,
            settings,
            rho,
            theta: z.clone(),
            z,
            u,
            iterations: 0,
            converged: false,
            r_norm: f64::INFINITY,
            s_norm: f64::INFINITY,
            theta_min: 1.0,
            trace: Vec::new(),
            chain_in: vec![0.0; longest],
            chain_out: vec![0.0; longest],
        }
    }

    fn run(&mut self) {
        let mut z_old = self.z.clone();
        for it in 0..self.settings.max_iter {
            self.iterations = it + 1;
            let logdet = self.theta_step();

            z_old.copy_from(&self.z);
            let mut a = &self.theta + &self.u;
            symmetrize(&mut a);
            self.z_step(&a);

            self.u += &self.theta - &self.z;

            let obj = -logdet
                + trace_product(self.s, &self.theta)
                + penalty(&self.theta, self.config, self.dmap);
            self.trace.push(obj);

            self.r_norm = (&self.theta - &self.z).norm();
            self.s_norm = self.rho * (&self.z - &z_old).norm();
            // Both residuals in gradient units: ‖Θ⁻¹ − Z⁻¹‖ is at most
            // ‖Θ − Z‖ / λmin(Θ)² to first order, and ρ‖ΔZ‖ is the dual gap.
            // Keeping their sum under `tol` bounds the certificate.
            let rp = self.r_norm / (self.theta_min * self.theta_min);
            let rd = self.s_norm;
            if rp <= 0.5 * self.settings.tol && rd <= 0.5 * self.settings.tol {
                self.converged = true;
                break;
            }

            // ρ is balanced on the raw primal residual; the scaled one
            // overshoots on ill-conditioned problems.
            if self.settings.adaptive_rho && it < self.settings.max_iter / 2 && it % 5 == 4 {
                let rp = self.r_norm;
                if rp > 10.0 * rd {
                    self.rho *= 2.0;
                    self.u /= 2.0;
                } else if rd > 10.0 * rp {
                    self.rho /= 2.0;
                    self.u *= 2.0;
                }
            }
        }
    }

    /// `Θ = argmin −log det Θ + tr(SΘ) + ρ/2 ‖Θ − (Z − U)‖²`. Returns log det Θ.
    fn theta_step(&mut self) -> f64 {
        let mut m = (&self.z - &self.u) * self.rho - self.s;
        symmetrize(&mut m);
        let eig = SymmetricEigen::new(m);
        let rho = self.rho;
        let vals = eig.eigenvalues.map(|l| {
            let root = (l * l + 4.0 * rho).sqrt();
            // avoid cancellation for strongly negative eigenvalues
            if l >= 0.0 {
                (l + root) / (2.0 * rho)
            } else {
                2.0 / (root - l)
            }
        });
        self.theta_min = vals.min();
        let logdet = vals.iter().map(|v| v.ln()).sum();
        let q = &eig.eigenvectors;
        let mut scaled = q.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(vals.iter()) {
            col *= v;
        }
        self.theta = scaled * q.transpose();
        symmetrize(&mut self.theta);
        logdet
    }

    /// Proximal map of the penalties at `a` with weight `1/ρ`.
    fn z_step(&mut self, a: &DMatrix<f64>) {
        let dim = a.nrows();
        let thr = self.config.lambda1 / self.rho;
        let tv = self.config.lambda2 / self.rho;
        let mask = &self.config.mask;
        for p in 0..dim {
            self.z[(p, p)] = if self.config.penalize_diagonal {
                tv::soft_threshold(a[(p, p)], thr)
            } else {
                a[(p, p)]
            };
            for q in p + 1..dim {
                let v = if mask.is_masked(p, q) {
                    0.0
                } else {
                    tv::soft_threshold(a[(p, q)], thr)
                };
                self.z[(p, q)] = v;
                self.z[(q, p)] = v;
            }
        }
        if tv > 0.0 {
            for chain in self.dmap.chains() {
                let n = chain.len();
                for (slot, &pq) in self.chain_in.iter_mut().zip(chain) {
                    *slot = a[pq];
                }
                tv::fused_prox(
                    &self.chain_in[..n],
                    tv,
                    thr,
                    &mut self.chain_out[..n],
                );
                for (&v, &(p, q)) in self.chain_out.iter().zip(chain) {
                    self.z[(p, q)] = v;
                    self.z[(q, p)] = v;
                }
            }
        }
    }

    fn finish(
        self,
        layout: BlockLayout,
        config: PenaltyConfig,
        s: &EmpiricalCovariance,
        dmap: &DifferenceMap,
        settings: &SolverSettings,
    ) -> Result<PrecisionEstimate> {
        // Z carries the exact sparsity; fall back to the always-PD Θ iterate
        // if Z is not yet positive definite.
        let theta = if self.z.clone().cholesky().is_some() {
            self.z
        } else {
            let mut t = self.theta.clone();
            config.mask.apply(&mut t);
            if t.clone().cholesky().is_some() {
                t
            } else {
                self.theta
            }
        };
        let objective = objective(&theta, s, &config, dmap)?;
        let dual = &self.u * self.rho;
        Ok(PrecisionEstimate {
            theta,
            layout,
            config,
            edge_threshold: settings.edge_threshold,
            diagnostics: Diagnostics {
                iterations: self.iterations,
                converged: self.converged,
                primal_residual: self.r_norm,
                dual_residual: self.s_norm,
                objective,
                rho: self.rho,
                objective_trace: self.trace,
            },
            dual,
        })
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for p in 0..d {
        for q in p + 1..d {
            let v = 0.5 * (m[(p, q)] + m[(q, p)]);
            m[(p, q)] = v;
            m[(q, p)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, dim + 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        &a * a.transpose() / (dim + 3) as f64 + DMatrix::identity(dim, dim) * 0.1
    }

    fn cov(m: DMatrix<f64>) -> EmpiricalCovariance {
        EmpiricalCovariance::from_matrix(m, 100).unwrap()
    }

    #[test]
    fn identity_covariance_gives_identity() {
        for (g, t) in [(1, 1), (3, 2), (2, 3)] {
            let layout = BlockLayout::new(g, t, t - 1).unwrap();
            let s = cov(DMatrix::identity(g * t, g * t));
            let config = PenaltyConfig::new(&layout, 0.5, 0.0).unwrap();
            let est = solve(&s, &layout, &config, &SolverSettings::default()).unwrap();
            assert!(est.converged());
            assert!((est.theta() - DMatrix::identity(g * t, g * t)).amax() < 1e-6);
        }
    }

    #[test]
    fn objective_identity() {
        let layout = BlockLayout::new(3, 2, 1).unwrap();
        let d = layout.dim();
        let s = cov(DMatrix::identity(d, d));
        for l1 in [0.0, 1.0] {
            let config = PenaltyConfig::new(&layout, l1, 0.0).unwrap();
            let dm = config.difference_map(&layout);
            let v = objective(&DMatrix::identity(d, d), &s, &config, &dm).unwrap();
            assert!((v - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_matches_eigenvalue_recomputation() {
        let layout = BlockLayout::new(3, 3, 2).unwrap();
        let config = PenaltyConfig::new(&layout, 0.3, 0.7).unwrap();
        let dm = config.difference_map(&layout);
        for seed in 0..5 {
            let theta = random_spd(9, seed);
            let s = cov(random_spd(9, seed + 100));
            let got = objective(&theta, &s, &config, &dm).unwrap();

            let logdet: f64 = theta.clone().symmetric_eigenvalues().iter().map(|v| v.ln()).sum();
            let tr = (s.matrix() * &theta).trace();
            let mut pen = 0.0;
            for p in 0..9 {
                for q in 0..9 {
                    if p != q {
                        pen += 0.3 * theta[(p, q)].abs();
                    }
                }
            }
            for r in dm.rows() {
                pen += 0.7 * 2.0 * (theta[r.plus] - theta[r.minus]).abs();
            }
            assert!((got - (-logdet + tr + pen)).abs() < 1e-10);
        }
    }

    #[test]
    fn objective_rejects_indefinite() {
        let layout = BlockLayout::new(2, 1, 0).unwrap();
        let config = PenaltyConfig::new(&layout, 0.1, 0.0).unwrap();
        let dm = config.difference_map(&layout);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let s = cov(DMatrix::identity(2, 2));
        assert!(matches!(
            objective(&bad, &s, &config, &dm),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn singular_covariance_needs_l1() {
        let layout = BlockLayout::new(2, 1, 0).unwrap();
        let s = cov(DMatrix::from_element(2, 2, 1.0));
        let config = PenaltyConfig::new(&layout, 0.0, 0.0).unwrap();
        assert!(matches!(
            solve(&s, &layout, &config, &SolverSettings::default()),
            Err(Error::SingularCovariance)
        ));
        let config = PenaltyConfig::new(&layout, 0.1, 0.0).unwrap();
        let est = solve(&s, &layout, &config, &SolverSettings::default()).unwrap();
        assert!(est.converged());
    }

    #[test]
    fn unpenalized_solution_is_inverse() {
        let layout = BlockLayout::new(3, 2, 1).unwrap();
        let s = random_spd(6, 4);
        let config = PenaltyConfig::new(&layout, 0.0, 0.0).unwrap();
        let settings = SolverSettings {
            tol: 1e-9,
            ..Default::default()
        };
        let est = solve(&cov(s.clone()), &layout, &config, &settings).unwrap();
        let inv = s.try_inverse().unwrap();
        assert!((est.theta() - inv).amax() < 1e-6);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let layout = BlockLayout::new(3, 2, 1).unwrap();
        let config = PenaltyConfig::new(&layout, 0.1, 0.1).unwrap();
        let settings = SolverSettings {
            max_iter: 2,
            ..Default::default()
        };
        let est = solve(&cov(random_spd(6, 1)), &layout, &config, &settings).unwrap();
        assert!(!est.converged());
        assert_eq!(est.diagnostics().iterations, 2);
        assert!(matches!(
            est.require_converged(),
            Err(Error::NotConverged { iterations: 2, .. })
        ));
    }

    #[test]
    fn masked_entries_are_exactly_zero() {
        let layout = BlockLayout::new(2, 3, 0).unwrap();
        let config = PenaltyConfig::new(&layout, 0.05, 0.1).unwrap();
        let est = solve(&cov(random_spd(6, 8)), &layout, &config, &SolverSettings::default())
            .unwrap();
        for (p, q) in config.mask.entries() {
            assert_eq!(est.theta()[(p, q)], 0.0);
            assert_eq!(est.theta()[(q, p)], 0.0);
        }
    }

    #[test]
    fn edge_set_filters() {
        let layout = BlockLayout::new(2, 2, 1).unwrap();
        let config = PenaltyConfig::new(&layout, 0.0, 0.0).unwrap();
        let diag = PrecisionEstimate::from_parts(
            DMatrix::identity(4, 4) * 2.0,
            layout,
            config.clone(),
            1e-4,
        )
        .unwrap();
        assert!(diag.edge_set().is_empty());

        let mut est =
            PrecisionEstimate::from_parts(random_spd(4, 3), layout, config, 0.0).unwrap();
        let mut last = usize::MAX;
        for i in 0..=20 {
            est.set_edge_threshold(i as f64 / 20.0);
            let n = est.edge_set().len();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn from_parts_validates() {
        let layout = BlockLayout::new(2, 3, 1).unwrap();
        let config = PenaltyConfig::new(&layout, 0.0, 0.0).unwrap();
        let mut m = DMatrix::identity(6, 6);
        m[(0, 4)] = 0.1;
        m[(4, 0)] = 0.1;
        assert!(PrecisionEstimate::from_parts(m, layout, config.clone(), 1e-4).is_err());
        let m = DMatrix::identity(6, 6) * -1.0;
        assert!(matches!(
            PrecisionEstimate::from_parts(m, layout, config, 1e-4),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn negative_lambda_rejected() {
        let layout = BlockLayout::new(2, 1, 0).unwrap();
        assert!(PenaltyConfig::new(&layout, -0.1, 0.0).is_err());
        assert!(PenaltyConfig::new(&layout, 0.1, f64::NAN).is_err());
    }
}
