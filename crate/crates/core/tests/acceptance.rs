//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p gldelta --test acceptance`.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::{glasso_oracle, random_covariance, random_spd};
use gldelta::evaluation::{confusion, graph_diff, ConfusionMetrics};
use gldelta::selection::{log_space, Criterion, GridSpec};
use gldelta::simulation::{generate_network, run_study, sample_gaussian, ScenarioSpec, StudyOptions};
use gldelta::solver::{check_optimality, solve};
use gldelta::{
    BlockLayout, DifferenceMap, EmpiricalCovariance, PenaltyConfig, PrecisionEstimate,
    SolverSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: Option<bool>,
    detail: String,
}

fn symmetric_pd(est: &PrecisionEstimate) -> bool {
    let t = est.theta();
    t == &t.transpose() && t.clone().cholesky().is_some()
}

/// λ2 = 0 reduces to the graphical lasso.
fn glasso_reduction(pd_ok: &mut bool) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for k in 0..25 {
        let dim = rng.random_range(2..=10);
        let s = EmpiricalCovariance::from_matrix(random_spd(dim, 1000 + k), 100).unwrap();
        let lambda = rng.random_range(0.02..0.3);
        let layout = BlockLayout::new(dim, 1, 0).unwrap();
        let config = PenaltyConfig::new(&layout, lambda, 0.0).unwrap();
        let est = solve(&s, &layout, &config, &SolverSettings::default()).unwrap();
        *pd_ok &= est.converged() && symmetric_pd(&est);
        let oracle = glasso_oracle(s.matrix(), lambda);
        worst = worst.max((est.theta() - oracle).amax());
    }
    Outcome {
        id: "1",
        title: "graphical-lasso reduction",
        pass: Some(worst <= 1e-4),
        detail: format!("max |Θ̂ − oracle| = {worst:.2e} over 25 instances (tol 1e-4)"),
    }
}

/// Sampled directional derivatives are nonnegative at the estimate.
fn certificate(pd_ok: &mut bool) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = f64::INFINITY;
    let mut unconverged = 0;
    for k in 0..50u64 {
        let l1 = [0.01, 0.1, 0.5][k as usize % 3];
        let l2 = [0.0, 0.1, 1.0][(k as usize / 3) % 3];
        let times = rng.random_range(1..=3);
        let genes = rng.random_range(2..=60 / times);
        let layout = BlockLayout::new(genes, times, times.min(2) - 1).unwrap();
        let dim = layout.dim();
        let n = rng.random_range(dim / 2 + 2..=2 * dim + 10);
        let s = random_covariance(dim, n, 2000 + k);
        let config = PenaltyConfig::new(&layout, l1, l2).unwrap();
        let d = config.difference_map(&layout);
        let est = solve(&s, &layout, &config, &SolverSettings::default()).unwrap();
        if !est.converged() {
            unconverged += 1;
        }
        *pd_ok &= symmetric_pd(&est);
        let report = check_optimality(&est, &s, &d, 200, k).unwrap();
        worst = worst.min(report.worst_derivative);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: "2",
        title: "optimality certificate",
        pass: Some(worst >= -1e-5 && unconverged == 0 && secs < 300.0),
        detail: format!(
            "worst directional derivative {worst:.2e} over 50 instances x 200 directions \
             (tol -1e-5), {unconverged} unconverged, {secs:.1}s (budget 300s)"
        ),
    }
}

/// Sparsity and fusion limits.
fn limits(pd_ok: &mut bool) -> Outcome {
    let tight = SolverSettings {
        tol: 1e-8,
        ..SolverSettings::default()
    };
    let mut diag_err = 0.0f64;
    let mut offdiag = 0.0f64;
    let mut fused = 0.0f64;
    for k in 0..10u64 {
        let layout = BlockLayout::new(4, 3, 1).unwrap();
        let s = random_covariance(12, 20 + k as usize, 3000 + k);
        let lambda = s.max_abs_offdiag();
        let config = PenaltyConfig::new(&layout, lambda, 0.0).unwrap();
        let est = solve(&s, &layout, &config, &tight).unwrap();
        *pd_ok &= est.converged() && symmetric_pd(&est);
        let t = est.theta();
        for p in 0..12 {
            diag_err = diag_err.max((t[(p, p)] - 1.0 / s.matrix()[(p, p)]).abs());
            for q in 0..12 {
                if p != q {
                    offdiag = offdiag.max(t[(p, q)].abs());
                }
            }
        }

        let s = random_covariance(12, 40, 3100 + k);
        let config = PenaltyConfig::new(&layout, 0.05, 1e4).unwrap();
        let d = config.difference_map(&layout);
        let est = solve(&s, &layout, &config, &SolverSettings::default()).unwrap();
        *pd_ok &= est.converged() && symmetric_pd(&est);
        fused = fused.max(d.apply(est.theta()).iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Outcome {
        id: "3",
        title: "limiting behaviour",
        pass: Some(offdiag == 0.0 && diag_err <= 1e-6 && fused <= 1e-4),
        detail: format!(
            "(a) max |offdiag| {offdiag:.1e}, max |θ̂_pp − 1/S_pp| {diag_err:.2e} (tol 1e-6); \
             (b) max |D vec Θ̂| {fused:.2e} (tol 1e-4); 10 instances each"
        ),
    }
}

/// Scenario-1 study, 20 replicates, information-criterion selection.
fn study() -> Outcome {
    let spec = ScenarioSpec::scenario(1).unwrap();
    let grid = GridSpec::new(
        log_space(0.03, 0.8, 14).unwrap(),
        vec![0.0, 0.1, 0.2, 0.4, 0.8, 1.6],
    )
    .unwrap();
    let r = run_study(
        "1",
        &spec,
        20,
        &grid,
        &SolverSettings::default(),
        &StudyOptions::default(),
    )
    .unwrap();
    let get = |c| r.summary_for(c).unwrap();
    let (aicc, bic, aic) = (get(Criterion::Aicc), get(Criterion::Bic), get(Criterion::Aic));
    let band = aicc.fp <= 0.05 && aicc.fn_ <= 0.25;
    let order = aicc.fp < bic.fp && bic.fp < aic.fp;
    let complete = r.failed() == 0 && aicc.replicates == 20;
    Outcome {
        id: "4",
        title: "simulation-study reproduction",
        pass: Some(band && order && complete && r.seconds < 1800.0),
        detail: format!(
            "AICc FP {:.4} (≤ 0.05) FN {:.4} (≤ 0.25); FP order AICc {:.4} < BIC {:.4} < AIC {:.4}: {}; \
             AIC FN {:.4}, BIC FN {:.4}; {} failed replicates; {:.0}s (budget 1800s)",
            aicc.fp,
            aicc.fn_,
            aicc.fp,
            bic.fp,
            aic.fp,
            if order { "holds" } else { "violated" },
            aic.fn_,
            bic.fn_,
            r.failed(),
            r.seconds
        ),
    }
}

/// One fit at the largest scenario size.
fn scale(pd_ok: &mut bool) -> Outcome {
    let spec = ScenarioSpec::scenario(4).unwrap();
    let net = generate_network(&spec).unwrap();
    let data = sample_gaussian(&net, spec.n, 44).unwrap().standardize().unwrap();
    let s = data.empirical_covariance().unwrap();
    let config = PenaltyConfig::new(&net.layout, 0.3, 0.2).unwrap();
    let start = Instant::now();
    let est = solve(&s, &net.layout, &config, &SolverSettings::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    *pd_ok &= symmetric_pd(&est);
    Outcome {
        id: "5",
        title: "scale check",
        pass: Some(est.converged() && secs < 600.0),
        detail: format!(
            "dim {} n {} at (λ1, λ2) = (0.3, 0.2): converged {} in {} iterations, {secs:.1}s (budget 600s)",
            net.layout.dim(),
            spec.n,
            est.converged(),
            est.diagnostics().iterations
        ),
    }
}

/// The expression dataset is not shipped; the stored estimate replaces it.
fn table1_fixture() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/table1_theta.txt");
    let theta = gldelta::io::load_matrix(path).unwrap();
    let layout = BlockLayout::new(4, 2, 1).unwrap();
    let config = PenaltyConfig::new(&layout, 0.01, 0.1).unwrap();
    let est = PrecisionEstimate::from_parts(theta, layout, config, 1e-4).unwrap();
    let r = graph_diff(&est, 0).unwrap();
    let pairs = |v: &[gldelta::evaluation::EdgeChange]| -> Vec<(usize, usize)> {
        v.iter().map(|e| (e.gene_i, e.gene_j)).collect()
    };
    // genes ZNF, CCN, SIV, SCY
    let ok = pairs(&r.born) == vec![(0, 1)] && pairs(&r.died) == vec![(0, 2)];
    Outcome {
        id: "6",
        title: "T-cell fixture",
        pass: if ok { None } else { Some(false) },
        detail: format!(
            "dataset not supplied, criterion waived; stored-fixture diff {}: born ZNF–CCN, died ZNF–SIV",
            if ok { "PASS" } else { "FAIL" }
        ),
    }
}

/// Condensed re-run of the invariant suites.
fn properties(pd_ok: bool) -> Outcome {
    let mut failures: Vec<&str> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(707);

    // layout bijection and block round-trip
    for _ in 0..20 {
        let g = rng.random_range(1..6);
        let t = rng.random_range(1..5);
        let layout = BlockLayout::new(g, t, rng.random_range(0..t)).unwrap();
        let mut seen = BTreeSet::new();
        for gene in 0..g {
            for time in 0..t {
                let p = layout.index(gene, time);
                seen.insert(p);
                if layout.gene_of(p) != gene || layout.time_of(p) != time {
                    failures.push("index bijection");
                }
            }
        }
        if seen.len() != layout.dim() {
            failures.push("index bijection");
        }
        for p in 0..layout.dim() {
            for q in p..layout.dim() {
                let b = layout.classify(p, q);
                if layout.locate(&b) != (p, q) {
                    failures.push("block round-trip");
                }
            }
        }
        // difference rows: +1 at the earlier and −1 at the later time, same
        // lag and pair, so every row has norm √2
        let d = DifferenceMap::build(&layout, true);
        for r in d.rows() {
            let (a, b) = (layout.classify(r.plus.0, r.plus.1), layout.classify(r.minus.0, r.minus.1));
            if r.plus == r.minus
                || a.lag != b.lag
                || (a.gene_i, a.gene_j) != (b.gene_i, b.gene_j)
                || b.time != a.time + 1
            {
                failures.push("difference rows");
            }
        }
    }

    if !pd_ok {
        failures.push("estimates symmetric and PD");
    }

    // confusion identities
    for _ in 0..50 {
        let u: BTreeSet<usize> = (0..rng.random_range(1..40)).collect();
        let pick = |rng: &mut ChaCha8Rng| -> BTreeSet<usize> {
            u.iter().copied().filter(|_| rng.random::<f64>() < 0.3).collect()
        };
        let (est, truth) = (pick(&mut rng), pick(&mut rng));
        let m = confusion(&est, &truth, &u).unwrap();
        let again = ConfusionMetrics::from_counts(m.tp, m.fp, m.tn, m.fn_);
        if m.total() != u.len() || again != m {
            failures.push("confusion identities");
        }
    }

    // sampler moments and determinism
    let spec = ScenarioSpec {
        genes: 4,
        times: 2,
        m0: 3,
        births: 1,
        deaths: 1,
        ..ScenarioSpec::default()
    };
    let net = generate_network(&spec).unwrap();
    if generate_network(&spec).unwrap() != net {
        failures.push("network determinism");
    }
    let a = sample_gaussian(&net, 10_000, 1).unwrap();
    if a.values() != sample_gaussian(&net, 10_000, 1).unwrap().values() {
        failures.push("sampler determinism");
    }
    let sigma = net.theta.clone().try_inverse().unwrap();
    let s = a.empirical_covariance().unwrap();
    for i in 0..sigma.nrows() {
        for j in 0..sigma.nrows() {
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / 10_000.0).sqrt();
            if (s.matrix()[(i, j)] - sigma[(i, j)]).abs() >= 5.0 * se {
                failures.push("sampler moments");
            }
        }
    }

    failures.dedup();
    Outcome {
        id: "7",
        title: "property suites",
        pass: Some(failures.is_empty()),
        detail: if failures.is_empty() {
            "layout bijection, block round-trip, difference rows, PD/symmetry of every estimate \
             above, confusion identities, sampler moments and determinism hold; full suites run \
             as the other test targets"
                .into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    }
}

fn main() {
    let mut pd_ok = true;
    let mut outcomes = vec![
        glasso_reduction(&mut pd_ok),
        certificate(&mut pd_ok),
        limits(&mut pd_ok),
    ];
    outcomes.push(study());
    outcomes.push(scale(&mut pd_ok));
    outcomes.push(table1_fixture());
    outcomes.push(properties(pd_ok));

    println!();
    for o in &outcomes {
        let status = match o.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "WAIVED",
        };
        println!("acceptance {} {:<30} {status}  {}", o.id, o.title, o.detail);
    }
    let failed = outcomes.iter().filter(|o| o.pass == Some(false)).count();
    println!("\nacceptance: {} criteria, {failed} failed\n", outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
