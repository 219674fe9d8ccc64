use gldelta::selection::{Criterion, GridSpec};
use gldelta::simulation::{generate_network, run_study, sample_gaussian, ScenarioSpec, StudyOptions};
use gldelta::SolverSettings;

#[test]
fn sample_covariance_matches_truth() {
    let spec = ScenarioSpec {
        genes: 5,
        times: 2,
        m0: 4,
        births: 1,
        deaths: 1,
        ..ScenarioSpec::default()
    };
    let net = generate_network(&spec).unwrap();
    let sigma = net.theta.clone().try_inverse().unwrap();
    let n = 10_000;
    let s = sample_gaussian(&net, n, 42)
        .unwrap()
        .empirical_covariance()
        .unwrap();
    let d = sigma.nrows();
    for i in 0..d {
        for j in 0..d {
            // var of a sample covariance: (σ_ii σ_jj + σ_ij²) / n
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n as f64).sqrt();
            let err = (s.matrix()[(i, j)] - sigma[(i, j)]).abs();
            assert!(err < 5.0 * se, "({i},{j}): {err} vs se {se}");
        }
    }
}

#[test]
fn study_is_reproducible() {
    let spec = ScenarioSpec {
        genes: 6,
        times: 2,
        m0: 4,
        births: 1,
        deaths: 1,
        n: 30,
        seed: 5,
        ..ScenarioSpec::default()
    };
    let grid = GridSpec::new(vec![0.1, 0.3], vec![0.0, 0.2]).unwrap();
    let settings = SolverSettings::default();
    let a = run_study("small", &spec, 1, &grid, &settings, &StudyOptions::default()).unwrap();
    let b = run_study("small", &spec, 1, &grid, &settings, &StudyOptions::default()).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.replicates[0].outcomes, b.replicates[0].outcomes);
    let csv = a.to_csv();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "scenario,criterion,fp,fn,fd,fnd");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("small,AIC,"));
    assert_eq!(a.failed(), 0);
}

#[test]
fn empty_truth_has_zero_false_negatives() {
    let spec = ScenarioSpec {
        genes: 6,
        times: 2,
        m0: 0,
        births: 0,
        deaths: 0,
        autocorrelation: 0.0,
        n: 40,
        ..ScenarioSpec::default()
    };
    let grid = GridSpec::single(0.15, 0.1).unwrap();
    let r = run_study("null", &spec, 2, &grid, &SolverSettings::default(), &StudyOptions::default())
        .unwrap();
    for rep in &r.replicates {
        for o in &rep.outcomes {
            let m = &o.metrics;
            assert_eq!(m.fn_rate, 0.0);
            assert_eq!(m.tp + m.fn_, 0);
            // every selected pair is spurious
            assert_eq!(m.fp_rate, m.fp as f64 / m.total() as f64);
        }
    }
    assert_eq!(r.summary_for(Criterion::Aicc).unwrap().replicates, 2);
}

#[test]
fn failed_replicates_are_recorded() {
    // more deaths than edges: every replicate fails, the study does not
    let spec = ScenarioSpec {
        genes: 4,
        times: 2,
        m0: 1,
        births: 0,
        deaths: 2,
        n: 20,
        ..ScenarioSpec::default()
    };
    let grid = GridSpec::single(0.2, 0.0).unwrap();
    let r = run_study("bad", &spec, 2, &grid, &SolverSettings::default(), &StudyOptions::default())
        .unwrap();
    assert_eq!(r.failed(), 2);
    assert!(r.summary.iter().all(|s| s.replicates == 0 && s.fp.is_nan()));
}
