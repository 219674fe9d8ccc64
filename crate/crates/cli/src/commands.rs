use std::path::{Path, PathBuf};
use std::time::Instant;

use gldelta::evaluation::{diagnostics_csv, evolution_diagnostics, graph_diff, Panel};
use gldelta::io::{edge_list_csv, load_matrix, save_matrix, BlockReport};
use gldelta::selection::{
    grid_search_with, log_space, stability_selection, Criterion, GridSpec, SelectionOptions,
    StabilityOptions,
};
use gldelta::simulation::{
    generate_network, replicate_seeds, run_study, sample_gaussian, ScenarioSpec, StudyOptions,
};
use gldelta::{
    solve, BlockLayout, EmpiricalCovariance, PenaltyConfig, PrecisionEstimate, TimeCourseDataset,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{
    CliError, Command, DataArgs, DiffArgs, FitArgs, GridArgs, GridFlags, PenaltyArgs,
    ScenarioArgs, SimulateArgs, StabilityArgs, StudyArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Grid(a) => grid(a),
        Command::Simulate(a) => simulate(a),
        Command::Study(a) => study(a),
        Command::Stability(a) => stability(a),
        Command::Diff(a) => diff(a),
    }
}

/// Files written under one output directory, recorded for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl Outputs {
    fn create(dir: &Path, started: Instant) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started,
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        self.files.push(name.to_string());
        Ok(path)
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name)?;
        std::fs::write(&path, contents).map_err(|e| io_error(&path, e))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(gldelta::Error::from)?;
        self.text(name, &(text + "\n"))
    }

    fn estimate(&mut self, prefix: &str, est: &PrecisionEstimate, names: &[String], labels: &[String]) -> Result<()> {
        let report = BlockReport::from_estimate(est, names, labels)?;
        self.text(&format!("{prefix}report.json"), &(report.to_json()? + "\n"))?;
        let theta = self.path(&format!("{prefix}theta.txt"))?;
        save_matrix(theta, est.theta())?;
        self.text(&format!("{prefix}edges.csv"), &edge_list_csv(est, names, labels))?;
        let stats = evolution_diagnostics(est);
        self.text(&format!("{prefix}evolution.csv"), &diagnostics_csv(&stats, labels))
    }

    fn finish(mut self, command: &str, parameters: Value) -> Result<()> {
        let manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "arguments": std::env::args().skip(1).collect::<Vec<_>>(),
            "parameters": parameters,
            "files": self.files.clone(),
            "seconds": self.started.elapsed().as_secs_f64(),
        });
        self.json("manifest.json", &manifest)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(gldelta::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn default_lag_cap(times: usize) -> usize {
    times.saturating_sub(1).min(1)
}

fn load_data(a: &DataArgs) -> Result<(TimeCourseDataset, BlockLayout, EmpiricalCovariance)> {
    let layout = BlockLayout::new(a.genes, a.times, a.lag_cap.unwrap_or(default_lag_cap(a.times)))?;
    let data = TimeCourseDataset::load_csv_ordered(&a.data, a.genes, a.times, a.gene_order.as_deref())?;
    let data = if a.no_standardize { data } else { data.standardize()? };
    let s = data.empirical_covariance()?;
    Ok((data, layout, s))
}

fn penalty(layout: &BlockLayout, lambda1: f64, lambda2: f64, p: &PenaltyArgs) -> Result<PenaltyConfig> {
    let mut config = PenaltyConfig::new(layout, lambda1, lambda2)?;
    config.penalize_diagonal = p.penalize_diagonal;
    config.fuse_self_self = !p.no_fuse_self;
    Ok(config)
}

fn grid_spec(g: &GridFlags) -> Result<GridSpec> {
    let lambda1 = match (&g.lambda1, &g.lambda1_log) {
        (Some(v), _) => v.clone(),
        (None, Some(spec)) => {
            let [lo, hi, count] = spec[..] else {
                return Err(CliError::Usage("--lambda1-log takes lo,hi,count".into()));
            };
            if count < 1.0 || count.fract() != 0.0 {
                return Err(CliError::Usage(format!("--lambda1-log count must be a positive integer, got {count}")));
            }
            log_space(lo, hi, count as usize)?
        }
        (None, None) => log_space(0.03, 0.8, 14)?,
    };
    Ok(GridSpec::new(lambda1, g.lambda2.clone())?)
}

fn scenario_spec(a: &ScenarioArgs) -> Result<ScenarioSpec> {
    let mut spec = match a.scenario {
        Some(k) => ScenarioSpec::scenario(k)?,
        None => ScenarioSpec::default(),
    };
    macro_rules! set {
        ($($field:ident <- $arg:ident),*) => {
            $(if let Some(v) = a.$arg { spec.$field = v; })*
        };
    }
    set!(genes <- active_genes, independent_pad <- pad, times <- times, n <- n, m0 <- m0,
        births <- births, deaths <- deaths, autocorrelation <- autocorrelation, seed <- seed);
    spec.validate()?;
    Ok(spec)
}

fn fit(a: &FitArgs) -> Result<()> {
    let started = Instant::now();
    let settings = a.solver.settings();
    settings.validate()?;
    let (data, layout, s) = load_data(&a.data)?;
    let config = penalty(&layout, a.lambda1, a.lambda2, &a.penalty)?;
    let est = solve(&s, &layout, &config, &settings)?;

    let mut out = Outputs::create(&a.out, started)?;
    out.estimate("", &est, data.gene_names(), data.time_labels())?;
    let d = est.diagnostics();
    println!(
        "lambda1={} lambda2={} edges={} iterations={} converged={}",
        a.lambda1,
        a.lambda2,
        est.edge_set().len(),
        d.iterations,
        d.converged
    );
    out.finish(
        "fit",
        json!({ "lambda1": a.lambda1, "lambda2": a.lambda2, "settings": settings,
                "standardize": !a.data.no_standardize, "diagnostics": d }),
    )?;
    if !d.converged {
        return Err(CliError::NotConverged {
            message: format!("solver did not converge in {} iterations; outputs were written", d.iterations),
        });
    }
    Ok(())
}

fn grid(a: &GridArgs) -> Result<()> {
    let started = Instant::now();
    let settings = a.solver.settings();
    settings.validate()?;
    let grid = grid_spec(&a.grid)?;
    let (data, layout, s) = load_data(&a.data)?;
    let template = penalty(&layout, 0.0, 0.0, &a.penalty)?;
    let options = SelectionOptions {
        df: a.grid.df.into(),
        ..SelectionOptions::default()
    };
    let result = grid_search_with(&s, &layout, &grid, &template, &settings, &options)?;

    let mut out = Outputs::create(&a.out, started)?;
    out.text("scores.csv", &result.to_csv())?;
    out.json("selection.json", &result)?;
    for c in Criterion::ALL {
        if let Some(est) = result.best_estimate(c) {
            let prefix = format!("best_{}/", c.name().to_ascii_lowercase());
            out.estimate(&prefix, est, data.gene_names(), data.time_labels())?;
        }
    }
    let unconverged = result.points.iter().filter(|p| !p.converged).count();
    for c in [Criterion::Aicc, Criterion::Aic, Criterion::Bic] {
        match result.best_point(c) {
            Some(p) => println!(
                "{:<4} lambda1={} lambda2={} edges={} score={}",
                c.name(),
                p.lambda1,
                p.lambda2,
                p.edges,
                p.scores.map_or(f64::NAN, |s| s.get(c))
            ),
            None => println!("{:<4} no converged grid point", c.name()),
        }
    }
    if unconverged > 0 {
        eprintln!("warning: {unconverged} of {} grid points did not converge", result.points.len());
    }
    out.finish(
        "grid",
        json!({ "lambda1": grid.lambda1(), "lambda2": grid.lambda2(), "df": options.df,
                "settings": settings, "standardize": !a.data.no_standardize,
                "unconverged": unconverged }),
    )?;
    if result.best.is_empty() {
        return Err(CliError::NotConverged {
            message: "no grid point converged".into(),
        });
    }
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let spec = scenario_spec(&a.scenario)?;
    if a.datasets == 0 {
        return Err(CliError::Usage("--datasets must be at least 1".into()));
    }
    let net = generate_network(&spec)?;
    let samples = (0..a.datasets)
        .map(|r| sample_gaussian(&net, spec.n, replicate_seeds(spec.seed, r).1))
        .collect::<gldelta::Result<Vec<_>>>()?;

    let mut out = Outputs::create(&a.out, started)?;
    out.json("truth.json", &net)?;
    let theta = out.path("truth_theta.txt")?;
    save_matrix(theta, &net.theta)?;
    for (r, data) in samples.iter().enumerate() {
        let path = out.path(&format!("data_{:03}.csv", r + 1))?;
        data.save_csv(path)?;
    }
    println!(
        "{} genes x {} times, {} lag-0 edges at time 1, {} dataset(s) of {} replicates",
        spec.total_genes(),
        spec.times,
        net.supports.first().map_or(0, |s| s.len()),
        a.datasets,
        spec.n
    );
    out.finish("simulate", json!({ "spec": spec, "datasets": a.datasets }))
}

fn study(a: &StudyArgs) -> Result<()> {
    let started = Instant::now();
    let settings = a.solver.settings();
    settings.validate()?;
    let spec = scenario_spec(&a.scenario)?;
    let grid = grid_spec(&a.grid)?;
    let label = a.label.clone().unwrap_or_else(|| match a.scenario.scenario {
        Some(k) => format!("scenario{k}"),
        None => "custom".into(),
    });
    let options = StudyOptions {
        scope: a.scope.into(),
        standardize: !a.no_standardize,
        selection: SelectionOptions {
            df: a.grid.df.into(),
            ..SelectionOptions::default()
        },
        ..StudyOptions::default()
    };
    let report = run_study(&label, &spec, a.reps, &grid, &settings, &options)?;

    let mut out = Outputs::create(&a.out, started)?;
    out.text("study.csv", &report.to_csv())?;
    out.json("study.json", &report)?;
    print!("{}", report.to_csv());
    if report.failed() > 0 {
        eprintln!("warning: {} of {} replicates failed", report.failed(), a.reps);
    }
    out.finish("study", json!({ "label": label, "reps": a.reps, "failed": report.failed() }))
}

fn stability(a: &StabilityArgs) -> Result<()> {
    let started = Instant::now();
    let settings = a.solver.settings();
    settings.validate()?;
    let (data, layout, _) = load_data(&a.data)?;
    let config = penalty(&layout, a.lambda1, a.lambda2, &a.penalty)?;
    let options = StabilityOptions {
        subsamples: a.subsamples,
        fraction: a.fraction,
        threshold: a.threshold,
        seed: a.seed,
        standardize: !a.data.no_standardize,
    };
    let result = stability_selection(&data, &layout, &config, &settings, &options)?;

    let mut out = Outputs::create(&a.out, started)?;
    out.text("stability.csv", &result.to_csv())?;
    println!(
        "{} of {} candidate edges selected in at least {:.0}% of {} subsamples of size {}",
        result.stable_edges().len(),
        result.frequencies.len(),
        100.0 * a.threshold,
        result.subsamples,
        result.subsample_size
    );
    if result.unconverged > 0 {
        eprintln!("warning: {} subsample fits did not converge", result.unconverged);
    }
    out.finish("stability", json!({ "options": options, "lambda1": a.lambda1, "lambda2": a.lambda2 }))
}

fn diff(a: &DiffArgs) -> Result<()> {
    let started = Instant::now();
    let (mut est, names, labels) = match (&a.report, &a.theta) {
        (Some(path), _) => {
            let report = BlockReport::load(path)?;
            let est = report.to_estimate()?;
            (est, report.gene_names, report.time_labels)
        }
        (None, Some(path)) => {
            let (genes, times) = (a.genes.unwrap_or(0), a.times.unwrap_or(0));
            let layout = BlockLayout::new(genes, times, a.lag_cap.unwrap_or(default_lag_cap(times)))?;
            let theta = load_matrix(path)?;
            let config = PenaltyConfig::new(&layout, 0.0, 0.0)?;
            let threshold = a.edge_threshold.unwrap_or(gldelta::SolverSettings::default().edge_threshold);
            let est = PrecisionEstimate::from_parts(theta, layout, config, threshold)?;
            let names = a
                .gene_names
                .clone()
                .unwrap_or_else(|| (1..=genes).map(|i| format!("G{i}")).collect());
            if names.len() != genes {
                return Err(CliError::Usage(format!("{} gene names for {genes} genes", names.len())));
            }
            (est, names, (1..=times).map(|k| k.to_string()).collect())
        }
        (None, None) => return Err(CliError::Usage("one of --report or --theta is required".into())),
    };
    if let Some(t) = a.edge_threshold {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--edge-threshold must be finite and nonnegative, got {t}")));
        }
        est.set_edge_threshold(t);
    }
    let times = est.layout().times();
    let reports = (0..times.saturating_sub(1))
        .map(|k| graph_diff(&est, k))
        .collect::<gldelta::Result<Vec<_>>>()?;

    let mut out = Outputs::create(&a.out, started)?;
    for r in &reports {
        let dir = format!("{}_{}", labels[r.time], labels[r.time + 1]);
        for panel in Panel::ALL {
            out.text(&format!("{dir}/{}.dot", panel.name()), &r.to_dot(panel, &names))?;
        }
        out.json(&format!("{dir}/diff.json"), r)?;
        println!(
            "{} -> {}: {} kept, {} born, {} died",
            labels[r.time],
            labels[r.time + 1],
            r.intersection.len(),
            r.born.len(),
            r.died.len()
        );
    }
    out.text("evolution.csv", &diagnostics_csv(&evolution_diagnostics(&est), &labels))?;
    out.finish("diff", json!({ "edge_threshold": est.edge_threshold(), "gene_names": names }))
}
