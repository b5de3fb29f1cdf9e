//! One function per subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fairdiv_core::bounds::{constants_csv, shape_csv};
use fairdiv_core::dataset::{predictions_from_csv, predictions_to_csv};
use fairdiv_core::{
    constant_sweep, empirical_rademacher, estimate_dependency, generalization_bound, phi_shape_table,
    restriction_cost_bound, sweep as sweep_models, train as train_model, Dataset, DependencyReport,
    DiscreteScenario, EstimateOptions, Error, GaussianScenario, KernelKind, KernelSpec, KeyValues, LinearScorer,
    LossMatrix, PhiGenerator, Scenario, TrainConfig, TrainedModel,
};

use crate::run::{read, usage, write_atomic, CliError, CliResult, RunConfig};
use crate::svg::SvgChart;

const DEFAULT_ETAS: &str = "0.01,0.05,0.1,0.5,inf";
const DEFAULT_T: f64 = 2.3;
const DEFAULT_DRAWS: usize = 100_000;

/// Summary lines go to stdout when the primary output went to a file, and to
/// stderr when stdout carries the primary output.
fn report(to_file: bool, text: &str) {
    if to_file {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn load_dataset(run: &RunConfig) -> CliResult<Dataset> {
    let path = run.require("data")?;
    Ok(Dataset::from_csv(&read(Path::new(path))?)?)
}

fn load_model(path: &str) -> CliResult<LinearScorer> {
    Ok(LinearScorer::from_model_text(&read(Path::new(path))?)?)
}

pub fn gen(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve("gen", config, flags, &["scenario", "knob", "n", "dim", "seed", "out"])?;
    let n = run.count("n", 1000)?;
    if n == 0 {
        return Err(usage("n must be at least 1"));
    }
    let seed = run.seed()?;
    let knob = run.real("knob", 1.0)?;
    let scenario = run.get("scenario").unwrap_or("proxy").to_ascii_lowercase();
    let data = match scenario.as_str() {
        "proxy" => DiscreteScenario::proxy(knob)?.generate(n, seed)?,
        "gaussian" => GaussianScenario::shifted(knob, run.count("dim", 2)?)?.generate(n, seed)?,
        other => return Err(usage(format!("unknown scenario '{other}' (expected proxy or gaussian)"))),
    };
    run.set_default("scenario", &scenario);
    run.set_default("knob", knob);
    run.set_default("n", n);
    let to_file = run.emit(&data.to_csv())?;
    report(to_file, &format!("rows = {n}\nseed = {seed}\n"));
    Ok(())
}

fn train_keys(extra: &[&'static str]) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = TrainConfig::KEYS.to_vec();
    keys.extend_from_slice(extra);
    keys
}

fn train_config(run: &RunConfig) -> CliResult<TrainConfig> {
    Ok(TrainConfig::from_key_values(&run.values().restrict(&TrainConfig::KEYS))?)
}

fn model_summary(m: &TrainedModel) -> String {
    format!(
        "eta = {}\nachieved_fairness = {}\nrelaxed_fairness = {}\nempirical_risk = {}\na_n = {}\niterations = {}\n",
        m.eta, m.achieved_fairness, m.relaxed_fairness, m.empirical_risk, m.a_n, m.iterations
    )
}

pub fn train(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve("train", config, flags, &train_keys(&["data", "seed", "out"]))?;
    run.seed()?;
    let cfg = train_config(&run)?;
    let data = load_dataset(&run)?;
    for line in cfg.to_key_values().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            run.set_default(k, v);
        }
    }
    match train_model(&data, &cfg) {
        Ok(model) => {
            let to_file = run.emit(&model.scorer.to_model_text())?;
            report(to_file, &model_summary(&model));
            Ok(())
        }
        Err(Error::InfeasibleBudget { eta, best }) => {
            eprintln!("budget {eta} not met; best achieved_fairness = {best}");
            Err(Error::InfeasibleBudget { eta, best }.into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn predict(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve("predict", config, flags, &["model", "data", "seed", "out"])?;
    run.seed()?;
    let scorer = load_model(run.require("model")?)?;
    let data = load_dataset(&run)?;
    let predictions = scorer.predict_all(&data)?;
    let to_file = run.emit(&predictions_to_csv(&predictions))?;
    report(to_file, &format!("rows = {}\n", predictions.len()));
    Ok(())
}

pub fn audit(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve(
        "audit",
        config,
        flags,
        &["data", "predictions", "phi", "t", "kernel", "bounds.c_lo", "bounds.c_hi", "seed", "out"],
    )?;
    run.seed()?;
    let phi = run.phi(PhiGenerator::Kl)?;
    let t = run.real("t", DEFAULT_T)?;
    let bounds = run.bounds()?;
    let kind: KernelKind = run.get("kernel").unwrap_or("delta").parse()?;
    let data = load_dataset(&run)?;
    let predictions = predictions_from_csv(&read(Path::new(run.require("predictions")?))?)?;
    let pairs = data.pairs_with(&predictions)?;
    let labels = predictions.iter().copied().max().unwrap_or(0).max(data.n_labels() - 1) + 1;
    let kernel = KernelSpec::new(kind, data.n_views(), labels)?;
    let report_ = estimate_dependency(phi, &pairs, &kernel, &bounds, t, &EstimateOptions::default())?;
    run.set_default("phi", phi);
    run.set_default("t", t);
    run.set_default("kernel", kind.name());
    run.set_default("bounds.c_lo", bounds.c_lo());
    run.set_default("bounds.c_hi", bounds.c_hi());
    let csv = format!("phi,{}\n{},{}\n", DependencyReport::CSV_HEADER, phi, report_.csv_row());
    let to_file = run.emit(&csv)?;
    report(to_file, &format!("phi         = {phi}\n{report_}\n"));
    Ok(())
}

pub fn sweep(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve(
        "sweep",
        config,
        flags,
        &train_keys(&["data", "etas", "scenario_knob", "chart", "seed", "out"]),
    )?;
    run.seed()?;
    let etas = match (run.get("etas"), run.get("eta")) {
        (None, Some(eta)) => vec![fairdiv_core::learner::parse_real("eta", eta)?],
        _ => run.real_list("etas", DEFAULT_ETAS)?,
    };
    let mut values = run.values().restrict(&TrainConfig::KEYS);
    values.remove("eta");
    let cfg = TrainConfig::from_key_values(&values)?;
    for &eta in &etas {
        TrainConfig { eta, ..cfg.clone() }.validate()?;
    }
    let oracle = match run.get("scenario_knob") {
        Some(k) => Some(DiscreteScenario::proxy(fairdiv_core::learner::parse_real("scenario_knob", k)?)?),
        None => None,
    };
    let data = load_dataset(&run)?;
    run.set_default("etas", etas.iter().map(f64::to_string).collect::<Vec<_>>().join(","));

    let results = sweep_models(&data, &cfg, &etas);
    let mut csv = String::from("eta,risk,achieved_fairness,relaxed_fairness");
    if oracle.is_some() {
        csv.push_str(",oracle_dependency");
    }
    csv.push_str(",status\n");
    let mut points = Vec::new();
    let mut first_error: Option<CliError> = None;
    for (eta, result) in etas.iter().zip(results) {
        match result {
            Ok(m) => {
                let _ = write!(csv, "{eta},{},{},{}", m.empirical_risk, m.achieved_fairness, m.relaxed_fairness);
                if let Some(s) = &oracle {
                    let _ = write!(csv, ",{}", s.oracle_dependency(&m.scorer, cfg.phi)?);
                }
                csv.push_str(",ok\n");
                points.push((m.achieved_fairness, m.empirical_risk));
            }
            Err(e) => {
                let status = match &e {
                    Error::InfeasibleBudget { .. } => "infeasible",
                    Error::Convergence { .. } => "no-convergence",
                    _ => "error",
                };
                let blanks = if oracle.is_some() { ",,,," } else { ",,," };
                let _ = writeln!(csv, "{eta}{blanks}{status}");
                eprintln!("eta = {eta}: {e}");
                first_error.get_or_insert(e.into());
            }
        }
    }
    if let Some(chart_path) = run.get("chart") {
        let mut chart = SvgChart::new("Risk against achieved dependency", "achieved fairness", "empirical risk");
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        chart.add_series(cfg.phi.name(), points);
        write_atomic(Path::new(chart_path), &chart.render().map_err(usage)?)?;
    }
    let to_file = run.emit(&csv)?;
    if to_file {
        print!("{csv}");
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn default_t_grid() -> String {
    (1..=20).map(|i| format!("{}", i as f64 / 10.0)).collect::<Vec<_>>().join(",")
}

fn default_u_grid() -> String {
    (1..=80).map(|i| format!("{}", i as f64 * 0.05)).collect::<Vec<_>>().join(",")
}

pub fn constants(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve("constants", config, flags, &["t_grid", "u_grid", "t", "phi", "seed", "out"])?;
    run.seed()?;
    let t_grid = match (run.get("t_grid"), run.get("t")) {
        (None, Some(_)) => run.real_list("t", "")?,
        _ => run.real_list("t_grid", &default_t_grid())?,
    };
    let u_grid = run.real_list("u_grid", &default_u_grid())?;
    let phis: Vec<PhiGenerator> = match run.get("phi") {
        None | Some("all") => PhiGenerator::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()?,
    };
    let constants = constant_sweep(&phis, &t_grid)?;
    let shapes = phi_shape_table(&phis, &u_grid)?;
    let c_csv = constants_csv(&constants);
    let s_csv = shape_csv(&shapes);
    run.set_default("t_grid", t_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    run.set_default("u_grid", u_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","));

    let Some(dir) = run.out() else {
        print!("{c_csv}");
        return Ok(());
    };
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut c_chart = SvgChart::new("Concentration constant c", "t", "c");
    let mut s_chart = SvgChart::new("Generator shape", "u", "phi(u)");
    for &phi in &phis {
        c_chart.add_series(
            phi.name(),
            constants.iter().filter(|r| r.phi == phi).map(|r| (r.t, r.c)).collect(),
        );
        s_chart.add_series(
            phi.name(),
            shapes.iter().filter(|r| r.phi == phi).map(|r| (r.u, r.value)).collect(),
        );
    }
    let file = |name: &str| -> PathBuf { dir.join(name) };
    write_atomic(&file("constants.csv"), &c_csv)?;
    write_atomic(&file("phi_shape.csv"), &s_csv)?;
    write_atomic(&file("constants.svg"), &c_chart.render().map_err(usage)?)?;
    write_atomic(&file("phi_shape.svg"), &s_chart.render().map_err(usage)?)?;
    write_atomic(&file("manifest.txt"), &run.manifest_text())?;
    print!("{c_csv}");
    Ok(())
}

fn model_list(raw: &str) -> CliResult<Vec<LinearScorer>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(load_model)
        .collect()
}

pub fn rademacher(config: Option<&Path>, flags: KeyValues) -> CliResult<()> {
    let mut run = RunConfig::resolve(
        "rademacher",
        config,
        flags,
        &["data", "models", "full_models", "draws", "tau", "risk_gap", "t", "seed", "out"],
    )?;
    let seed = run.seed()?;
    let draws = run.count("draws", DEFAULT_DRAWS)?;
    let t = run.real("t", DEFAULT_T)?;
    let tau = run.real("tau", DEFAULT_T)?;
    let risk_gap = run.real("risk_gap", 0.0)?;
    let data = load_dataset(&run)?;
    let restricted = model_list(run.require("models")?)?;
    if restricted.is_empty() {
        return Err(usage("--models must name at least one model file"));
    }
    let extra = match run.get("full_models") {
        Some(raw) => model_list(raw)?,
        None => Vec::new(),
    };
    run.set_default("draws", draws);
    run.set_default("t", t);
    run.set_default("tau", tau);
    run.set_default("risk_gap", risk_gap);

    let n = data.len();
    let losses_tau = LossMatrix::logistic(&restricted, &data)?;
    let est_tau = empirical_rademacher(&losses_tau, draws, seed)?;
    let c_tau = losses_tau.range_bound();
    let mut csv = String::from(
        "set,hypotheses,draws,rad,rad_abs,sup_variance,std_error,std_error_abs,range_bound,generalization_bound,restriction_cost_bound\n",
    );
    let gen_tau = generalization_bound(risk_gap, &est_tau, c_tau, t, n)?;
    if extra.is_empty() {
        let _ = writeln!(
            csv,
            "restricted,{},{},{},{},{},{},{},{},{},",
            restricted.len(),
            draws,
            est_tau.rad,
            est_tau.rad_abs,
            est_tau.sup_variance,
            est_tau.std_error,
            est_tau.std_error_abs,
            c_tau,
            gen_tau
        );
    } else {
        let full: Vec<LinearScorer> = restricted.iter().chain(&extra).cloned().collect();
        let losses_full = LossMatrix::logistic(&full, &data)?;
        let est_full = empirical_rademacher(&losses_full, draws, seed)?;
        let c = losses_full.range_bound();
        let cost = restriction_cost_bound(&est_tau, &est_full, c, t, tau, n)?;
        let gen_full = generalization_bound(risk_gap, &est_full, c, t, n)?;
        let _ = writeln!(
            csv,
            "restricted,{},{},{},{},{},{},{},{},{},{}",
            restricted.len(),
            draws,
            est_tau.rad,
            est_tau.rad_abs,
            est_tau.sup_variance,
            est_tau.std_error,
            est_tau.std_error_abs,
            c_tau,
            gen_tau,
            cost
        );
        let _ = writeln!(
            csv,
            "full,{},{},{},{},{},{},{},{},{},",
            full.len(),
            draws,
            est_full.rad,
            est_full.rad_abs,
            est_full.sup_variance,
            est_full.std_error,
            est_full.std_error_abs,
            c,
            gen_full
        );
    }
    let to_file = run.emit(&csv)?;
    if to_file {
        print!("{csv}");
    }
    Ok(())
}
