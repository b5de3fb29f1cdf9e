//! Training a linear scorer under a budget on the relaxed fairness functional.
//!
//! The penalized objective over `(θ, γ)` is
//!
//! `J = R_n(θ) + ρ_c (1/n) Σ_{i,j} h_ij(θ, γ) + ρ_p max(0, C_n(γ) − η)`
//!
//! with the coupling hinge `h_ij = max(0, m_ij − δ(1 − 2γ_ij))`, where
//! `m_ij = max_{k≠j} θ(x_i, k) − θ(x_i, j)`. At a one-hot row the hinge forces
//! the chosen class to win by `δ`; rows with fractional mass must have
//! correspondingly close scores. `J` is convex in `(θ, γ)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::KeyValues;
use crate::dataset::Dataset;
use crate::divergence::{PhiGenerator, RatioBounds};
use crate::error::{Error, Result};
use crate::estimator::choose_scale_a;
use crate::fairness::{fairness_functional, soft_counts, solve_counts, subgradient_at, FairnessSpec, GammaMatrix};
use crate::kernel::{KernelKind, KernelSpec};
use crate::scorer::{argmax, fit_unconstrained, log_sum_exp, risk_and_gradient, LinearScorer};

/// Newton iterations for the unconstrained warm start.
const NEWTON_ITERS: usize = 100;
/// Iterations between penalty checks.
const CHECK_EVERY: usize = 100;
/// Grid size of the final scan toward the unconstrained fit.
const POLISH_POINTS: usize = 32;
/// Softmax temperature of the tied phase, as a fraction of the coupling margin.
const TEMPERATURE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub phi: PhiGenerator,
    pub kernel: KernelKind,
    pub bounds: RatioBounds,
    /// Initial fairness penalty; doubled at each check that finds a violation.
    pub penalty_rho: f64,
    pub coupling_rho: f64,
    /// Initial step; step `k` uses `step_size / √k`.
    pub step_size: f64,
    pub max_outer_iters: usize,
    pub tol: f64,
    /// Score margin `δ` in the coupling hinge; by default the largest score
    /// gap of the unconstrained fit.
    pub coupling_margin: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: f64::INFINITY,
            phi: PhiGenerator::Kl,
            kernel: KernelKind::Delta,
            bounds: RatioBounds::default(),
            penalty_rho: 1.0,
            coupling_rho: 10.0,
            step_size: 0.1,
            max_outer_iters: 1000,
            tol: 1e-4,
            coupling_margin: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad value '{value}' for {key}: {e}")))
}

/// Accepts `inf`/`infinity` as well as ordinary floats.
pub fn parse_real(key: &str, value: &str) -> Result<f64> {
    match value.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => parse_value(key, value),
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 11] = [
        "eta",
        "phi",
        "kernel",
        "bounds.c_lo",
        "bounds.c_hi",
        "penalty_rho",
        "coupling_rho",
        "step_size",
        "max_outer_iters",
        "tol",
        "coupling_margin",
    ];

    /// Applies `key = value` pairs; unknown keys are rejected.
    pub fn apply(&mut self, pairs: &KeyValues) -> Result<()> {
        let (mut lo, mut hi) = (self.bounds.c_lo(), self.bounds.c_hi());
        for (key, value) in pairs.iter() {
            match key {
                "eta" => self.eta = parse_real(key, value)?,
                "phi" => self.phi = value.parse()?,
                "kernel" => self.kernel = value.parse()?,
                "bounds.c_lo" => lo = parse_value(key, value)?,
                "bounds.c_hi" => hi = parse_value(key, value)?,
                "penalty_rho" => self.penalty_rho = parse_value(key, value)?,
                "coupling_rho" => self.coupling_rho = parse_value(key, value)?,
                "step_size" => self.step_size = parse_value(key, value)?,
                "max_outer_iters" => self.max_outer_iters = parse_value(key, value)?,
                "tol" => self.tol = parse_value(key, value)?,
                "coupling_margin" if value.trim() == "auto" => self.coupling_margin = None,
                "coupling_margin" => self.coupling_margin = Some(parse_value(key, value)?),
                other => return Err(Error::InvalidArgument(format!("unknown training key '{other}'"))),
            }
        }
        self.bounds = RatioBounds::new(lo, hi)?;
        self.validate()
    }

    pub fn from_key_values(pairs: &KeyValues) -> Result<Self> {
        let mut config = Self::default();
        config.apply(pairs)?;
        Ok(config)
    }

    /// Effective values, one `key = value` line each, in [`Self::KEYS`] order.
    pub fn to_key_values(&self) -> String {
        let margin = self.coupling_margin.map_or_else(|| "auto".to_string(), |m| m.to_string());
        let values = [
            self.eta.to_string(),
            self.phi.to_string(),
            self.kernel.name().to_string(),
            self.bounds.c_lo().to_string(),
            self.bounds.c_hi().to_string(),
            self.penalty_rho.to_string(),
            self.coupling_rho.to_string(),
            self.step_size.to_string(),
            self.max_outer_iters.to_string(),
            self.tol.to_string(),
            margin,
        ];
        Self::KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {x}")))
            }
        };
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be non-negative, got {}", self.eta)));
        }
        positive("penalty_rho", self.penalty_rho)?;
        positive("coupling_rho", self.coupling_rho)?;
        positive("step_size", self.step_size)?;
        positive("tol", self.tol)?;
        if let Some(m) = self.coupling_margin {
            positive("coupling_margin", m)?;
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidArgument("max_outer_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub objective: f64,
    pub best_objective: f64,
    pub fairness: f64,
    pub risk: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub scorer: LinearScorer,
    pub gamma: GammaMatrix,
    /// The budget the model was certified against.
    pub eta: f64,
    /// `C_n` at the returned `γ`, the one-hot predictions of the scorer.
    pub achieved_fairness: f64,
    /// `C_n` at the relaxed iterate the scorer was taken from.
    pub relaxed_fairness: f64,
    pub empirical_risk: f64,
    pub a_n: f64,
    pub iterations: usize,
    pub history: Vec<HistoryEntry>,
}

/// Everything fixed for one training run.
struct Problem {
    inputs: Vec<Vec<f64>>,
    labels: Vec<usize>,
    views: Vec<usize>,
    classes: usize,
    spec: FairnessSpec,
}

impl Problem {
    fn n(&self) -> f64 {
        self.inputs.len() as f64
    }

    fn predictions(&self, scorer: &LinearScorer) -> Vec<usize> {
        let mut s = vec![0.0; self.classes];
        self.inputs
            .iter()
            .map(|x| {
                scorer.scores_into(x, &mut s);
                argmax(&s)
            })
            .collect()
    }

    /// `C_n` at the one-hot `γ` of the given predictions.
    fn hard_fairness(&self, predictions: &[usize]) -> Result<f64> {
        let gamma = GammaMatrix::one_hot(predictions, self.classes)?;
        fairness_functional(&gamma, &self.views, &self.spec)
    }

    fn risk(&self, scorer: &LinearScorer) -> f64 {
        risk_and_gradient(scorer, &self.inputs, &self.labels).0
    }

    /// Risk, coupling penalty `(1/n) Σ h_ij` and hard predictions in one pass
    /// over the samples. With a coupling weight, also the gradients of
    /// `R_n + weight · coupling`.
    fn evaluate(&self, scorer: &LinearScorer, gamma: &GammaMatrix, margin: f64, weight: Option<f64>) -> Evaluation {
        let c = self.classes;
        let stride = scorer.input_dim() + 1;
        let n = self.n();
        let mut s = vec![0.0; c];
        let mut out = Evaluation {
            risk: 0.0,
            coupling: 0.0,
            g_theta: vec![0.0; if weight.is_some() { c * stride } else { 0 }],
            g_gamma: vec![0.0; if weight.is_some() { self.inputs.len() * c } else { 0 }],
            predictions: Vec::with_capacity(self.inputs.len()),
        };
        for (i, (x, &y)) in self.inputs.iter().zip(&self.labels).enumerate() {
            scorer.scores_into(x, &mut s);
            let lse = log_sum_exp(&s);
            out.risk += (lse - s[y]) / n;
            // best and runner-up classes give max_{k≠j} for every j
            let best = argmax(&s);
            out.predictions.push(best);
            let mut second = usize::MAX;
            for k in 0..c {
                if k != best && (second == usize::MAX || s[k] > s[second]) {
                    second = k;
                }
            }
            if weight.is_some() {
                for k in 0..c {
                    let coef = ((s[k] - lse).exp() - (k == y) as u8 as f64) / n;
                    add_scaled(&mut out.g_theta[k * stride..(k + 1) * stride], x, coef);
                }
            }
            for j in 0..c {
                let rival = if j == best { second } else { best };
                if rival == usize::MAX {
                    continue;
                }
                let value = s[rival] - s[j] - margin * (1.0 - 2.0 * gamma.get(i, j));
                if value <= 0.0 {
                    continue;
                }
                out.coupling += value / n;
                if let Some(w) = weight {
                    let coef = w / n;
                    add_scaled(&mut out.g_theta[rival * stride..(rival + 1) * stride], x, coef);
                    add_scaled(&mut out.g_theta[j * stride..(j + 1) * stride], x, -coef);
                    out.g_gamma[i * c + j] += coef * 2.0 * margin;
                }
            }
        }
        out
    }
}

struct Evaluation {
    risk: f64,
    coupling: f64,
    g_theta: Vec<f64>,
    g_gamma: Vec<f64>,
    predictions: Vec<usize>,
}

/// `out += coef · (x, 1)`.
fn add_scaled(out: &mut [f64], x: &[f64], coef: f64) {
    let (last, head) = out.split_last_mut().expect("stride ≥ 1");
    for (o, xd) in head.iter_mut().zip(x) {
        *o += coef * xd;
    }
    *last += coef;
}

fn build_problem(data: &Dataset, config: &TrainConfig) -> Result<Problem> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: data.len() });
    }
    let classes = data.n_labels();
    let kernel = KernelSpec::new(config.kernel, data.n_views(), classes)?;
    let a_n = choose_scale_a(config.phi, &config.bounds, &kernel);
    Ok(Problem {
        inputs: (0..data.len()).map(|i| data.input(i)).collect(),
        labels: data.labels(),
        views: data.viewpoints(),
        classes,
        spec: FairnessSpec {
            phi: config.phi,
            kernel,
            a_n,
            bounds: Some(config.bounds),
        },

    })
}

/// The penalized objective `J(θ, γ)` for a given penalty weight and margin.
pub fn penalized_objective(
    data: &Dataset,
    config: &TrainConfig,
    scorer: &LinearScorer,
    gamma: &GammaMatrix,
    penalty_rho: f64,
    margin: f64,
) -> Result<f64> {
    let problem = build_problem(data, config)?;
    let c = fairness_functional(gamma, &problem.views, &problem.spec)?;
    let eval = problem.evaluate(scorer, gamma, margin, None);
    Ok(eval.risk + config.coupling_rho * eval.coupling + penalty_rho * (c - config.eta).max(0.0))
}

/// Intercept-only fit: log class frequencies, constant predictions.
fn intercept_only(problem: &Problem, input_dim: usize) -> LinearScorer {
    let mut counts = vec![0.0; problem.classes];
    for &y in &problem.labels {
        counts[y] += 1.0;
    }
    let stride = input_dim + 1;
    let mut weights = vec![0.0; problem.classes * stride];
    for (k, count) in counts.iter().enumerate() {
        weights[k * stride + input_dim] = (count / problem.n()).max(1e-12).ln();
    }
    LinearScorer::from_weights(problem.classes, input_dim, weights).expect("finite weights")
}

fn softmax_gamma(problem: &Problem, scorer: &LinearScorer) -> Result<GammaMatrix> {
    let c = problem.classes;
    let mut s = vec![0.0; c];
    let mut data = Vec::with_capacity(problem.inputs.len() * c);
    for x in &problem.inputs {
        scorer.scores_into(x, &mut s);
        let lse = log_sum_exp(&s);
        let mut row: Vec<f64> = s.iter().map(|v| (v - lse).exp()).collect();
        crate::fairness::project_simplex(&mut row);
        data.extend(row);
    }
    GammaMatrix::new(problem.inputs.len(), c, data)
}

fn tempered_gamma(problem: &Problem, scorer: &LinearScorer, tau: f64) -> Result<GammaMatrix> {
    let c = problem.classes;
    let mut s = vec![0.0; c];
    let mut data = Vec::with_capacity(problem.inputs.len() * c);
    for x in &problem.inputs {
        scorer.scores_into(x, &mut s);
        for v in s.iter_mut() {
            *v /= tau;
        }
        let lse = log_sum_exp(&s);
        data.extend(s.iter().map(|v| (v - lse).exp()));
    }
    GammaMatrix::new(problem.inputs.len(), c, data)
}

/// Adds `weight · ∂⟨g, γ(θ)⟩/∂θ` for `γ = softmax(scores / τ)`.
fn push_through_softmax(problem: &Problem, scorer: &LinearScorer, gamma: &GammaMatrix, tau: f64, weight: f64, g: &[f64], out: &mut [f64]) {
    let c = problem.classes;
    let stride = scorer.input_dim() + 1;
    for (i, x) in problem.inputs.iter().enumerate() {
        let row = gamma.row(i);
        let gi = &g[i * c..(i + 1) * c];
        let mean: f64 = row.iter().zip(gi).map(|(p, q)| p * q).sum();
        for k in 0..c {
            let coef = weight * row[k] * (gi[k] - mean) / tau;
            add_scaled(&mut out[k * stride..(k + 1) * stride], x, coef);
        }
    }
}

struct Candidate {
    scorer: LinearScorer,
    predictions: Vec<usize>,
    achieved: f64,
    relaxed: f64,
    risk: f64,
}

/// Lowest-risk scorer seen so far whose hard predictions meet the budget.
struct Incumbent {
    eta: f64,
    tol: f64,
    least_violation: f64,
    best: Option<Candidate>,
}

impl Incumbent {
    fn offer(&mut self, problem: &Problem, scorer: &LinearScorer, predictions: Vec<usize>, risk: f64, relaxed: Option<f64>) -> Result<()> {
        if self.best.as_ref().is_some_and(|b| risk >= b.risk) {
            return Ok(());
        }
        let achieved = problem.hard_fairness(&predictions)?;
        self.least_violation = self.least_violation.min(achieved);
        if achieved <= self.eta + self.tol {
            self.best = Some(Candidate {
                scorer: scorer.clone(),
                predictions,
                achieved,
                relaxed: relaxed.unwrap_or(achieved),
                risk,
            });
        }
        Ok(())
    }
}

/// Trains under the budget `config.eta`.
///
/// The run starts from the unconstrained fit and returns it unchanged when it
/// already meets the budget. Otherwise projected subgradient descent on `J`
/// runs with the fairness penalty doubled whenever a check finds the budget
/// violated. A second, tied phase restarts from the unconstrained fit with
/// `γ` pinned to the tempered softmax of the scores. Every iterate's hard
/// predictions are scored with `C_n` at their
/// one-hot `γ`, where the relaxation is exact, and the lowest-risk iterate
/// that meets the budget is kept. The intercept-only scorer, whose
/// predictions are constant and hence independent of the viewpoint, seeds
/// that search. A final scan along the segment from the kept scorer toward
/// the unconstrained fit picks up any cheaper feasible point.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    let problem = build_problem(data, config)?;
    let input_dim = data.input_dim();
    let eta = config.eta;
    let tol = config.tol;
    let a_n = problem.spec.a_n;

    let theta0 = fit_unconstrained(data, problem.classes, NEWTON_ITERS)?;
    let preds0 = problem.predictions(&theta0);
    let c0 = problem.hard_fairness(&preds0)?;
    let risk0 = problem.risk(&theta0);
    if eta.is_infinite() || c0 <= eta + tol {
        return Ok(TrainedModel {
            gamma: GammaMatrix::one_hot(&preds0, problem.classes)?,
            scorer: theta0,
            eta,
            achieved_fairness: c0,
            relaxed_fairness: c0,
            empirical_risk: risk0,
            a_n,
            iterations: 0,
            history: vec![HistoryEntry {
                objective: risk0,
                best_objective: risk0,
                fairness: c0,
                risk: risk0,
            }],
        });
    }

    let mut search = Incumbent {
        eta,
        tol,
        least_violation: c0,
        best: None,
    };
    let constant = intercept_only(&problem, input_dim);
    search.offer(&problem, &constant, problem.predictions(&constant), problem.risk(&constant), None)?;

    let margin = match config.coupling_margin {
        Some(m) => m,
        None => {
            let mut s = vec![0.0; problem.classes];
            let mut widest: f64 = 0.0;
            for x in &problem.inputs {
                theta0.scores_into(x, &mut s);
                let top = s[argmax(&s)];
                for &v in &s {
                    widest = widest.max(top - v);
                }
            }
            if widest > 0.0 {
                widest
            } else {
                1.0
            }
        }
    };

    let n = problem.n();
    let mut theta = theta0.clone();
    let mut gamma = softmax_gamma(&problem, &theta0)?;
    let mut rho_p = config.penalty_rho;
    let mut history = Vec::with_capacity(config.max_outer_iters);
    let mut best_objective = f64::INFINITY;
    for k in 1..=config.max_outer_iters {
        let mut eval = problem.evaluate(&theta, &gamma, margin, Some(config.coupling_rho));
        let counts = soft_counts(&gamma, &problem.views, &problem.spec.kernel)?;
        let sol = solve_counts(&counts, &problem.spec)?;
        let violation = sol.value - eta;
        if violation > 0.0 {
            let sub = subgradient_at(&sol, &counts, &problem.views, &problem.spec);
            for ((g, a), b) in eval.g_gamma.iter_mut().zip(&sub.divergence).zip(&sub.mmd) {
                *g += rho_p * (a + b);
            }
        }
        let objective = eval.risk + config.coupling_rho * eval.coupling + rho_p * violation.max(0.0);
        best_objective = best_objective.min(objective);
        history.push(HistoryEntry {
            objective,
            best_objective,
            fairness: sol.value,
            risk: eval.risk,
        });
        search.offer(&problem, &theta, std::mem::take(&mut eval.predictions), eval.risk, Some(sol.value))?;

        if k % CHECK_EVERY == 0 && violation > tol {
            rho_p = (rho_p * 2.0).min(1e6);
        }
        let step = config.step_size / (k as f64).sqrt();
        clip(&mut eval.g_theta, 1.0);
        for (w, g) in theta.weights_mut().iter_mut().zip(&eval.g_theta) {
            *w -= step * g;
        }
        for g in eval.g_gamma.iter_mut() {
            *g *= n;
        }
        clip(&mut eval.g_gamma, n.sqrt());
        gamma.descend(&eval.g_gamma, step);
    }

    // Tied phase: γ follows the tempered softmax of the scores, so the
    // fairness subgradient reaches θ through the chain rule. The internal
    // target halves whenever the soft predictions meet it but the hard ones
    // still miss the budget.
    let tau = margin * TEMPERATURE;
    theta = theta0.clone();
    let mut rho_p = config.penalty_rho;
    let mut target = eta;
    for k in 1..=config.max_outer_iters {
        let gamma = tempered_gamma(&problem, &theta, tau)?;
        let mut eval = problem.evaluate(&theta, &gamma, margin, Some(0.0));
        let counts = soft_counts(&gamma, &problem.views, &problem.spec.kernel)?;
        let sol = solve_counts(&counts, &problem.spec)?;
        let violation = sol.value - target;
        let objective = eval.risk + rho_p * violation.max(0.0);
        best_objective = best_objective.min(objective);
        history.push(HistoryEntry {
            objective,
            best_objective,
            fairness: sol.value,
            risk: eval.risk,
        });
        if k % CHECK_EVERY == 0 && violation <= 0.0 && problem.hard_fairness(&eval.predictions)? > eta + tol {
            target *= 0.5;
        }
        search.offer(&problem, &theta, std::mem::take(&mut eval.predictions), eval.risk, Some(sol.value))?;
        if violation > 0.0 {
            let sub = subgradient_at(&sol, &counts, &problem.views, &problem.spec);
            push_through_softmax(&problem, &theta, &gamma, tau, rho_p, &sub.total(), &mut eval.g_theta);
        }
        if k % CHECK_EVERY == 0 && violation > tol {
            rho_p = (rho_p * 2.0).min(1e6);
        }
        let step = config.step_size / (k as f64).sqrt();
        clip(&mut eval.g_theta, 1.0);
        for (w, g) in theta.weights_mut().iter_mut().zip(&eval.g_theta) {
            *w -= step * g;
        }
    }

    if let Some(anchor) = search.best.as_ref().map(|b| b.scorer.clone()) {
        for j in 1..POLISH_POINTS {
            let lambda = j as f64 / POLISH_POINTS as f64;
            let w: Vec<f64> = anchor
                .weights()
                .iter()
                .zip(theta0.weights())
                .map(|(a, b)| a + lambda * (b - a))
                .collect();
            let scorer = LinearScorer::from_weights(problem.classes, input_dim, w)?;
            let risk = problem.risk(&scorer);
            search.offer(&problem, &scorer, problem.predictions(&scorer), risk, None)?;
        }
    }

    let iterations = history.len();
    match search.best {
        Some(b) if b.achieved <= eta + tol => Ok(TrainedModel {
            gamma: GammaMatrix::one_hot(&b.predictions, problem.classes)?,
            scorer: b.scorer,
            eta,
            achieved_fairness: b.achieved,
            relaxed_fairness: b.relaxed,
            empirical_risk: b.risk,
            a_n,
            iterations,
            history,
        }),
        _ => Err(Error::InfeasibleBudget {
            eta,
            best: search.least_violation,
        }),
    }
}

/// Rescales `g` to Euclidean norm at most `limit`.
fn clip(g: &mut [f64], limit: f64) {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > limit {
        for x in g.iter_mut() {
            *x *= limit / norm;
        }
    }
}

/// Trains one model per budget in parallel, then reports for each budget the
/// lowest-risk model among all trained ones that meets it. Feasible sets grow
/// with the budget, so reported risks never increase along the sweep.
pub fn sweep(data: &Dataset, config: &TrainConfig, etas: &[f64]) -> Vec<Result<TrainedModel>> {
    let runs: Vec<Result<TrainedModel>> = etas
        .par_iter()
        .map(|&eta| {
            let c = TrainConfig { eta, ..config.clone() };
            train(data, &c)
        })
        .collect();
    etas.iter()
        .zip(&runs)
        .map(|(&eta, own)| {
            let pick = runs
                .iter()
                .filter_map(|r| r.as_ref().ok())
                .filter(|m| m.achieved_fairness <= eta + config.tol)
                .min_by(|a, b| a.empirical_risk.total_cmp(&b.empirical_risk));
            match (pick, own) {
                (Some(m), _) => Ok(TrainedModel { eta, ..m.clone() }),
                (None, Err(e)) => Err(clone_error(e)),
                (None, Ok(_)) => unreachable!("a successful run is feasible for its own budget"),
            }
        })
        .collect()
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::InfeasibleBudget { eta, best } => Error::InfeasibleBudget { eta: *eta, best: *best },
        Error::Convergence {
            iterations,
            residual,
            last_iterate,
        } => Error::Convergence {
            iterations: *iterations,
            residual: *residual,
            last_iterate: last_iterate.clone(),
        },
        other => Error::InvalidArgument(other.to_string()),
    }
}
