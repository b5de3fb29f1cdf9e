//! Acceptance suite. Each criterion prints one `[PASS]`/`[FAIL]` line; the
//! process exits non-zero when any criterion fails.
//!
//! Run with `cargo test -p fairdiv-cli --test acceptance --release` for
//! meaningful timings (the test profile is optimized as well).

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fairdiv_core::bounds::{empirical_rademacher, LossMatrix};
use fairdiv_core::estimator::{theorem1_constant, u_statistic_diagnostic};
use fairdiv_core::fairness::{fairness_functional, fairness_subgradient, FairnessSpec, GammaMatrix};
use fairdiv_core::ratio::{build_qp, default_ridge, empirical_mmd, solve_ratio_qp, MmdQp};
use fairdiv_core::{
    empirical_risk, estimate_dependency, fit_unconstrained, sweep, train, Dataset, DiscreteJoint, DiscreteScenario,
    EstimateOptions, KernelKind, KernelSpec, LabeledPair, LinearScorer, PhiGenerator, RatioBounds, Scenario,
    TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Verdict = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Verdict,
}

const HELLINGER: PhiGenerator = PhiGenerator::Hellinger;
const KL: PhiGenerator = PhiGenerator::Kl;
const T_CONF: f64 = 2.3;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn bounds() -> RatioBounds {
    RatioBounds::new(0.1, 10.0).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        0.5 * (xs[m - 1] + xs[m])
    } else {
        xs[m]
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Predicts the class named by the proxy feature `w1`, so on the proxy
/// scenario at knob 0.625 the (v, ŷ) joint is [0.4, 0.1; 0.1, 0.4].
fn proxy_copier() -> LinearScorer {
    LinearScorer::from_weights(2, 3, vec![0.0, 0.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.0]).unwrap()
}

fn copier_pairs(scenario: &DiscreteScenario, n: usize, seed: u64) -> Result<Vec<LabeledPair>, String> {
    let data = scenario.generate(n, seed).map_err(err)?;
    let preds = proxy_copier().predict_all(&data).map_err(err)?;
    data.pairs_with(&preds).map_err(err)
}

fn copier_scenario() -> Result<DiscreteScenario, String> {
    let scenario = DiscreteScenario::proxy(0.625).map_err(err)?;
    let joint = scenario.prediction_joint(&proxy_copier()).map_err(err)?;
    let target = [0.4, 0.1, 0.1, 0.4];
    ensure(joint.pmf().iter().zip(target).all(|(a, b)| (a - b).abs() < 1e-12), || {
        format!("copier joint is {:?}, not {target:?}", joint.pmf())
    })?;
    Ok(scenario)
}

fn constants_table() -> Verdict {
    let out = Command::new(env!("CARGO_BIN_EXE_fairdiv"))
        .args(["constants", "--t-grid", "0.1,0.5,1,2"])
        .output()
        .map_err(err)?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let text = String::from_utf8(out.stdout).map_err(err)?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        ensure(f.len() == 3, || format!("bad row '{line}'"))?;
        rows.push((f[0].to_string(), f[1].parse().map_err(err)?, f[2].parse().map_err(err)?));
    }
    let expected = [("hellinger", 3.6024), ("kl", 7.2236), ("tv", 9.1549), ("chi2", 18.166)];
    for (name, c) in expected {
        let got = rows
            .iter()
            .find(|r| r.0 == name && r.1 == 1.0)
            .ok_or_else(|| format!("no row for {name} at t = 1"))?;
        ensure((got.2 - c).abs() <= 1e-3, || format!("{name}: {} vs {c}", got.2))?;
    }
    for t in [0.1, 0.5, 1.0, 2.0] {
        let at_t: Vec<_> = rows.iter().filter(|r| r.1 == t).collect();
        ensure(at_t.len() == 4, || format!("{} rows at t = {t}", at_t.len()))?;
        let h = at_t.iter().find(|r| r.0 == "hellinger").unwrap().2;
        ensure(at_t.iter().all(|r| r.0 == "hellinger" || r.2 > h), || {
            format!("hellinger not strictly smallest at t = {t}")
        })?;
    }
    Ok("t = 1 values within 1e-3, hellinger strictly smallest at 4 t values".into())
}

fn bound_coverage() -> Verdict {
    let scenario = copier_scenario()?;
    let kernel = KernelSpec::delta(2, 2).map_err(err)?;
    let seeds = 200u64;
    let mut covered = [0usize; 4];
    let oracle: Vec<f64> = PhiGenerator::ALL
        .iter()
        .map(|&phi| scenario.oracle_dependency(&proxy_copier(), phi))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    for seed in 0..seeds {
        let pairs = copier_pairs(&scenario, 500, seed)?;
        for (k, &phi) in PhiGenerator::ALL.iter().enumerate() {
            let report = estimate_dependency(phi, &pairs, &kernel, &bounds(), T_CONF, &EstimateOptions::default())
                .map_err(err)?;
            covered[k] += (oracle[k] <= report.upper_bound) as usize;
        }
    }
    let mut detail = Vec::new();
    for (k, phi) in PhiGenerator::ALL.iter().enumerate() {
        let rate = covered[k] as f64 / seeds as f64;
        detail.push(format!("{phi} {:.1}%", 100.0 * rate));
        ensure(rate >= 0.9, || format!("{phi} coverage {rate}"))?;
    }
    Ok(format!("coverage {}", detail.join(", ")))
}

fn estimation_rate() -> Verdict {
    let scenario = copier_scenario()?;
    let kernel = KernelSpec::delta(2, 2).map_err(err)?;
    let mut detail = Vec::new();
    for phi in [HELLINGER, KL] {
        let oracle = scenario.oracle_dependency(&proxy_copier(), phi).map_err(err)?;
        let mut medians = Vec::new();
        for n in [500, 2000] {
            let mut errs = Vec::new();
            for seed in 0..100u64 {
                let pairs = copier_pairs(&scenario, n, 10_000 + seed)?;
                let report = estimate_dependency(phi, &pairs, &kernel, &bounds(), T_CONF, &EstimateOptions::default())
                    .map_err(err)?;
                errs.push((oracle - report.d_phi_n).abs());
            }
            medians.push(median(errs));
        }
        ensure(medians[1] <= medians[0] / 1.5, || {
            format!("{phi}: median error {} at n=2000 vs {} at n=500", medians[1], medians[0])
        })?;
        detail.push(format!("{phi} {:.4} -> {:.4}", medians[0], medians[1]));
    }
    Ok(format!("median |error| n=500 -> n=2000: {}", detail.join(", ")))
}

const GRID_STEP: f64 = 0.01;
const GRID_MAX: f64 = 3.0;

/// Exhaustive search over `{0, 0.01, ..., GRID_MAX}^n`. The last coordinate
/// enters as a convex parabola, so only the grid points beside its
/// unconstrained minimizer need checking.
fn grid_minimum(qp: &MmdQp) -> f64 {
    let n = qp.n();
    let mut q = qp.q_dense();
    for i in 0..n {
        q[i * n + i] += qp.ridge();
    }
    // `lin[j]` accumulates Σ_{d < depth} Q_jd r_d
    fn descend(q: &[f64], p: &[f64], depth: usize, value: f64, lin: &mut Vec<f64>, best: &mut f64) {
        let n = p.len();
        let steps = (GRID_MAX / GRID_STEP).round() as usize;
        let a = q[depth * n + depth];
        let b = lin[depth] - p[depth];
        if depth == n - 1 {
            *best = best.min(value + parabola_grid_min(a, b, steps));
            return;
        }
        let last = n - 1;
        let a_last = q[last * n + last];
        for k in 0..=steps {
            let x = k as f64 * GRID_STEP;
            let here = value + 0.5 * a * x * x + b * x;
            if depth + 1 == last {
                let b_last = lin[last] + q[last * n + depth] * x - p[last];
                *best = best.min(here + parabola_grid_min(a_last, b_last, steps));
                continue;
            }
            for j in depth + 1..n {
                lin[j] += q[j * n + depth] * x;
            }
            descend(q, p, depth + 1, here, lin, best);
            for j in depth + 1..n {
                lin[j] -= q[j * n + depth] * x;
            }
        }
    }
    /// `min_k ½ a x_k² + b x_k` over `x_k = k·GRID_STEP`, `0 ≤ k ≤ steps`.
    fn parabola_grid_min(a: f64, b: f64, steps: usize) -> f64 {
        let f = |k: usize| {
            let x = k as f64 * GRID_STEP;
            0.5 * a * x * x + b * x
        };
        if a <= 0.0 {
            return f(0).min(f(steps));
        }
        let centre = (-b / a / GRID_STEP).clamp(0.0, steps as f64);
        f(centre.floor() as usize).min(f(centre.ceil() as usize))
    }
    let mut best = f64::INFINITY;
    descend(&q, qp.p(), 0, 0.0, &mut vec![0.0; n], &mut best);
    best
}

fn qp_grid_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for instance in 0..20 {
        let n = 2 + instance % 3;
        let kind = if instance % 2 == 0 { KernelKind::Delta } else { KernelKind::ProductDelta };
        let kernel = KernelSpec::new(kind, 2, 2).map_err(err)?;
        let samples: Vec<LabeledPair> =
            (0..n).map(|_| LabeledPair::new(rng.gen_range(0..2), rng.gen_range(0..2))).collect();
        let qp = build_qp(&samples, &kernel, default_ridge(&samples, &kernel)).map_err(err)?;
        let sol = solve_ratio_qp(&qp, 100_000, 1e-10).map_err(err)?;
        ensure(sol.r.iter().all(|&x| (0.0..=GRID_MAX).contains(&x)), || {
            format!("instance {instance}: solution {:?} leaves the grid box", sol.r)
        })?;
        let gap = (qp.objective(&sol.r) - grid_minimum(&qp)).abs();
        ensure(gap <= 2e-2, || format!("instance {instance}: objective gap {gap}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("20 instances, worst objective gap {worst:.2e}"))
}

/// `(1/n) Σ r_i h(s_i) − 1/(n(n−1)) Σ_{i≠j} h(v_i, ŷ_j)` with `h` given by
/// its feature coefficients.
fn witness_gap(samples: &[LabeledPair], r: &[f64], kernel: &KernelSpec, beta: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mut joint = 0.0;
    let mut cross = 0.0;
    for (i, a) in samples.iter().enumerate() {
        joint += r[i] * kernel.evaluate(beta, a.v, a.yhat);
        for (j, b) in samples.iter().enumerate() {
            if i != j {
                cross += kernel.evaluate(beta, a.v, b.yhat);
            }
        }
    }
    joint / n - cross / (n * (n - 1.0))
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn mmd_closed_form() -> Verdict {
    let kernel = KernelSpec::delta(2, 2).map_err(err)?;
    let hand = [LabeledPair::new(0, 0), LabeledPair::new(1, 1)];
    let value = empirical_mmd(&hand, &[0.0, 0.0], &kernel).map_err(err)?;
    ensure((value - 0.5f64.sqrt()).abs() <= 1e-9, || format!("hand instance gives {value}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for instance in 0..20 {
        let n = 2 + instance % 5;
        let samples: Vec<LabeledPair> =
            (0..n).map(|_| LabeledPair::new(rng.gen_range(0..2), rng.gen_range(0..2))).collect();
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.5)).collect();
        let closed = empirical_mmd(&samples, &r, &kernel).map_err(err)?;
        let mut sup = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let beta = random_unit(&mut rng, kernel.feature_dim());
            sup = sup.max(witness_gap(&samples, &r, &kernel, &beta));
        }
        let gap = closed - sup;
        ensure((-1e-9..=1e-3).contains(&gap), || {
            format!("instance {instance}: closed form {closed}, sampled sup {sup}")
        })?;
        worst = worst.max(gap);
    }
    Ok(format!("hand instance {value:.10}, worst sup gap {worst:.2e} over 20 instances"))
}

fn u_statistic_mean() -> Verdict {
    let joint = DiscreteJoint::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).map_err(err)?;
    let ratio = joint.independence_ratio().map_err(err)?;
    let kernel = KernelSpec::delta(2, 2).map_err(err)?;
    let cdf: Vec<f64> = joint
        .pmf()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut values = vec![Vec::new(); 4];
    for _ in 0..1000 {
        let samples: Vec<LabeledPair> = (0..200)
            .map(|_| {
                let u: f64 = rng.gen();
                let cell = cdf.iter().position(|&c| u < c).unwrap_or(3);
                LabeledPair::new(cell / 2, cell % 2)
            })
            .collect();
        for (k, &phi) in PhiGenerator::ALL.iter().enumerate() {
            values[k].push(u_statistic_diagnostic(phi, &samples, &kernel, &ratio).map_err(err)?);
        }
    }
    let mut detail = Vec::new();
    for (k, phi) in PhiGenerator::ALL.iter().enumerate() {
        let (mean, se) = mean_and_se(&values[k]);
        ensure(mean.abs() <= 3.0 * se, || format!("{phi}: mean {mean}, se {se}"))?;
        detail.push(format!("{phi} {:+.2}se", mean / se));
    }
    Ok(detail.join(", "))
}

/// Maximizer of the concave `u ↦ u v − φ(u)` on `[lo, hi]`.
fn ternary_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

fn fenchel_young() -> Verdict {
    let mut worst_eq = 0.0f64;
    for phi in PhiGenerator::ALL {
        ensure(phi.conjugate(0.0) == 0.0, || format!("{phi}: conjugate(0) = {}", phi.conjugate(0.0)))?;
        let domain = phi.conjugate_domain();
        let v_hi = if domain.upper_closed { domain.upper } else { domain.upper - 1e-3 };
        let vs: Vec<f64> = (0..=400).map(|k| -5.0 + k as f64 * (v_hi + 5.0) / 400.0).collect();
        for &v in &vs {
            let conj = phi.conjugate(v);
            ensure(conj.is_finite(), || format!("{phi}: conjugate({v}) not finite"))?;
            for k in 1..=2000 {
                let u = k as f64 * 0.005;
                let slack = phi.value(u) + conj - u * v;
                ensure(slack >= -1e-12 * (1.0 + conj.abs() + (u * v).abs()), || {
                    format!("{phi}: inequality fails at u={u}, v={v} by {slack}")
                })?;
            }
        }
        // equality where the supremum is attained inside a bounded interval
        let v_eq_hi = match phi {
            PhiGenerator::TotalVariation => 1.0,
            _ => 0.9,
        };
        for k in 0..=100 {
            let v = -0.9 + k as f64 * (v_eq_hi + 0.9) / 100.0;
            let f = |u: f64| u * v - phi.value(u);
            let u_star = ternary_max(f, 1e-9, 200.0);
            let gap = (f(u_star) - phi.conjugate(v)).abs();
            ensure(gap <= 1e-6, || format!("{phi}: equality gap {gap} at v={v}, u*={u_star}"))?;
            worst_eq = worst_eq.max(gap);
        }
    }
    Ok(format!("inequality on 401x2000 grids, worst equality gap {worst_eq:.1e}, conjugate(0) = 0"))
}

fn correlated_data(seed: u64) -> Result<(DiscreteScenario, Dataset), String> {
    let scenario = DiscreteScenario::proxy(1.0).map_err(err)?;
    let data = scenario.generate(1000, seed).map_err(err)?;
    Ok((scenario, data))
}

fn learner_tradeoff() -> Verdict {
    let (_, data) = correlated_data(8)?;
    let etas = [0.01, 0.05, 0.1, 0.5, f64::INFINITY];
    let config = TrainConfig::default();
    let models = sweep(&data, &config, &etas)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    for m in &models {
        ensure(m.achieved_fairness <= m.eta + 1e-3, || {
            format!("eta {}: achieved {}", m.eta, m.achieved_fairness)
        })?;
    }
    for w in models.windows(2) {
        ensure(w[1].empirical_risk <= w[0].empirical_risk + 1e-3, || {
            format!("risk rises from {} (eta {}) to {} (eta {})", w[0].empirical_risk, w[0].eta, w[1].empirical_risk, w[1].eta)
        })?;
    }
    let baseline = fit_unconstrained(&data, 2, 100).map_err(err)?;
    let base_risk = empirical_risk(&baseline, &data).map_err(err)?;
    let free = models.last().unwrap();
    ensure((free.empirical_risk - base_risk).abs() <= 1e-3, || {
        format!("eta = inf risk {} vs unconstrained {base_risk}", free.empirical_risk)
    })?;
    ensure(models[0].empirical_risk > base_risk, || "tightest budget costs no risk".into())?;
    let risks: Vec<String> = models.iter().map(|m| format!("{:.4}", m.empirical_risk)).collect();
    Ok(format!("risks {} (unconstrained {base_risk:.4})", risks.join(" ")))
}

fn learner_generalization() -> Verdict {
    let eta = 0.05;
    let n = 1000;
    let config = TrainConfig {
        eta,
        phi: HELLINGER,
        ..TrainConfig::default()
    };
    let slack = theorem1_constant(HELLINGER, &config.bounds) * (2.0 * T_CONF / n as f64).sqrt();
    let seeds = 100u64;
    let mut covered = 0;
    let mut oracles = Vec::new();
    for seed in 0..seeds {
        let (scenario, data) = correlated_data(20_000 + seed)?;
        let model = train(&data, &config).map_err(err)?;
        let oracle = scenario.oracle_dependency(&model.scorer, HELLINGER).map_err(err)?;
        covered += (oracle <= eta + slack) as usize;
        oracles.push(oracle);
    }
    let rate = covered as f64 / seeds as f64;
    ensure(rate >= 0.9, || format!("coverage {rate}"))?;
    let worst = oracles.iter().cloned().fold(0.0, f64::max);
    Ok(format!(
        "coverage {:.0}% of eta + {slack:.3}, median oracle {:.4}, max {worst:.4}",
        100.0 * rate,
        median(oracles.clone())
    ))
}

fn subgradient_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 20;
    let smooth = [HELLINGER, KL, PhiGenerator::ChiSquared];
    let mut worst = 0.0f64;
    for instance in 0..20 {
        let phi = smooth[instance % 3];
        let classes = 2 + instance % 2;
        let kind = if instance % 2 == 0 { KernelKind::Delta } else { KernelKind::ProductDelta };
        let views: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let mut data = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..classes).map(|_| 0.1 + rng.gen::<f64>()).collect();
            let s: f64 = row.iter().sum();
            data.extend(row.iter().map(|x| x / s));
        }
        let gamma = GammaMatrix::new(n, classes, data).map_err(err)?;
        let spec = FairnessSpec {
            phi,
            kernel: KernelSpec::new(kind, 2, classes).map_err(err)?,
            a_n: rng.gen_range(0.2..1.0),
            bounds: if instance % 4 == 3 { Some(RatioBounds::new(0.8, 1.25).unwrap()) } else { None },
        };
        let (_, g) = fairness_subgradient(&gamma, &views, &spec).map_err(err)?;
        let total = g.total();
        let h = 1e-5;
        let (mut e, mut scale) = (0.0f64, 0.0f64);
        for i in 0..n {
            for a in 0..classes {
                for b in (a + 1)..classes {
                    // e_a − e_b is a tangent direction of the simplex
                    let shifted = |sign: f64| {
                        let mut x = gamma.as_slice().to_vec();
                        x[i * classes + a] += sign * h;
                        x[i * classes + b] -= sign * h;
                        GammaMatrix::new(n, classes, x)
                    };
                    let cp = fairness_functional(&shifted(1.0).map_err(err)?, &views, &spec).map_err(err)?;
                    let cm = fairness_functional(&shifted(-1.0).map_err(err)?, &views, &spec).map_err(err)?;
                    let fd = (cp - cm) / (2.0 * h);
                    let analytic = total[i * classes + a] - total[i * classes + b];
                    e = e.max((fd - analytic).abs());
                    scale = scale.max(fd.abs());
                }
            }
        }
        let rel = e / scale.max(1e-300);
        ensure(rel <= 1e-3, || format!("instance {instance} ({phi}, {classes} classes): relative error {rel}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("20 instances, worst relative error {worst:.2e}"))
}

/// `E|Σ σ_i| / n` for `n` Rademacher signs, `n` even.
fn exact_abs_mean(n: usize) -> f64 {
    // E|S| = n C(n, n/2) / 2^n
    let mut central = 1.0f64;
    for k in 0..n / 2 {
        central *= (n - k) as f64 / (n / 2 - k) as f64 / 4.0;
    }
    central
}

fn rademacher_mc() -> Verdict {
    let n = 100;
    let ones = LossMatrix::from_rows(&[vec![1.0; n]]).map_err(err)?;
    let est = empirical_rademacher(&ones, 100_000, 11).map_err(err)?;
    let exact = exact_abs_mean(n);
    ensure((est.rad_abs - exact).abs() <= 3.0 * est.std_error_abs, || {
        format!("rad_abs {} vs exact {exact} (se {})", est.rad_abs, est.std_error_abs)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut previous: Option<(f64, f64)> = None;
    for _ in 0..6 {
        rows.push((0..n).map(|_| rng.gen::<f64>()).collect());
        let est = empirical_rademacher(&LossMatrix::from_rows(&rows).map_err(err)?, 20_000, 13).map_err(err)?;
        if let Some((rad, se)) = previous {
            ensure(est.rad >= rad - 3.0 * se.max(est.std_error), || {
                format!("rad falls from {rad} to {} at {} hypotheses", est.rad, rows.len())
            })?;
        }
        previous = Some((est.rad, est.std_error));
    }
    Ok(format!(
        "rad_abs {:.5} vs exact {exact:.6} ({:+.2}se), rad non-decreasing over 6 nested sets",
        est.rad_abs,
        (est.rad_abs - exact) / est.std_error_abs
    ))
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "concentration constants table", budget: secs(1), run: constants_table },
        Criterion { id: 2, name: "dependency bound coverage", budget: secs(120), run: bound_coverage },
        Criterion { id: 3, name: "estimation error rate", budget: secs(180), run: estimation_rate },
        Criterion { id: 4, name: "ratio QP vs grid search", budget: secs(10), run: qp_grid_equivalence },
        Criterion { id: 5, name: "MMD closed form", budget: secs(30), run: mmd_closed_form },
        Criterion { id: 6, name: "U-statistic zero mean", budget: secs(30), run: u_statistic_mean },
        Criterion { id: 7, name: "Fenchel-Young", budget: None, run: fenchel_young },
        Criterion { id: 8, name: "learner feasibility and trade-off", budget: secs(120), run: learner_tradeoff },
        Criterion { id: 9, name: "learner dependency generalization", budget: secs(180), run: learner_generalization },
        Criterion { id: 10, name: "fairness subgradient", budget: None, run: subgradient_check },
        Criterion { id: 11, name: "Rademacher Monte Carlo", budget: None, run: rademacher_mc },
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {:.2}s, budget {}s", elapsed.as_secs_f64(), b.as_secs())),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failures += outcome.is_err() as usize;
        println!("[{tag}] criterion {:>2} {}: {detail} ({:.2}s)", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{} of 11 criteria passed", 11 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
