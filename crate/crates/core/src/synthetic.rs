//! Seeded synthetic scenarios with exact (discrete) or Monte-Carlo
//! (Gaussian) oracles for the dependency of a scorer's predictions.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::dataset::{encode_input, Dataset, Sample};
use crate::divergence::{exact_dependency, DiscreteJoint, PhiGenerator};
use crate::error::{Error, Result};
use crate::scorer::LinearScorer;

/// Smallest cell mass allowed in a scenario.
pub const CELL_FLOOR: f64 = 0.01;

/// Floor applied to prediction joints before computing oracles.
pub const JOINT_FLOOR: f64 = CELL_FLOOR * 1e-3;

/// Anything that draws iid `(v, w, y)` rows.
pub trait Scenario {
    fn n_views(&self) -> usize;
    fn n_labels(&self) -> usize;
    fn w_dim(&self) -> usize;
    fn sample_row<R: Rng>(&self, rng: &mut R) -> Sample;

    /// `n` iid rows; the same `(scenario, n, seed)` always gives the same data.
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::InvalidArgument("cannot generate an empty dataset".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n).map(|_| self.sample_row(&mut rng)).collect();
        Dataset::new(self.n_views(), self.n_labels(), self.w_dim(), rows)
    }
}

/// A pmf over `(v, w, y)` with `w` on a finite grid.
#[derive(Debug, Clone)]
pub struct DiscreteScenario {
    n_views: usize,
    n_labels: usize,
    w_grid: Vec<Vec<f64>>,
    /// Index `(v * |W| + w) * |Y| + y`.
    pmf: Vec<f64>,
    knob: f64,
    sampler: WeightedIndex<f64>,
}

impl DiscreteScenario {
    pub fn new(
        n_views: usize,
        n_labels: usize,
        w_grid: Vec<Vec<f64>>,
        pmf: Vec<f64>,
        knob: f64,
    ) -> Result<Self> {
        let cells = n_views * w_grid.len() * n_labels;
        if cells == 0 {
            return Err(Error::InvalidArgument("scenario must have at least one cell".into()));
        }
        if pmf.len() != cells {
            return Err(Error::Shape {
                expected: cells,
                got: pmf.len(),
            });
        }
        let w_dim = w_grid[0].len();
        if w_grid.iter().any(|w| w.len() != w_dim || w.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("W grid points must share one finite dimension".into()));
        }
        if let Some(p) = pmf.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::Domain(format!("scenario cells must be strictly positive, got {p}")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("scenario pmf sums to {total}")));
        }
        if !(0.0..=1.0).contains(&knob) {
            return Err(Error::InvalidArgument(format!("dependency knob must lie in [0, 1], got {knob}")));
        }
        let sampler = WeightedIndex::new(&pmf).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self {
            n_views,
            n_labels,
            w_grid,
            pmf,
            knob,
            sampler,
        })
    }

    /// Two viewpoints, two labels, and `w = (w1, w2)` with `w1 ∈ {0, 1}` a
    /// proxy of `v` and `w2 ∈ {0, ½, 1}` independent of `v`.
    ///
    /// `knob = 0` gives `v` independent of `(w1, y)`. As the knob grows, `w1`
    /// agrees with `v` more often (off-diagonal mass falls to the floor at 1)
    /// and `y` leans on both `v` and `w1`. At `knob = 0.625`, `P(v, w1)` is
    /// `[0.4, 0.1; 0.1, 0.4]`.
    pub fn proxy(knob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&knob) {
            return Err(Error::InvalidArgument(format!("dependency knob must lie in [0, 1], got {knob}")));
        }
        let off = 0.25 - knob * (0.25 - CELL_FLOOR);
        let sign = |x: f64| 2.0 * x - 1.0;
        let w2_levels = [0.0, 0.5, 1.0];
        let mut w_grid = Vec::new();
        for w1 in [0.0, 1.0] {
            for w2 in w2_levels {
                w_grid.push(vec![w1, w2]);
            }
        }
        let mut pmf = Vec::with_capacity(2 * w_grid.len() * 2);
        for v in 0..2 {
            for w in &w_grid {
                let agree = (v as f64 - w[0]).abs() < 0.5;
                let p_vw1 = if agree { 0.5 - off } else { off };
                let p_vw = p_vw1 / w2_levels.len() as f64;
                let p1 = 0.5 + knob * (0.2 * sign(v as f64) + 0.1 * sign(w[0])) + 0.15 * sign(w[1]);
                pmf.push(p_vw * (1.0 - p1));
                pmf.push(p_vw * p1);
            }
        }
        Self::new(2, 2, w_grid, pmf, knob)
    }

    pub fn knob(&self) -> f64 {
        self.knob
    }

    pub fn w_grid(&self) -> &[Vec<f64>] {
        &self.w_grid
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    fn index(&self, v: usize, w: usize, y: usize) -> usize {
        (v * self.w_grid.len() + w) * self.n_labels + y
    }

    pub fn prob(&self, v: usize, w: usize, y: usize) -> f64 {
        self.pmf[self.index(v, w, y)]
    }

    /// Marginal `P(v, y)`.
    pub fn view_label_joint(&self) -> DiscreteJoint {
        let mut table = vec![0.0; self.n_views * self.n_labels];
        for v in 0..self.n_views {
            for w in 0..self.w_grid.len() {
                for y in 0..self.n_labels {
                    table[v * self.n_labels + y] += self.prob(v, w, y);
                }
            }
        }
        DiscreteJoint::from_weights(self.n_views, self.n_labels, table).expect("positive pmf")
    }

    fn check_scorer(&self, scorer: &LinearScorer) -> Result<()> {
        let dim = 1 + self.w_dim();
        if scorer.input_dim() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: scorer.input_dim(),
            });
        }
        Ok(())
    }

    /// Exact law of `(v, ŷ)`: every `(v, w)` cell routes its mass to the
    /// scorer's prediction. Cells are floored at [`JOINT_FLOOR`] and the table
    /// renormalized.
    pub fn prediction_joint(&self, scorer: &LinearScorer) -> Result<DiscreteJoint> {
        self.check_scorer(scorer)?;
        let classes = scorer.n_classes();
        let mut table = vec![0.0; self.n_views * classes];
        for v in 0..self.n_views {
            for (wi, w) in self.w_grid.iter().enumerate() {
                let mass: f64 = (0..self.n_labels).map(|y| self.prob(v, wi, y)).sum();
                let yhat = scorer.predict(&encode_input(v, w))?;
                table[v * classes + yhat] += mass;
            }
        }
        floored_joint(self.n_views, classes, table)
    }

    /// `D_φ(P_V ⊗ P_Ŷ, P_{V,Ŷ})` for the scorer's predictions.
    pub fn oracle_dependency(&self, scorer: &LinearScorer, phi: PhiGenerator) -> Result<f64> {
        exact_dependency(phi, &self.prediction_joint(scorer)?)
    }
}

impl Scenario for DiscreteScenario {
    fn n_views(&self) -> usize {
        self.n_views
    }

    fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn w_dim(&self) -> usize {
        self.w_grid[0].len()
    }

    fn sample_row<R: Rng>(&self, rng: &mut R) -> Sample {
        let k = self.sampler.sample(rng);
        let y = k % self.n_labels;
        let w = (k / self.n_labels) % self.w_grid.len();
        let v = k / (self.n_labels * self.w_grid.len());
        Sample {
            v,
            w: self.w_grid[w].clone(),
            y,
        }
    }
}

/// Floors every cell at [`JOINT_FLOOR`] and renormalizes.
pub fn floored_joint(n_views: usize, n_labels: usize, mut table: Vec<f64>) -> Result<DiscreteJoint> {
    for p in &mut table {
        *p = p.max(JOINT_FLOOR);
    }
    DiscreteJoint::from_weights(n_views, n_labels, table)
}

/// `(v, y)` drawn from mixing weights, then `w ~ N(μ_{v,y}, diag σ²)`.
#[derive(Debug, Clone)]
pub struct GaussianScenario {
    n_views: usize,
    n_labels: usize,
    means: Vec<Vec<f64>>,
    std_devs: Vec<f64>,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl GaussianScenario {
    /// `means` and `weights` are indexed `v * n_labels + y`.
    pub fn new(
        n_views: usize,
        n_labels: usize,
        means: Vec<Vec<f64>>,
        variances: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let cells = n_views * n_labels;
        if cells == 0 {
            return Err(Error::InvalidArgument("scenario must have at least one cell".into()));
        }
        if means.len() != cells || weights.len() != cells {
            return Err(Error::Shape {
                expected: cells,
                got: means.len().min(weights.len()),
            });
        }
        if means.iter().any(|m| m.len() != variances.len() || m.iter().any(|x| !x.is_finite())) {
            return Err(Error::Shape {
                expected: variances.len(),
                got: means.iter().map(Vec::len).find(|&l| l != variances.len()).unwrap_or(0),
            });
        }
        if variances.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Domain("variances must be positive and finite".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("mixing weights must be non-negative and sum to 1".into()));
        }
        let sampler = WeightedIndex::new(&weights).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self {
            n_views,
            n_labels,
            means,
            std_devs: variances.iter().map(|s| s.sqrt()).collect(),
            weights,
            sampler,
        })
    }

    /// Two viewpoints and two labels in `d` dimensions; the first coordinate
    /// shifts with `v` by `knob`, the second with `y`.
    pub fn shifted(knob: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("need at least two feature dimensions".into()));
        }
        let mut means = Vec::new();
        let mut weights = Vec::new();
        for v in 0..2 {
            for y in 0..2 {
                let mut m = vec![0.0; d];
                m[0] = knob * (2.0 * v as f64 - 1.0);
                m[1] = 2.0 * y as f64 - 1.0;
                means.push(m);
                let agree = v == y;
                weights.push(if agree { 0.25 + 0.2 * knob } else { 0.25 - 0.2 * knob });
            }
        }
        Self::new(2, 2, means, vec![1.0; d], weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Scenario for GaussianScenario {
    fn n_views(&self) -> usize {
        self.n_views
    }

    fn n_labels(&self) -> usize {
        self.n_labels
    }

    fn w_dim(&self) -> usize {
        self.std_devs.len()
    }

    fn sample_row<R: Rng>(&self, rng: &mut R) -> Sample {
        let k = self.sampler.sample(rng);
        let w = self.means[k]
            .iter()
            .zip(&self.std_devs)
            .map(|(&m, &s)| Normal::new(m, s).expect("validated").sample(rng))
            .collect();
        Sample {
            v: k / self.n_labels,
            w,
            y: k % self.n_labels,
        }
    }
}

/// A Monte-Carlo dependency estimate with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Plug-in dependency of the scorer's predictions over `draws` fresh rows.
pub fn monte_carlo_dependency<S: Scenario>(
    scenario: &S,
    scorer: &LinearScorer,
    phi: PhiGenerator,
    draws: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if scorer.input_dim() != 1 + scenario.w_dim() {
        return Err(Error::Shape {
            expected: 1 + scenario.w_dim(),
            got: scorer.input_dim(),
        });
    }
    let data = scenario.generate(draws, seed)?;
    let classes = scorer.n_classes();
    let mut table = vec![0.0; scenario.n_views() * classes];
    for (i, row) in data.rows().iter().enumerate() {
        let yhat = scorer.predict(&data.input(i))?;
        table[row.v * classes + yhat] += 1.0;
    }
    let joint = floored_joint(scenario.n_views(), classes, table.iter().map(|c| c / draws as f64).collect())?;
    let value = exact_dependency(phi, &joint)?;
    let grad = dependency_gradient(phi, &joint);
    let mean: f64 = joint.pmf().iter().zip(&grad).map(|(p, g)| p * g).sum();
    let second: f64 = joint.pmf().iter().zip(&grad).map(|(p, g)| p * g * g).sum();
    let var = (second - mean * mean).max(0.0) / draws as f64;
    Ok(MonteCarloEstimate {
        value,
        std_error: var.sqrt(),
        draws,
    })
}

/// Gradient of `p ↦ Σ q φ(p/q)` with `q` the product of the marginals of `p`.
fn dependency_gradient(phi: PhiGenerator, joint: &DiscreteJoint) -> Vec<f64> {
    let (nv, ny) = (joint.n_views(), joint.n_labels());
    let pv = joint.view_marginal();
    let py = joint.label_marginal();
    let rho = |v: usize, y: usize| joint.get(v, y) / (pv[v] * py[y]);
    let psi = |r: f64| phi.value(r) - r * phi.slope(r);
    let mut grad = vec![0.0; nv * ny];
    for a in 0..nv {
        for b in 0..ny {
            let row: f64 = (0..ny).map(|y| py[y] * psi(rho(a, y))).sum();
            let col: f64 = (0..nv).map(|v| pv[v] * psi(rho(v, b))).sum();
            grad[a * ny + b] = phi.slope(rho(a, b)) + row + col;
        }
    }
    grad
}
