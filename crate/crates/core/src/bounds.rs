//! Monte-Carlo Rademacher complexities of finite hypothesis sets, the risk
//! bounds assembled from them, and the generator constant tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::divergence::{PhiGenerator, RatioBounds};
use crate::error::{Error, Result};
use crate::estimator::theorem1_constant;
use crate::scorer::{log_sum_exp, LinearScorer};

/// Sign vectors per worker chunk. Chunking depends only on `draws`, so the
/// estimate does not depend on the thread count.
const CHUNK: usize = 4096;

/// Losses of `m` hypotheses on `n` samples, row-major by hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    m: usize,
    n: usize,
    values: Vec<f64>,
    range_bound: f64,
}

impl LossMatrix {
    /// Fails unless every entry is finite and `max − min ≤ range_bound`.
    pub fn new(m: usize, n: usize, values: Vec<f64>, range_bound: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("loss matrix needs at least one hypothesis and one sample".into()));
        }
        if values.len() != m * n {
            return Err(Error::Shape {
                expected: m * n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("loss entries must be finite".into()));
        }
        let spread = spread(&values);
        if !(range_bound >= spread - 1e-12) {
            return Err(Error::Domain(format!(
                "loss spread {spread} exceeds the range bound {range_bound}"
            )));
        }
        Ok(Self {
            m,
            n,
            values,
            range_bound,
        })
    }

    /// One row per hypothesis; the range bound is the observed spread.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Shape {
                expected: n,
                got: bad.len(),
            });
        }
        let values: Vec<f64> = rows.concat();
        let c = spread(&values);
        Self::new(rows.len(), n, values, c)
    }

    /// Logistic losses of each scorer on `data`.
    pub fn logistic(scorers: &[LinearScorer], data: &Dataset) -> Result<Self> {
        let inputs: Vec<Vec<f64>> = (0..data.len()).map(|i| data.input(i)).collect();
        let labels = data.labels();
        let rows = scorers
            .iter()
            .map(|s| {
                inputs
                    .iter()
                    .zip(&labels)
                    .map(|(x, &y)| {
                        let scores = s.scores(x)?;
                        Ok(log_sum_exp(&scores) - scores[y])
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }

    pub fn n_hypotheses(&self) -> usize {
        self.m
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn range_bound(&self) -> f64 {
        self.range_bound
    }

    pub fn row(&self, h: usize) -> &[f64] {
        &self.values[h * self.n..(h + 1) * self.n]
    }

    /// Appends a hypothesis; the range bound grows to cover it.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("loss entries must be finite".into()));
        }
        self.values.extend_from_slice(row);
        self.m += 1;
        self.range_bound = self.range_bound.max(spread(&self.values));
        Ok(())
    }
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    /// `E sup_h (1/n) Σ σ_i h_i`
    pub rad: f64,
    /// `E sup_h |(1/n) Σ σ_i h_i|`
    pub rad_abs: f64,
    /// Largest per-hypothesis empirical variance (plug-in for `σ²`).
    pub sup_variance: f64,
    pub draws: usize,
    pub std_error: f64,
    pub std_error_abs: f64,
}

impl ComplexityEstimate {
    /// An estimate with known values and no Monte-Carlo error.
    pub fn exact(rad: f64, rad_abs: f64, sup_variance: f64) -> Self {
        Self {
            rad,
            rad_abs,
            sup_variance,
            draws: 0,
            std_error: 0.0,
            std_error_abs: 0.0,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sup_variance.max(0.0).sqrt()
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    sum_abs: f64,
    sum_abs_sq: f64,
}

impl Moments {
    fn add(self, o: Moments) -> Moments {
        Moments {
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            sum_abs: self.sum_abs + o.sum_abs,
            sum_abs_sq: self.sum_abs_sq + o.sum_abs_sq,
        }
    }
}

/// Monte-Carlo Rademacher complexities over `draws` sign vectors.
///
/// Chunk `k` draws from `ChaCha8Rng` seeded with `seed` on stream `k`, so
/// results are reproducible for a given `(losses, draws, seed)`.
pub fn empirical_rademacher(losses: &LossMatrix, draws: usize, seed: u64) -> Result<ComplexityEstimate> {
    if draws == 0 {
        return Err(Error::InvalidArgument("draws must be at least 1".into()));
    }
    let n = losses.n;
    let chunks = draws.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(draws - chunk * CHUNK);
            let mut signs = vec![0.0; n];
            let mut acc = Moments::default();
            for _ in 0..count {
                for block in signs.chunks_mut(64) {
                    let bits: u64 = rng.gen();
                    for (b, s) in block.iter_mut().enumerate() {
                        *s = if bits >> b & 1 == 1 { 1.0 } else { -1.0 };
                    }
                }
                let mut sup = f64::NEG_INFINITY;
                let mut sup_abs: f64 = 0.0;
                for h in 0..losses.m {
                    let v = losses.row(h).iter().zip(&signs).map(|(l, s)| l * s).sum::<f64>() / n as f64;
                    sup = sup.max(v);
                    sup_abs = sup_abs.max(v.abs());
                }
                acc.sum += sup;
                acc.sum_sq += sup * sup;
                acc.sum_abs += sup_abs;
                acc.sum_abs_sq += sup_abs * sup_abs;
            }
            acc
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::add);

    let d = draws as f64;
    let standard_error = |sum: f64, sum_sq: f64| {
        if draws < 2 {
            return 0.0;
        }
        let mean = sum / d;
        let var = ((sum_sq - d * mean * mean) / (d - 1.0)).max(0.0);
        (var / d).sqrt()
    };
    let sup_variance = (0..losses.m)
        .map(|h| {
            let row = losses.row(h);
            let mean = row.iter().sum::<f64>() / n as f64;
            row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
        })
        .fold(0.0, f64::max);
    Ok(ComplexityEstimate {
        rad: total.sum / d,
        rad_abs: total.sum_abs / d,
        sup_variance,
        draws,
        std_error: standard_error(total.sum, total.sum_sq),
        std_error_abs: standard_error(total.sum_abs, total.sum_abs_sq),
    })
}

fn check_tn(t: f64, n: usize) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("confidence parameter t must be positive, got {t}")));
    }
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(())
}

/// `risk_gap + 4 rad + σ √(2t/n) + c · 4t / (3n)`.
pub fn generalization_bound(risk_gap: f64, est: &ComplexityEstimate, c: f64, t: f64, n: usize) -> Result<f64> {
    check_tn(t, n)?;
    let n = n as f64;
    Ok(risk_gap + 4.0 * est.rad + est.sigma() * (2.0 * t / n).sqrt() + c * 4.0 * t / (3.0 * n))
}

/// `4 rad_abs(F_τ) + 4 rad_abs(F) + (σ_τ + σ) √(2t/n) + c · 8t / (3n)`,
/// holding with probability at least `1 − 2e^{−t} − e^{−τ}`.
pub fn restriction_cost_bound(
    est_tau: &ComplexityEstimate,
    est_full: &ComplexityEstimate,
    c: f64,
    t: f64,
    tau: f64,
    n: usize,
) -> Result<f64> {
    check_tn(t, n)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let n = n as f64;
    Ok(4.0 * (est_tau.rad_abs + est_full.rad_abs)
        + (est_tau.sigma() + est_full.sigma()) * (2.0 * t / n).sqrt()
        + c * 8.0 * t / (3.0 * n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRow {
    pub phi: PhiGenerator,
    pub t: f64,
    pub c: f64,
}

/// The concentration constant under bounds `(e^{−t}, e^{t})` for every pair.
pub fn constant_sweep(phis: &[PhiGenerator], t_grid: &[f64]) -> Result<Vec<ConstantRow>> {
    let mut rows = Vec::with_capacity(phis.len() * t_grid.len());
    for &phi in phis {
        for &t in t_grid {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidArgument(format!("t must be positive and finite, got {t}")));
            }
            let bounds = RatioBounds::exponential(t)?;
            rows.push(ConstantRow {
                phi,
                t,
                c: theorem1_constant(phi, &bounds),
            });
        }
    }
    Ok(rows)
}

pub fn constants_csv(rows: &[ConstantRow]) -> String {
    let mut out = String::from("phi,t,c\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.phi.name(), r.t, r.c));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeRow {
    pub phi: PhiGenerator,
    pub u: f64,
    pub value: f64,
}

pub fn phi_shape_table(phis: &[PhiGenerator], u_grid: &[f64]) -> Result<Vec<ShapeRow>> {
    let mut rows = Vec::with_capacity(phis.len() * u_grid.len());
    for &phi in phis {
        for &u in u_grid {
            rows.push(ShapeRow {
                phi,
                u,
                value: phi.eval(u)?,
            });
        }
    }
    Ok(rows)
}

pub fn shape_csv(rows: &[ShapeRow]) -> String {
    let mut out = String::from("phi,u,value\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.phi.name(), r.u, r.value));
    }
    out
}
