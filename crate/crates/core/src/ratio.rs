//! Probability-ratio estimation by minimizing the U-statistic empirical MMD.
//!
//! For samples `(v_i, ŷ_i)` and weights `r_i`, the empirical MMD over the unit
//! ball of the RKHS is the norm of the residual
//!
//! ```text
//! R(r) = 1/(n(n−1)) Σ_{i≠j} Φ(v_i, ŷ_j) − 1/n Σ_i r_i Φ(v_i, ŷ_i)
//! ```
//!
//! and `‖R(r)‖² = (2/n²)(½ rᵀQr − pᵀr) + const` with `Q_ij = k(z_i, z_j)` and
//! `p_i = 1/(n−1) Σ_{j≠k} k(z_i, (v_j, ŷ_k))`. The ratio estimate is the
//! non-negative minimizer of the (ridge-regularized) quadratic.

use crate::divergence::RatioBounds;
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, LabeledPair};

/// Occupancy counts of a sample over the `V × Ŷ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCounts {
    pub n: usize,
    pub views: Vec<usize>,
    pub labels: Vec<usize>,
    pub cells: Vec<usize>,
}

impl CellCounts {
    pub fn tally(samples: &[LabeledPair], kernel: &KernelSpec) -> Result<Self> {
        let mut views = vec![0; kernel.n_views()];
        let mut labels = vec![0; kernel.n_labels()];
        let mut cells = vec![0; kernel.n_cells()];
        for &s in samples {
            kernel.check(s)?;
            views[s.v] += 1;
            labels[s.yhat] += 1;
            cells[kernel.cell(s.v, s.yhat)] += 1;
        }
        Ok(Self {
            n: samples.len(),
            views,
            labels,
            cells,
        })
    }

    /// Number of ordered pairs `i ≠ j` with `v_i = v` and `ŷ_j = y`.
    pub fn cross_pairs(&self, v: usize, y: usize, n_labels: usize) -> f64 {
        (self.views[v] * self.labels[y] - self.cells[v * n_labels + y]) as f64
    }
}

fn require_pairs(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InsufficientSamples { needed: 2, got: n })
    } else {
        Ok(())
    }
}

/// `1/(n(n−1)) Σ_{i≠j} Φ(v_i, ŷ_j)`, the U-statistic embedding of `P_V ⊗ P_Ŷ`.
pub fn independent_embedding(counts: &CellCounts, kernel: &KernelSpec) -> Vec<f64> {
    let n = counts.n as f64;
    let scale = 1.0 / (n * (n - 1.0));
    let mut out = vec![0.0; kernel.feature_dim()];
    for v in 0..kernel.n_views() {
        for y in 0..kernel.n_labels() {
            let pairs = counts.cross_pairs(v, y, kernel.n_labels());
            if pairs != 0.0 {
                kernel.add_feature(v, y, pairs * scale, &mut out);
            }
        }
    }
    out
}

/// The residual `R(r)` in the explicit feature space.
pub fn mean_embedding_residual(samples: &[LabeledPair], r: &[f64], kernel: &KernelSpec) -> Result<Vec<f64>> {
    require_pairs(samples.len())?;
    if r.len() != samples.len() {
        return Err(Error::Shape {
            expected: samples.len(),
            got: r.len(),
        });
    }
    if let Some(bad) = r.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("ratio values must be non-negative, got {bad}")));
    }
    let counts = CellCounts::tally(samples, kernel)?;
    let mut out = independent_embedding(&counts, kernel);
    let inv_n = 1.0 / samples.len() as f64;
    for (s, &ri) in samples.iter().zip(r) {
        kernel.add_feature(s.v, s.yhat, -ri * inv_n, &mut out);
    }
    Ok(out)
}

/// Empirical MMD: the RKHS norm of [`mean_embedding_residual`].
pub fn empirical_mmd(samples: &[LabeledPair], r: &[f64], kernel: &KernelSpec) -> Result<f64> {
    let res = mean_embedding_residual(samples, r, kernel)?;
    Ok(res.iter().map(|x| x * x).sum::<f64>().sqrt())
}

#[derive(Debug, Clone)]
enum Gram {
    Dense { n: usize, values: Vec<f64> },
    // Q = Z Zᵀ with Z the n × dim matrix of non-negative feature rows
    Features { n: usize, dim: usize, rows: Vec<f64> },
}

/// The quadratic program `min_{r ≥ 0} ½ rᵀ(Q + ridge·I)r − pᵀr`.
#[derive(Debug, Clone)]
pub struct MmdQp {
    gram: Gram,
    p: Vec<f64>,
    ridge: f64,
}

impl MmdQp {
    /// An arbitrary instance from a dense symmetric matrix (row-major).
    pub fn from_dense(n: usize, q: Vec<f64>, p: Vec<f64>, ridge: f64) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::Shape { expected: n * n, got: q.len() });
        }
        if p.len() != n {
            return Err(Error::Shape { expected: n, got: p.len() });
        }
        if !(ridge >= 0.0) {
            return Err(Error::InvalidArgument(format!("ridge must be non-negative, got {ridge}")));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (q[i * n + j], q[j * n + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidArgument(format!("Q is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            gram: Gram::Dense { n, values: q },
            p,
            ridge,
        })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Entry `Q_ij` (without the ridge).
    pub fn q(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Gram::Dense { n, values } => values[i * n + j],
            Gram::Features { dim, rows, .. } => {
                let a = &rows[i * dim..(i + 1) * dim];
                let b = &rows[j * dim..(j + 1) * dim];
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
        }
    }

    /// `Q` as a dense row-major matrix.
    pub fn q_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.q(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.q(i, i)).sum()
    }

    /// `(Q + ridge·I) r`
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = r.iter().map(|x| self.ridge * x).collect();
        match &self.gram {
            Gram::Dense { n, values } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &values[i * n..(i + 1) * n];
                    *o += row.iter().zip(r).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            Gram::Features { n, dim, rows } => {
                let mut z = vec![0.0; *dim];
                for i in 0..*n {
                    for (zk, f) in z.iter_mut().zip(&rows[i * dim..(i + 1) * dim]) {
                        *zk += f * r[i];
                    }
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &rows[i * dim..(i + 1) * dim];
                    *o += row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        out
    }

    pub fn objective(&self, r: &[f64]) -> f64 {
        let qr = self.apply(r);
        0.5 * dot(r, &qr) - dot(&self.p, r)
    }

    /// Gershgorin bound on the largest eigenvalue of `Q + ridge·I`.
    pub fn lipschitz_bound(&self) -> f64 {
        let base = match &self.gram {
            Gram::Dense { n, values } => values
                .chunks(*n)
                .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Gram::Features { n, dim, rows } => {
                // entries are non-negative, so |row sum| = ⟨Φ_i, Σ_j Φ_j⟩
                let mut total = vec![0.0; *dim];
                for i in 0..*n {
                    for (t, f) in total.iter_mut().zip(&rows[i * dim..(i + 1) * dim]) {
                        *t += f;
                    }
                }
                rows.chunks(*dim)
                    .map(|row| dot(row, &total))
                    .fold(0.0, f64::max)
            }
        };
        base + self.ridge
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Default ridge `1e−6 · trace(Q) / n`.
pub fn default_ridge(samples: &[LabeledPair], kernel: &KernelSpec) -> f64 {
    let diag: f64 = samples.iter().map(|&s| kernel.k(s, s)).sum();
    1e-6 * diag / samples.len().max(1) as f64
}

/// Fills `Q` and `p` for the given sample.
pub fn build_qp(samples: &[LabeledPair], kernel: &KernelSpec, ridge: f64) -> Result<MmdQp> {
    let n = samples.len();
    require_pairs(n)?;
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge must be non-negative, got {ridge}")));
    }
    let counts = CellCounts::tally(samples, kernel)?;
    // Σ_{j≠k} Φ(v_j, ŷ_k)
    let mut cross = vec![0.0; kernel.feature_dim()];
    for v in 0..kernel.n_views() {
        for y in 0..kernel.n_labels() {
            let pairs = counts.cross_pairs(v, y, kernel.n_labels());
            if pairs != 0.0 {
                kernel.add_feature(v, y, pairs, &mut cross);
            }
        }
    }
    let dim = kernel.feature_dim();
    let mut rows = vec![0.0; n * dim];
    let mut p = Vec::with_capacity(n);
    for (i, s) in samples.iter().enumerate() {
        kernel.add_feature(s.v, s.yhat, 1.0, &mut rows[i * dim..(i + 1) * dim]);
        p.push(kernel.evaluate(&cross, s.v, s.yhat) / (n as f64 - 1.0));
    }
    Ok(MmdQp {
        gram: Gram::Features { n, dim, rows },
        p,
        ridge,
    })
}

/// Result of [`solve_ratio_qp`].
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub r: Vec<f64>,
    pub iterations: usize,
    /// `max_i |min(r_i, ∇_i)|`, zero exactly at a KKT point.
    pub kkt_residual: f64,
}

fn kkt_residual(r: &[f64], grad: &[f64]) -> f64 {
    r.iter()
        .zip(grad)
        .map(|(x, g)| x.min(*g).abs())
        .fold(0.0, f64::max)
}

/// Projected gradient with fixed step `1/L` from `r = 1`.
pub fn solve_ratio_qp(qp: &MmdQp, max_iter: usize, tol: f64) -> Result<QpSolution> {
    let n = qp.n();
    let lip = qp.lipschitz_bound();
    if !(lip > 0.0) {
        return Err(Error::InvalidArgument("quadratic term is identically zero".into()));
    }
    let step = 1.0 / lip;
    let mut r = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for iter in 0..=max_iter {
        let mut grad = qp.apply(&r);
        for (g, p) in grad.iter_mut().zip(qp.p()) {
            *g -= p;
        }
        residual = kkt_residual(&r, &grad);
        if residual <= tol {
            return Ok(QpSolution {
                r,
                iterations: iter,
                kkt_residual: residual,
            });
        }
        if iter == max_iter {
            break;
        }
        for (x, g) in r.iter_mut().zip(&grad) {
            *x = (*x - step * g).max(0.0);
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual,
        last_iterate: r,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct RatioOptions {
    /// Ridge weight; `None` uses [`default_ridge`].
    pub ridge: Option<f64>,
    /// Rescale so that the sample mean of `r` is 1.
    pub normalize: bool,
    pub clamp: Option<RatioBounds>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RatioOptions {
    fn default() -> Self {
        Self {
            ridge: None,
            normalize: false,
            clamp: None,
            max_iter: 200_000,
            tol: 1e-8,
        }
    }
}

/// Estimated ratio per sample and averaged per (v, ŷ) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub per_sample: Vec<f64>,
    /// Mean of `per_sample` over each cell; `None` for empty cells.
    pub per_cell: Vec<Option<f64>>,
    pub n_views: usize,
    pub n_labels: usize,
    pub normalized: bool,
}

impl RatioTable {
    pub fn cell(&self, v: usize, yhat: usize) -> Option<f64> {
        self.per_cell[v * self.n_labels + yhat]
    }

    fn aggregate(samples: &[LabeledPair], per_sample: Vec<f64>, kernel: &KernelSpec, normalized: bool) -> Self {
        let mut sums = vec![0.0; kernel.n_cells()];
        let mut counts = vec![0usize; kernel.n_cells()];
        for (s, r) in samples.iter().zip(&per_sample) {
            let c = kernel.cell(s.v, s.yhat);
            sums[c] += r;
            counts[c] += 1;
        }
        let per_cell = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| (c > 0).then(|| s / c as f64))
            .collect();
        Self {
            per_sample,
            per_cell,
            n_views: kernel.n_views(),
            n_labels: kernel.n_labels(),
            normalized,
        }
    }
}

/// Builds and solves the ratio QP, then optionally normalizes and clamps.
pub fn estimate_ratio(samples: &[LabeledPair], kernel: &KernelSpec, options: &RatioOptions) -> Result<RatioTable> {
    require_pairs(samples.len())?;
    let ridge = options.ridge.unwrap_or_else(|| default_ridge(samples, kernel));
    let qp = build_qp(samples, kernel, ridge)?;
    let mut r = solve_ratio_qp(&qp, options.max_iter, options.tol)?.r;
    let mut normalized = false;
    if options.normalize {
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        if mean > 0.0 {
            r.iter_mut().for_each(|x| *x /= mean);
            normalized = true;
        }
    }
    if let Some(bounds) = options.clamp {
        r.iter_mut().for_each(|x| *x = bounds.clamp(*x));
    }
    Ok(RatioTable::aggregate(samples, r, kernel, normalized))
}
