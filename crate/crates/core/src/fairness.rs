//! The relaxed fairness functional `C_n(γ)`, a subgradient, and the conjugate
//! dual used as a diagnostic.
//!
//! With relaxed predictions `γ` (rows in the simplex) everything depends on
//! `γ` through the soft counts `S_{v,k} = Σ_{i: v_i = v} γ_ik` and
//! `T_k = Σ_i γ_ik`. Per cell `c = (v, k)` let `w_c = S_c / n` and
//! `A_c = (n_v T_k − S_c) / (n(n−1))`. Then
//!
//! `C_n(γ) = min_r Σ_c w_c φ(r_c) + a ‖Σ_c (A_c − w_c r_c) Φ_c‖`,
//!
//! with `r` restricted to the ratio bounds.

use nalgebra::{DMatrix, DVector};

use crate::divergence::{PhiGenerator, RatioBounds};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Box used when no ratio bounds are given: `r ≥ 0` up to numerical guards.
const FREE_LO: f64 = 1e-12;
const FREE_HI: f64 = 1e12;

/// Relaxed predictions: an `n × c` matrix whose rows lie in the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    n: usize,
    c: usize,
    data: Vec<f64>,
}

impl GammaMatrix {
    pub fn new(n: usize, c: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * c {
            return Err(Error::Shape {
                expected: n * c,
                got: data.len(),
            });
        }
        if c == 0 {
            return Err(Error::InvalidArgument("gamma needs at least one class".into()));
        }
        for (i, row) in data.chunks(c).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("gamma row {i} is not in the simplex")));
            }
        }
        Ok(Self { n, c, data })
    }

    pub fn one_hot(labels: &[usize], c: usize) -> Result<Self> {
        let mut data = vec![0.0; labels.len() * c];
        for (i, &y) in labels.iter().enumerate() {
            if y >= c {
                return Err(Error::InvalidArgument(format!("label {y} outside 0..{c}")));
            }
            data[i * c + y] = 1.0;
        }
        Self::new(labels.len(), c, data)
    }

    pub fn uniform(n: usize, c: usize) -> Self {
        Self {
            n,
            c,
            data: vec![1.0 / c as f64; n * c],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_classes(&self) -> usize {
        self.c
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.c + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.c..(i + 1) * self.c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Moves every row by `-step · direction` and projects it back onto the
    /// simplex.
    pub fn descend(&mut self, direction: &[f64], step: f64) {
        for (row, d) in self.data.chunks_mut(self.c).zip(direction.chunks(self.c)) {
            for (x, g) in row.iter_mut().zip(d) {
                *x -= step * g;
            }
            project_simplex(row);
        }
    }

    /// `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.n != other.n || self.c != other.c {
            return Err(Error::Shape {
                expected: self.data.len(),
                got: other.data.len(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(Self { data, ..*self })
    }
}

/// Euclidean projection onto `{x ≥ 0, Σ x = 1}`.
pub fn project_simplex(x: &mut [f64]) {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

/// The data-independent part of a fairness evaluation.
#[derive(Debug, Clone, Copy)]
pub struct FairnessSpec {
    pub phi: PhiGenerator,
    pub kernel: KernelSpec,
    pub a_n: f64,
    /// Box for the per-cell ratio; `None` means `r ≥ 0`.
    pub bounds: Option<RatioBounds>,
}

impl FairnessSpec {
    fn ratio_box(&self) -> (f64, f64) {
        match self.bounds {
            Some(b) => (b.c_lo(), b.c_hi()),
            None => (FREE_LO, FREE_HI),
        }
    }
}

/// Soft per-cell statistics of `γ`.
#[derive(Debug, Clone)]
pub(crate) struct SoftCounts {
    n: f64,
    view_counts: Vec<f64>,
    /// `w_c = S_c / n`
    w: Vec<f64>,
    /// `A_c = (n_v T_k − S_c) / (n(n−1))`
    a: Vec<f64>,
}

pub(crate) fn soft_counts(gamma: &GammaMatrix, viewpoints: &[usize], kernel: &KernelSpec) -> Result<SoftCounts> {
    let n = gamma.n();
    if viewpoints.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: viewpoints.len(),
        });
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    if gamma.n_classes() != kernel.n_labels() {
        return Err(Error::Shape {
            expected: kernel.n_labels(),
            got: gamma.n_classes(),
        });
    }
    let labels = kernel.n_labels();
    let mut view_counts = vec![0.0; kernel.n_views()];
    let mut s = vec![0.0; kernel.n_cells()];
    let mut t = vec![0.0; labels];
    for (i, &v) in viewpoints.iter().enumerate() {
        if v >= kernel.n_views() {
            return Err(Error::InvalidArgument(format!(
                "viewpoint {v} outside 0..{}",
                kernel.n_views()
            )));
        }
        view_counts[v] += 1.0;
        for k in 0..labels {
            let g = gamma.get(i, k);
            s[kernel.cell(v, k)] += g;
            t[k] += g;
        }
    }
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let mut a = vec![0.0; kernel.n_cells()];
    for v in 0..kernel.n_views() {
        for k in 0..labels {
            let c = kernel.cell(v, k);
            a[c] = ((view_counts[v] * t[k] - s[c]) / pairs).max(0.0);
        }
    }
    Ok(SoftCounts {
        n: nf,
        view_counts,
        w: s.iter().map(|x| x / nf).collect(),
        a,
    })
}

/// Solution of the inner minimization over `r`.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// `C_n(γ)`.
    pub value: f64,
    /// `Σ_c w_c φ(r_c)`.
    pub divergence: f64,
    /// Residual norm `‖Σ_c (A_c − w_c r_c) Φ_c‖`.
    pub mmd: f64,
    /// Per-cell ratio. Cells with no mass carry the ratio that minimizes
    /// their marginal contribution, which is what the subgradient needs.
    pub r: Vec<f64>,
    /// Per-cell values `⟨β, Φ_c⟩` of the optimal dual direction.
    pub h: Vec<f64>,
    pub iterations: usize,
}

fn phi_second(phi: PhiGenerator, u: f64) -> f64 {
    match phi {
        PhiGenerator::TotalVariation => 0.0,
        PhiGenerator::Hellinger => 0.5 * u.powf(-1.5),
        PhiGenerator::ChiSquared => 2.0 / (u * u * u),
        PhiGenerator::Kl => 1.0 / (u * u),
    }
}

/// `argmin_{r ∈ [lo, hi]} φ(r) − s·r`.
fn inverse_slope(phi: PhiGenerator, s: f64, lo: f64, hi: f64) -> f64 {
    let r = match phi {
        PhiGenerator::TotalVariation => {
            if s > 1.0 {
                hi
            } else if s < -1.0 {
                lo
            } else {
                1.0
            }
        }
        _ if s >= 1.0 => hi,
        PhiGenerator::Hellinger => 1.0 / ((1.0 - s) * (1.0 - s)),
        PhiGenerator::ChiSquared => 1.0 / (1.0 - s).sqrt(),
        PhiGenerator::Kl => 1.0 / (1.0 - s),
    };
    r.clamp(lo, hi)
}

/// The inner problem restricted to cells with positive mass.
struct Inner<'a> {
    phi: PhiGenerator,
    a_n: f64,
    gram: &'a DMatrix<f64>,
    counts: &'a SoftCounts,
    active: Vec<usize>,
    lo: f64,
    hi: f64,
}

impl Inner<'_> {
    fn tv(&self) -> bool {
        self.phi == PhiGenerator::TotalVariation
    }

    fn dim(&self) -> usize {
        if self.tv() {
            2 * self.active.len()
        } else {
            self.active.len()
        }
    }

    /// Variable bounds. For TV the ratio is split as `r = 1 + p − q`.
    fn var_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.active.len();
        if self.tv() {
            let lo = vec![0.0; 2 * m];
            let mut hi = vec![self.hi - 1.0; m];
            hi.extend(std::iter::repeat_n(1.0 - self.lo, m));
            (lo, hi)
        } else {
            (vec![self.lo; m], vec![self.hi; m])
        }
    }

    fn ratios(&self, x: &[f64]) -> Vec<f64> {
        let m = self.active.len();
        if self.tv() {
            (0..m).map(|j| 1.0 + x[j] - x[m + j]).collect()
        } else {
            x.to_vec()
        }
    }

    fn residual(&self, r_active: &[f64]) -> DVector<f64> {
        let mut e = DVector::from_column_slice(&self.counts.a);
        for (j, &c) in self.active.iter().enumerate() {
            e[c] -= self.counts.w[c] * r_active[j];
        }
        e
    }

    fn separable(&self, x: &[f64], r: &[f64]) -> f64 {
        let m = self.active.len();
        if self.tv() {
            (0..m).map(|j| self.counts.w[self.active[j]] * (x[j] + x[m + j])).sum()
        } else {
            self.active
                .iter()
                .zip(r)
                .map(|(&c, &rc)| self.counts.w[c] * self.phi.value(rc))
                .sum()
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.ratios(x);
        let e = self.residual(&r);
        let norm = e.dot(&(self.gram * &e)).max(0.0).sqrt();
        self.separable(x, &r) + self.a_n * norm
    }

    /// Value, gradient and Hessian (the latter is regularized at `e ≈ 0`).
    fn derivatives(&self, x: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
        let m = self.active.len();
        let r = self.ratios(x);
        let e = self.residual(&r);
        let ke = self.gram * &e;
        let norm = e.dot(&ke).max(0.0).sqrt();
        let value = self.separable(x, &r) + self.a_n * norm;
        // derivative of a‖e‖ with respect to r_c is −a w_c (Ke)_c / ‖e‖
        let mut dr = vec![0.0; m];
        let mut hr = DMatrix::zeros(m, m);
        if norm > 1e-300 {
            for (j, &c) in self.active.iter().enumerate() {
                dr[j] = -self.a_n * self.counts.w[c] * ke[c] / norm;
            }
            for (j, &cj) in self.active.iter().enumerate() {
                for (l, &cl) in self.active.iter().enumerate() {
                    let nmat = self.gram[(cj, cl)] / norm - ke[cj] * ke[cl] / (norm * norm * norm);
                    hr[(j, l)] = self.a_n * self.counts.w[cj] * self.counts.w[cl] * nmat;
                }
            }
        }
        if self.tv() {
            let mut grad = vec![0.0; 2 * m];
            let mut hess = DMatrix::zeros(2 * m, 2 * m);
            for j in 0..m {
                let w = self.counts.w[self.active[j]];
                grad[j] = w + dr[j];
                grad[m + j] = w - dr[j];
                for l in 0..m {
                    hess[(j, l)] = hr[(j, l)];
                    hess[(m + j, m + l)] = hr[(j, l)];
                    hess[(j, m + l)] = -hr[(j, l)];
                    hess[(m + j, l)] = -hr[(j, l)];
                }
            }
            (value, grad, hess)
        } else {
            let mut grad = dr;
            for (j, &c) in self.active.iter().enumerate() {
                grad[j] += self.counts.w[c] * self.phi.slope(r[j]);
                hr[(j, j)] += self.counts.w[c] * phi_second(self.phi, r[j]);
            }
            (value, grad, hr)
        }
    }

    /// Projected Newton iterations on the box, with a projected-gradient
    /// fallback when the Newton direction does not descend.
    fn minimize(&self, mut x: Vec<f64>, max_iter: usize, tol: f64) -> Result<(Vec<f64>, usize)> {
        let (lo, hi) = self.var_bounds();
        let project = |z: &mut [f64]| {
            for (j, v) in z.iter_mut().enumerate() {
                *v = v.clamp(lo[j], hi[j]);
            }
        };
        project(&mut x);
        let dim = self.dim();
        let mut pg = f64::INFINITY;
        for it in 0..max_iter {
            let (f, g, h) = self.derivatives(&x);
            pg = (0..dim)
                .map(|j| (x[j] - (x[j] - g[j]).clamp(lo[j], hi[j])).abs())
                .fold(0.0, f64::max);
            if pg <= tol {
                return Ok((x, it));
            }
            let eps = pg.min(1e-9);
            let free: Vec<usize> = (0..dim)
                .filter(|&j| !((x[j] <= lo[j] + eps && g[j] > 0.0) || (x[j] >= hi[j] - eps && g[j] < 0.0)))
                .collect();
            let mut dir = vec![0.0; dim];
            if !free.is_empty() {
                let mut hf = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
                let scale = hf.diagonal().amax().max(1e-300);
                for d in 0..free.len() {
                    hf[(d, d)] += 1e-13 * scale;
                }
                let gf = DVector::from_iterator(free.len(), free.iter().map(|&j| g[j]));
                if let Some(ch) = hf.cholesky() {
                    let step = ch.solve(&gf);
                    for (a, &j) in free.iter().enumerate() {
                        dir[j] = -step[a];
                    }
                }
            }
            let mut moved = self.line_search(&x, f, &g, &dir, &project);
            if moved.is_none() {
                let scale = h.diagonal().amax();
                let step = if scale > 0.0 { 1.0 / scale } else { 1.0 };
                let steepest: Vec<f64> = g.iter().map(|gj| -step * gj).collect();
                moved = self.line_search(&x, f, &g, &steepest, &project);
            }
            match moved {
                Some(next) => x = next,
                // no representable decrease left
                None => return Ok((x, it)),
            }
        }
        if pg <= tol.sqrt() {
            return Ok((x, max_iter));
        }
        Err(Error::Convergence {
            iterations: max_iter,
            residual: pg,
            last_iterate: self.ratios(&x),
        })
    }

    fn line_search(
        &self,
        x: &[f64],
        f: f64,
        g: &[f64],
        dir: &[f64],
        project: &dyn Fn(&mut [f64]),
    ) -> Option<Vec<f64>> {
        if dir.iter().all(|d| *d == 0.0) {
            return None;
        }
        let mut t = 1.0;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
            project(&mut trial);
            let decrease: f64 = g.iter().zip(trial.iter().zip(x)).map(|(gj, (a, b))| gj * (a - b)).sum();
            let ft = self.value(&trial);
            if ft <= f + 1e-4 * decrease && ft < f {
                return Some(trial);
            }
            t *= 0.5;
        }
        None
    }
}

/// Solves the inner problem and returns the value with the per-cell
/// quantities needed by the subgradient.
pub fn solve_inner(gamma: &GammaMatrix, viewpoints: &[usize], spec: &FairnessSpec) -> Result<InnerSolution> {
    let counts = soft_counts(gamma, viewpoints, &spec.kernel)?;
    solve_counts(&counts, spec)
}

pub(crate) fn solve_counts(counts: &SoftCounts, spec: &FairnessSpec) -> Result<InnerSolution> {
    if !(spec.a_n >= 0.0 && spec.a_n.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale a_n must be finite and non-negative, got {}", spec.a_n)));
    }
    let gram = spec.kernel.domain_gram();
    let (lo, hi) = spec.ratio_box();
    let cells = spec.kernel.n_cells();
    let active: Vec<usize> = (0..cells).filter(|&c| counts.w[c] > 0.0).collect();
    let phi = spec.phi;

    // Candidate with zero residual: r = A / w on active cells.
    let exact = active.iter().all(|&c| {
        let r = counts.a[c] / counts.w[c];
        r >= lo && r <= hi
    }) && (0..cells).all(|c| counts.w[c] > 0.0 || counts.a[c] == 0.0);
    if exact {
        if let Some(sol) = zero_residual_solution(counts, &gram, &active, spec, lo, hi) {
            return Ok(sol);
        }
    }

    let inner = Inner {
        phi,
        a_n: spec.a_n,
        gram: &gram,
        counts,
        active: active.clone(),
        lo,
        hi,
    };
    let start_r = 1.0f64.clamp(lo, hi);
    let x0 = if inner.tv() {
        vec![0.0; 2 * active.len()]
    } else if exact {
        // the zero-residual point is feasible but not optimal, and Newton
        // iterates can stall on the kink of the norm there
        kink_escape(&inner, &gram).unwrap_or_else(|| vec![start_r; active.len()])
    } else {
        vec![start_r; active.len()]
    };
    let (x, iterations) = inner.minimize(x0, 500, 1e-14)?;
    let r_active = inner.ratios(&x);
    let e = inner.residual(&r_active);
    let ke = &gram * &e;
    let mmd = e.dot(&ke).max(0.0).sqrt();
    let h: Vec<f64> = if mmd > 1e-300 {
        ke.iter().map(|v| v / mmd).collect()
    } else {
        vec![0.0; cells]
    };
    let mut r = vec![1.0; cells];
    for (j, &c) in active.iter().enumerate() {
        r[c] = r_active[j];
    }
    fill_empty_ratios(&mut r, counts, &h, spec, lo, hi);
    let divergence: f64 = active.iter().map(|&c| counts.w[c] * phi.value(r[c])).sum();
    Ok(InnerSolution {
        value: divergence + spec.a_n * mmd,
        divergence,
        mmd,
        r,
        h,
        iterations,
    })
}

/// A point strictly below the zero-residual point `r₀ = A/w`, found by an
/// exact line search along the steepest descent direction at `r₀`. With
/// `s = φ'(r₀)/a` that direction is `d_c = −(K⁻¹s)_c / w_c` on active cells.
fn kink_escape(inner: &Inner<'_>, gram: &DMatrix<f64>) -> Option<Vec<f64>> {
    if inner.a_n <= 0.0 {
        return None;
    }
    let active = &inner.active;
    let w = &inner.counts.w;
    let r0: Vec<f64> = active.iter().map(|&c| inner.counts.a[c] / w[c]).collect();
    let s = DVector::from_iterator(active.len(), r0.iter().map(|&r| inner.phi.slope(r) / inner.a_n));
    let kaa = DMatrix::from_fn(active.len(), active.len(), |a, b| gram[(active[a], active[b])]);
    let coef = kaa.cholesky()?.solve(&s);
    let d: Vec<f64> = active.iter().enumerate().map(|(j, &c)| -coef[j] / w[c]).collect();
    let mut t_max = f64::INFINITY;
    for (r, dj) in r0.iter().zip(&d) {
        if *dj > 0.0 {
            t_max = t_max.min((inner.hi - r) / dj);
        } else if *dj < 0.0 {
            t_max = t_max.min((inner.lo - r) / dj);
        }
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return None;
    }
    let at = |t: f64| -> Vec<f64> { r0.iter().zip(&d).map(|(r, dj)| (r + t * dj).clamp(inner.lo, inner.hi)).collect() };
    // golden section on the convex restriction to the segment
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, t_max);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (inner.value(&at(x1)), inner.value(&at(x2)));
    for _ in 0..200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = inner.value(&at(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = inner.value(&at(x2));
        }
    }
    let best = at(0.5 * (a + b));
    (inner.value(&best) < inner.value(&r0)).then_some(best)
}

/// Returns the closed-form optimum when the residual can vanish; this is the
/// case iff the minimum-norm RKHS function with values `φ'(A_c/w_c) / a` on
/// the active cells lies in the unit ball.
fn zero_residual_solution(
    counts: &SoftCounts,
    gram: &DMatrix<f64>,
    active: &[usize],
    spec: &FairnessSpec,
    lo: f64,
    hi: f64,
) -> Option<InnerSolution> {
    let cells = gram.nrows();
    let mut r = vec![1.0; cells];
    for &c in active {
        r[c] = counts.a[c] / counts.w[c];
    }
    let h = if spec.a_n == 0.0 {
        if active.iter().any(|&c| spec.phi.slope(r[c]) != 0.0) {
            return None;
        }
        vec![0.0; cells]
    } else {
        let u = DVector::from_iterator(active.len(), active.iter().map(|&c| spec.phi.slope(r[c]) / spec.a_n));
        let kaa = DMatrix::from_fn(active.len(), active.len(), |a, b| gram[(active[a], active[b])]);
        let coef = kaa.cholesky()?.solve(&u);
        if u.dot(&coef) > 1.0 + 1e-12 {
            return None;
        }
        (0..cells)
            .map(|c| active.iter().enumerate().map(|(j, &a)| gram[(c, a)] * coef[j]).sum())
            .collect()
    };
    fill_empty_ratios(&mut r, counts, &h, spec, lo, hi);
    let divergence: f64 = active.iter().map(|&c| counts.w[c] * spec.phi.value(r[c])).sum();
    Some(InnerSolution {
        value: divergence,
        divergence,
        mmd: 0.0,
        r,
        h,
        iterations: 0,
    })
}

fn fill_empty_ratios(r: &mut [f64], counts: &SoftCounts, h: &[f64], spec: &FairnessSpec, lo: f64, hi: f64) {
    for c in 0..r.len() {
        if counts.w[c] <= 0.0 {
            r[c] = inverse_slope(spec.phi, spec.a_n * h[c], lo, hi);
        }
    }
}

/// `C_n(γ)`.
pub fn fairness_functional(gamma: &GammaMatrix, viewpoints: &[usize], spec: &FairnessSpec) -> Result<f64> {
    Ok(solve_inner(gamma, viewpoints, spec)?.value)
}

/// A subgradient of `C_n` split into its divergence and MMD parts, each
/// stored row-major `n × c`.
#[derive(Debug, Clone)]
pub struct FairnessSubgradient {
    pub divergence: Vec<f64>,
    pub mmd: Vec<f64>,
}

impl FairnessSubgradient {
    pub fn total(&self) -> Vec<f64> {
        self.divergence.iter().zip(&self.mmd).map(|(a, b)| a + b).collect()
    }
}

/// Danskin subgradient: the inner solution `r*` and its dual direction are
/// held fixed and the inner objective is differentiated in `γ`.
pub fn fairness_subgradient(
    gamma: &GammaMatrix,
    viewpoints: &[usize],
    spec: &FairnessSpec,
) -> Result<(InnerSolution, FairnessSubgradient)> {
    let counts = soft_counts(gamma, viewpoints, &spec.kernel)?;
    let sol = solve_counts(&counts, spec)?;
    let grad = subgradient_at(&sol, &counts, viewpoints, spec);
    Ok((sol, grad))
}

pub(crate) fn subgradient_at(
    sol: &InnerSolution,
    counts: &SoftCounts,
    viewpoints: &[usize],
    spec: &FairnessSpec,
) -> FairnessSubgradient {
    let kernel = &spec.kernel;
    let labels = kernel.n_labels();
    let n = counts.n;
    let pairs = n * (n - 1.0);
    // Σ_v n_v h_{v,k} / (n(n−1)) for every class k
    let column: Vec<f64> = (0..labels)
        .map(|k| {
            (0..kernel.n_views())
                .map(|v| counts.view_counts[v] * sol.h[kernel.cell(v, k)])
                .sum::<f64>()
                / pairs
        })
        .collect();
    let mut divergence = vec![0.0; viewpoints.len() * labels];
    let mut mmd = vec![0.0; viewpoints.len() * labels];
    for (i, &v) in viewpoints.iter().enumerate() {
        for k in 0..labels {
            let c = kernel.cell(v, k);
            divergence[i * labels + k] = spec.phi.value(sol.r[c]) / n;
            mmd[i * labels + k] = spec.a_n * (column[k] - sol.h[c] / pairs - sol.r[c] * sol.h[c] / n);
        }
    }
    FairnessSubgradient { divergence, mmd }
}

/// The dual objective
/// `E(γ, g) = Σ_c A_c g_c − Σ_c w_c φ*(g_c) − ‖g‖²_H / (2a)`,
/// a lower bound on `C_n(γ)` for residuals of moderate size.
pub fn conjugate_dual_value(gamma: &GammaMatrix, viewpoints: &[usize], g: &[f64], spec: &FairnessSpec) -> Result<f64> {
    let kernel = &spec.kernel;
    if g.len() != kernel.n_cells() {
        return Err(Error::Shape {
            expected: kernel.n_cells(),
            got: g.len(),
        });
    }
    let domain = spec.phi.conjugate_domain();
    if let Some(bad) = g.iter().find(|v| !domain.contains(**v)) {
        return Err(Error::Domain(format!("{bad} is outside the conjugate domain of {}", spec.phi)));
    }
    if !(spec.a_n > 0.0) {
        return Err(Error::InvalidArgument("the dual needs a positive scale a_n".into()));
    }
    let counts = soft_counts(gamma, viewpoints, kernel)?;
    let linear: f64 = counts.a.iter().zip(g).map(|(a, v)| a * v).sum();
    let conj: f64 = counts
        .w
        .iter()
        .zip(g)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, v)| w * spec.phi.conjugate(*v))
        .sum();
    let norm_sq = kernel.rkhs_norm_sq(g)?;
    Ok(linear - conj - norm_sq / (2.0 * spec.a_n))
}
