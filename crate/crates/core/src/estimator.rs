//! Empirical divergence, its finite-sample upper bound, and the U-statistic
//! diagnostic that drives the bound's concentration term.
//!
//! With probability at least `1 − e^{−t}` the population dependency satisfies
//!
//! ```text
//! D_φ(f) ≤ D_{φ,n}(f) + a · MMD_n(r_n) + c · √(2t / n)
//! ```
//!
//! provided the true ratio lies in `[c_lo, c_hi]` and `∂φ(r*) / a` lies in the
//! unit ball of the kernel's RKHS. The reported bound is only as valid as the
//! supplied [`RatioBounds`].

use std::fmt;

use crate::divergence::{PhiGenerator, RatioBounds};
use crate::error::{Error, Result};
use crate::kernel::{KernelKind, KernelSpec, LabeledPair};
use crate::ratio::{empirical_mmd, estimate_ratio, CellCounts, RatioOptions};

/// Smallest scale reported for degenerate bounds (`c_lo = c_hi = 1`).
pub const MIN_SCALE: f64 = 1e-12;

/// `(1/n) Σ φ(r_i)`.
pub fn empirical_divergence(phi: PhiGenerator, r_values: &[f64]) -> Result<f64> {
    if r_values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for &r in r_values {
        total += if r > 0.0 {
            phi.eval(r)?
        } else if r == 0.0 {
            phi.limit_at_zero()
                .ok_or_else(|| Error::Domain(format!("{phi} generator is unbounded at a zero ratio")))?
        } else {
            return Err(Error::Domain(format!("ratio values must be non-negative, got {r}")));
        };
    }
    Ok(total / r_values.len() as f64)
}

/// `c = 2 max{φ(c_lo), φ(c_hi)} + ∂φ(c_hi) c_hi + ∂φ(c_hi) − 2 ∂φ(c_lo)`.
pub fn theorem1_constant(phi: PhiGenerator, bounds: &RatioBounds) -> f64 {
    let (lo, hi) = (bounds.c_lo(), bounds.c_hi());
    let peak = phi.value(lo).max(phi.value(hi));
    2.0 * peak + phi.slope(hi) * hi + phi.slope(hi) - 2.0 * phi.slope(lo)
}

/// Scale `a` for which `∂φ(r*) / a` lies in the kernel unit ball whenever
/// `r* ∈ [c_lo, c_hi]`, floored at [`MIN_SCALE`].
///
/// For the delta kernel `‖g‖_H = ‖g‖₂ ≤ √|V×Ŷ| · max|g|`. The product-delta
/// Gram matrix dominates the identity, so the same scale is valid there.
pub fn choose_scale_a(phi: PhiGenerator, bounds: &RatioBounds, kernel: &KernelSpec) -> f64 {
    let slope = phi.slope(bounds.c_lo()).abs().max(phi.slope(bounds.c_hi()).abs());
    let a = match kernel.kind() {
        KernelKind::Delta | KernelKind::ProductDelta => (kernel.n_cells() as f64).sqrt() * slope,
    };
    a.max(MIN_SCALE)
}

/// The assembled estimate and upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependencyReport {
    pub d_phi_n: f64,
    pub mmd_n: f64,
    pub a_n: f64,
    pub c_const: f64,
    pub t: f64,
    pub n: usize,
    pub upper_bound: f64,
}

impl DependencyReport {
    pub const CSV_HEADER: &'static str = "d_phi_n,mmd_n,a_n,c_const,t,n,upper_bound";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.d_phi_n, self.mmd_n, self.a_n, self.c_const, self.t, self.n, self.upper_bound
        )
    }

    /// Width of the concentration term `c √(2t/n)`.
    pub fn concentration_term(&self) -> f64 {
        self.c_const * (2.0 * self.t / self.n as f64).sqrt()
    }
}

impl fmt::Display for DependencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d_phi_n     = {:.6}", self.d_phi_n)?;
        writeln!(f, "mmd_n       = {:.6}", self.mmd_n)?;
        writeln!(f, "a_n         = {:.6}", self.a_n)?;
        writeln!(f, "c_const     = {:.6}", self.c_const)?;
        writeln!(f, "t           = {}", self.t)?;
        writeln!(f, "n           = {}", self.n)?;
        write!(f, "upper_bound = {:.6}", self.upper_bound)
    }
}

/// `upper_bound = d_phi_n + a_n·mmd_n + c_const·√(2t/n)`.
pub fn dependency_bound(d_phi_n: f64, mmd_n: f64, a_n: f64, c_const: f64, t: f64, n: usize) -> Result<DependencyReport> {
    for (name, x) in [("d_phi_n", d_phi_n), ("mmd_n", mmd_n), ("a_n", a_n), ("c_const", c_const), ("t", t)] {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be finite, got {x}")));
        }
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("confidence parameter t must be positive, got {t}")));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let upper_bound = d_phi_n + a_n * mmd_n + c_const * (2.0 * t / n as f64).sqrt();
    Ok(DependencyReport {
        d_phi_n,
        mmd_n,
        a_n,
        c_const,
        t,
        n,
        upper_bound,
    })
}

/// Options for [`estimate_dependency`] beyond the divergence and bounds.
#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    pub ridge: Option<f64>,
    pub normalize: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        let r = RatioOptions::default();
        Self {
            ridge: r.ridge,
            normalize: r.normalize,
            max_iter: r.max_iter,
            tol: r.tol,
        }
    }
}

/// Ratio estimation (clamped to `bounds`), empirical divergence, MMD at the
/// estimated ratio, and the bound.
pub fn estimate_dependency(
    phi: PhiGenerator,
    samples: &[LabeledPair],
    kernel: &KernelSpec,
    bounds: &RatioBounds,
    t: f64,
    options: &EstimateOptions,
) -> Result<DependencyReport> {
    let ratio = estimate_ratio(
        samples,
        kernel,
        &RatioOptions {
            ridge: options.ridge,
            normalize: options.normalize,
            clamp: Some(*bounds),
            max_iter: options.max_iter,
            tol: options.tol,
        },
    )?;
    // clamping already floors every ratio at c_lo > 0
    let d_phi_n = empirical_divergence(phi, &ratio.per_sample)?;
    let mmd_n = empirical_mmd(samples, &ratio.per_sample, kernel)?;
    let a_n = choose_scale_a(phi, bounds, kernel);
    let c_const = theorem1_constant(phi, bounds);
    dependency_bound(d_phi_n, mmd_n, a_n, c_const, t, samples.len())
}

/// `U_{φ,n} = (1/n) Σ ∂φ(r*_ii) r*_ii − 1/(n(n−1)) Σ_{i≠j} ∂φ(r*(v_i, ŷ_j))`
/// for a known per-cell ratio table (row-major by view).
pub fn u_statistic_diagnostic(
    phi: PhiGenerator,
    samples: &[LabeledPair],
    kernel: &KernelSpec,
    true_ratio: &[f64],
) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    if true_ratio.len() != kernel.n_cells() {
        return Err(Error::Shape {
            expected: kernel.n_cells(),
            got: true_ratio.len(),
        });
    }
    if let Some(bad) = true_ratio.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Domain(format!("true ratio must be positive, got {bad}")));
    }
    let counts = CellCounts::tally(samples, kernel)?;
    let labels = kernel.n_labels();
    let mut diag = 0.0;
    let mut cross = 0.0;
    for v in 0..kernel.n_views() {
        for y in 0..labels {
            let r = true_ratio[kernel.cell(v, y)];
            let slope = phi.slope(r);
            diag += counts.cells[kernel.cell(v, y)] as f64 * slope * r;
            cross += counts.cross_pairs(v, y, labels) * slope;
        }
    }
    let n = n as f64;
    Ok(diag / n - cross / (n * (n - 1.0)))
}
