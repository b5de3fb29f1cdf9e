//! Convex generators of f-divergences and exact divergences on finite tables.
//!
//! Every generator is normalized so that `φ(1) = 0` and the chosen
//! subgradient at 1 is 0. The KL generator is `φ(u) = (u − 1) − ln u`, which
//! makes `D_φ(P, Q) = Σ Q φ(P/Q)` equal to `KL(Q ‖ P)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The four supported divergence generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiGenerator {
    /// `|u − 1|`
    TotalVariation,
    /// `(√u − 1)²`
    Hellinger,
    /// `(u − 1)² / u`
    ChiSquared,
    /// `(u − 1) − ln u`
    Kl,
}

/// Set of arguments where the convex conjugate is finite: `(−∞, upper]` or
/// `(−∞, upper)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateDomain {
    pub upper: f64,
    pub upper_closed: bool,
}

impl ConjugateDomain {
    pub fn contains(&self, v: f64) -> bool {
        if v.is_nan() {
            return false;
        }
        if self.upper_closed {
            v <= self.upper
        } else {
            v < self.upper
        }
    }
}

impl PhiGenerator {
    pub const ALL: [PhiGenerator; 4] = [
        PhiGenerator::TotalVariation,
        PhiGenerator::Hellinger,
        PhiGenerator::ChiSquared,
        PhiGenerator::Kl,
    ];

    /// Short name used in configs and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            PhiGenerator::TotalVariation => "tv",
            PhiGenerator::Hellinger => "hellinger",
            PhiGenerator::ChiSquared => "chi2",
            PhiGenerator::Kl => "kl",
        }
    }

    /// `φ(u)` for `u > 0`.
    pub fn eval(self, u: f64) -> Result<f64> {
        check_positive(u)?;
        Ok(self.value(u))
    }

    /// `φ(u)` without the domain check. `u = 0` returns the right limit,
    /// which is `+∞` for χ² and KL.
    pub fn value(self, u: f64) -> f64 {
        match self {
            PhiGenerator::TotalVariation => (u - 1.0).abs(),
            PhiGenerator::Hellinger => {
                let s = u.sqrt() - 1.0;
                s * s
            }
            PhiGenerator::ChiSquared => {
                if u == 0.0 {
                    f64::INFINITY
                } else {
                    (u - 1.0) * (u - 1.0) / u
                }
            }
            PhiGenerator::Kl => {
                if u == 0.0 {
                    f64::INFINITY
                } else {
                    (u - 1.0) - u.ln()
                }
            }
        }
    }

    /// Right limit of `φ` at 0 when it is finite.
    pub fn limit_at_zero(self) -> Option<f64> {
        match self {
            PhiGenerator::TotalVariation | PhiGenerator::Hellinger => Some(1.0),
            PhiGenerator::ChiSquared | PhiGenerator::Kl => None,
        }
    }

    /// The selected element of `∂φ(u)` for `u > 0`; exactly 0 at `u = 1`.
    pub fn subgradient(self, u: f64) -> Result<f64> {
        check_positive(u)?;
        Ok(self.slope(u))
    }

    /// `∂φ(u)` without the domain check.
    pub fn slope(self, u: f64) -> f64 {
        if u == 1.0 {
            return 0.0;
        }
        match self {
            PhiGenerator::TotalVariation => {
                if u < 1.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            PhiGenerator::Hellinger => 1.0 - 1.0 / u.sqrt(),
            PhiGenerator::ChiSquared => 1.0 - 1.0 / (u * u),
            PhiGenerator::Kl => 1.0 - 1.0 / u,
        }
    }

    pub fn conjugate_domain(self) -> ConjugateDomain {
        match self {
            PhiGenerator::TotalVariation | PhiGenerator::ChiSquared => ConjugateDomain {
                upper: 1.0,
                upper_closed: true,
            },
            PhiGenerator::Hellinger | PhiGenerator::Kl => ConjugateDomain {
                upper: 1.0,
                upper_closed: false,
            },
        }
    }

    /// Convex conjugate `φ*(v) = sup_{u ≥ 0} (u v − φ(u))`; `+∞` outside the
    /// conjugate domain.
    pub fn conjugate(self, v: f64) -> f64 {
        if !self.conjugate_domain().contains(v) {
            return f64::INFINITY;
        }
        match self {
            PhiGenerator::TotalVariation => v.max(-1.0),
            PhiGenerator::Hellinger => v / (1.0 - v),
            PhiGenerator::ChiSquared => 2.0 - 2.0 * (1.0 - v).sqrt(),
            PhiGenerator::Kl => -(-v).ln_1p(),
        }
    }
}

impl fmt::Display for PhiGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiGenerator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tv" => Ok(PhiGenerator::TotalVariation),
            "hellinger" => Ok(PhiGenerator::Hellinger),
            "chi2" => Ok(PhiGenerator::ChiSquared),
            "kl" => Ok(PhiGenerator::Kl),
            other => Err(Error::InvalidArgument(format!(
                "unknown divergence '{other}' (expected tv, hellinger, chi2 or kl)"
            ))),
        }
    }
}

fn check_positive(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("generator argument must be positive, got {u}")))
    }
}

/// Almost-sure bounds `c_lo ≤ r* ≤ c_hi` on the true probability ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBounds {
    c_lo: f64,
    c_hi: f64,
}

impl RatioBounds {
    pub fn new(c_lo: f64, c_hi: f64) -> Result<Self> {
        if !(c_lo > 0.0 && c_lo <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lower ratio bound must lie in (0, 1], got {c_lo}"
            )));
        }
        if !(c_hi >= 1.0 && c_hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "upper ratio bound must lie in [1, ∞), got {c_hi}"
            )));
        }
        Ok(Self { c_lo, c_hi })
    }

    /// Symmetric bounds `(e^{−t}, e^{t})`.
    pub fn exponential(t: f64) -> Result<Self> {
        Self::new((-t).exp(), t.exp())
    }

    pub fn c_lo(&self) -> f64 {
        self.c_lo
    }

    pub fn c_hi(&self) -> f64 {
        self.c_hi
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.c_lo, self.c_hi)
    }
}

impl Default for RatioBounds {
    fn default() -> Self {
        Self { c_lo: 0.1, c_hi: 10.0 }
    }
}

/// A probability table over `views × labels`, stored row-major by view.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteJoint {
    n_views: usize,
    n_labels: usize,
    pmf: Vec<f64>,
}

const PMF_SUM_TOL: f64 = 1e-12;

impl DiscreteJoint {
    pub fn new(n_views: usize, n_labels: usize, pmf: Vec<f64>) -> Result<Self> {
        if n_views == 0 || n_labels == 0 {
            return Err(Error::InvalidArgument("joint table needs at least one cell".into()));
        }
        if pmf.len() != n_views * n_labels {
            return Err(Error::Shape {
                expected: n_views * n_labels,
                got: pmf.len(),
            });
        }
        if let Some(bad) = pmf.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidArgument(format!("probability {bad} is not a non-negative number")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { n_views, n_labels, pmf })
    }

    /// Normalizes non-negative weights into a joint.
    pub fn from_weights(n_views: usize, n_labels: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument("weights must have a positive finite sum".into()));
        }
        let pmf = weights.into_iter().map(|w| w / total).collect();
        Self::new(n_views, n_labels, pmf)
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn get(&self, view: usize, label: usize) -> f64 {
        self.pmf[view * self.n_labels + label]
    }

    pub fn view_marginal(&self) -> Vec<f64> {
        self.pmf.chunks(self.n_labels).map(|row| row.iter().sum()).collect()
    }

    pub fn label_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_labels];
        for row in self.pmf.chunks(self.n_labels) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    /// `P_V ⊗ P_Ŷ`, the joint the table would have under independence.
    pub fn product_of_marginals(&self) -> DiscreteJoint {
        let pv = self.view_marginal();
        let py = self.label_marginal();
        let pmf = pv
            .iter()
            .flat_map(|a| py.iter().map(move |b| a * b))
            .collect();
        DiscreteJoint {
            n_views: self.n_views,
            n_labels: self.n_labels,
            pmf,
        }
    }

    /// Per-cell ratio `P_V ⊗ P_Ŷ / P_{V,Ŷ}`; requires a strictly positive table.
    pub fn independence_ratio(&self) -> Result<Vec<f64>> {
        self.require_positive()?;
        let product = self.product_of_marginals();
        Ok(product.pmf.iter().zip(&self.pmf).map(|(a, b)| a / b).collect())
    }

    fn require_positive(&self) -> Result<()> {
        match self.pmf.iter().position(|&p| p <= 0.0) {
            Some(idx) => Err(Error::AbsoluteContinuity {
                view: idx / self.n_labels,
                label: idx % self.n_labels,
            }),
            None => Ok(()),
        }
    }
}

/// `D_φ(P, Q) = Σ_cells Q φ(P/Q)` by direct enumeration.
pub fn exact_f_divergence(phi: PhiGenerator, p: &DiscreteJoint, q: &DiscreteJoint) -> Result<f64> {
    if p.n_views != q.n_views || p.n_labels != q.n_labels {
        return Err(Error::Shape {
            expected: q.pmf.len(),
            got: p.pmf.len(),
        });
    }
    let mut total = 0.0;
    for (idx, (&pc, &qc)) in p.pmf.iter().zip(&q.pmf).enumerate() {
        if qc == 0.0 {
            if pc > 0.0 {
                return Err(Error::AbsoluteContinuity {
                    view: idx / q.n_labels,
                    label: idx % q.n_labels,
                });
            }
            continue;
        }
        total += qc * phi.value(pc / qc);
    }
    Ok(total)
}

/// Dependency of the label on the view: `D_φ(P_V ⊗ P_Ŷ, P_{V,Ŷ})`.
pub fn exact_dependency(phi: PhiGenerator, joint: &DiscreteJoint) -> Result<f64> {
    joint.require_positive()?;
    exact_f_divergence(phi, &joint.product_of_marginals(), joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn joint(rows: usize, cols: usize, pmf: &[f64]) -> DiscreteJoint {
        DiscreteJoint::new(rows, cols, pmf.to_vec()).unwrap()
    }

    fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(PhiGenerator::TotalVariation.eval(2.0).unwrap(), 1.0);
        assert_eq!(PhiGenerator::Kl.eval(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(PhiGenerator::Hellinger.eval(4.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(PhiGenerator::ChiSquared.eval(2.0).unwrap(), 0.5, epsilon = 1e-15);
        for phi in PhiGenerator::ALL {
            assert_eq!(phi.eval(1.0).unwrap(), 0.0);
            assert!(matches!(phi.eval(0.0), Err(Error::Domain(_))));
            assert!(matches!(phi.eval(-1.0), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn subgradient_examples() {
        assert_abs_diff_eq!(PhiGenerator::Kl.subgradient(2.0).unwrap(), 0.5);
        assert_eq!(PhiGenerator::TotalVariation.subgradient(0.5).unwrap(), -1.0);
        assert_eq!(PhiGenerator::TotalVariation.subgradient(3.0).unwrap(), 1.0);
        for phi in PhiGenerator::ALL {
            assert_eq!(phi.subgradient(1.0).unwrap(), 0.0);
            assert!(phi.subgradient(0.0).is_err());
        }
    }

    #[test]
    fn conjugate_examples() {
        assert_abs_diff_eq!(PhiGenerator::TotalVariation.conjugate(0.5), 0.5);
        assert_abs_diff_eq!(PhiGenerator::Kl.conjugate(0.5), 2f64.ln(), epsilon = 1e-15);
        for phi in PhiGenerator::ALL {
            assert_eq!(phi.conjugate(0.0), 0.0);
            assert_eq!(phi.conjugate(1.5), f64::INFINITY);
        }
        assert_eq!(PhiGenerator::Kl.conjugate(1.0), f64::INFINITY);
        assert_eq!(PhiGenerator::Hellinger.conjugate(1.0), f64::INFINITY);
        assert_abs_diff_eq!(PhiGenerator::ChiSquared.conjugate(1.0), 2.0);
        assert_abs_diff_eq!(PhiGenerator::TotalVariation.conjugate(-3.0), -1.0);
    }

    #[test]
    fn conjugate_matches_grid_supremum() {
        // sup over u ∈ (0, 100] on a 10⁶-point grid
        let grid: Vec<f64> = (1..=1_000_000).map(|i| i as f64 * 1e-4).collect();
        for phi in PhiGenerator::ALL {
            for &v in &[-2.0, -0.5, 0.0, 0.3, 0.5, 0.8] {
                let sup = grid
                    .iter()
                    .map(|&u| u * v - phi.value(u))
                    .fold(f64::NEG_INFINITY, f64::max);
                let sup = match phi.limit_at_zero() {
                    Some(at_zero) => sup.max(-at_zero),
                    None => sup,
                };
                assert!(
                    (phi.conjugate(v) - sup).abs() < 1e-6,
                    "{phi} at {v}: {} vs {sup}",
                    phi.conjugate(v)
                );
            }
        }
    }

    #[test]
    fn generators_are_midpoint_convex_with_monotone_slope() {
        let grid = log_grid(1e-3, 1e3, 400);
        for phi in PhiGenerator::ALL {
            for &u in &grid {
                for &w in grid.iter().step_by(7) {
                    let mid = phi.value(0.5 * (u + w));
                    assert!(mid <= 0.5 * (phi.value(u) + phi.value(w)) + 1e-12);
                }
            }
            for pair in grid.windows(2) {
                assert!(phi.slope(pair[0]) <= phi.slope(pair[1]));
            }
        }
    }

    #[test]
    fn slope_matches_central_differences() {
        let grid = log_grid(1e-2, 1e2, 200);
        for phi in [PhiGenerator::Hellinger, PhiGenerator::ChiSquared, PhiGenerator::Kl] {
            for &u in &grid {
                let h = 1e-6 * u;
                let fd = (phi.value(u + h) - phi.value(u - h)) / (2.0 * h);
                let g = phi.slope(u);
                assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3), "{phi} at {u}: {fd} vs {g}");
            }
        }
        for &u in &[0.3, 0.9, 1.1, 5.0] {
            let h = 1e-6;
            let fd = (PhiGenerator::TotalVariation.value(u + h) - PhiGenerator::TotalVariation.value(u - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, PhiGenerator::TotalVariation.slope(u), epsilon = 1e-6);
        }
    }

    #[test]
    fn as_bound_chains_hold_on_ratio_grid() {
        for phi in PhiGenerator::ALL {
            for &(lo, hi) in &[(0.1, 10.0), ((-1f64).exp(), 1f64.exp()), (0.5, 1.5), (1.0, 1.0)] {
                let b = RatioBounds::new(lo, hi).unwrap();
                let cap = phi.value(b.c_lo()).max(phi.value(b.c_hi()));
                for i in 0..=500 {
                    let u = lo + (hi - lo) * i as f64 / 500.0;
                    let prod = phi.slope(u) * u;
                    assert!(phi.slope(lo) <= prod + 1e-12);
                    assert!(prod <= phi.slope(hi) * hi + 1e-12);
                    let val = phi.value(u);
                    assert!(val >= 0.0 && val <= cap + 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_divergence_examples() {
        let p = joint(1, 2, &[0.5, 0.5]);
        let q = joint(1, 2, &[0.25, 0.75]);
        assert_abs_diff_eq!(
            exact_f_divergence(PhiGenerator::TotalVariation, &p, &q).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        // Σ Q[(P/Q − 1) − ln(P/Q)] = KL(Q ‖ P) for the normalized generator.
        let kl = exact_f_divergence(PhiGenerator::Kl, &p, &q).unwrap();
        let direct = 0.25 * (0.25f64 / 0.5).ln() + 0.75 * (0.75f64 / 0.5).ln();
        assert_abs_diff_eq!(kl, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.130812, epsilon = 1e-6);
        for phi in PhiGenerator::ALL {
            assert_eq!(exact_f_divergence(phi, &p, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn absolute_continuity_is_enforced() {
        let p = joint(1, 2, &[0.5, 0.5]);
        let q = joint(1, 2, &[1.0, 0.0]);
        assert!(matches!(
            exact_f_divergence(PhiGenerator::Kl, &p, &q),
            Err(Error::AbsoluteContinuity { view: 0, label: 1 })
        ));
        let degenerate = joint(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert!(matches!(
            exact_dependency(PhiGenerator::TotalVariation, &degenerate),
            Err(Error::AbsoluteContinuity { .. })
        ));
    }

    #[test]
    fn exact_dependency_examples() {
        let uniform = joint(2, 2, &[0.25; 4]);
        let correlated = joint(2, 2, &[0.4, 0.1, 0.1, 0.4]);
        for phi in PhiGenerator::ALL {
            assert_abs_diff_eq!(exact_dependency(phi, &uniform).unwrap(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            exact_dependency(PhiGenerator::TotalVariation, &correlated).unwrap(),
            0.6,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            exact_dependency(PhiGenerator::Kl, &correlated).unwrap(),
            0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(exact_dependency(PhiGenerator::Kl, &correlated).unwrap(), 0.1927, epsilon = 1e-4);
        assert_eq!(
            correlated.independence_ratio().unwrap(),
            vec![0.625, 2.5, 2.5, 0.625]
        );
    }

    #[test]
    fn joint_validation() {
        assert!(DiscreteJoint::new(2, 2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(DiscreteJoint::new(2, 2, vec![0.5, 0.5, -0.1, 0.1]).is_err());
        assert!(matches!(
            DiscreteJoint::new(2, 2, vec![1.0]),
            Err(Error::Shape { expected: 4, got: 1 })
        ));
        assert!(RatioBounds::new(0.0, 2.0).is_err());
        assert!(RatioBounds::new(0.5, 0.9).is_err());
        assert!(RatioBounds::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for phi in PhiGenerator::ALL {
            assert_eq!(phi.name().parse::<PhiGenerator>().unwrap(), phi);
        }
        assert!("js".parse::<PhiGenerator>().is_err());
    }

    fn positive_simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, len).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn divergence_is_nonnegative(p in positive_simplex(6), q in positive_simplex(6)) {
            let p = DiscreteJoint::from_weights(2, 3, p).unwrap();
            let q = DiscreteJoint::from_weights(2, 3, q).unwrap();
            for phi in PhiGenerator::ALL {
                prop_assert!(exact_f_divergence(phi, &p, &q).unwrap() >= -1e-12);
                prop_assert!(exact_f_divergence(phi, &p, &p).unwrap().abs() <= 1e-12);
            }
        }

        #[test]
        fn fenchel_young_inequality(u in 1e-3f64..1e3, v in -5.0f64..0.999) {
            for phi in PhiGenerator::ALL {
                prop_assert!(phi.conjugate(v) >= u * v - phi.value(u) - 1e-9);
            }
        }
    }
}
