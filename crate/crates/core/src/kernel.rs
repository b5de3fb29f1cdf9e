//! Kernels on the finite domain `V × Ŷ` with explicit feature maps.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `k((v,y),(v',y')) = 1[v = v']·1[y = y']`
    Delta,
    /// `k((v,y),(v',y')) = (1 + 1[v = v'])·(1 + 1[y = y'])`
    ProductDelta,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Delta => "delta",
            KernelKind::ProductDelta => "product-delta",
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "delta" => Ok(KernelKind::Delta),
            "product-delta" | "product_delta" => Ok(KernelKind::ProductDelta),
            other => Err(Error::InvalidArgument(format!("unknown kernel '{other}'"))),
        }
    }
}

/// A (viewpoint, predicted label) observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub v: usize,
    pub yhat: usize,
}

impl LabeledPair {
    pub fn new(v: usize, yhat: usize) -> Self {
        Self { v, yhat }
    }
}

/// A universal kernel on a finite `V × Ŷ` grid.
///
/// Both kinds have a finite-dimensional feature map, so RKHS elements are
/// plain vectors and every MMD quantity is computed exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    kind: KernelKind,
    n_views: usize,
    n_labels: usize,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, n_views: usize, n_labels: usize) -> Result<Self> {
        if n_views == 0 || n_labels == 0 {
            return Err(Error::InvalidArgument("kernel domain must be non-empty".into()));
        }
        Ok(Self { kind, n_views, n_labels })
    }

    pub fn delta(n_views: usize, n_labels: usize) -> Result<Self> {
        Self::new(KernelKind::Delta, n_views, n_labels)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    /// Number of (v, ŷ) cells.
    pub fn n_cells(&self) -> usize {
        self.n_views * self.n_labels
    }

    pub fn cell(&self, v: usize, yhat: usize) -> usize {
        v * self.n_labels + yhat
    }

    pub fn feature_dim(&self) -> usize {
        match self.kind {
            KernelKind::Delta => self.n_cells(),
            KernelKind::ProductDelta => (self.n_views + 1) * (self.n_labels + 1),
        }
    }

    pub fn check(&self, pair: LabeledPair) -> Result<()> {
        if pair.v >= self.n_views {
            return Err(Error::InvalidArgument(format!(
                "viewpoint {} outside 0..{}",
                pair.v, self.n_views
            )));
        }
        if pair.yhat >= self.n_labels {
            return Err(Error::InvalidArgument(format!(
                "label {} outside 0..{}",
                pair.yhat, self.n_labels
            )));
        }
        Ok(())
    }

    /// Adds `scale · Φ(v, ŷ)` into `out`.
    pub fn add_feature(&self, v: usize, yhat: usize, scale: f64, out: &mut [f64]) {
        match self.kind {
            KernelKind::Delta => out[self.cell(v, yhat)] += scale,
            KernelKind::ProductDelta => {
                // (1, e_v) ⊗ (1, e_y)
                let cols = self.n_labels + 1;
                for a in [0, v + 1] {
                    for b in [0, yhat + 1] {
                        out[a * cols + b] += scale;
                    }
                }
            }
        }
    }

    pub fn feature(&self, v: usize, yhat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_dim()];
        self.add_feature(v, yhat, 1.0, &mut out);
        out
    }

    /// `⟨β, Φ(v, ŷ)⟩`, the value at (v, ŷ) of the RKHS element `β`.
    pub fn evaluate(&self, beta: &[f64], v: usize, yhat: usize) -> f64 {
        match self.kind {
            KernelKind::Delta => beta[self.cell(v, yhat)],
            KernelKind::ProductDelta => {
                let cols = self.n_labels + 1;
                let mut s = 0.0;
                for a in [0, v + 1] {
                    for b in [0, yhat + 1] {
                        s += beta[a * cols + b];
                    }
                }
                s
            }
        }
    }

    pub fn k(&self, a: LabeledPair, b: LabeledPair) -> f64 {
        let dv = (a.v == b.v) as u8 as f64;
        let dy = (a.yhat == b.yhat) as u8 as f64;
        match self.kind {
            KernelKind::Delta => dv * dy,
            KernelKind::ProductDelta => (1.0 + dv) * (1.0 + dy),
        }
    }

    /// Gram matrix over all cells, ordered by `cell`.
    pub fn domain_gram(&self) -> DMatrix<f64> {
        let m = self.n_cells();
        DMatrix::from_fn(m, m, |i, j| {
            let a = LabeledPair::new(i / self.n_labels, i % self.n_labels);
            let b = LabeledPair::new(j / self.n_labels, j % self.n_labels);
            self.k(a, b)
        })
    }

    /// Squared RKHS norm of the function with the given per-cell values.
    pub fn rkhs_norm_sq(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.n_cells() {
            return Err(Error::Shape {
                expected: self.n_cells(),
                got: values.len(),
            });
        }
        match self.kind {
            KernelKind::Delta => Ok(values.iter().map(|x| x * x).sum()),
            KernelKind::ProductDelta => {
                let g = DVector::from_column_slice(values);
                let chol = self
                    .domain_gram()
                    .cholesky()
                    .ok_or_else(|| Error::Domain("kernel Gram matrix is not positive definite".into()))?;
                Ok(g.dot(&chol.solve(&g)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_reproduce_the_kernel() {
        for kind in [KernelKind::Delta, KernelKind::ProductDelta] {
            let k = KernelSpec::new(kind, 3, 2).unwrap();
            for i in 0..k.n_cells() {
                for j in 0..k.n_cells() {
                    let a = LabeledPair::new(i / 2, i % 2);
                    let b = LabeledPair::new(j / 2, j % 2);
                    let fa = k.feature(a.v, a.yhat);
                    let fb = k.feature(b.v, b.yhat);
                    let dot: f64 = fa.iter().zip(&fb).map(|(x, y)| x * y).sum();
                    assert_eq!(dot, k.k(a, b));
                    assert_eq!(k.evaluate(&fa, b.v, b.yhat), dot);
                }
            }
        }
    }

    #[test]
    fn domain_gram_is_positive_definite() {
        for kind in [KernelKind::Delta, KernelKind::ProductDelta] {
            let k = KernelSpec::new(kind, 3, 4).unwrap();
            let eig = k.domain_gram().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l > 1e-9));
        }
    }

    #[test]
    fn rkhs_norm_of_a_feature_is_its_kernel_diagonal() {
        let k = KernelSpec::new(KernelKind::ProductDelta, 2, 2).unwrap();
        // g = k((0,1), ·) has norm² k((0,1),(0,1)) = 4
        let values: Vec<f64> = (0..4)
            .map(|c| k.k(LabeledPair::new(0, 1), LabeledPair::new(c / 2, c % 2)))
            .collect();
        assert!((k.rkhs_norm_sq(&values).unwrap() - 4.0).abs() < 1e-12);
        let d = KernelSpec::delta(2, 2).unwrap();
        assert_eq!(d.rkhs_norm_sq(&[1.0, 2.0, 0.0, 2.0]).unwrap(), 9.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("delta".parse::<KernelKind>().unwrap(), KernelKind::Delta);
        assert!("rbf".parse::<KernelKind>().is_err());
    }
}
