//! Linear multiclass scorer `θ(x, y) = ⟨w_y, (x, 1)⟩`, its logistic risk and
//! the unconstrained maximum-likelihood fit.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    n_classes: usize,
    input_dim: usize,
    /// Row-major `n_classes × (input_dim + 1)`, intercept last.
    weights: Vec<f64>,
}

impl LinearScorer {
    pub fn zeros(n_classes: usize, input_dim: usize) -> Self {
        Self {
            n_classes,
            input_dim,
            weights: vec![0.0; n_classes * (input_dim + 1)],
        }
    }

    pub fn from_weights(n_classes: usize, input_dim: usize, weights: Vec<f64>) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::InvalidArgument("scorer needs at least one class".into()));
        }
        let expected = n_classes * (input_dim + 1);
        if weights.len() != expected {
            return Err(Error::Shape {
                expected,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("scorer weights must be finite".into()));
        }
        Ok(Self {
            n_classes,
            input_dim,
            weights,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Per-class weights including the trailing intercept.
    pub fn class_weights(&self, class: usize) -> &[f64] {
        let stride = self.input_dim + 1;
        &self.weights[class * stride..(class + 1) * stride]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = self.class_weights(k);
            *o = w[self.input_dim] + w[..self.input_dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = vec![0.0; self.n_classes];
        self.scores_into(x, &mut out);
        Ok(out)
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        (0..data.len()).map(|i| self.predict(&data.input(i))).collect()
    }

    /// Text model: a header with the dimensions, then one weight row per class.
    pub fn to_model_text(&self) -> String {
        let mut out = format!("linear-scorer classes={} features={}\n", self.n_classes, self.input_dim);
        for k in 0..self.n_classes {
            let row: Vec<String> = self.class_weights(k).iter().map(|w| w.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }

    pub fn from_model_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty model file".into(),
        })?;
        let mut classes = None;
        let mut features = None;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("linear-scorer") {
            return Err(Error::Parse {
                line: 1,
                message: "model header must start with 'linear-scorer'".into(),
            });
        }
        for part in parts {
            let parsed = match part.split_once('=') {
                Some(("classes", v)) => v.parse().map(|x| classes = Some(x)),
                Some(("features", v)) => v.parse().map(|x| features = Some(x)),
                _ => {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("unexpected header field '{part}'"),
                    })
                }
            };
            parsed.map_err(|e| Error::Parse {
                line: 1,
                message: format!("bad header value '{part}': {e}"),
            })?;
        }
        let (classes, features): (usize, usize) = match (classes, features) {
            (Some(c), Some(f)) => (c, f),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "header needs classes= and features=".into(),
                })
            }
        };
        let mut weights = Vec::with_capacity(classes * (features + 1));
        let mut seen = 0;
        for (idx, line) in lines {
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        message: format!("bad weight '{t}': {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != features + 1 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} weights, found {}", features + 1, row.len()),
                });
            }
            weights.extend(row);
            seen += 1;
        }
        if seen != classes {
            return Err(Error::Parse {
                line: seen + 2,
                message: format!("expected {classes} weight rows, found {seen}"),
            });
        }
        Self::from_weights(classes, features, weights)
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln()
}

fn check_compatible(scorer: &LinearScorer, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scorer.input_dim != data.input_dim() {
        return Err(Error::Shape {
            expected: scorer.input_dim,
            got: data.input_dim(),
        });
    }
    if data.n_labels() > scorer.n_classes {
        return Err(Error::Shape {
            expected: scorer.n_classes,
            got: data.n_labels(),
        });
    }
    Ok(())
}

/// Mean multiclass logistic loss `log Σ_k e^{θ_k} − θ_y`.
pub fn empirical_risk(scorer: &LinearScorer, data: &Dataset) -> Result<f64> {
    check_compatible(scorer, data)?;
    let mut s = vec![0.0; scorer.n_classes];
    let mut total = 0.0;
    for (i, row) in data.rows().iter().enumerate() {
        scorer.scores_into(&data.input(i), &mut s);
        total += log_sum_exp(&s) - s[row.y];
    }
    Ok(total / data.len() as f64)
}

/// Risk and its gradient with respect to all weights.
pub(crate) fn risk_and_gradient(scorer: &LinearScorer, inputs: &[Vec<f64>], labels: &[usize]) -> (f64, Vec<f64>) {
    let c = scorer.n_classes;
    let stride = scorer.input_dim + 1;
    let n = inputs.len() as f64;
    let mut grad = vec![0.0; scorer.weights.len()];
    let mut s = vec![0.0; c];
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        scorer.scores_into(x, &mut s);
        let lse = log_sum_exp(&s);
        total += lse - s[y];
        for k in 0..c {
            let coef = ((s[k] - lse).exp() - (k == y) as u8 as f64) / n;
            let g = &mut grad[k * stride..(k + 1) * stride];
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += coef * xj;
            }
            g[stride - 1] += coef;
        }
    }
    (total / n, grad)
}

/// Unconstrained logistic fit by damped Newton iterations.
///
/// Class 0 is pinned at zero to remove the shift invariance of the softmax.
/// On separable data the likelihood has no maximizer; the iteration then
/// stops after `max_iter` steps with a large-margin scorer.
pub fn fit_unconstrained(data: &Dataset, n_classes: usize, max_iter: usize) -> Result<LinearScorer> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut scorer = LinearScorer::zeros(n_classes, data.input_dim());
    check_compatible(&scorer, data)?;
    if n_classes == 1 {
        return Ok(scorer);
    }
    let inputs: Vec<Vec<f64>> = (0..data.len()).map(|i| data.input(i)).collect();
    let labels = data.labels();
    let stride = data.input_dim() + 1;
    let free = (n_classes - 1) * stride;
    let n = inputs.len() as f64;
    let mut risk = risk_and_gradient(&scorer, &inputs, &labels).0;
    let mut s = vec![0.0; n_classes];
    for _ in 0..max_iter {
        let (_, full_grad) = risk_and_gradient(&scorer, &inputs, &labels);
        let grad = DVector::from_column_slice(&full_grad[stride..]);
        if grad.amax() < 1e-13 {
            break;
        }
        let mut hess = DMatrix::<f64>::zeros(free, free);
        for x in &inputs {
            scorer.scores_into(x, &mut s);
            let lse = log_sum_exp(&s);
            let p: Vec<f64> = s.iter().map(|v| (v - lse).exp()).collect();
            let mut xa = x.clone();
            xa.push(1.0);
            for k in 1..n_classes {
                for l in 1..n_classes {
                    let w = p[k] * ((k == l) as u8 as f64 - p[l]) / n;
                    if w == 0.0 {
                        continue;
                    }
                    let (r0, c0) = ((k - 1) * stride, (l - 1) * stride);
                    for a in 0..stride {
                        for b in 0..stride {
                            hess[(r0 + a, c0 + b)] += w * xa[a] * xa[b];
                        }
                    }
                }
            }
        }
        let jitter = 1e-12 * (1.0 + hess.diagonal().amax());
        for d in 0..free {
            hess[(d, d)] += jitter;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let slope = -grad.dot(&step);
        let base = scorer.weights.clone();
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            for (j, w) in scorer.weights[stride..].iter_mut().enumerate() {
                *w = base[stride + j] - t * step[j];
            }
            let trial = risk_and_gradient(&scorer, &inputs, &labels).0;
            if trial <= risk + 1e-4 * t * slope {
                risk = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            scorer.weights = base;
            break;
        }
    }
    Ok(scorer)
}
