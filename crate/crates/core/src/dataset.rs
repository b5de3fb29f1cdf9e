//! Labelled samples `(v, w, y)` and their CSV encodings.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kernel::LabeledPair;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub v: usize,
    pub w: Vec<f64>,
    pub y: usize,
}

/// Rows of `(viewpoint, features, label)` over fixed index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_views: usize,
    n_labels: usize,
    w_dim: usize,
    rows: Vec<Sample>,
}

impl Dataset {
    pub fn new(n_views: usize, n_labels: usize, w_dim: usize, rows: Vec<Sample>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.v >= n_views || row.y >= n_labels {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: index ({}, {}) outside {n_views} views × {n_labels} labels",
                    row.v, row.y
                )));
            }
            if row.w.len() != w_dim {
                return Err(Error::Shape {
                    expected: w_dim,
                    got: row.w.len(),
                });
            }
            if row.w.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i}: non-finite feature")));
            }
        }
        Ok(Self {
            n_views,
            n_labels,
            w_dim,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn w_dim(&self) -> usize {
        self.w_dim
    }

    /// Dimension of the learner input `x = (v, w)`.
    pub fn input_dim(&self) -> usize {
        1 + self.w_dim
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn viewpoints(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.v).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.y).collect()
    }

    /// Learner input for row `i`: the viewpoint as a number followed by `w`.
    pub fn input(&self, i: usize) -> Vec<f64> {
        encode_input(self.rows[i].v, &self.rows[i].w)
    }

    /// Pairs `(v_i, ŷ_i)` for the given predictions.
    pub fn pairs_with(&self, predictions: &[usize]) -> Result<Vec<LabeledPair>> {
        if predictions.len() != self.rows.len() {
            return Err(Error::Shape {
                expected: self.rows.len(),
                got: predictions.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .zip(predictions)
            .map(|(r, &y)| LabeledPair::new(r.v, y))
            .collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("v");
        for k in 1..=self.w_dim {
            write!(out, ",w{k}").unwrap();
        }
        out.push_str(",y\n");
        for row in &self.rows {
            write!(out, "{}", row.v).unwrap();
            for x in &row.w {
                write!(out, ",{x}").unwrap();
            }
            writeln!(out, ",{}", row.y).unwrap();
        }
        out
    }

    /// Parses the `v,w1,...,wd,y` format; index ranges are inferred from the
    /// largest observed values.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let w_dim = validate_header(&cols)?;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} fields, found {}", cols.len(), fields.len()),
                });
            }
            let v = parse_index(fields[0], idx)?;
            let y = parse_index(fields[cols.len() - 1], idx)?;
            let w = fields[1..cols.len() - 1]
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        message: format!("bad feature '{f}': {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Sample { v, w, y });
        }
        let n_views = rows.iter().map(|r| r.v + 1).max().unwrap_or(0);
        let n_labels = rows.iter().map(|r| r.y + 1).max().unwrap_or(0);
        Self::new(n_views, n_labels, w_dim, rows)
    }

    /// Widens the index ranges (e.g. to match a scenario's label set).
    pub fn with_ranges(mut self, n_views: usize, n_labels: usize) -> Result<Self> {
        if n_views < self.n_views || n_labels < self.n_labels {
            return Err(Error::InvalidArgument("ranges may only be widened".into()));
        }
        self.n_views = n_views;
        self.n_labels = n_labels;
        Ok(self)
    }
}

pub fn encode_input(v: usize, w: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(w.len() + 1);
    x.push(v as f64);
    x.extend_from_slice(w);
    x
}

fn validate_header(cols: &[&str]) -> Result<usize> {
    let bad = |message: String| Error::Parse { line: 1, message };
    if cols.len() < 2 || cols[0] != "v" || cols[cols.len() - 1] != "y" {
        return Err(bad(format!("header must be v,w1,...,wd,y; got '{}'", cols.join(","))));
    }
    for (k, name) in cols[1..cols.len() - 1].iter().enumerate() {
        if *name != format!("w{}", k + 1) {
            return Err(bad(format!("expected column w{}, found '{name}'", k + 1)));
        }
    }
    Ok(cols.len() - 2)
}

fn parse_index(field: &str, idx: usize) -> Result<usize> {
    field.parse::<usize>().map_err(|e| Error::Parse {
        line: idx + 1,
        message: format!("bad index '{field}': {e}"),
    })
}

pub fn predictions_to_csv(predictions: &[usize]) -> String {
    let mut out = String::from("yhat\n");
    for p in predictions {
        writeln!(out, "{p}").unwrap();
    }
    out
}

pub fn predictions_from_csv(text: &str) -> Result<Vec<usize>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "yhat" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "predictions file must start with the header 'yhat'".into(),
            })
        }
    }
    lines.map(|(idx, l)| parse_index(l.trim(), idx)).collect()
}
