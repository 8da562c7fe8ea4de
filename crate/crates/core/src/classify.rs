//! Distance-weighted k-nearest-neighbour baseline and weighted metrics.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// A lazy learner: the training matrix is stored as given.
#[derive(Debug, Clone)]
pub struct KnnModel {
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    k: usize,
    width: usize,
}

pub fn knn_fit(rows: Vec<Vec<f64>>, labels: Vec<u8>, k: usize) -> Result<KnnModel> {
    if rows.is_empty() {
        return Err(Error::Config("cannot fit on zero rows".into()));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > rows.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {} training rows",
            rows.len()
        )));
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch(rows.len(), labels.len()));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::Shape {
            expected: width,
            actual: bad.len(),
        });
    }
    Ok(KnnModel {
        rows,
        labels,
        k,
        width,
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Highest-scoring label, ties to the smallest label id.
fn arg_max(votes: &BTreeMap<u8, f64>) -> u8 {
    let mut best: Option<(u8, f64)> = None;
    for (&label, &score) in votes {
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((label, score));
        }
    }
    best.expect("at least one vote").0
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Classify one query. Neighbours are ranked by (distance, label), so
    /// the result does not depend on training-row order. Any exact match
    /// takes over: the zero-distance neighbours vote unweighted. Otherwise
    /// each neighbour votes with weight `1 / distance`.
    pub fn predict_one(&self, query: &[f64]) -> Result<u8> {
        if query.len() != self.width {
            return Err(Error::Shape {
                expected: self.width,
                actual: query.len(),
            });
        }
        let mut scored: Vec<(f64, u8)> = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(row, &label)| (squared_distance(row, query), label))
            .collect();
        let k = self.k;
        let by_key = |a: &(f64, u8), b: &(f64, u8)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, by_key);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_key);

        let mut votes: BTreeMap<u8, f64> = BTreeMap::new();
        if scored[0].0 == 0.0 {
            for &(_, label) in scored.iter().take_while(|(d, _)| *d == 0.0) {
                *votes.entry(label).or_default() += 1.0;
            }
        } else {
            for &(d2, label) in &scored {
                *votes.entry(label).or_default() += 1.0 / d2.sqrt();
            }
        }
        Ok(arg_max(&votes))
    }
}

pub fn knn_predict(model: &KnnModel, queries: &[Vec<f64>]) -> Result<Vec<u8>> {
    queries.par_iter().map(|q| model.predict_one(q)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: u8,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub samples: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Labels indexing the confusion matrix rows (truth) and columns (prediction).
    pub labels: Vec<u8>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
}

fn div0(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Accuracy and support-weighted precision, recall and F1.
pub fn evaluate(predicted: &[u8], truth: &[u8]) -> Result<EvalReport> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch(predicted.len(), truth.len()));
    }
    if truth.is_empty() {
        return Err(Error::Config("cannot evaluate zero predictions".into()));
    }
    let mut labels: Vec<u8> = predicted.iter().chain(truth).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let index = |l: u8| labels.binary_search(&l).expect("label collected above");
    let m = labels.len();
    let mut confusion = vec![vec![0usize; m]; m];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[index(t)][index(p)] += 1;
    }
    let n = truth.len() as f64;
    let correct: usize = (0..m).map(|i| confusion[i][i]).sum();
    let mut per_class = Vec::with_capacity(m);
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for (i, &label) in labels.iter().enumerate() {
        let tp = confusion[i][i] as f64;
        let support: usize = confusion[i].iter().sum();
        let predicted_as: usize = confusion.iter().map(|row| row[i]).sum();
        let precision = div0(tp, predicted_as as f64);
        let recall = div0(tp, support as f64);
        let f1 = div0(2.0 * precision * recall, precision + recall);
        let w = support as f64 / n;
        wp += w * precision;
        wr += w * recall;
        wf += w * f1;
        per_class.push(ClassMetrics {
            label,
            support,
            precision,
            recall,
            f1,
        });
    }
    Ok(EvalReport {
        samples: truth.len(),
        accuracy: correct as f64 / n,
        precision: wp,
        recall: wr,
        f1: wf,
        labels,
        confusion,
        per_class,
    })
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "samples   {}\naccuracy  {:.4}\nprecision {:.4}\nrecall    {:.4}\nf1        {:.4}\n\nlabel  support  precision  recall  f1\n",
            self.samples, self.accuracy, self.precision, self.recall, self.f1
        );
        for c in &self.per_class {
            s.push_str(&format!(
                "{:>5}  {:>7}  {:>9.4}  {:>6.4}  {:.4}\n",
                c.label, c.support, c.precision, c.recall, c.f1
            ));
        }
        s
    }
}
