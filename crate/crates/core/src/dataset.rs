//! Feature tables: extraction, CSV persistence, split, scaling, correlation,
//! ranking and per-label summaries.
//!
//! CSV layout: header `address,<148 feature ids>,label,strength`, UTF-8 with
//! LF line endings. Floats are written with Rust's shortest round-trip
//! decimal formatting, so a table re-read and re-written is byte-identical.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::lsi::{compute_lsi, LsiParams};
use crate::features::manifest::{feature_ids, FEATURE_LEN};
use crate::features::si::si_for_nodes;
use crate::graph::{NodeId, TxGraph};
use crate::labels::{Label, LabelRecord, Strength};
use crate::subgraph::{gk_from_node, GkParams};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub address: String,
    pub values: Vec<f64>,
    pub label: Label,
    pub strength: Strength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>) -> Self {
        FeatureTable {
            ids,
            rows: Vec::new(),
        }
    }

    /// Empty table with the full 148-column manifest.
    pub fn with_manifest() -> Self {
        Self::new(feature_ids().into_iter().map(String::from).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.ids.len()
    }

    pub fn column_index(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|i| i == id)
            .ok_or_else(|| Error::UnknownFeature(id.to_string()))
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[index]).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label.id()).collect()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        if row.values.len() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                actual: row.values.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    /// Keep only the named columns, in the given order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<FeatureTable> {
        let idx = ids
            .iter()
            .map(|id| self.column_index(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            ids: ids.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    fn subset(&self, picks: &[usize]) -> FeatureTable {
        FeatureTable {
            ids: self.ids.clone(),
            rows: picks.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = Vec::with_capacity(self.width() + 3);
        header.push("address");
        header.extend(self.ids.iter().map(String::as_str));
        header.push("label");
        header.push("strength");
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = Vec::with_capacity(self.width() + 3);
            rec.push(r.address.clone());
            rec.extend(r.values.iter().map(|v| format_value(*v)));
            rec.push(r.label.id().to_string());
            rec.push(r.strength.as_str().to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<FeatureTable> {
        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let header = reader.headers()?.clone();
        let n = header.len();
        if n < 3
            || &header[0] != "address"
            || &header[n - 2] != "label"
            || &header[n - 1] != "strength"
        {
            return Err(Error::Table(
                "header must be `address,<features...>,label,strength`".into(),
            ));
        }
        let mut table = FeatureTable::new(header.iter().skip(1).take(n - 3).map(String::from).collect());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let values = (1..n - 2)
                .map(|c| {
                    rec[c].parse::<f64>().map_err(|_| {
                        Error::Table(format!("line {line}: `{}` is not a number", &rec[c]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let label = rec[n - 2]
                .parse::<u8>()
                .ok()
                .and_then(Label::from_id)
                .ok_or_else(|| Error::Table(format!("line {line}: bad label `{}`", &rec[n - 2])))?;
            let strength = rec[n - 1]
                .parse::<Strength>()
                .map_err(|e| Error::Table(format!("line {line}: {e}")))?;
            table.push(FeatureRow {
                address: rec[0].to_string(),
                values,
                label,
                strength,
            })?;
        }
        Ok(table)
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v}")
}

/// Addresses that could not become rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractionReport {
    /// Labelled addresses absent from the graph.
    pub missing: Vec<String>,
    /// Addresses whose feature computation failed, with the cause.
    pub failures: Vec<(String, String)>,
}

/// All 148 features of one address.
pub fn extract_row(
    g: &TxGraph,
    merged: &TxGraph,
    node: NodeId,
    merged_node: NodeId,
    gk: &GkParams,
    lsi: &LsiParams,
) -> Result<Vec<f64>> {
    let si = si_for_nodes(g, node, merged, merged_node);
    let sub = gk_from_node(g, node, gk);
    let structural = compute_lsi(&sub.topology(), lsi)?;
    let mut values = Vec::with_capacity(FEATURE_LEN);
    values.extend_from_slice(si.values());
    values.extend_from_slice(&structural.values);
    Ok(values)
}

/// Build one row per labelled address present in `g`, on up to `jobs`
/// worker threads. Row order always follows `labels`.
pub fn extract_table(
    g: &TxGraph,
    merged: &TxGraph,
    labels: &[LabelRecord],
    gk: &GkParams,
    lsi: &LsiParams,
    jobs: usize,
) -> Result<(FeatureTable, ExtractionReport)> {
    gk.validate()?;
    lsi.validate()?;
    let mut report = ExtractionReport::default();
    let mut found = Vec::with_capacity(labels.len());
    for rec in labels {
        match (g.address(&rec.address), merged.address(&rec.address)) {
            (Ok(n), Ok(m)) => found.push((rec, n, m)),
            _ => report.missing.push(rec.address.clone()),
        }
    }
    let compute = || -> Vec<Result<Vec<f64>>> {
        found
            .par_iter()
            .map(|&(_, n, m)| extract_row(g, merged, n, m, gk, lsi))
            .collect()
    };
    let results = if jobs <= 1 {
        found
            .iter()
            .map(|&(_, n, m)| extract_row(g, merged, n, m, gk, lsi))
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(compute)
    };
    let mut table = FeatureTable::with_manifest();
    for ((rec, _, _), result) in found.into_iter().zip(results) {
        match result {
            Ok(values) => table.push(FeatureRow {
                address: rec.address.clone(),
                values,
                label: rec.label,
                strength: rec.strength,
            })?,
            Err(e) => report.failures.push((rec.address.clone(), e.to_string())),
        }
    }
    Ok((table, report))
}

/// Seeded, non-stratified shuffle split. The test side gets
/// `ceil(test_fraction * n)` rows, clamped so both sides are non-empty.
pub fn split(table: &FeatureTable, test_fraction: f64, seed: u64) -> Result<(FeatureTable, FeatureTable)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = table.len();
    if n < 2 {
        return Err(Error::Split(format!("need at least 2 rows, have {n}")));
    }
    let n_test = ((test_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, train) = order.split_at(n_test);
    Ok((table.subset(train), table.subset(test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(train: &FeatureTable) -> Result<ScalerState> {
    if train.is_empty() {
        return Err(Error::Table("cannot fit a scaler on zero rows".into()));
    }
    let mut min = vec![f64::INFINITY; train.width()];
    let mut max = vec![f64::NEG_INFINITY; train.width()];
    for r in &train.rows {
        for (j, &v) in r.values.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(ScalerState { min, max })
}

impl ScalerState {
    fn check(&self, table: &FeatureTable) -> Result<()> {
        if table.width() != self.min.len() {
            return Err(Error::Shape {
                expected: self.min.len(),
                actual: table.width(),
            });
        }
        Ok(())
    }

    /// Map scaled values back; constant columns return their train value.
    pub fn invert(&self, table: &FeatureTable) -> Result<FeatureTable> {
        self.check(table)?;
        let mut out = table.clone();
        for r in &mut out.rows {
            for (j, v) in r.values.iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = if span == 0.0 { self.min[j] } else { *v * span + self.min[j] };
            }
        }
        Ok(out)
    }
}

/// `(x - min) / (max - min)` per column with train statistics; a constant
/// column maps to 0. Values outside the train range are not clipped.
pub fn apply_minmax(state: &ScalerState, table: &FeatureTable) -> Result<FeatureTable> {
    state.check(table)?;
    let mut out = table.clone();
    for r in &mut out.rows {
        for (j, v) in r.values.iter_mut().enumerate() {
            let span = state.max[j] - state.min[j];
            *v = if span == 0.0 { 0.0 } else { (*v - state.min[j]) / span };
        }
    }
    Ok(out)
}

/// Pearson correlation between every pair of columns. Rows and columns of
/// zero-variance features are 0, including their diagonal entry.
pub fn correlation_matrix(table: &FeatureTable) -> Result<Vec<Vec<f64>>> {
    let n = table.len();
    if n < 2 {
        return Err(Error::Table(format!("correlation needs at least 2 rows, have {n}")));
    }
    let w = table.width();
    let centred: Vec<Vec<f64>> = (0..w)
        .map(|j| {
            let col = table.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut m = vec![vec![0.0; w]; w];
    for a in 0..w {
        if norms[a] == 0.0 {
            continue;
        }
        m[a][a] = 1.0;
        for b in a + 1..w {
            if norms[b] == 0.0 {
                continue;
            }
            let dot: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            let r = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            m[a][b] = r;
            m[b][a] = r;
        }
    }
    Ok(m)
}

/// One-way ANOVA F statistic of a column against the label.
pub fn anova_f(values: &[f64], labels: &[u8]) -> f64 {
    let mut groups: BTreeMap<u8, (usize, f64)> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(labels) {
        let g = groups.entry(l).or_default();
        g.0 += 1;
        g.1 += v;
    }
    let k = groups.len();
    let n = values.len();
    if k < 2 || n <= k {
        return 0.0;
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let means: HashMap<u8, f64> = groups.iter().map(|(&l, &(c, s))| (l, s / c as f64)).collect();
    let between: f64 = groups
        .iter()
        .map(|(l, &(c, _))| c as f64 * (means[l] - grand).powi(2))
        .sum();
    let within: f64 = values
        .iter()
        .zip(labels)
        .map(|(&v, l)| (v - means[l]).powi(2))
        .sum();
    // exact ties with the grand mean read as "no separation"
    if between <= 0.0 || between < 1e-12 * (between + within) {
        return 0.0;
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Features ordered by descending ANOVA F score; ties keep column order.
pub fn feature_rank(table: &FeatureTable) -> Result<Vec<(String, f64)>> {
    let labels = table.labels();
    let mut distinct = labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Ranking(format!(
            "need at least 2 classes, found {}",
            distinct.len()
        )));
    }
    let mut scores: Vec<(String, f64)> = (0..table.width())
        .map(|j| (table.ids[j].clone(), anova_f(&table.column(j), &labels)))
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSummary {
    pub label: u8,
    pub count: usize,
    pub avg: f64,
    pub max: f64,
    pub min: f64,
    pub median: f64,
}

pub fn summarize_by_label(table: &FeatureTable, feature_id: &str) -> Result<Vec<LabelSummary>> {
    let j = table.column_index(feature_id)?;
    let mut by_label: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for r in &table.rows {
        by_label.entry(r.label.id()).or_default().push(r.values[j]);
    }
    Ok(by_label
        .into_iter()
        .map(|(label, mut xs)| {
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            let median = if n % 2 == 1 {
                xs[n / 2]
            } else {
                (xs[n / 2 - 1] + xs[n / 2]) / 2.0
            };
            LabelSummary {
                label,
                count: n,
                avg: xs.iter().sum::<f64>() / n as f64,
                max: xs[n - 1],
                min: xs[0],
                median,
            }
        })
        .collect())
}

/// Column mapping for externally published feature tables.
///
/// TOML layout:
///
/// ```toml
/// address_column = "account"
/// label_column = "label"
/// # strength_column = "SW"     (optional; SA when absent)
/// [columns]
/// "published name" = "manifest id"
/// ```
///
/// Manifest ids not named under `[columns]` are looked up by their own name.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Remap {
    pub address_column: String,
    pub label_column: String,
    #[serde(default)]
    pub strength_column: Option<String>,
    #[serde(default)]
    pub columns: BTreeMap<String, String>,
}

impl Remap {
    pub fn from_toml(text: &str) -> Result<Remap> {
        toml::from_str(text).map_err(|e| Error::Config(format!("remap config: {e}")))
    }

    /// Load an external CSV into manifest column order.
    pub fn read_csv<R: Read>(&self, input: R) -> Result<FeatureTable> {
        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let header = reader.headers()?.clone();
        let find = |name: &str| header.iter().position(|h| h == name);
        let address = find(&self.address_column)
            .ok_or_else(|| Error::Table(format!("no `{}` column", self.address_column)))?;
        let label = find(&self.label_column)
            .ok_or_else(|| Error::Table(format!("no `{}` column", self.label_column)))?;
        let strength = match &self.strength_column {
            Some(s) => Some(find(s).ok_or_else(|| Error::Table(format!("no `{s}` column")))?),
            None => None,
        };
        let published_for: HashMap<&str, &str> = self
            .columns
            .iter()
            .map(|(published, id)| (id.as_str(), published.as_str()))
            .collect();
        let ids = feature_ids();
        let sources = ids
            .iter()
            .map(|id| {
                let name = published_for.get(id).copied().unwrap_or(id);
                find(name).ok_or_else(|| Error::Table(format!("no column for feature `{id}` (looked for `{name}`)")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = FeatureTable::with_manifest();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let values = sources
                .iter()
                .map(|&c| {
                    let raw = rec[c].trim();
                    if raw.is_empty() {
                        return Ok(0.0);
                    }
                    raw.parse::<f64>()
                        .map(|v| if v.is_finite() { v } else { 0.0 })
                        .map_err(|_| Error::Table(format!("line {line}: `{raw}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            let label = rec[label]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v < 13.0)
                .and_then(|v| Label::from_id(v as u8))
                .ok_or_else(|| Error::Table(format!("line {line}: bad label `{}`", &rec[label])))?;
            let strength = match strength {
                Some(c) => rec[c].trim().parse::<Strength>().unwrap_or(Strength::Strong),
                None => Strength::Strong,
            };
            table.push(FeatureRow {
                address: rec[address].to_string(),
                values,
                label,
                strength,
            })?;
        }
        Ok(table)
    }
}
