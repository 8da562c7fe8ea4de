//! Local structural indicators computed on a k-hop subgraph.
//!
//! Degree-based metrics count parallel edges. Path-based metrics use
//! directed, unweighted hop distances where parallel edges collapse to one
//! link; unreachable pairs are left out. Degenerate cases evaluate to 0.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::features::manifest::{LSI_IDS, LSI_LEN};
use crate::features::stats::Stats;
use crate::subgraph::Topology;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsiParams {
    pub alpha: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LsiParams {
    fn default() -> Self {
        LsiParams {
            alpha: 0.85,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

impl LsiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "pagerank damping must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Config("pagerank tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn in_out_degrees(t: &Topology) -> (Vec<u64>, Vec<u64>) {
    let mut din = vec![0u64; t.node_count];
    let mut dout = vec![0u64; t.node_count];
    for &(u, v) in &t.edges {
        dout[u as usize] += 1;
        din[v as usize] += 1;
    }
    (din, dout)
}

fn as_f64(xs: &[u64]) -> Vec<f64> {
    xs.iter().map(|&x| x as f64).collect()
}

/// Distinct out-neighbours per node, sorted.
fn simple_out_adjacency(t: &Topology) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); t.node_count];
    for &(u, v) in &t.edges {
        adj[u as usize].push(v as usize);
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued nodes have a distance");
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Mean in/out/total degree, then their population standard deviations.
pub fn degree_stats(t: &Topology) -> [f64; 6] {
    let (din, dout) = in_out_degrees(t);
    let total: Vec<u64> = din.iter().zip(&dout).map(|(a, b)| a + b).collect();
    let (si, so, st) = (
        Stats::of(&as_f64(&din)),
        Stats::of(&as_f64(&dout)),
        Stats::of(&as_f64(&total)),
    );
    [si.avg, so.avg, st.avg, si.std, so.std, st.std]
}

fn max_share(degrees: &[u64]) -> f64 {
    if degrees.is_empty() {
        return 0.0;
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let mut best = 0usize;
    let mut run = 0usize;
    for i in 0..sorted.len() {
        run = if i > 0 && sorted[i] == sorted[i - 1] { run + 1 } else { 1 };
        best = best.max(run);
    }
    best as f64 / degrees.len() as f64
}

/// Largest fraction of nodes sharing one degree value, for in/out/total degree.
pub fn degree_distribution_max(t: &Topology) -> [f64; 3] {
    let (din, dout) = in_out_degrees(t);
    let total: Vec<u64> = din.iter().zip(&dout).map(|(a, b)| a + b).collect();
    [max_share(&din), max_share(&dout), max_share(&total)]
}

/// Newman's degree correlation over edge endpoints, using total degree.
///
/// With `S1 = Σ d_i d_j`, `S2 = Σ (d_i + d_j)` and `S3 = Σ (d_i² + d_j²)`
/// over the `E` edges, the coefficient is
/// `(S1/E - (S2/2E)²) / (S3/2E - (S2/2E)²)`. Scaling both parts by `4E²`
/// keeps everything in integers until the final division, so degree-regular
/// graphs hit an exact zero denominator.
pub fn degree_correlation(t: &Topology) -> f64 {
    if t.edges.is_empty() {
        return 0.0;
    }
    let (din, dout) = in_out_degrees(t);
    let deg = |v: u32| (din[v as usize] + dout[v as usize]) as i128;
    let (mut s1, mut s2, mut s3) = (0i128, 0i128, 0i128);
    for &(u, v) in &t.edges {
        let (a, b) = (deg(u), deg(v));
        s1 += a * b;
        s2 += a + b;
        s3 += a * a + b * b;
    }
    let e = t.edges.len() as i128;
    let num = 4 * e * s1 - s2 * s2;
    let den = 2 * e * s3 - s2 * s2;
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Unnormalised directed betweenness of the origin (Brandes accumulation).
pub fn betweenness_origin(t: &Topology) -> f64 {
    let n = t.node_count;
    let origin = t.origin as usize;
    if n < 3 {
        return 0.0;
    }
    let adj = simple_out_adjacency(t);
    let mut total = 0.0;
    let mut sigma = vec![0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut delta = vec![0f64; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        if s == origin {
            continue;
        }
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = usize::MAX);
        preds.iter_mut().for_each(Vec::clear);
        delta.iter_mut().for_each(|x| *x = 0.0);
        order.clear();

        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                }
            }
        }
        for &w in order.iter().rev() {
            for &u in &preds[w] {
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
            }
        }
        total += delta[origin];
    }
    total
}

/// Mean and maximum directed distance over reachable ordered pairs.
pub fn avg_path_and_diameter(t: &Topology) -> (f64, f64) {
    let adj = simple_out_adjacency(t);
    let (mut sum, mut count, mut longest) = (0u64, 0u64, 0usize);
    for s in 0..t.node_count {
        for (v, d) in bfs_distances(&adj, s).into_iter().enumerate() {
            if let (true, Some(d)) = (v != s, d) {
                sum += d as u64;
                count += 1;
                longest = longest.max(d);
            }
        }
    }
    if count == 0 {
        (0.0, 0.0)
    } else {
        (sum as f64 / count as f64, longest as f64)
    }
}

/// Reciprocal of the summed distance from the origin to every node it reaches.
pub fn closeness_origin(t: &Topology) -> f64 {
    if t.node_count == 0 {
        return 0.0;
    }
    let adj = simple_out_adjacency(t);
    let sum: usize = bfs_distances(&adj, t.origin as usize)
        .into_iter()
        .flatten()
        .sum();
    if sum == 0 {
        0.0
    } else {
        1.0 / sum as f64
    }
}

/// PageRank of every node by power iteration. Each parallel edge carries its
/// own share of the source's score; dangling mass is spread uniformly.
pub fn pagerank(t: &Topology, params: &LsiParams) -> Result<Vec<f64>> {
    params.validate()?;
    let n = t.node_count;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (_, dout) = in_out_degrees(t);
    let nf = n as f64;
    let alpha = params.alpha;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iterations {
        let dangling: f64 = (0..n).filter(|&i| dout[i] == 0).map(|i| rank[i]).sum();
        let base = (1.0 - alpha) / nf + alpha * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for &(u, v) in &t.edges {
            next[v as usize] += alpha * rank[u as usize] / dout[u as usize] as f64;
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < params.tolerance {
            return Ok(rank);
        }
    }
    Err(Error::Convergence {
        iterations: params.max_iterations,
        residual,
    })
}

pub fn pagerank_origin(t: &Topology, params: &LsiParams) -> Result<f64> {
    Ok(pagerank(t, params)?
        .get(t.origin as usize)
        .copied()
        .unwrap_or(0.0))
}

/// `E / (N (N - 1))`, counting parallel edges, so multigraphs may exceed 1.
pub fn density(t: &Topology) -> f64 {
    let n = t.node_count as f64;
    if t.node_count < 2 {
        0.0
    } else {
        t.edges.len() as f64 / (n * (n - 1.0))
    }
}

/// The sixteen structural indicators, in manifest order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsiFeatures {
    pub values: [f64; LSI_LEN],
}

impl LsiFeatures {
    pub fn get(&self, id: &str) -> Option<f64> {
        LSI_IDS.iter().position(|&i| i == id).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        LSI_IDS.iter().copied().zip(self.values.iter().copied())
    }
}

pub fn compute_lsi(t: &Topology, params: &LsiParams) -> Result<LsiFeatures> {
    let s1 = degree_stats(t);
    let s2 = degree_distribution_max(t);
    let (avg_path, diameter) = avg_path_and_diameter(t);
    let mut values = [0.0; LSI_LEN];
    values[..6].copy_from_slice(&s1);
    values[6..9].copy_from_slice(&s2);
    values[9] = degree_correlation(t);
    values[10] = betweenness_origin(t);
    values[11] = avg_path;
    values[12] = diameter;
    values[13] = closeness_origin(t);
    values[14] = pagerank_origin(t, params)?;
    values[15] = density(t);
    for v in &mut values {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    Ok(LsiFeatures { values })
}
