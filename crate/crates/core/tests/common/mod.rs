//! Random inputs and brute-force oracles shared by the integration tests.
#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use txgraph::graph::EdgeAttr;
use txgraph::subgraph::Topology;
use txgraph::{NodeId, RawBlock, RawTx, TxEntry, TxGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape knobs for [`random_blocks`].
#[derive(Debug, Clone, Copy)]
pub struct LedgerShape {
    pub addresses: usize,
    pub blocks: usize,
    pub max_txs: usize,
    pub max_io: usize,
}

/// A valid random ledger. Addresses are drawn with replacement, so the same
/// address often appears several times in one transaction (parallel edges).
/// Consecutive blocks may share a timestamp.
pub fn random_blocks(rng: &mut ChaCha8Rng, shape: LedgerShape) -> Vec<RawBlock> {
    let mut ts = 1_600_000_000u64 + rng.gen_range(0..86_400);
    let mut blocks = Vec::with_capacity(shape.blocks);
    for b in 0..shape.blocks {
        if b > 0 {
            ts += match rng.gen_range(0..4) {
                0 => 0,
                1 => rng.gen_range(1..600),
                2 => rng.gen_range(600..86_400),
                _ => rng.gen_range(86_400..4 * 86_400),
            };
        }
        let mut txs = Vec::new();
        for t in 0..rng.gen_range(1..=shape.max_txs) {
            let coinbase = t == 0 || rng.gen_bool(0.1);
            let entry = |rng: &mut ChaCha8Rng| {
                let value = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=2_000_000_000) };
                TxEntry::new(format!("a{}", rng.gen_range(0..shape.addresses)), value)
            };
            let inputs = if coinbase {
                Vec::new()
            } else {
                (0..rng.gen_range(1..=shape.max_io)).map(|_| entry(rng)).collect()
            };
            let outputs = (0..rng.gen_range(1..=shape.max_io)).map(|_| entry(rng)).collect();
            txs.push(RawTx {
                txid: format!("t{b}-{t}"),
                is_coinbase: coinbase,
                inputs,
                outputs,
            });
        }
        blocks.push(RawBlock {
            height: 100 + b as u64,
            timestamp: ts,
            txs,
        });
    }
    blocks
}

pub fn random_graph(rng: &mut ChaCha8Rng, shape: LedgerShape) -> TxGraph {
    TxGraph::build(&random_blocks(rng, shape)).expect("random ledgers are valid")
}

/// Addresses of `g` in node-id order.
pub fn address_names(g: &TxGraph) -> Vec<String> {
    g.nodes()
        .filter(|&n| g.kind(n) == txgraph::NodeKind::Address)
        .map(|n| g.name(n).to_string())
        .collect()
}

// ---------------------------------------------------------------- subgraphs

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSubgraph {
    /// (original node, distance) in local-id order.
    pub nodes: Vec<(NodeId, usize)>,
    pub edges: Vec<(u32, u32, EdgeAttr)>,
}

/// Undirected BFS over the whole graph, then truncation and edge copying.
///
/// The unbounded walk records every (node, first-seen neighbour) expansion
/// in visiting order. Replaying only the expansions of nodes closer than
/// `max_depth`, admitting unseen neighbours until the cap is met, and
/// copying every original edge of each newly met pair reproduces the
/// bounded extraction.
pub fn gk_oracle(g: &TxGraph, seed: NodeId, max_depth: usize, max_nodes: usize) -> OracleSubgraph {
    let n = g.node_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in g.edges() {
        let (s, t) = (e.source.index(), e.target.index());
        if !adj[s].contains(&t) {
            adj[s].push(t);
        }
        if !adj[t].contains(&s) {
            adj[t].push(s);
        }
    }

    let mut dist = vec![usize::MAX; n];
    let mut expansions = Vec::new();
    dist[seed.index()] = 0;
    let mut queue = VecDeque::from([seed.index()]);
    while let Some(f) = queue.pop_front() {
        for &t in &adj[f] {
            expansions.push((f, t, dist[f]));
            if dist[t] == usize::MAX {
                dist[t] = dist[f] + 1;
                queue.push_back(t);
            }
        }
    }

    let mut local: HashMap<usize, u32> = HashMap::from([(seed.index(), 0)]);
    let mut nodes = vec![(seed, 0)];
    let mut pairs = HashSet::new();
    let mut edges = Vec::new();
    for (f, t, df) in expansions {
        if df >= max_depth {
            continue;
        }
        if let std::collections::hash_map::Entry::Vacant(slot) = local.entry(t) {
            if nodes.len() == max_nodes {
                break;
            }
            slot.insert(nodes.len() as u32);
            nodes.push((NodeId(t as u32), dist[t]));
        }
        if !pairs.insert((f.min(t), f.max(t))) {
            continue;
        }
        for e in g.edges() {
            let (s, d) = (e.source.index(), e.target.index());
            if (s == f && d == t) || (s == t && d == f) {
                edges.push((local[&s], local[&d], e.attr));
            }
        }
    }
    OracleSubgraph { nodes, edges }
}

// ---------------------------------------------------------------- topologies

pub fn random_topology(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> Topology {
    let n = rng.gen_range(1..=max_nodes);
    let m = if n < 2 { 0 } else { rng.gen_range(0..=max_edges) };
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let (u, v) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        if u != v {
            edges.push((u, v));
            if rng.gen_bool(0.1) {
                edges.push((u, v));
            }
        }
    }
    Topology {
        node_count: n,
        origin: rng.gen_range(0..n as u32),
        edges,
    }
}

pub const INF: usize = usize::MAX / 4;

/// All-pairs hop distances; `INF` when unreachable.
pub fn floyd_warshall(t: &Topology) -> Vec<Vec<usize>> {
    let n = t.node_count;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(u, v) in &t.edges {
        d[u as usize][v as usize] = d[u as usize][v as usize].min(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn simple_successors(t: &Topology) -> Vec<Vec<usize>> {
    let mut set: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); t.node_count];
    for &(u, v) in &t.edges {
        set[u as usize].insert(v as usize);
    }
    set.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Betweenness of the origin by listing every shortest path explicitly.
pub fn betweenness_by_enumeration(t: &Topology) -> f64 {
    let d = floyd_warshall(t);
    let succ = simple_successors(t);
    let o = t.origin as usize;
    let n = t.node_count;
    let mut total = 0.0;
    for s in 0..n {
        for target in 0..n {
            if s == target || s == o || target == o || d[s][target] >= INF {
                continue;
            }
            let mut paths = Vec::new();
            let mut stack = vec![s];
            enumerate_paths(&succ, &d, target, &mut stack, &mut paths);
            let through = paths.iter().filter(|p| p.contains(&o)).count();
            total += through as f64 / paths.len() as f64;
        }
    }
    total
}

fn enumerate_paths(
    succ: &[Vec<usize>],
    d: &[Vec<usize>],
    target: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let u = *stack.last().expect("non-empty path");
    if u == target {
        out.push(stack.clone());
        return;
    }
    for &v in &succ[u] {
        if d[v][target] < INF && d[u][target] == d[v][target] + 1 {
            stack.push(v);
            enumerate_paths(succ, d, target, stack, out);
            stack.pop();
        }
    }
}

/// (mean distance, diameter, closeness of origin) from Floyd–Warshall.
pub fn path_metrics(t: &Topology) -> (f64, f64, f64) {
    let d = floyd_warshall(t);
    let n = t.node_count;
    let (mut sum, mut count, mut max) = (0usize, 0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            if i != j && d[i][j] < INF {
                sum += d[i][j];
                count += 1;
                max = max.max(d[i][j]);
            }
        }
    }
    let avg = if count == 0 { 0.0 } else { sum as f64 / count as f64 };
    let o = t.origin as usize;
    let reach: usize = d[o].iter().filter(|&&x| x < INF).sum();
    let closeness = if reach == 0 { 0.0 } else { 1.0 / reach as f64 };
    (avg, max as f64, closeness)
}

/// Stationary vector of the damped walk, by solving the linear system
/// `(I - alpha * (P^T + u d^T)) r = (1 - alpha) u` with partial pivoting.
pub fn pagerank_dense(t: &Topology, alpha: f64) -> Vec<f64> {
    let n = t.node_count;
    let mut outdeg = vec![0usize; n];
    for &(u, _) in &t.edges {
        outdeg[u as usize] += 1;
    }
    let nf = n as f64;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
        row[n] = (1.0 - alpha) / nf;
    }
    for &(u, v) in &t.edges {
        a[v as usize][u as usize] -= alpha / outdeg[u as usize] as f64;
    }
    for j in (0..n).filter(|&j| outdeg[j] == 0) {
        for row in a.iter_mut() {
            row[j] -= alpha / nf;
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty range");
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Degree correlation, written the way the published formula reads:
/// `[E⁻¹ Σ j k − (E⁻¹ Σ ½(j + k))²] / [E⁻¹ Σ ½(j² + k²) − (E⁻¹ Σ ½(j + k))²]`.
pub fn degree_correlation_direct(t: &Topology) -> f64 {
    if t.edges.is_empty() {
        return 0.0;
    }
    let mut deg = vec![0f64; t.node_count];
    for &(u, v) in &t.edges {
        deg[u as usize] += 1.0;
        deg[v as usize] += 1.0;
    }
    let e = t.edges.len() as f64;
    let (mut jk, mut half_sum, mut half_sq) = (0.0, 0.0, 0.0);
    for &(u, v) in &t.edges {
        let (j, k) = (deg[u as usize], deg[v as usize]);
        jk += j * k;
        half_sum += 0.5 * (j + k);
        half_sq += 0.5 * (j * j + k * k);
    }
    let mean = half_sum / e;
    let num = jk / e - mean * mean;
    let den = half_sq / e - mean * mean;
    if den.abs() < 1e-9 {
        0.0
    } else {
        num / den
    }
}

/// Per-node tallies: [in mean, out mean, total mean, in std, out std, total std].
pub fn degree_stats_naive(t: &Topology) -> [f64; 6] {
    let n = t.node_count;
    let mut din = vec![0f64; n];
    let mut dout = vec![0f64; n];
    for &(u, v) in &t.edges {
        dout[u as usize] += 1.0;
        din[v as usize] += 1.0;
    }
    let tot: Vec<f64> = (0..n).map(|i| din[i] + dout[i]).collect();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n as f64;
    let std = |x: &[f64]| {
        let m = mean(x);
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    [mean(&din), mean(&dout), mean(&tot), std(&din), std(&dout), std(&tot)]
}

/// Largest share of nodes with a common degree: in, out, total.
pub fn degree_share_naive(t: &Topology) -> [f64; 3] {
    let n = t.node_count;
    let mut din = vec![0usize; n];
    let mut dout = vec![0usize; n];
    for &(u, v) in &t.edges {
        dout[u as usize] += 1;
        din[v as usize] += 1;
    }
    let share = |d: Vec<usize>| {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for x in d {
            *counts.entry(x).or_default() += 1;
        }
        *counts.values().max().unwrap_or(&0) as f64 / n as f64
    };
    let tot = (0..n).map(|i| din[i] + dout[i]).collect();
    [share(din), share(dout), share(tot)]
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---------------------------------------------------------------- knn

/// Exhaustive KNN: full sort by (Euclidean distance, label), then either
/// an unweighted vote among exact matches or an inverse-distance vote.
pub fn knn_oracle(train: &[Vec<f64>], labels: &[u8], k: usize, q: &[f64]) -> u8 {
    let mut all: Vec<(f64, u8)> = train
        .iter()
        .zip(labels)
        .map(|(r, &l)| {
            let d = r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (d, l)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let top = &all[..k];
    let mut votes = [0f64; 256];
    if top[0].0 == 0.0 {
        for &(d, l) in top {
            if d == 0.0 {
                votes[l as usize] += 1.0;
            }
        }
    } else {
        for &(d, l) in top {
            votes[l as usize] += 1.0 / d;
        }
    }
    let mut best = 0u8;
    for l in 0..256 {
        if votes[l] > votes[best as usize] {
            best = l as u8;
        }
    }
    best
}

// ---------------------------------------------------------------- si fixture

pub const SI_LEDGER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/si_ledger.ndjson");
pub const SI_EXPECTED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/si_expected.csv");

/// One fixture cell: address, feature id, computed value, oracle value.
pub type SiCell = (String, String, f64, f64);

/// Every (address, id) cell of the committed SI oracle table alongside the
/// library's value.
pub fn si_fixture_cells() -> Vec<SiCell> {
    let blocks = txgraph::parse_ledger(std::io::BufReader::new(
        std::fs::File::open(SI_LEDGER).expect("fixture ledger"),
    ))
    .expect("fixture parses");
    let g = TxGraph::build(&blocks).expect("fixture builds");
    let merged = g.merge_parallel_edges();
    let mut reader = csv::Reader::from_path(SI_EXPECTED).expect("oracle table");
    let header = reader.headers().expect("header").clone();
    let ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
    assert_eq!(ids, txgraph::features::si_ids(), "oracle columns follow the manifest");
    let mut cells = Vec::new();
    for rec in reader.records() {
        let rec = rec.expect("oracle row");
        let si = txgraph::features::compute_si(&g, &merged, &rec[0]).expect("fixture address");
        for (j, id) in ids.iter().enumerate() {
            let want: f64 = rec[j + 1].parse().expect("oracle number");
            let got = si.get(id).expect("manifest id");
            cells.push((rec[0].to_string(), id.clone(), got, want));
        }
    }
    cells
}
