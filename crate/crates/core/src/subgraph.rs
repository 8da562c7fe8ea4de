//! Structure-preserving k-hop subgraph extraction.
//!
//! The graph is walked breadth-first as if undirected, starting from an
//! address. Each expanded edge's endpoints receive local ids in first-seen
//! order, and every original edge between the two endpoints is copied with
//! its true direction and attributes. Two budgets bound the walk:
//!
//! * `max_depth`: only nodes strictly closer than `max_depth` are expanded,
//!   so admitted nodes lie at undirected distance `<= max_depth`;
//! * `max_nodes`: once the subgraph holds `max_nodes` nodes, meeting another
//!   unmapped node ends the walk and the partial subgraph is returned.
//!
//! Neighbours are visited in edge-id order (block order), which makes the
//! local numbering reproducible.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{EdgeAttr, EdgeId, NodeId, NodeKind, TxGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GkParams {
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl Default for GkParams {
    fn default() -> Self {
        GkParams {
            max_depth: 4,
            max_nodes: 3000,
        }
    }
}

impl GkParams {
    pub fn new(max_depth: usize, max_nodes: usize) -> Result<Self> {
        let p = GkParams {
            max_depth,
            max_nodes,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.max_nodes == 0 {
            return Err(Error::Config("max_nodes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalNode {
    pub original: NodeId,
    pub kind: NodeKind,
    /// Undirected hop distance from the origin at admission.
    pub distance: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEdge {
    pub source: u32,
    pub target: u32,
    pub attr: EdgeAttr,
}

/// A renumbered local graph. Local id 0 is always the seed address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KHopSubgraph {
    pub nodes: Vec<LocalNode>,
    pub edges: Vec<LocalEdge>,
}

impl KHopSubgraph {
    pub fn origin(&self) -> u32 {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn address_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Address)
            .count()
    }

    pub fn tx_count(&self) -> usize {
        self.node_count() - self.address_count()
    }

    pub fn max_distance(&self) -> usize {
        self.nodes.iter().map(|n| n.distance).max().unwrap_or(0)
    }

    pub fn original(&self, local: u32) -> NodeId {
        self.nodes[local as usize].original
    }

    /// Plain directed topology for the structural metrics.
    pub fn topology(&self) -> Topology {
        Topology {
            node_count: self.nodes.len(),
            origin: 0,
            edges: self.edges.iter().map(|e| (e.source, e.target)).collect(),
        }
    }

    /// Write the documented text format:
    ///
    /// ```text
    /// # txgraph k-hop subgraph v1
    /// origin 0
    /// nodes <n>
    /// <local>\t<address|tx>\t<original id>\t<name>\t<distance>     (n lines)
    /// edges <m>
    /// <source>\t<target>\t<amount_sats>\t<timestamp>\t<block_height> (m lines)
    /// ```
    pub fn write_text<W: Write>(&self, g: &TxGraph, mut out: W) -> Result<()> {
        writeln!(out, "# txgraph k-hop subgraph v1")?;
        writeln!(out, "origin {}", self.origin())?;
        writeln!(out, "nodes {}", self.nodes.len())?;
        for (i, n) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "{i}\t{}\t{}\t{}\t{}",
                n.kind.as_str(),
                n.original.0,
                g.name(n.original),
                n.distance
            )?;
        }
        writeln!(out, "edges {}", self.edges.len())?;
        for e in &self.edges {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.source, e.target, e.attr.amount_sats, e.attr.timestamp, e.attr.block_height
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Node count, origin and directed edge list (parallel edges repeated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub node_count: usize,
    pub origin: u32,
    pub edges: Vec<(u32, u32)>,
}

/// Distinct undirected neighbours of `node` in first-seen edge order, each
/// with the ids of all edges (either direction) joining the pair.
fn neighbours(g: &TxGraph, node: NodeId) -> Vec<(NodeId, Vec<EdgeId>)> {
    let mut slot: HashMap<NodeId, usize> = HashMap::new();
    let mut out: Vec<(NodeId, Vec<EdgeId>)> = Vec::new();
    for id in g.incident_edges(node) {
        let e = g.edge(id);
        let other = if e.source == node { e.target } else { e.source };
        match slot.get(&other) {
            Some(&i) => out[i].1.push(id),
            None => {
                slot.insert(other, out.len());
                out.push((other, vec![id]));
            }
        }
    }
    out
}

pub fn gk_generate(g: &TxGraph, seed: &str, params: &GkParams) -> Result<KHopSubgraph> {
    params.validate()?;
    let seed = g.address(seed)?;
    Ok(gk_from_node(g, seed, params))
}

/// Extraction from a node id already known to be an address in `g`.
pub fn gk_from_node(g: &TxGraph, seed: NodeId, params: &GkParams) -> KHopSubgraph {
    let mut local: HashMap<NodeId, u32> = HashMap::new();
    let mut nodes = vec![LocalNode {
        original: seed,
        kind: g.kind(seed),
        distance: 0,
    }];
    local.insert(seed, 0);
    let mut edges = Vec::new();
    let mut done: HashSet<(NodeId, NodeId)> = HashSet::new();

    // `nodes` doubles as the BFS queue: admission order is visiting order.
    let mut head = 0;
    'walk: while head < nodes.len() {
        let from = nodes[head];
        head += 1;
        if from.distance >= params.max_depth {
            continue;
        }
        let f_local = local[&from.original];
        for (to, joining) in neighbours(g, from.original) {
            let t_local = match local.get(&to) {
                Some(&l) => l,
                None => {
                    if nodes.len() == params.max_nodes {
                        break 'walk;
                    }
                    let l = nodes.len() as u32;
                    nodes.push(LocalNode {
                        original: to,
                        kind: g.kind(to),
                        distance: from.distance + 1,
                    });
                    local.insert(to, l);
                    l
                }
            };
            let key = (from.original.min(to), from.original.max(to));
            if !done.insert(key) {
                continue;
            }
            for id in joining {
                let e = g.edge(id);
                let (source, target) = if e.source == from.original {
                    (f_local, t_local)
                } else {
                    (t_local, f_local)
                };
                edges.push(LocalEdge {
                    source,
                    target,
                    attr: e.attr,
                });
            }
        }
    }
    KHopSubgraph { nodes, edges }
}

/// Extract subgraphs for many seeds on up to `parallelism` threads. Output
/// order follows `seeds`; each element equals the sequential result.
pub fn gk_batch(
    g: &TxGraph,
    seeds: &[String],
    params: &GkParams,
    parallelism: usize,
) -> Result<Vec<KHopSubgraph>> {
    params.validate()?;
    let ids = seeds
        .iter()
        .map(|s| g.address(s))
        .collect::<Result<Vec<_>>>()?;
    if parallelism <= 1 {
        return Ok(ids.iter().map(|&id| gk_from_node(g, id, params)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        ids.par_iter()
            .map(|&id| gk_from_node(g, id, params))
            .collect()
    }))
}
