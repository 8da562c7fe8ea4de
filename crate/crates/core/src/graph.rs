//! Directed heterogeneous transaction multigraph.
//!
//! Two node kinds, addresses and transactions. Spending an output is an
//! `Address -> Transaction` edge, receiving one is `Transaction -> Address`.
//! Parallel edges are kept: an address listed twice among a transaction's
//! inputs contributes two edges. Coinbase transactions have no in-edges.
//!
//! Node ids are dense and assigned in first-seen order while walking blocks,
//! transactions, inputs, then outputs. Edge ids follow the same walk, and all
//! adjacency lists are kept in edge-id order, so iteration order is a pure
//! function of the block list.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::ledger::RawBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Address,
    Transaction,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Address => "address",
            NodeKind::Transaction => "tx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeAttr {
    pub amount_sats: u64,
    pub timestamp: u64,
    pub block_height: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub attr: EdgeAttr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
    All,
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    name: String,
    coinbase: bool,
}

/// Immutable once built; share freely across threads.
#[derive(Debug, Clone, Default)]
pub struct TxGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    addresses: HashMap<String, NodeId>,
    txs: HashMap<String, NodeId>,
}

impl TxGraph {
    /// Build the multigraph from validated blocks.
    pub fn build(blocks: &[RawBlock]) -> Result<TxGraph> {
        let mut g = TxGraph::default();
        for block in blocks {
            for tx in &block.txs {
                if g.txs.contains_key(&tx.txid) {
                    return Err(Error::DuplicateTxid(tx.txid.clone()));
                }
                let txn = g.push_node(NodeKind::Transaction, tx.txid.clone(), tx.is_coinbase);
                g.txs.insert(tx.txid.clone(), txn);
                let attr = |amount_sats| EdgeAttr {
                    amount_sats,
                    timestamp: block.timestamp,
                    block_height: block.height,
                };
                for input in &tx.inputs {
                    let a = g.address_node(&input.address);
                    g.push_edge(a, txn, attr(input.value_sats));
                }
                for output in &tx.outputs {
                    let a = g.address_node(&output.address);
                    g.push_edge(txn, a, attr(output.value_sats));
                }
            }
        }
        g.check_bipartite()?;
        Ok(g)
    }

    fn push_node(&mut self, kind: NodeKind, name: String, coinbase: bool) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            kind,
            name,
            coinbase,
        });
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        id
    }

    fn address_node(&mut self, address: &str) -> NodeId {
        if let Some(&id) = self.addresses.get(address) {
            return id;
        }
        let id = self.push_node(NodeKind::Address, address.to_string(), false);
        self.addresses.insert(address.to_string(), id);
        id
    }

    fn push_edge(&mut self, source: NodeId, target: NodeId, attr: EdgeAttr) {
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            source,
            target,
            attr,
        });
        self.out_edges[source.index()].push(id);
        self.in_edges[target.index()].push(id);
    }

    fn check_bipartite(&self) -> Result<()> {
        for e in &self.edges {
            if self.kind(e.source) == self.kind(e.target) {
                return Err(Error::Snapshot(format!(
                    "edge {} -> {} joins two nodes of the same kind",
                    e.source.0, e.target.0
                )));
            }
            if self.nodes[e.target.index()].coinbase {
                return Err(Error::Snapshot(format!(
                    "coinbase tx node {} has an in-edge",
                    e.target.0
                )));
            }
        }
        Ok(())
    }

    /// Collapse each group of parallel `u -> v` edges into one edge carrying
    /// the summed amount and the earliest constituent's time and height.
    pub fn merge_parallel_edges(&self) -> TxGraph {
        let mut merged = TxGraph {
            nodes: self.nodes.clone(),
            edges: Vec::with_capacity(self.edges.len()),
            out_edges: vec![Vec::new(); self.nodes.len()],
            in_edges: vec![Vec::new(); self.nodes.len()],
            addresses: self.addresses.clone(),
            txs: self.txs.clone(),
        };
        let mut slot: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        for e in &self.edges {
            match slot.get(&(e.source, e.target)) {
                Some(&i) => {
                    let m = &mut merged.edges[i].attr;
                    m.amount_sats += e.attr.amount_sats;
                    if (e.attr.timestamp, e.attr.block_height) < (m.timestamp, m.block_height) {
                        m.timestamp = e.attr.timestamp;
                        m.block_height = e.attr.block_height;
                    }
                }
                None => {
                    slot.insert((e.source, e.target), merged.edges.len());
                    merged.push_edge(e.source, e.target, e.attr);
                }
            }
        }
        merged
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn address_count(&self) -> usize {
        self.addresses.len()
    }

    pub fn tx_count(&self) -> usize {
        self.txs.len()
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        self.nodes[node.index()].kind
    }

    /// Address string or txid of a node.
    pub fn name(&self, node: NodeId) -> &str {
        &self.nodes[node.index()].name
    }

    pub fn is_coinbase(&self, node: NodeId) -> bool {
        self.nodes[node.index()].coinbase
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn address(&self, address: &str) -> Result<NodeId> {
        self.addresses
            .get(address)
            .copied()
            .ok_or_else(|| Error::UnknownAddress(address.to_string()))
    }

    pub fn transaction(&self, txid: &str) -> Option<NodeId> {
        self.txs.get(txid).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.nodes.len()
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::UnknownNode(node.0))
        }
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.index()]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node.index()]
    }

    /// In- and out-edges of `node` merged in edge-id order.
    pub fn incident_edges(&self, node: NodeId) -> Vec<EdgeId> {
        let (ins, outs) = (self.in_edges(node), self.out_edges(node));
        let mut all = Vec::with_capacity(ins.len() + outs.len());
        let (mut i, mut o) = (0, 0);
        while i < ins.len() || o < outs.len() {
            if o == outs.len() || (i < ins.len() && ins[i] < outs[o]) {
                all.push(ins[i]);
                i += 1;
            } else {
                all.push(outs[o]);
                o += 1;
            }
        }
        all
    }

    /// Edge count in the given direction, parallel edges included.
    pub fn degree(&self, node: NodeId, direction: Direction) -> Result<usize> {
        self.check(node)?;
        Ok(match direction {
            Direction::In => self.in_edges(node).len(),
            Direction::Out => self.out_edges(node).len(),
            Direction::All => self.in_edges(node).len() + self.out_edges(node).len(),
        })
    }

    /// `(amount_sats, timestamp)` per edge, sorted by timestamp then edge id.
    pub fn amounts(&self, node: NodeId, direction: Direction) -> Result<Vec<(u64, u64)>> {
        self.check(node)?;
        let ids = match direction {
            Direction::In => self.in_edges(node).to_vec(),
            Direction::Out => self.out_edges(node).to_vec(),
            Direction::All => self.incident_edges(node),
        };
        let mut keyed: Vec<(u64, EdgeId)> = ids
            .into_iter()
            .map(|id| (self.edge(id).attr.timestamp, id))
            .collect();
        keyed.sort_unstable();
        Ok(keyed
            .into_iter()
            .map(|(ts, id)| (self.edge(id).attr.amount_sats, ts))
            .collect())
    }
}

// Snapshot layout, all integers little-endian:
//
//   magic        8 bytes  "TXGSNAP\0"
//   version      u32      = 1
//   node_count   u64
//   edge_count   u64
//   node_count × { kind u8 (0 address, 1 tx), coinbase u8, name_len u32, name bytes (UTF-8) }
//   edge_count × { source u32, target u32, amount_sats u64, timestamp u64, block_height u64 }
//
// Edges are stored in id order, which fully determines adjacency order.
const SNAPSHOT_MAGIC: &[u8; 8] = b"TXGSNAP\0";
pub const SNAPSHOT_VERSION: u32 = 1;

impl TxGraph {
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        out.write_all(&(self.nodes.len() as u64).to_le_bytes())?;
        out.write_all(&(self.edges.len() as u64).to_le_bytes())?;
        for n in &self.nodes {
            let kind = match n.kind {
                NodeKind::Address => 0u8,
                NodeKind::Transaction => 1u8,
            };
            out.write_all(&[kind, n.coinbase as u8])?;
            out.write_all(&(n.name.len() as u32).to_le_bytes())?;
            out.write_all(n.name.as_bytes())?;
        }
        for e in &self.edges {
            out.write_all(&e.source.0.to_le_bytes())?;
            out.write_all(&e.target.0.to_le_bytes())?;
            out.write_all(&e.attr.amount_sats.to_le_bytes())?;
            out.write_all(&e.attr.timestamp.to_le_bytes())?;
            out.write_all(&e.attr.block_height.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<TxGraph> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("not a graph snapshot (bad magic)".into()));
        }
        let version = read_u32(&mut input)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let node_count = read_u64(&mut input)? as usize;
        let edge_count = read_u64(&mut input)? as usize;
        let mut g = TxGraph::default();
        for _ in 0..node_count {
            let mut head = [0u8; 2];
            input.read_exact(&mut head)?;
            let kind = match head[0] {
                0 => NodeKind::Address,
                1 => NodeKind::Transaction,
                k => return Err(Error::Snapshot(format!("bad node kind {k}"))),
            };
            let len = read_u32(&mut input)? as usize;
            let mut name = vec![0u8; len];
            input.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Snapshot("node name is not UTF-8".into()))?;
            let id = g.push_node(kind, name.clone(), head[1] != 0);
            let index = match kind {
                NodeKind::Address => &mut g.addresses,
                NodeKind::Transaction => &mut g.txs,
            };
            if index.insert(name.clone(), id).is_some() {
                return Err(Error::Snapshot(format!("duplicate node name `{name}`")));
            }
        }
        for _ in 0..edge_count {
            let source = NodeId(read_u32(&mut input)?);
            let target = NodeId(read_u32(&mut input)?);
            if !g.contains(source) || !g.contains(target) {
                return Err(Error::Snapshot("edge endpoint out of range".into()));
            }
            let attr = EdgeAttr {
                amount_sats: read_u64(&mut input)?,
                timestamp: read_u64(&mut input)?,
                block_height: read_u64(&mut input)?,
            };
            g.push_edge(source, target, attr);
        }
        g.check_bipartite()?;
        Ok(g)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
